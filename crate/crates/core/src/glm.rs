//! Link functions, key-term feature aggregation, dueling probabilities and the
//! incrementally maintained design matrix shared by every policy.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Dense feature vector. Arm features are unit-norm; differences have norm at most 2.
pub type Feature = DVector<f64>;

/// Link between a utility difference and a win probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LinkFunction {
    /// `1 / (1 + exp(-z))`
    Sigmoid,
    /// `max(0, min(1, (1 + z) / 2))`
    ClampedLinear,
}

impl LinkFunction {
    /// Upper bound on the first derivative (documentation only, never used by the algorithms).
    pub const SIGMOID_DERIV_BOUND: f64 = 0.25;
    /// Upper bound on the second derivative of the sigmoid (documentation only).
    pub const SIGMOID_SECOND_DERIV_BOUND: f64 = 0.25;

    /// Evaluates the link without input validation.
    #[inline]
    pub fn mu(self, z: f64) -> f64 {
        match self {
            LinkFunction::Sigmoid => {
                if z >= 0.0 {
                    1.0 / (1.0 + (-z).exp())
                } else {
                    let e = z.exp();
                    e / (1.0 + e)
                }
            }
            LinkFunction::ClampedLinear => (0.5 * (1.0 + z)).clamp(0.0, 1.0),
        }
    }

    /// First derivative. The clamped link uses slope 0.5 on the closed interval `[-1, 1]`.
    #[inline]
    pub fn mu_prime(self, z: f64) -> f64 {
        match self {
            LinkFunction::Sigmoid => {
                let e = (-z.abs()).exp();
                e / ((1.0 + e) * (1.0 + e))
            }
            LinkFunction::ClampedLinear => {
                if z.abs() <= 1.0 {
                    0.5
                } else {
                    0.0
                }
            }
        }
    }

    /// Antiderivative `m` with `m' = mu`, used by the log-likelihood.
    #[inline]
    pub fn antiderivative(self, z: f64) -> f64 {
        match self {
            LinkFunction::Sigmoid => z.max(0.0) + (-z.abs()).exp().ln_1p(),
            LinkFunction::ClampedLinear => {
                if z <= -1.0 {
                    0.0
                } else if z < 1.0 {
                    0.25 * (1.0 + z) * (1.0 + z)
                } else {
                    z
                }
            }
        }
    }

    /// `(antiderivative, mu, mu_prime)` at `z`, bitwise equal to the separate
    /// methods but sharing one exponential.
    #[inline]
    pub fn terms(self, z: f64) -> (f64, f64, f64) {
        match self {
            LinkFunction::Sigmoid => {
                let e = (-z.abs()).exp();
                let mu = if z >= 0.0 { 1.0 / (1.0 + e) } else { e / (1.0 + e) };
                (z.max(0.0) + e.ln_1p(), mu, e / ((1.0 + e) * (1.0 + e)))
            }
            LinkFunction::ClampedLinear => (self.antiderivative(z), self.mu(z), self.mu_prime(z)),
        }
    }

    /// Lower bound on the link slope over `|z| <= 2`.
    ///
    /// For the clamped link the true infimum is zero, which breaks the confidence
    /// radius; 0.5 is returned and is only meaningful while `|x^T theta| < 1`.
    pub fn kappa1(self) -> f64 {
        match self {
            LinkFunction::Sigmoid => self.mu_prime(2.0),
            LinkFunction::ClampedLinear => 0.5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LinkFunction::Sigmoid => "sigmoid",
            LinkFunction::ClampedLinear => "clamped-linear",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "sigmoid" | "logistic" => Some(LinkFunction::Sigmoid),
            "clamped-linear" | "linear" => Some(LinkFunction::ClampedLinear),
            _ => None,
        }
    }
}

fn finite(z: f64) -> Result<f64> {
    if z.is_finite() {
        Ok(z)
    } else {
        Err(Error::Domain(format!("link input must be finite, got {z}")))
    }
}

pub fn link_eval(link: LinkFunction, z: f64) -> Result<f64> {
    Ok(link.mu(finite(z)?))
}

pub fn link_deriv(link: LinkFunction, z: f64) -> Result<f64> {
    Ok(link.mu_prime(finite(z)?))
}

/// Probability that the arm with features `x_i` beats the one with `x_j`.
pub fn duel_prob(link: LinkFunction, theta: &Feature, x_i: &Feature, x_j: &Feature) -> Result<f64> {
    check_dim(theta.len(), x_i.len())?;
    check_dim(theta.len(), x_j.len())?;
    let z = (x_i - x_j).dot(theta);
    link_eval(link, z)
}

/// Sparse arm/key-term relation with row-stochastic weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightGraph {
    num_keyterms: usize,
    /// `rows[a]` lists `(key-term, weight)` sorted by key-term id.
    rows: Vec<Vec<(usize, f64)>>,
    /// `cols[k]` lists `(arm, weight)` sorted by arm id.
    cols: Vec<Vec<(usize, f64)>>,
}

impl WeightGraph {
    pub const ROW_SUM_TOL: f64 = 1e-9;

    pub fn new(num_keyterms: usize, mut rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        for (a, row) in rows.iter_mut().enumerate() {
            row.sort_by_key(|&(k, _)| k);
            if row.windows(2).any(|w| w[0].0 == w[1].0) {
                return Err(Error::Structural(format!("arm {a} lists a key-term twice")));
            }
            let mut sum = 0.0;
            for &(k, w) in row.iter() {
                if k >= num_keyterms {
                    return Err(Error::Structural(format!(
                        "arm {a} references key-term {k} but only {num_keyterms} exist"
                    )));
                }
                if !(w >= 0.0) || !w.is_finite() {
                    return Err(Error::Structural(format!("arm {a} has invalid weight {w}")));
                }
                sum += w;
            }
            if (sum - 1.0).abs() > Self::ROW_SUM_TOL {
                return Err(Error::Structural(format!(
                    "weights of arm {a} sum to {sum}, expected 1"
                )));
            }
        }
        let mut cols = vec![Vec::new(); num_keyterms];
        for (a, row) in rows.iter().enumerate() {
            for &(k, w) in row {
                cols[k].push((a, w));
            }
        }
        Ok(Self {
            num_keyterms,
            rows,
            cols,
        })
    }

    /// Builds a graph where each arm spreads weight equally over its related key-terms.
    pub fn equal_weights(num_keyterms: usize, related: &[Vec<usize>]) -> Result<Self> {
        let rows = related
            .iter()
            .map(|ks| {
                let w = 1.0 / ks.len() as f64;
                ks.iter().map(|&k| (k, w)).collect()
            })
            .collect();
        Self::new(num_keyterms, rows)
    }

    pub fn num_arms(&self) -> usize {
        self.rows.len()
    }

    pub fn num_keyterms(&self) -> usize {
        self.num_keyterms
    }

    pub fn arm_row(&self, arm: usize) -> &[(usize, f64)] {
        &self.rows[arm]
    }

    pub fn keyterm_column(&self, k: usize) -> &[(usize, f64)] {
        &self.cols[k]
    }

    /// All `(arm, key-term, weight)` triples in arm-major order.
    pub fn triples(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(a, row)| row.iter().map(move |&(k, w)| (a, k, w)))
    }
}

/// Weighted mean of the features of the arms related to key-term `k`.
pub fn keyterm_feature(graph: &WeightGraph, arm_features: &[Feature], k: usize) -> Result<Feature> {
    if k >= graph.num_keyterms() {
        return Err(Error::Structural(format!("unknown key-term {k}")));
    }
    check_dim(graph.num_arms(), arm_features.len())?;
    weighted_mean(graph.keyterm_column(k), arm_features)
        .ok_or_else(|| Error::Structural(format!("key-term {k} has no related arm")))
}

/// `sum_a w_a x_a / sum_a w_a` over a key-term column; `None` when all weights vanish.
pub fn weighted_mean(column: &[(usize, f64)], arm_features: &[Feature]) -> Option<Feature> {
    let d = arm_features.first().map_or(0, |x| x.len());
    let mut acc = Feature::zeros(d);
    let mut total = 0.0;
    for &(a, w) in column {
        if w > 0.0 {
            acc.axpy(w, &arm_features[a], 1.0);
            total += w;
        }
    }
    (total > 0.0).then(|| acc / total)
}

pub fn keyterm_features(graph: &WeightGraph, arm_features: &[Feature]) -> Result<Vec<Feature>> {
    (0..graph.num_keyterms())
        .map(|k| keyterm_feature(graph, arm_features, k))
        .collect()
}

/// Regularized Gram matrix with a maintained inverse and log-determinant.
///
/// The inverse follows Sherman-Morrison rank-one updates and is rebuilt from a
/// Cholesky factorization every [`DesignMatrix::REFACTOR_EVERY`] updates.
#[derive(Debug, Clone)]
pub struct DesignMatrix {
    m: DMatrix<f64>,
    m_inv: DMatrix<f64>,
    log_det: f64,
    regularizer: f64,
    updates: usize,
    since_refactor: usize,
}

impl DesignMatrix {
    pub const REFACTOR_EVERY: usize = 256;

    /// `regularizer * I`, e.g. `lambda / kappa1` for the dueling policies.
    pub fn new(dim: usize, regularizer: f64) -> Result<Self> {
        if !(regularizer > 0.0) || !regularizer.is_finite() {
            return Err(Error::Domain(format!(
                "design matrix regularizer must be positive, got {regularizer}"
            )));
        }
        Ok(Self {
            m: DMatrix::identity(dim, dim) * regularizer,
            m_inv: DMatrix::identity(dim, dim) / regularizer,
            log_det: dim as f64 * regularizer.ln(),
            regularizer,
            updates: 0,
            since_refactor: 0,
        })
    }

    /// Wraps an explicit symmetric positive-definite matrix.
    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        let mut out = Self {
            m_inv: m.clone(),
            m,
            log_det: 0.0,
            regularizer: 0.0,
            updates: 0,
            since_refactor: 0,
        };
        out.refactor()?;
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn inverse(&self) -> &DMatrix<f64> {
        &self.m_inv
    }

    pub fn log_det(&self) -> f64 {
        self.log_det
    }

    pub fn regularizer(&self) -> f64 {
        self.regularizer
    }

    /// Number of rank-one updates applied so far.
    pub fn update_count(&self) -> usize {
        self.updates
    }

    /// `M <- M + v v^T`.
    pub fn update(&mut self, v: &Feature) {
        assert_eq!(v.len(), self.dim(), "design update dimension");
        let u = &self.m_inv * v;
        let s = 1.0 + v.dot(&u);
        self.m.ger(1.0, v, v, 1.0);
        self.m_inv.ger(-1.0 / s, &u, &u, 1.0);
        self.log_det += s.ln();
        self.updates += 1;
        self.since_refactor += 1;
        if self.since_refactor >= Self::REFACTOR_EVERY {
            // A rank-one update of an SPD matrix stays SPD; failure here means the
            // matrix was already corrupted.
            self.refactor().expect("design matrix lost positive definiteness");
        }
    }

    /// Recomputes the inverse and log-determinant from scratch.
    pub fn refactor(&mut self) -> Result<()> {
        let chol = self.m.clone().cholesky().ok_or_else(|| {
            Error::Structural("design matrix is not positive definite".to_string())
        })?;
        self.log_det = 2.0 * chol.l_dirty().diagonal().iter().map(|x| x.ln()).sum::<f64>();
        self.m_inv = chol.inverse();
        self.since_refactor = 0;
        Ok(())
    }

    /// `v^T M^{-1} v`
    pub fn inv_quad(&self, v: &Feature) -> f64 {
        assert_eq!(v.len(), self.dim(), "mahalanobis dimension");
        (v.transpose() * &self.m_inv * v)[(0, 0)].max(0.0)
    }

    /// `sqrt(v^T M^{-1} v)`
    pub fn mahalanobis(&self, v: &Feature) -> f64 {
        self.inv_quad(v).sqrt()
    }

    pub fn lambda_min(&self) -> f64 {
        self.m
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }
}

/// Row-normalizes a vector to unit Euclidean norm.
pub fn normalize(v: &Feature) -> Result<Feature> {
    let n = v.norm();
    if n > 0.0 && n.is_finite() {
        Ok(v / n)
    } else {
        Err(Error::Domain("cannot normalize a zero vector".to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Frozen with a 40-digit mpmath evaluation of 1/(1+exp(-z)).
    const SIGMOID_2: f64 = 0.880_797_077_977_882_444_059_729_141_302_396_795;
    const SIGMOID_PRIME_2: f64 = 0.104_993_585_403_506_517_348_624_184_760_425_361;
    const SIGMOID_1: f64 = 0.731_058_578_630_004_879_251_159_241_821_836_274;

    #[test]
    fn link_values() {
        assert_eq!(link_eval(LinkFunction::Sigmoid, 0.0).unwrap(), 0.5);
        assert_eq!(link_eval(LinkFunction::ClampedLinear, 0.0).unwrap(), 0.5);
        assert_eq!(link_eval(LinkFunction::ClampedLinear, 0.5).unwrap(), 0.75);
        assert!((link_eval(LinkFunction::Sigmoid, 2.0).unwrap() - SIGMOID_2).abs() < 1e-12);
        assert!(link_eval(LinkFunction::Sigmoid, f64::NAN).is_err());
        assert!(link_eval(LinkFunction::ClampedLinear, f64::INFINITY).is_err());
        assert_eq!(LinkFunction::Sigmoid.mu(-800.0), 0.0);
        assert_eq!(LinkFunction::Sigmoid.mu(800.0), 1.0);
    }

    #[test]
    fn link_derivatives() {
        assert_eq!(link_deriv(LinkFunction::Sigmoid, 0.0).unwrap(), 0.25);
        assert!((link_deriv(LinkFunction::Sigmoid, 2.0).unwrap() - SIGMOID_PRIME_2).abs() < 1e-12);
        assert_eq!(link_deriv(LinkFunction::ClampedLinear, 2.0).unwrap(), 0.0);
        assert_eq!(link_deriv(LinkFunction::ClampedLinear, 1.0).unwrap(), 0.5);
        assert_eq!(link_deriv(LinkFunction::ClampedLinear, -1.0).unwrap(), 0.5);
        assert_eq!(link_deriv(LinkFunction::ClampedLinear, 0.3).unwrap(), 0.5);
        assert!(link_deriv(LinkFunction::Sigmoid, f64::NEG_INFINITY).is_err());
        assert_relative_eq!(LinkFunction::Sigmoid.kappa1(), SIGMOID_PRIME_2, epsilon = 1e-12);
        assert_eq!(LinkFunction::ClampedLinear.kappa1(), 0.5);
    }

    #[test]
    fn antiderivative_matches_link() {
        for link in [LinkFunction::Sigmoid, LinkFunction::ClampedLinear] {
            for i in -40..=40 {
                let z = i as f64 * 0.0731;
                let h = 1e-6;
                let fd = (link.antiderivative(z + h) - link.antiderivative(z - h)) / (2.0 * h);
                assert!((fd - link.mu(z)).abs() < 1e-6, "{link:?} at {z}");
            }
        }
        assert!((LinkFunction::Sigmoid.antiderivative(0.0) - 2f64.ln()).abs() < 1e-15);
        assert!(LinkFunction::Sigmoid.antiderivative(1000.0).is_finite());
    }

    proptest! {
        #[test]
        fn link_properties(z in -50.0f64..50.0) {
            for link in [LinkFunction::Sigmoid, LinkFunction::ClampedLinear] {
                let p = link.mu(z);
                prop_assert!((0.0..=1.0).contains(&p));
                prop_assert!((p + link.mu(-z) - 1.0).abs() < 1e-15);
                prop_assert!(link.mu_prime(z) >= 0.0);
                prop_assert!(link.mu(z + 0.01) >= p);
            }
            if z.abs() <= 2.0 {
                prop_assert!(LinkFunction::Sigmoid.mu_prime(z) >= LinkFunction::Sigmoid.kappa1());
            }
        }
    }

    fn graph3() -> (WeightGraph, Vec<Feature>) {
        let arms = vec![
            Feature::from_vec(vec![1.0, 0.0]),
            Feature::from_vec(vec![0.0, 1.0]),
            Feature::from_vec(vec![0.6, 0.8]),
        ];
        // key-term 0 linked to all three arms with weights 0.5, 0.3, 0.2
        let g = WeightGraph::new(
            2,
            vec![
                vec![(0, 0.5), (1, 0.5)],
                vec![(0, 0.3), (1, 0.7)],
                vec![(0, 0.2), (1, 0.8)],
            ],
        )
        .unwrap();
        (g, arms)
    }

    #[test]
    fn keyterm_feature_weighted_mean() {
        let (g, arms) = graph3();
        let f = keyterm_feature(&g, &arms, 0).unwrap();
        // direct summation oracle: (0.5*(1,0) + 0.3*(0,1) + 0.2*(0.6,0.8)) / 1.0
        let expect = [0.5 + 0.2 * 0.6, 0.3 + 0.2 * 0.8];
        assert!((f[0] - expect[0]).abs() < 1e-15 && (f[1] - expect[1]).abs() < 1e-15);

        let single = WeightGraph::new(1, vec![vec![(0, 1.0)]]).unwrap();
        let x = Feature::from_vec(vec![0.6, -0.8]);
        assert_eq!(keyterm_feature(&single, &[x.clone()], 0).unwrap(), x);

        let pair = WeightGraph::new(1, vec![vec![(0, 1.0)], vec![(0, 1.0)]]).unwrap();
        let f = keyterm_feature(&pair, &arms[..2], 0).unwrap();
        assert_eq!(f, Feature::from_vec(vec![0.5, 0.5]));
    }

    #[test]
    fn keyterm_without_arms_is_structural_error() {
        let g = WeightGraph::new(2, vec![vec![(0, 1.0)]]).unwrap();
        let arms = vec![Feature::from_vec(vec![1.0, 0.0])];
        assert!(matches!(keyterm_feature(&g, &arms, 1), Err(Error::Structural(_))));
    }

    #[test]
    fn keyterm_feature_scale_invariant() {
        // Rescaling the column uniformly cancels in the ratio.
        let (g, arms) = graph3();
        let base = keyterm_feature(&g, &arms, 1).unwrap();
        let mut col: Vec<(usize, f64)> = g.keyterm_column(1).to_vec();
        for (_, w) in col.iter_mut() {
            *w *= 3.7;
        }
        let scaled = weighted_mean(&col, &arms).unwrap();
        assert!((scaled - base).amax() < 1e-14);
        assert!(weighted_mean(&[(0, 0.0)], &arms).is_none());
    }

    #[test]
    fn weight_graph_rejects_bad_rows() {
        assert!(WeightGraph::new(2, vec![vec![(0, 0.5)]]).is_err());
        assert!(WeightGraph::new(2, vec![vec![(2, 1.0)]]).is_err());
        assert!(WeightGraph::new(2, vec![vec![(0, 1.5), (1, -0.5)]]).is_err());
    }

    #[test]
    fn duel_probabilities() {
        let l = LinkFunction::Sigmoid;
        let x = Feature::from_vec(vec![0.3, 0.4]);
        let th = Feature::from_vec(vec![1.0, -2.0]);
        assert_eq!(duel_prob(l, &th, &x, &x).unwrap(), 0.5);
        let th = Feature::from_vec(vec![1.0, 0.0]);
        let p = duel_prob(l, &th, &Feature::from_vec(vec![1.0, 0.0]), &Feature::from_vec(vec![0.0, 1.0]))
            .unwrap();
        assert!((p - SIGMOID_1).abs() < 1e-12);
        let bad = Feature::from_vec(vec![1.0, 0.0, 0.0]);
        assert!(matches!(duel_prob(l, &th, &bad, &x), Err(Error::DimensionMismatch { .. })));

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let th = Feature::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
            let a = Feature::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
            let b = Feature::from_fn(4, |_, _| rng.random_range(-1.0..1.0));
            for link in [LinkFunction::Sigmoid, LinkFunction::ClampedLinear] {
                let s = duel_prob(link, &th, &a, &b).unwrap() + duel_prob(link, &th, &b, &a).unwrap();
                assert!((s - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn design_update_identity() {
        let mut m = DesignMatrix::new(2, 1.0).unwrap();
        m.update(&Feature::from_vec(vec![1.0, 0.0]));
        assert_eq!(m.matrix(), &DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]));
        assert!((m.inverse() - DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 1.0])).amax() < 1e-15);
        assert!((m.log_det() - 2f64.ln()).abs() < 1e-15);
        assert!(DesignMatrix::new(2, 0.0).is_err());
    }

    fn random_spd(rng: &mut ChaCha8Rng, d: usize) -> DMatrix<f64> {
        let a = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
        &a * a.transpose() + DMatrix::identity(d, d) * 0.5
    }

    #[test]
    fn maintained_inverse_matches_direct_inversion() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut m = DesignMatrix::new(6, 0.3).unwrap();
        for i in 0..100 {
            let v = Feature::from_fn(6, |_, _| rng.random_range(-1.0..1.0));
            let before = m.log_det();
            let q = m.inv_quad(&v);
            m.update(&v);
            assert!((m.log_det() - before - (1.0 + q).ln()).abs() < 1e-8, "update {i}");
        }
        let direct = m.matrix().clone().try_inverse().unwrap();
        assert!((&direct - m.inverse()).amax() < 1e-6);
        let ident = m.matrix() * m.inverse() - DMatrix::identity(6, 6);
        assert!(ident.amax() < 1e-6);
    }

    #[test]
    fn refactor_keeps_drift_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut m = DesignMatrix::new(10, 0.05).unwrap();
        for _ in 0..2000 {
            let v = Feature::from_fn(10, |_, _| rng.random_range(-1.0..1.0));
            m.update(&v);
        }
        let ident = m.matrix() * m.inverse() - DMatrix::identity(10, 10);
        assert!(ident.amax() < 1e-6);
        assert_eq!(m.update_count(), 2000);
    }

    #[test]
    fn determinant_lemma_on_random_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let d = rng.random_range(1..7);
            let a = random_spd(&mut rng, d);
            let v = Feature::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
            let q = (v.transpose() * a.clone().try_inverse().unwrap() * &v)[(0, 0)];
            let lhs = (&a + &v * v.transpose()).determinant();
            let rhs = a.determinant() * (1.0 + q);
            assert!(((lhs - rhs) / rhs).abs() < 1e-8);
        }
    }

    #[test]
    fn mahalanobis_values() {
        let m = DesignMatrix::new(2, 1.0).unwrap();
        assert_eq!(m.mahalanobis(&Feature::from_vec(vec![1.0, 0.0])), 1.0);
        let m = DesignMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 1.0])).unwrap();
        assert!((m.mahalanobis(&Feature::from_vec(vec![2.0, 0.0])) - 1.0).abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..50 {
            let a = random_spd(&mut rng, 5);
            let v = Feature::from_fn(5, |_, _| rng.random_range(-1.0..1.0));
            let solved = a.clone().lu().solve(&v).unwrap();
            let expect = v.dot(&solved).sqrt();
            let m = DesignMatrix::from_matrix(a).unwrap();
            assert!((m.mahalanobis(&v) - expect).abs() < 1e-9);
        }
    }
}
