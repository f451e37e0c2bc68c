//! Key-term pair selection, the candidate set and arm pair selection.
//!
//! Arms are addressed by their position in an id-sorted [`ArmPool`], so the
//! lowest position is always the lowest id.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::glm::{DesignMatrix, Feature};
use crate::policy::{ArmPool, KeytermCatalog};

/// How the arm pair is chosen from the candidate set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PairMode {
    /// Argmax of the pair distance over all candidate pairs.
    FullMaxInp,
    /// First arm uniform from the candidates, second arm the farthest from it.
    SampledFirst,
}

impl PairMode {
    pub fn name(self) -> &'static str {
        match self {
            PairMode::FullMaxInp => "full",
            PairMode::SampledFirst => "sampled",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "full" => Some(PairMode::FullMaxInp),
            "sampled" => Some(PairMode::SampledFirst),
            _ => None,
        }
    }
}

/// How conversational key-term pairs are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KeytermRule {
    /// Two iid uniform draws from the spanner members.
    Spanner,
    /// Two iid uniform draws from every key-term.
    Uniform,
    /// Argmax of the pair distance over all key-term pairs.
    MaxInp,
}

/// Squared `M^{-1}` distances between every pair of a feature list.
#[derive(Debug, Clone)]
pub struct PairGeometry {
    dist2: DMatrix<f64>,
}

impl PairGeometry {
    pub fn new(features: &[Feature], design: &DesignMatrix) -> Self {
        let n = features.len();
        let d = design.dim();
        let x = DMatrix::from_fn(n, d, |r, c| features[r][c]);
        let g = &x * design.inverse() * x.transpose();
        let dist2 = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                0.0
            } else {
                (g[(i, i)] + g[(j, j)] - 2.0 * g[(i, j)]).max(0.0)
            }
        });
        Self { dist2 }
    }

    pub fn len(&self) -> usize {
        self.dist2.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dist2(&self, i: usize, j: usize) -> f64 {
        self.dist2[(i, j)]
    }

    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.dist2[(i, j)].sqrt()
    }

    /// Lexicographically first pair `(i, j)`, `i < j`, of maximal distance among `members`.
    /// `members` must be ascending.
    pub fn farthest_pair(&self, members: &[usize]) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize, f64)> = None;
        for (p, &i) in members.iter().enumerate() {
            for &j in &members[p + 1..] {
                let v = self.dist2[(i, j)];
                if best.is_none_or(|(_, _, b)| v > b) {
                    best = Some((i, j, v));
                }
            }
        }
        best.map(|(i, j, _)| (i, j))
    }

    /// Lowest member of maximal distance from `from`; `from` itself when alone.
    pub fn farthest_from(&self, from: usize, members: &[usize]) -> usize {
        let mut best = (from, f64::NEG_INFINITY);
        for &j in members {
            let v = self.dist2[(from, j)];
            if v > best.1 {
                best = (j, v);
            }
        }
        best.0
    }
}

/// Key-term ids for one conversation.
pub fn select_keyterm_pair<R: Rng + ?Sized>(
    rule: KeytermRule,
    catalog: &KeytermCatalog,
    design: &DesignMatrix,
    rng: &mut R,
) -> Result<(usize, usize)> {
    if catalog.is_empty() {
        return Err(Error::Structural("no key-terms to converse about".to_string()));
    }
    match rule {
        KeytermRule::Spanner => {
            let members = catalog.spanner.member_ids();
            let i = rng.random_range(0..members.len());
            let j = rng.random_range(0..members.len());
            Ok((members[i], members[j]))
        }
        KeytermRule::Uniform => {
            let k = catalog.len();
            Ok((rng.random_range(0..k), rng.random_range(0..k)))
        }
        KeytermRule::MaxInp => Ok(maxinp_keyterm_pair(&catalog.features, design)),
    }
}

/// Lowest-id pair of key-terms maximizing `|x_k - x_k'|_{M^{-1}}`.
/// A single key-term yields `(0, 0)`.
pub fn maxinp_keyterm_pair(features: &[Feature], design: &DesignMatrix) -> (usize, usize) {
    let n = features.len();
    let d = design.dim();
    // Rows of Y = X M^{-1}; the quadratic form is then a row dot product.
    let x = DMatrix::from_fn(n, d, |r, c| features[r][c]);
    let y = &x * design.inverse();
    let diag: Vec<f64> = (0..n).map(|i| y.row(i).dot(&x.row(i))).collect();
    let mut best = (0, 0, f64::NEG_INFINITY);
    for i in 0..n {
        let yi = y.row(i);
        for j in i + 1..n {
            let v = diag[i] + diag[j] - 2.0 * yi.dot(&x.row(j));
            if v > best.2 {
                best = (i, j, v);
            }
        }
    }
    if n < 2 {
        (0, 0)
    } else {
        (best.0, best.1)
    }
}

/// Pool positions of arms whose optimistic margin is strictly positive
/// against every other pool arm. Ascending.
pub fn build_candidate_set(pool: &ArmPool, theta: &Feature, geometry: &PairGeometry, alpha: f64) -> Result<Vec<usize>> {
    if !(alpha >= 0.0) {
        return Err(Error::Domain(format!("confidence radius must be non-negative, got {alpha}")));
    }
    let utilities: Vec<f64> = pool.features.iter().map(|x| x.dot(theta)).collect();
    let n = pool.len();
    let out = (0..n)
        .filter(|&a| {
            (0..n).all(|b| b == a || (utilities[a] - utilities[b]) + alpha * geometry.dist(a, b) > 0.0)
        })
        .collect();
    Ok(out)
}

/// Positions of the shown pair. `candidates` must be ascending and nonempty.
pub fn select_arm_pair<R: Rng + ?Sized>(
    candidates: &[usize],
    geometry: &PairGeometry,
    mode: PairMode,
    rng: &mut R,
) -> Result<(usize, usize)> {
    if candidates.is_empty() {
        return Err(Error::Structural("candidate set is empty".to_string()));
    }
    if candidates.len() == 1 {
        return Ok((candidates[0], candidates[0]));
    }
    Ok(match mode {
        PairMode::FullMaxInp => geometry.farthest_pair(candidates).expect("two or more candidates"),
        PairMode::SampledFirst => {
            let a = candidates[rng.random_range(0..candidates.len())];
            (a, geometry.farthest_from(a, candidates))
        }
    })
}

/// Two distinct candidates drawn uniformly; `(a, a)` for a single candidate.
pub fn random_pair<R: Rng + ?Sized>(candidates: &[usize], rng: &mut R) -> Result<(usize, usize)> {
    match candidates.len() {
        0 => Err(Error::Structural("candidate set is empty".to_string())),
        1 => Ok((candidates[0], candidates[0])),
        n => {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            Ok((candidates[i], candidates[j]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn f(xs: &[f64]) -> Feature {
        Feature::from_vec(xs.to_vec())
    }

    fn random_unit(rng: &mut ChaCha8Rng, d: usize) -> Feature {
        let v = Feature::from_fn(d, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let n = v.norm();
        v / n
    }

    fn random_spd(rng: &mut ChaCha8Rng, d: usize) -> DesignMatrix {
        let mut m = DesignMatrix::new(d, 0.5).unwrap();
        for _ in 0..d + 3 {
            m.update(&Feature::from_fn(d, |_, _| rng.random::<f64>() * 2.0 - 1.0));
        }
        m
    }

    fn quad(m: &DesignMatrix, v: &Feature) -> f64 {
        m.matrix().clone().lu().solve(v).unwrap().dot(v)
    }

    #[test]
    fn collinear_extremes() {
        let m = DesignMatrix::new(2, 1.0).unwrap();
        let feats = vec![f(&[0.0, 0.0]), f(&[1.0, 0.0]), f(&[-1.0, 0.0])];
        let g = PairGeometry::new(&feats, &m);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(select_arm_pair(&[0, 1, 2], &g, PairMode::FullMaxInp, &mut rng).unwrap(), (1, 2));
        assert_eq!(select_arm_pair(&[1], &g, PairMode::FullMaxInp, &mut rng).unwrap(), (1, 1));
        assert_eq!(random_pair(&[2], &mut rng).unwrap(), (2, 2));
        assert!(select_arm_pair(&[], &g, PairMode::SampledFirst, &mut rng).is_err());
    }

    #[test]
    fn full_maxinp_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let m = random_spd(&mut rng, 3);
            let feats: Vec<Feature> = (0..8).map(|_| random_unit(&mut rng, 3)).collect();
            let mut best = (0, 0, f64::NEG_INFINITY);
            for i in 0..8 {
                for j in i + 1..8 {
                    let v = quad(&m, &(&feats[i] - &feats[j]));
                    if v > best.2 + 1e-12 {
                        best = (i, j, v);
                    }
                }
            }
            let g = PairGeometry::new(&feats, &m);
            let all: Vec<usize> = (0..8).collect();
            let got = select_arm_pair(&all, &g, PairMode::FullMaxInp, &mut rng).unwrap();
            assert_eq!(got, (best.0, best.1));
        }
    }

    #[test]
    fn keyterm_maxinp_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let m = random_spd(&mut rng, 4);
            let feats: Vec<Feature> = (0..5).map(|_| random_unit(&mut rng, 4) * 0.7).collect();
            let mut best = (0, 0, f64::NEG_INFINITY);
            for i in 0..5 {
                for j in i + 1..5 {
                    let v = quad(&m, &(&feats[i] - &feats[j]));
                    if v > best.2 + 1e-12 {
                        best = (i, j, v);
                    }
                }
            }
            assert_eq!(maxinp_keyterm_pair(&feats, &m), (best.0, best.1));
        }
        let identity = DesignMatrix::new(2, 1.0).unwrap();
        let feats = vec![f(&[0.1, 0.0]), f(&[1.0, 0.0]), f(&[-0.9, 0.1]), f(&[0.0, 0.5])];
        assert_eq!(maxinp_keyterm_pair(&feats, &identity), (1, 2));
    }

    fn pool_of(feats: Vec<Feature>) -> ArmPool {
        let ids = (0..feats.len()).collect();
        ArmPool::new(1, ids, feats).unwrap()
    }

    #[test]
    fn candidate_set_matches_double_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let m = random_spd(&mut rng, 2);
            let pool = pool_of((0..6).map(|_| random_unit(&mut rng, 2)).collect());
            let theta = random_unit(&mut rng, 2);
            let alpha = 0.3;
            let mut expect = Vec::new();
            for a in 0..6 {
                let ok = (0..6).filter(|&b| b != a).all(|b| {
                    let diff = &pool.features[a] - &pool.features[b];
                    diff.dot(&theta) + alpha * quad(&m, &diff).sqrt() > 0.0
                });
                if ok {
                    expect.push(a);
                }
            }
            let g = PairGeometry::new(&pool.features, &m);
            assert_eq!(build_candidate_set(&pool, &theta, &g, alpha).unwrap(), expect);
        }
    }

    #[test]
    fn candidate_set_extremes() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let m = DesignMatrix::new(3, 1.0).unwrap();
        let pool = pool_of((0..10).map(|_| random_unit(&mut rng, 3)).collect());
        let theta = random_unit(&mut rng, 3);
        let g = PairGeometry::new(&pool.features, &m);
        assert_eq!(build_candidate_set(&pool, &theta, &g, 1e6).unwrap(), (0..10).collect::<Vec<_>>());
        let best = (0..10)
            .max_by(|&a, &b| pool.features[a].dot(&theta).total_cmp(&pool.features[b].dot(&theta)))
            .unwrap();
        assert_eq!(build_candidate_set(&pool, &theta, &g, 0.0).unwrap(), vec![best]);
        assert!(build_candidate_set(&pool, &theta, &g, -1.0).is_err());
    }

    #[test]
    fn best_arm_survives_with_true_radius() {
        // Estimate off by a known deviation; the radius covers it exactly.
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..100 {
            let m = random_spd(&mut rng, 3);
            let theta_star = random_unit(&mut rng, 3);
            let noise = random_unit(&mut rng, 3) * 0.2;
            let theta = &theta_star + &noise;
            let pool = pool_of((0..12).map(|_| random_unit(&mut rng, 3)).collect());
            let dev = (m.matrix() * &noise).dot(&noise).sqrt();
            let g = PairGeometry::new(&pool.features, &m);
            let cands = build_candidate_set(&pool, &theta, &g, dev * 1.000001).unwrap();
            let best = (0..12)
                .max_by(|&a, &b| pool.features[a].dot(&theta_star).total_cmp(&pool.features[b].dot(&theta_star)))
                .unwrap();
            assert!(cands.contains(&best));
        }
    }

    proptest! {
        #[test]
        fn candidate_set_permutation_invariant(seed in 0u64..1000, shift in 1usize..9) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_spd(&mut rng, 3);
            let feats: Vec<Feature> = (0..9).map(|_| random_unit(&mut rng, 3)).collect();
            let theta = random_unit(&mut rng, 3);
            let ids: Vec<usize> = (0..9).map(|i| 100 + i).collect();
            let base = ArmPool::new(1, ids.clone(), feats.clone()).unwrap();
            let mut rot_ids = ids.clone();
            let mut rot_feats = feats.clone();
            rot_ids.rotate_left(shift);
            rot_feats.rotate_left(shift);
            let rotated = ArmPool::new(1, rot_ids, rot_feats).unwrap();
            let ga = PairGeometry::new(&base.features, &m);
            let gb = PairGeometry::new(&rotated.features, &m);
            let a: Vec<usize> = build_candidate_set(&base, &theta, &ga, 0.4).unwrap().iter().map(|&i| base.ids[i]).collect();
            let b: Vec<usize> = build_candidate_set(&rotated, &theta, &gb, 0.4).unwrap().iter().map(|&i| rotated.ids[i]).collect();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn full_maxinp_scale_invariant(seed in 0u64..1000, c in 0.01f64..100.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = random_spd(&mut rng, 3);
            let scaled = DesignMatrix::from_matrix(m.matrix() * c).unwrap();
            let feats: Vec<Feature> = (0..7).map(|_| random_unit(&mut rng, 3)).collect();
            let all: Vec<usize> = (0..7).collect();
            let a = PairGeometry::new(&feats, &m).farthest_pair(&all);
            let b = PairGeometry::new(&feats, &scaled).farthest_pair(&all);
            prop_assert_eq!(a, b);
        }
    }
}
