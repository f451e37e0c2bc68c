//! Regularized maximum-likelihood estimation from mixed arm-level and
//! key-term-level dueling observations.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::glm::{DesignMatrix, Feature, LinkFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Level {
    Arm,
    KeyTerm,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DuelObservation {
    /// Feature difference, first element minus second.
    pub diff: Feature,
    /// `true` when the first element won.
    pub outcome: bool,
    pub level: Level,
}

/// Append-only store of dueling observations, kept flat for fast passes.
#[derive(Debug, Clone)]
pub struct InteractionHistory {
    dim: usize,
    diffs: Vec<f64>,
    outcomes: Vec<f64>,
    levels: Vec<Level>,
    arm_count: usize,
    keyterm_count: usize,
}

impl InteractionHistory {
    pub const MAX_DIFF_NORM: f64 = 2.0 + 1e-9;

    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            diffs: Vec::new(),
            outcomes: Vec::new(),
            levels: Vec::new(),
            arm_count: 0,
            keyterm_count: 0,
        }
    }

    pub fn push(&mut self, obs: DuelObservation) -> Result<()> {
        check_dim(self.dim, obs.diff.len())?;
        let n = obs.diff.norm();
        if !(n <= Self::MAX_DIFF_NORM) {
            return Err(Error::Domain(format!("difference vector norm {n} exceeds 2")));
        }
        self.diffs.extend(obs.diff.iter());
        self.outcomes.push(if obs.outcome { 1.0 } else { 0.0 });
        self.levels.push(obs.level);
        match obs.level {
            Level::Arm => self.arm_count += 1,
            Level::KeyTerm => self.keyterm_count += 1,
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn arm_count(&self) -> usize {
        self.arm_count
    }

    pub fn keyterm_count(&self) -> usize {
        self.keyterm_count
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.diffs[i * self.dim..(i + 1) * self.dim]
    }

    pub fn get(&self, i: usize) -> DuelObservation {
        DuelObservation {
            diff: Feature::from_column_slice(self.row(i)),
            outcome: self.outcomes[i] > 0.5,
            level: self.levels[i],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = DuelObservation> + '_ {
        (0..self.len()).map(|i| self.get(i))
    }

    /// Applies `f(row, outcome, d^T theta)` to every observation.
    fn for_each_margin(&self, theta: &Feature, mut f: impl FnMut(&[f64], f64, f64)) {
        let th = theta.as_slice();
        for (row, &o) in self.diffs.chunks_exact(self.dim.max(1)).zip(&self.outcomes) {
            let z: f64 = row.iter().zip(th).map(|(a, b)| a * b).sum();
            f(row, o, z);
        }
    }
}

/// Regularized log-likelihood over both levels.
pub fn log_likelihood(history: &InteractionHistory, theta: &Feature, lambda: f64, link: LinkFunction) -> f64 {
    let mut ll = 0.0;
    history.for_each_margin(theta, |_, o, z| ll += o * z - link.antiderivative(z));
    ll - 0.5 * lambda * theta.norm_squared()
}

/// Gradient of [`log_likelihood`]: `sum (o - mu(d^T theta)) d - lambda theta`.
pub fn score(history: &InteractionHistory, theta: &Feature, lambda: f64, link: LinkFunction) -> Feature {
    let mut g = theta * -lambda;
    let gs = g.as_mut_slice();
    history.for_each_margin(theta, |row, o, z| {
        let r = o - link.mu(z);
        for (gi, di) in gs.iter_mut().zip(row) {
            *gi += r * di;
        }
    });
    g
}

/// `sum mu(d^T theta) d + lambda theta`.
pub fn g_eval(history: &InteractionHistory, theta: &Feature, lambda: f64, link: LinkFunction) -> Feature {
    let mut g = theta * lambda;
    let gs = g.as_mut_slice();
    history.for_each_margin(theta, |row, _, z| {
        let m = link.mu(z);
        for (gi, di) in gs.iter_mut().zip(row) {
            *gi += m * di;
        }
    });
    g
}

/// `sum mu'(d^T theta) d d^T + lambda I`, the negative Hessian of the objective
/// and the Jacobian of [`g_eval`].
pub fn curvature(history: &InteractionHistory, theta: &Feature, lambda: f64, link: LinkFunction) -> DMatrix<f64> {
    let d = history.dim();
    let mut h = DMatrix::<f64>::zeros(d, d);
    {
        let hs = h.as_mut_slice();
        history.for_each_margin(theta, |row, _, z| {
            let w = link.mu_prime(z);
            if w == 0.0 {
                return;
            }
            add_lower(hs, w, row);
        });
    }
    for c in 0..d {
        for r in 0..c {
            h[(r, c)] = h[(c, r)];
        }
        h[(c, c)] += lambda;
    }
    h
}

/// `J(theta) v` without forming the matrix.
fn curvature_apply(
    history: &InteractionHistory,
    theta: &Feature,
    v: &Feature,
    lambda: f64,
    link: LinkFunction,
) -> Feature {
    let mut out = v * lambda;
    let os = out.as_mut_slice();
    let vs = v.as_slice();
    history.for_each_margin(theta, |row, _, z| {
        let w = link.mu_prime(z);
        if w == 0.0 {
            return;
        }
        let dv: f64 = row.iter().zip(vs).map(|(a, b)| a * b).sum();
        for (oi, di) in os.iter_mut().zip(row) {
            *oi += w * dv * di;
        }
    });
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleOptions {
    pub lambda: f64,
    pub tol: f64,
    pub max_iters: usize,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            lambda: 1.0,
            tol: 1e-8,
            max_iters: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaEstimate {
    pub theta_raw: Feature,
    pub theta_proj: Feature,
    pub projected: bool,
    pub newton_iters: usize,
    pub grad_norm: f64,
}

const MAX_HALVINGS: usize = 60;

/// `h += w x x^T` on the lower triangle of a column-major `d x d` buffer.
#[inline]
fn add_lower(hs: &mut [f64], w: f64, x: &[f64]) {
    let d = x.len();
    for (c, col) in hs.chunks_exact_mut(d).enumerate() {
        let wc = w * x[c];
        for (h, xr) in col[c..].iter_mut().zip(&x[c..]) {
            *h += wc * xr;
        }
    }
}

/// Objective, score and curvature at one point.
struct Evaluation {
    obj: f64,
    score: Feature,
    curvature: DMatrix<f64>,
}

/// [`log_likelihood`], [`score`] and [`curvature`] in a single pass.
fn evaluate(history: &InteractionHistory, theta: &Feature, lambda: f64, link: LinkFunction) -> Evaluation {
    let d = history.dim();
    let mut ll = 0.0;
    let mut g = theta * -lambda;
    let mut h = DMatrix::<f64>::zeros(d, d);
    {
        let gs = g.as_mut_slice();
        let hs = h.as_mut_slice();
        history.for_each_margin(theta, |row, o, z| {
            let (m, mu, w) = link.terms(z);
            ll += o * z - m;
            let r = o - mu;
            for (gi, di) in gs.iter_mut().zip(row) {
                *gi += r * di;
            }
            if w == 0.0 {
                return;
            }
            add_lower(hs, w, row);
        });
    }
    for c in 0..d {
        for r in 0..c {
            h[(r, c)] = h[(c, r)];
        }
        h[(c, c)] += lambda;
    }
    Evaluation {
        obj: ll - 0.5 * lambda * theta.norm_squared(),
        score: g,
        curvature: h,
    }
}

/// Newton's method with step halving on the regularized log-likelihood.
/// Returns `(theta, iterations, final score norm)`.
pub fn newton_mle(
    history: &InteractionHistory,
    init: &Feature,
    link: LinkFunction,
    opts: MleOptions,
) -> Result<(Feature, usize, f64)> {
    if !(opts.lambda > 0.0) {
        return Err(Error::Domain(format!("lambda must be positive, got {}", opts.lambda)));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {}", opts.tol)));
    }
    check_dim(history.dim(), init.len())?;
    let mut theta = init.clone();
    let mut at = evaluate(history, &theta, opts.lambda, link);
    for iter in 0..opts.max_iters {
        let gn = at.score.norm();
        if gn <= opts.tol {
            return Ok((theta, iter, gn));
        }
        let step = at
            .curvature
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numerical {
                what: "Newton system is not positive definite".to_string(),
                residual: gn,
            })?
            .solve(&at.score);
        let slack = 1e-12 * (1.0 + at.obj.abs());
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let cand = &theta + &step * t;
            let next = evaluate(history, &cand, opts.lambda, link);
            if next.obj + slack >= at.obj {
                theta = cand;
                let best = next.obj.max(at.obj);
                at = Evaluation { obj: best, ..next };
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::Numerical {
                what: "line search failed to improve the log-likelihood".to_string(),
                residual: gn,
            });
        }
    }
    let gn = at.score.norm();
    if gn <= opts.tol {
        Ok((theta, opts.max_iters, gn))
    } else {
        Err(Error::Numerical {
            what: format!("maximum-likelihood fit did not converge in {} iterations", opts.max_iters),
            residual: gn,
        })
    }
}

/// Fits from `theta = 0`, projecting onto the unit ball when needed with the
/// design matrix implied by the history (`sum d d^T + lambda / kappa1 I`).
pub fn mle_fit(
    history: &InteractionHistory,
    lambda: f64,
    link: LinkFunction,
    tol: f64,
    max_iters: usize,
) -> Result<ThetaEstimate> {
    let opts = MleOptions { lambda, tol, max_iters };
    let zero = Feature::zeros(history.dim());
    let (theta, iters, gn) = newton_mle(history, &zero, link, opts)?;
    if theta.norm() <= 1.0 {
        return Ok(ThetaEstimate {
            theta_proj: theta.clone(),
            theta_raw: theta,
            projected: false,
            newton_iters: iters,
            grad_norm: gn,
        });
    }
    let mut m = DesignMatrix::new(history.dim(), lambda / link.kappa1())?;
    for obs in history.iter() {
        m.update(&obs.diff);
    }
    Ok(finish_estimate(theta, iters, gn, history, lambda, link, &m))
}

/// Fits from a warm start and projects with the supplied design matrix.
///
/// Newton starts from the previous estimate's raw point.
pub fn fit_with_design(
    history: &InteractionHistory,
    previous: &ThetaEstimate,
    link: LinkFunction,
    opts: MleOptions,
    design: &DesignMatrix,
) -> Result<ThetaEstimate> {
    let (theta, iters, gn) = newton_mle(history, &previous.theta_raw, link, opts)?;
    Ok(finish_estimate(theta, iters, gn, history, opts.lambda, link, design))
}

fn finish_estimate(
    theta: Feature,
    iters: usize,
    gn: f64,
    history: &InteractionHistory,
    lambda: f64,
    link: LinkFunction,
    design: &DesignMatrix,
) -> ThetaEstimate {
    let projected = theta.norm() > 1.0;
    let theta_proj = if projected {
        project_theta(&theta, history, lambda, link, design)
    } else {
        theta.clone()
    };
    ThetaEstimate {
        theta_raw: theta,
        theta_proj,
        projected,
        newton_iters: iters,
        grad_norm: gn,
    }
}

fn onto_ball(theta: Feature) -> Feature {
    let n = theta.norm();
    if n > 1.0 {
        theta / n
    } else {
        theta
    }
}

const PROJ_MAX_ITERS: usize = 500;
const PROJ_REL_DECREASE: f64 = 1e-10;

/// Approximate `argmin_{|theta| <= 1} |g(theta) - g(theta_raw)|_{M^{-1}}`.
///
/// Projected gradient descent on the squared objective starting from the radial
/// projection, with Barzilai-Borwein trial steps and backtracking. Returns the
/// best iterate seen; the result is always feasible.
pub fn project_theta(
    theta_raw: &Feature,
    history: &InteractionHistory,
    lambda: f64,
    link: LinkFunction,
    design: &DesignMatrix,
) -> Feature {
    let target = g_eval(history, theta_raw, lambda, link);
    let m_inv = design.inverse();
    let objective = |th: &Feature| -> (f64, Feature) {
        let r = g_eval(history, th, lambda, link) - &target;
        let w = m_inv * &r;
        (r.dot(&w), w)
    };

    let mut theta = onto_ball(theta_raw.clone());
    let (mut f, mut w) = objective(&theta);
    if f == 0.0 {
        return theta;
    }
    let mut grad = curvature_apply(history, &theta, &w, lambda, link) * 2.0;

    // Initial step from the curvature of the local quadratic model.
    let j = curvature(history, &theta, lambda, link);
    let lip = 2.0 * (&j * m_inv * &j).symmetric_eigenvalues().amax();
    let mut step = if lip > 0.0 { 1.0 / lip } else { 1.0 };

    let mut best = (f, theta.clone());
    for _ in 0..PROJ_MAX_ITERS {
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let cand = onto_ball(&theta - &grad * step);
            let delta = &cand - &theta;
            let (fc, wc) = objective(&cand);
            let model = f + grad.dot(&delta) + delta.norm_squared() / (2.0 * step);
            if fc <= model {
                accepted = Some((cand, fc, wc));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, fc, wc)) = accepted else { break };
        let new_grad = curvature_apply(history, &cand, &wc, lambda, link) * 2.0;
        let s = &cand - &theta;
        let y = &new_grad - &grad;
        let sy = s.dot(&y);
        let decrease = f - fc;
        theta = cand;
        grad = new_grad;
        w = wc;
        let prev = f;
        f = fc;
        if f < best.0 {
            best = (f, theta.clone());
        }
        if f == 0.0 || decrease < PROJ_REL_DECREASE * prev {
            break;
        }
        if sy > 0.0 {
            step = s.norm_squared() / sy;
        }
    }
    let _ = w;
    best.1
}

/// Confidence radius for the dueling estimator:
/// `(2/k1) (R sqrt(d log((1 + 4 k1 (t + b(t)) / (d lambda)) / delta)) + sqrt(lambda k1) S)`
/// with the parameter-norm bound `S = 1`.
pub fn alpha_duel(
    t: usize,
    b_of_t: f64,
    d: usize,
    lambda: f64,
    kappa1: f64,
    sub_gaussian: f64,
    delta: f64,
) -> Result<f64> {
    if t == 0 || d == 0 || !(lambda > 0.0) || !(kappa1 > 0.0) || !(sub_gaussian > 0.0) || b_of_t < 0.0 {
        return Err(Error::Domain("confidence radius arguments must be positive".to_string()));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::Domain(format!("delta must lie in (0, 1), got {delta}")));
    }
    let arg = (1.0 + 4.0 * kappa1 * (t as f64 + b_of_t) / (d as f64 * lambda)) / delta;
    if !(arg > 0.0) {
        return Err(Error::Domain(format!("log argument {arg} is not positive")));
    }
    let log = arg.ln();
    if log < 0.0 {
        return Err(Error::Domain(format!("log term {log} is negative")));
    }
    Ok((2.0 / kappa1) * (sub_gaussian * (d as f64 * log).sqrt() + (lambda * kappa1).sqrt()))
}

/// Sub-Gaussian constant of Bernoulli noise.
pub const NOISE_SUB_GAUSSIAN: f64 = 0.5;

/// Convenience for building an observation from feature slices.
pub fn observation(first: &Feature, second: &Feature, outcome: bool, level: Level) -> DuelObservation {
    DuelObservation {
        diff: first - second,
        outcome,
        level,
    }
}

/// Dense copy of all difference vectors, one row per observation.
pub fn design_rows(history: &InteractionHistory) -> DMatrix<f64> {
    DMatrix::from_fn(history.len(), history.dim(), |r, c| history.row(r)[c])
}

pub fn outcomes(history: &InteractionHistory) -> DVector<f64> {
    DVector::from_column_slice(&history.outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const SIG: LinkFunction = LinkFunction::Sigmoid;

    fn unit(rng: &mut ChaCha8Rng, d: usize) -> Feature {
        let v = Feature::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
        v.normalize()
    }

    fn synthetic(rng: &mut ChaCha8Rng, theta: &Feature, n: usize) -> InteractionHistory {
        let d = theta.len();
        let mut h = InteractionHistory::new(d);
        for i in 0..n {
            let diff = unit(rng, d) - unit(rng, d);
            let p = SIG.mu(diff.dot(theta));
            let level = if i % 3 == 0 { Level::KeyTerm } else { Level::Arm };
            h.push(DuelObservation {
                diff,
                outcome: rng.random::<f64>() < p,
                level,
            })
            .unwrap();
        }
        h
    }

    #[test]
    fn likelihood_hand_values() {
        let h = InteractionHistory::new(2);
        assert_eq!(log_likelihood(&h, &Feature::zeros(2), 1.0, SIG), 0.0);
        let mut h = InteractionHistory::new(2);
        h.push(DuelObservation {
            diff: Feature::from_vec(vec![1.0, 0.0]),
            outcome: true,
            level: Level::Arm,
        })
        .unwrap();
        let ll = log_likelihood(&h, &Feature::zeros(2), 1.0, SIG);
        assert!((ll + std::f64::consts::LN_2).abs() < 1e-15);
    }

    #[test]
    fn history_counts_and_norm_guard() {
        let mut h = InteractionHistory::new(2);
        assert!(h
            .push(DuelObservation {
                diff: Feature::from_vec(vec![2.0, 0.5]),
                outcome: true,
                level: Level::Arm
            })
            .is_err());
        assert!(h
            .push(DuelObservation {
                diff: Feature::from_vec(vec![1.0]),
                outcome: true,
                level: Level::Arm
            })
            .is_err());
        h.push(observation(&Feature::from_vec(vec![1.0, 0.0]), &Feature::from_vec(vec![-1.0, 0.0]), false, Level::KeyTerm))
            .unwrap();
        assert_eq!((h.arm_count(), h.keyterm_count(), h.len()), (0, 1, 1));
        assert!(!h.get(0).outcome);
    }

    #[test]
    fn concavity_midpoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let theta = unit(&mut rng, 3);
        let h = synthetic(&mut rng, &theta, 30);
        for link in [LinkFunction::Sigmoid, LinkFunction::ClampedLinear] {
            for _ in 0..50 {
                let a = Feature::from_fn(3, |_, _| rng.random_range(-3.0..3.0));
                let b = Feature::from_fn(3, |_, _| rng.random_range(-3.0..3.0));
                let mid = (&a + &b) * 0.5;
                let lm = log_likelihood(&h, &mid, 1.0, link);
                let avg = 0.5 * (log_likelihood(&h, &a, 1.0, link) + log_likelihood(&h, &b, 1.0, link));
                assert!(lm >= avg - 1e-12);
            }
        }
    }

    #[test]
    fn score_matches_central_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let theta_star = unit(&mut rng, 4);
        let h = synthetic(&mut rng, &theta_star, 25);
        for _ in 0..20 {
            let th = Feature::from_fn(4, |_, _| rng.random_range(-1.5..1.5));
            let s = score(&h, &th, 0.7, SIG);
            for i in 0..4 {
                let mut e = Feature::zeros(4);
                e[i] = 1e-6;
                let fd = (log_likelihood(&h, &(&th + &e), 0.7, SIG) - log_likelihood(&h, &(&th - &e), 0.7, SIG)) / 2e-6;
                assert!((fd - s[i]).abs() < 1e-5, "coordinate {i}: {fd} vs {}", s[i]);
            }
        }
        let empty = InteractionHistory::new(4);
        let th = Feature::from_vec(vec![0.1, -0.2, 0.3, 0.4]);
        assert_eq!(score(&empty, &th, 2.0, SIG), &th * -2.0);
        assert_eq!(g_eval(&empty, &th, 2.0, SIG), &th * 2.0);
    }

    #[test]
    fn fit_empty_and_balanced() {
        let est = mle_fit(&InteractionHistory::new(3), 1.0, SIG, 1e-8, 100).unwrap();
        assert_eq!(est.theta_raw, Feature::zeros(3));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut h = InteractionHistory::new(3);
        for _ in 0..10 {
            let diff = unit(&mut rng, 3) - unit(&mut rng, 3);
            for outcome in [true, false] {
                h.push(DuelObservation {
                    diff: diff.clone(),
                    outcome,
                    level: Level::Arm,
                })
                .unwrap();
            }
        }
        let est = mle_fit(&h, 1.0, SIG, 1e-8, 100).unwrap();
        assert!(est.theta_raw.norm() < 1e-8);
    }

    #[test]
    fn fit_satisfies_score_and_g_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let theta_star = unit(&mut rng, 5) * 0.8;
        let h = synthetic(&mut rng, &theta_star, 200);
        let est = mle_fit(&h, 1.0, SIG, 1e-8, 100).unwrap();
        let s = score(&h, &est.theta_raw, 1.0, SIG);
        assert!(s.norm() <= 1e-8);
        // g(theta_hat) = sum o_s d_s
        let mut rhs = Feature::zeros(5);
        for obs in h.iter() {
            if obs.outcome {
                rhs += obs.diff;
            }
        }
        assert!((g_eval(&h, &est.theta_raw, 1.0, SIG) - rhs).amax() < 1e-7);
        assert!(log_likelihood(&h, &est.theta_raw, 1.0, SIG) >= log_likelihood(&h, &Feature::zeros(5), 1.0, SIG));
    }

    #[test]
    fn non_convergence_is_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let theta_star = unit(&mut rng, 3);
        let h = synthetic(&mut rng, &theta_star, 50);
        match mle_fit(&h, 1.0, SIG, 1e-8, 1) {
            Err(Error::Numerical { residual, .. }) => assert!(residual > 1e-8),
            other => panic!("expected numerical error, got {other:?}"),
        }
        assert!(mle_fit(&h, 0.0, SIG, 1e-8, 10).is_err());
    }

    #[test]
    fn g_is_strongly_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let theta_star = unit(&mut rng, 3);
        let h = synthetic(&mut rng, &theta_star, 30);
        let k1 = SIG.kappa1();
        let mut m = DesignMatrix::new(3, 1.0 / k1).unwrap();
        for obs in h.iter() {
            m.update(&obs.diff);
        }
        for _ in 0..100 {
            let a = unit(&mut rng, 3) * rng.random_range(0.0..1.0);
            let b = unit(&mut rng, 3) * rng.random_range(0.0..1.0);
            let diff = &a - &b;
            let lhs = (g_eval(&h, &a, 1.0, SIG) - g_eval(&h, &b, 1.0, SIG)).dot(&diff);
            let rhs = k1 * (diff.transpose() * m.matrix() * &diff)[(0, 0)];
            assert!(lhs >= rhs - 1e-12);
        }
    }

    #[test]
    fn projection_of_feasible_and_empty_history() {
        let h = InteractionHistory::new(2);
        let m = DesignMatrix::new(2, 1.0 / SIG.kappa1()).unwrap();
        let on = Feature::from_vec(vec![0.6, 0.8]);
        assert_eq!(project_theta(&on, &h, 1.0, SIG, &m), on);
        let raw = Feature::from_vec(vec![3.0, -4.0]);
        let p = project_theta(&raw, &h, 1.0, SIG, &m);
        assert!((p - Feature::from_vec(vec![0.6, -0.8])).amax() < 1e-12);
    }

    #[test]
    fn projection_matches_angular_grid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..5 {
            let theta_star = unit(&mut rng, 2);
            let mut h = InteractionHistory::new(2);
            for _ in 0..10 {
                let diff = unit(&mut rng, 2) - unit(&mut rng, 2);
                let win = diff.dot(&theta_star) > 0.0;
                h.push(DuelObservation { diff, outcome: win, level: Level::Arm }).unwrap();
            }
            let mut m = DesignMatrix::new(2, 1.0 / SIG.kappa1()).unwrap();
            for obs in h.iter() {
                m.update(&obs.diff);
            }
            let raw = unit(&mut rng, 2) * (1.5 + trial as f64);
            let target = g_eval(&h, &raw, 1.0, SIG);
            let f = |th: &Feature| {
                let r = g_eval(&h, th, 1.0, SIG) - &target;
                r.dot(&(m.inverse() * &r))
            };
            let p = project_theta(&raw, &h, 1.0, SIG, &m);
            assert!(p.norm() <= 1.0 + 1e-12);
            let grid = (0..10_000)
                .map(|i| {
                    let a = i as f64 * std::f64::consts::TAU / 10_000.0;
                    f(&Feature::from_vec(vec![a.cos(), a.sin()]))
                })
                .fold(f64::INFINITY, f64::min);
            assert!(f(&p) <= grid + 1e-6, "trial {trial}: {} vs {grid}", f(&p));
        }
    }

    #[test]
    fn alpha_duel_values() {
        // 40-digit mpmath evaluation of the radius at t=1, b=0, d=10, lambda=1, k1=0.105, R=0.5, delta=0.1
        let a = alpha_duel(1, 0.0, 10, 1.0, 0.105, 0.5, 0.1).unwrap();
        assert!((a - 52.278_852_721_529_843_94).abs() < 1e-9);
        let mut prev = 0.0;
        for t in 1..500 {
            let a = alpha_duel(t, 0.1 * t as f64, 10, 1.0, 0.105, 0.5, 0.1).unwrap();
            assert!(a >= prev);
            prev = a;
        }
        assert!(alpha_duel(1, 0.0, 10, 1.0, 0.105, 0.5, 1.5).is_err());
        assert!(alpha_duel(0, 0.0, 10, 1.0, 0.105, 0.5, 0.1).is_err());
        assert!(alpha_duel(1, 0.0, 10, -1.0, 0.105, 0.5, 0.1).is_err());
    }

    #[test]
    fn alpha_duel_kappa_scaling() {
        // k1 * alpha = 2 (R sqrt(d log(..)) + sqrt(lambda k1)): evaluate both routes on a grid
        for &k in &[0.05, 0.105, 0.2, 0.25] {
            let a = alpha_duel(100, 20.0, 5, 1.0, k, 0.5, 0.1).unwrap();
            let log = ((1.0 + 4.0 * k * 120.0 / 5.0) / 0.1f64).ln();
            let direct = 2.0 * (0.5 * (5.0 * log).sqrt() + k.sqrt());
            assert!((a * k - direct).abs() < 1e-12);
        }
    }
}
