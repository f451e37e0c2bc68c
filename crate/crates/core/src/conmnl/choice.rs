//! Multinomial-logit choice model and its unregularized maximum-likelihood fit.

use nalgebra::DMatrix;

use crate::error::{check_dim, Error, Result};
use crate::estimator::Level;
use crate::glm::Feature;
use crate::policy::Choice;

/// Choice probabilities for one offered set.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceProbs {
    pub items: Vec<f64>,
    pub outside: f64,
}

impl ChoiceProbs {
    pub fn of(&self, choice: Choice) -> f64 {
        match choice {
            Choice::Item(i) => self.items[i],
            Choice::Outside => self.outside,
        }
    }
}

/// Probabilities from raw utilities, shifted by `max(0, max u)` before exponentiating.
pub fn probs_from_utilities(utilities: &[f64]) -> ChoiceProbs {
    let m = utilities.iter().copied().fold(0.0, f64::max);
    let e: Vec<f64> = utilities.iter().map(|u| (u - m).exp()).collect();
    let e0 = (-m).exp();
    let s = e0 + e.iter().sum::<f64>();
    ChoiceProbs {
        items: e.iter().map(|v| v / s).collect(),
        outside: e0 / s,
    }
}

pub fn mnl_probs(theta: &Feature, offered: &[Feature]) -> ChoiceProbs {
    let u: Vec<f64> = offered.iter().map(|x| x.dot(theta)).collect();
    probs_from_utilities(&u)
}

/// `sum_j r_j p_j(C, theta)`.
pub fn expected_revenue(offered: &[Feature], theta: &Feature, revenues: &[f64]) -> f64 {
    if offered.is_empty() {
        return 0.0;
    }
    let p = mnl_probs(theta, offered);
    p.items.iter().zip(revenues).map(|(p, r)| p * r).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChoiceObservation {
    pub offered: Vec<Feature>,
    pub chosen: Choice,
    pub level: Level,
}

/// Append-only list of choice observations, stored flat.
#[derive(Debug, Clone)]
pub struct ChoiceHistory {
    dim: usize,
    /// Feature rows, `dim` values each.
    rows: Vec<f64>,
    /// Row offset of each observation; one extra trailing entry.
    offsets: Vec<usize>,
    chosen: Vec<Option<usize>>,
    levels: Vec<Level>,
}

impl ChoiceHistory {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            rows: Vec::new(),
            offsets: vec![0],
            chosen: Vec::new(),
            levels: Vec::new(),
        }
    }

    pub fn push(&mut self, obs: &ChoiceObservation) -> Result<()> {
        if obs.offered.is_empty() {
            return Err(Error::Domain("a choice needs at least one offered item".to_string()));
        }
        for x in &obs.offered {
            check_dim(self.dim, x.len())?;
        }
        let chosen = match obs.chosen {
            Choice::Item(i) if i >= obs.offered.len() => {
                return Err(Error::Domain(format!(
                    "chosen index {i} outside an offer of {}",
                    obs.offered.len()
                )))
            }
            Choice::Item(i) => Some(i),
            Choice::Outside => None,
        };
        for x in &obs.offered {
            self.rows.extend(x.iter());
        }
        let last = *self.offsets.last().expect("offsets never empty");
        self.offsets.push(last + obs.offered.len());
        self.chosen.push(chosen);
        self.levels.push(obs.level);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.chosen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chosen.is_empty()
    }

    pub fn count(&self, level: Level) -> usize {
        self.levels.iter().filter(|&&l| l == level).count()
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.rows[r * self.dim..(r + 1) * self.dim]
    }

    /// Calls `f(rows, chosen, probs)` per observation at `theta`.
    fn for_each(&self, theta: &Feature, mut f: impl FnMut(&[&[f64]], Option<usize>, &ChoiceProbs)) {
        let mut rows: Vec<&[f64]> = Vec::new();
        let mut u = Vec::new();
        for (o, chosen) in self.chosen.iter().enumerate() {
            rows.clear();
            u.clear();
            for r in self.offsets[o]..self.offsets[o + 1] {
                let row = self.row(r);
                u.push(row.iter().zip(theta.iter()).map(|(a, b)| a * b).sum::<f64>());
                rows.push(row);
            }
            let p = probs_from_utilities(&u);
            f(&rows, *chosen, &p);
        }
    }
}

pub fn mnl_log_likelihood(history: &ChoiceHistory, theta: &Feature) -> f64 {
    let mut total = 0.0;
    history.for_each(theta, |_, chosen, p| {
        total += match chosen {
            Some(i) => p.items[i].ln(),
            None => p.outside.ln(),
        };
    });
    total
}

/// `sum (o_i - p_i) x_i` over every offered item.
pub fn mnl_score(history: &ChoiceHistory, theta: &Feature) -> Feature {
    let mut g = Feature::zeros(history.dim());
    history.for_each(theta, |rows, chosen, p| {
        for (i, row) in rows.iter().enumerate() {
            let o = if chosen == Some(i) { 1.0 } else { 0.0 };
            let c = o - p.items[i];
            for (gk, xk) in g.iter_mut().zip(row.iter()) {
                *gk += c * xk;
            }
        }
    });
    g
}

/// Fisher information `sum (sum p_i x_i x_i^T - xbar xbar^T)`, the negated Hessian.
pub fn mnl_information(history: &ChoiceHistory, theta: &Feature) -> DMatrix<f64> {
    let d = history.dim();
    let mut h = DMatrix::zeros(d, d);
    let mut mean = Feature::zeros(d);
    history.for_each(theta, |rows, _, p| {
        mean.fill(0.0);
        for (i, row) in rows.iter().enumerate() {
            let x = Feature::from_column_slice(row);
            mean.axpy(p.items[i], &x, 1.0);
            h.ger(p.items[i], &x, &x, 1.0);
        }
        h.ger(-1.0, &mean, &mean, 1.0);
    });
    h
}

/// Ridge added to the Newton system only.
pub const NEWTON_RIDGE: f64 = 1e-8;
const MAX_HALVINGS: usize = 60;

/// Newton ascent on the log-likelihood from `init`; errors without convergence.
pub fn mnl_mle_fit(history: &ChoiceHistory, init: &Feature, tol: f64, max_iters: usize) -> Result<Feature> {
    check_dim(history.dim(), init.len())?;
    if !(tol > 0.0) {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let d = history.dim();
    let mut theta = init.clone();
    let mut obj = mnl_log_likelihood(history, &theta);
    let mut grad = mnl_score(history, &theta);
    for _ in 0..max_iters {
        if grad.norm() <= tol {
            return Ok(theta);
        }
        let h = mnl_information(history, &theta) + DMatrix::identity(d, d) * NEWTON_RIDGE;
        let step = h
            .cholesky()
            .ok_or_else(|| Error::Numerical {
                what: "multinomial Newton system is not positive definite".to_string(),
                residual: grad.norm(),
            })?
            .solve(&grad);
        let slack = 1e-12 * (1.0 + obj.abs());
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..MAX_HALVINGS {
            let cand = &theta + &step * t;
            let cobj = mnl_log_likelihood(history, &cand);
            if cobj + slack >= obj {
                theta = cand;
                obj = cobj.max(obj);
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(Error::Numerical {
                what: "multinomial line search failed to improve the log-likelihood".to_string(),
                residual: grad.norm(),
            });
        }
        grad = mnl_score(history, &theta);
    }
    let gn = grad.norm();
    if gn <= tol {
        Ok(theta)
    } else {
        Err(Error::Numerical {
            what: format!("multinomial fit did not converge in {max_iters} iterations"),
            residual: gn,
        })
    }
}

/// `(1 / (2 kappa2)) sqrt(2 d log(1 + (b + t) / d) + 2 log t)`.
pub fn alpha_mnl(t: usize, b_of_t: f64, d: usize, kappa2: f64) -> Result<f64> {
    if t == 0 || d == 0 || !(kappa2 > 0.0) || !(b_of_t >= 0.0) {
        return Err(Error::Domain("radius arguments must be positive".to_string()));
    }
    let (t, d) = (t as f64, d as f64);
    Ok((2.0 * d * (1.0 + (b_of_t + t) / d).ln() + 2.0 * t.ln()).sqrt() / (2.0 * kappa2))
}
