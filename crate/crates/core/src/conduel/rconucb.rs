//! Relative-feedback conversational UCB baselines.
//!
//! Two ridge regressions: a key-term level fit on converted key-term duels and
//! an arm level fit on clicks that shrinks towards the key-term estimate.
//! With weight `w`:
//!
//! * `M~ = lambda~ I + sum x~ x~^T`, `theta~ = M~^{-1} b~`
//! * `M = w sum x x^T + (1 - w) I`, `theta = M^{-1}(w sum r x + (1 - w) theta~)`

use rand::Rng;

use crate::error::Result;
use crate::glm::{DesignMatrix, Feature};
use crate::policy::{Algorithm, FeedbackOracle, Outcome, Policy, RoundInput, RoundRecord, Selection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RconucbVariant {
    /// Winner appended with label 1, loser with label 0.
    PosNeg,
    /// Winner minus loser appended with label 1.
    Diff,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RconucbConfig {
    /// Weight of the arm-level data against the key-term prior.
    pub weight: f64,
    pub keyterm_lambda: f64,
    pub delta: f64,
    pub alpha_scale: f64,
    /// Norm bound on the preference vector inside the radii.
    pub theta_bound: f64,
    pub sub_gaussian: f64,
}

impl Default for RconucbConfig {
    fn default() -> Self {
        Self {
            weight: 0.5,
            keyterm_lambda: 1.0,
            delta: 0.1,
            alpha_scale: crate::policy::DEFAULT_ALPHA_SCALE,
            theta_bound: 1.0,
            sub_gaussian: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RconucbPolicy {
    variant: RconucbVariant,
    cfg: RconucbConfig,
    arm: DesignMatrix,
    arm_b: Feature,
    keyterm: DesignMatrix,
    keyterm_b: Feature,
    keyterm_obs: usize,
}

impl RconucbPolicy {
    pub fn new(variant: RconucbVariant, cfg: RconucbConfig, dim: usize) -> Result<Self> {
        if !(cfg.weight > 0.0 && cfg.weight < 1.0) {
            return Err(crate::error::Error::Domain(format!(
                "combination weight must lie in (0, 1), got {}",
                cfg.weight
            )));
        }
        Ok(Self {
            variant,
            cfg,
            arm: DesignMatrix::new(dim, 1.0 - cfg.weight)?,
            arm_b: Feature::zeros(dim),
            keyterm: DesignMatrix::new(dim, cfg.keyterm_lambda)?,
            keyterm_b: Feature::zeros(dim),
            keyterm_obs: 0,
        })
    }

    /// Key-term ridge estimate `M~^{-1} b~`.
    pub fn keyterm_estimate(&self) -> Feature {
        self.keyterm.inverse() * &self.keyterm_b
    }

    /// Arm-level estimate with the key-term prior folded in.
    pub fn arm_estimate(&self) -> Feature {
        let w = self.cfg.weight;
        let rhs = &self.arm_b + self.keyterm_estimate() * (1.0 - w);
        self.arm.inverse() * rhs
    }

    fn record_keyterm(&mut self, x: &Feature, label: f64) {
        self.keyterm.update(x);
        self.keyterm_b.axpy(label, x, 1.0);
        self.keyterm_obs += 1;
    }

    fn radius(&self, design: &DesignMatrix, reg: f64) -> f64 {
        let d = design.dim() as f64;
        let growth = design.log_det() - d * reg.ln();
        let r = self.cfg.sub_gaussian * (growth + 2.0 * (1.0 / self.cfg.delta).ln()).max(0.0).sqrt();
        r + reg.sqrt() * self.cfg.theta_bound
    }
}

impl Policy for RconucbPolicy {
    fn algorithm(&self) -> Algorithm {
        match self.variant {
            RconucbVariant::PosNeg => Algorithm::RconucbPosNeg,
            RconucbVariant::Diff => Algorithm::RconucbDiff,
        }
    }

    fn step(&mut self, input: RoundInput<'_>, oracle: &mut dyn FeedbackOracle) -> Result<RoundRecord> {
        let RoundInput {
            t,
            conversations,
            pool,
            keyterms,
            keyterm_rng,
            ..
        } = input;
        let mut asked = Vec::new();
        for _ in 0..conversations {
            let k1 = keyterm_rng.random_range(0..keyterms.len());
            let k2 = keyterm_rng.random_range(0..keyterms.len());
            let (x1, x2) = (&keyterms.features[k1], &keyterms.features[k2]);
            let (win, lose) = if oracle.duel_keyterms(x1, x2) { (x1, x2) } else { (x2, x1) };
            match self.variant {
                RconucbVariant::PosNeg => {
                    self.record_keyterm(win, 1.0);
                    self.record_keyterm(lose, 0.0);
                }
                RconucbVariant::Diff => self.record_keyterm(&(win - lose), 1.0),
            }
            asked.push(vec![k1, k2]);
        }

        let w = self.cfg.weight;
        let theta = self.arm_estimate();
        let alpha_arm = self.radius(&self.arm, 1.0 - w);
        let alpha_kt = self.radius(&self.keyterm, self.cfg.keyterm_lambda);
        let scale = self.cfg.alpha_scale;
        let mut best = (0, f64::NEG_INFINITY);
        let mut widths = Vec::with_capacity(pool.len());
        let mut utilities = Vec::with_capacity(pool.len());
        for (i, x) in pool.features.iter().enumerate() {
            let mx = self.arm.inverse() * x;
            let arm_width = mx.dot(x).max(0.0).sqrt();
            let kt_width = self.keyterm.inv_quad(&mx).max(0.0).sqrt();
            let ucb = x.dot(&theta) + scale * (w * alpha_arm * arm_width + (1.0 - w) * alpha_kt * kt_width);
            widths.push(arm_width);
            utilities.push(ucb);
            if ucb > best.1 {
                best = (i, ucb);
            }
        }
        let a = best.0;
        let x = &pool.features[a];
        let clicked = oracle.click(x);
        let uncertainty = widths[a];
        self.arm.update(&(x * w.sqrt()));
        if clicked {
            self.arm_b.axpy(w, x, 1.0);
        }
        Ok(RoundRecord {
            round: t,
            selection: Selection::Single(pool.ids[a]),
            conversations: asked,
            outcome: Outcome::Click(clicked),
            alpha: scale * alpha_arm,
            uncertainty,
            utilities,
            widths,
            theta: Some(theta),
        })
    }

    fn design(&self) -> Option<&DesignMatrix> {
        Some(&self.arm)
    }

    fn keyterm_observations(&self) -> usize {
        self.keyterm_obs
    }
}
