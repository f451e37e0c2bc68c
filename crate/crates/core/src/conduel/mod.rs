//! Dueling policies: the conversational GLM dueling bandit, its key-term and
//! arm-selection ablations, and the relative-feedback linear baselines.

mod rconucb;
mod selection;

pub use rconucb::{RconucbConfig, RconucbPolicy, RconucbVariant};
pub use selection::{
    build_candidate_set, maxinp_keyterm_pair, random_pair, select_arm_pair, select_keyterm_pair, KeytermRule,
    PairGeometry, PairMode,
};

use crate::error::Result;
use crate::estimator::{alpha_duel, fit_with_design, observation, InteractionHistory, Level, MleOptions, ThetaEstimate, NOISE_SUB_GAUSSIAN};
use crate::glm::{DesignMatrix, Feature, LinkFunction};
use crate::policy::{Algorithm, FeedbackOracle, Outcome, Policy, RoundInput, RoundRecord, Selection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DuelKind {
    ConDuel,
    ConDuelRandom,
    ConDuelMaxInp,
    MaxInp,
    RandomOpt,
}

impl DuelKind {
    /// Key-term rule, or `None` for kinds that never converse.
    pub fn keyterm_rule(self) -> Option<KeytermRule> {
        match self {
            DuelKind::ConDuel => Some(KeytermRule::Spanner),
            DuelKind::ConDuelRandom => Some(KeytermRule::Uniform),
            DuelKind::ConDuelMaxInp => Some(KeytermRule::MaxInp),
            DuelKind::MaxInp | DuelKind::RandomOpt => None,
        }
    }

    pub fn algorithm(self) -> Algorithm {
        match self {
            DuelKind::ConDuel => Algorithm::ConDuel,
            DuelKind::ConDuelRandom => Algorithm::ConDuelRandom,
            DuelKind::ConDuelMaxInp => Algorithm::ConDuelMaxInp,
            DuelKind::MaxInp => Algorithm::MaxInp,
            DuelKind::RandomOpt => Algorithm::RandomOpt,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DuelConfig {
    pub link: LinkFunction,
    pub lambda: f64,
    pub delta: f64,
    pub kappa1: f64,
    pub tol: f64,
    pub max_iters: usize,
    pub alpha_scale: f64,
    pub pair_mode: PairMode,
}

#[derive(Debug, Clone)]
pub struct DuelPolicy {
    kind: DuelKind,
    cfg: DuelConfig,
    design: DesignMatrix,
    history: InteractionHistory,
    estimate: ThetaEstimate,
}

impl DuelPolicy {
    pub fn new(kind: DuelKind, cfg: DuelConfig, dim: usize) -> Result<Self> {
        let design = DesignMatrix::new(dim, cfg.lambda / cfg.kappa1)?;
        let zero = Feature::zeros(dim);
        Ok(Self {
            kind,
            cfg,
            design,
            history: InteractionHistory::new(dim),
            estimate: ThetaEstimate {
                theta_raw: zero.clone(),
                theta_proj: zero,
                projected: false,
                newton_iters: 0,
                grad_norm: 0.0,
            },
        })
    }

    pub fn kind(&self) -> DuelKind {
        self.kind
    }

    pub fn history(&self) -> &InteractionHistory {
        &self.history
    }

    pub fn estimate(&self) -> &ThetaEstimate {
        &self.estimate
    }

    fn mle_options(&self) -> MleOptions {
        MleOptions {
            lambda: self.cfg.lambda,
            tol: self.cfg.tol,
            max_iters: self.cfg.max_iters,
        }
    }
}

impl Policy for DuelPolicy {
    fn algorithm(&self) -> Algorithm {
        self.kind.algorithm()
    }

    fn step(&mut self, input: RoundInput<'_>, oracle: &mut dyn FeedbackOracle) -> Result<RoundRecord> {
        let RoundInput {
            t,
            conversations,
            budget,
            pool,
            keyterms,
            arm_rng,
            keyterm_rng,
        } = input;
        let mut asked = Vec::new();
        if let Some(rule) = self.kind.keyterm_rule() {
            for _ in 0..conversations {
                let (k1, k2) = select_keyterm_pair(rule, keyterms, &self.design, keyterm_rng)?;
                let (x1, x2) = (&keyterms.features[k1], &keyterms.features[k2]);
                let won = oracle.duel_keyterms(x1, x2);
                let obs = observation(x1, x2, won, Level::KeyTerm);
                self.design.update(&obs.diff);
                self.history.push(obs)?;
                asked.push(vec![k1, k2]);
            }
        }

        self.estimate = fit_with_design(
            &self.history,
            &self.estimate,
            self.cfg.link,
            self.mle_options(),
            &self.design,
        )?;
        let dim = self.design.dim();
        let alpha = self.cfg.alpha_scale
            * alpha_duel(t, budget, dim, self.cfg.lambda, self.cfg.kappa1, NOISE_SUB_GAUSSIAN, self.cfg.delta)?;

        let geometry = PairGeometry::new(&pool.features, &self.design);
        let mut candidates = build_candidate_set(pool, &self.estimate.theta_proj, &geometry, alpha)?;
        if candidates.is_empty() {
            // Only reachable with duplicated pool features and a zero radius.
            candidates = (0..pool.len()).collect();
        }
        let (i, j) = match self.kind {
            DuelKind::RandomOpt => random_pair(&candidates, arm_rng)?,
            _ => select_arm_pair(&candidates, &geometry, self.cfg.pair_mode, arm_rng)?,
        };
        let (xi, xj) = (&pool.features[i], &pool.features[j]);
        let won = oracle.duel_arms(xi, xj);
        let obs = observation(xi, xj, won, Level::Arm);
        let uncertainty = self.design.mahalanobis(&obs.diff);
        self.design.update(&obs.diff);
        self.history.push(obs)?;

        Ok(RoundRecord {
            round: t,
            selection: Selection::Pair(pool.ids[i], pool.ids[j]),
            conversations: asked,
            outcome: Outcome::Duel(won),
            alpha,
            uncertainty,
            utilities: Vec::new(),
            widths: Vec::new(),
            theta: Some(self.estimate.theta_proj.clone()),
        })
    }

    fn design(&self) -> Option<&DesignMatrix> {
        Some(&self.design)
    }

    fn keyterm_observations(&self) -> usize {
        self.history.keyterm_count()
    }
}
