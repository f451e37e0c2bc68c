//! The step interface shared by every policy, and the algorithm registry.

use std::fmt;
use std::str::FromStr;

use rand_chacha::ChaCha8Rng;

use crate::conduel::{DuelConfig, DuelKind, DuelPolicy, PairMode, RconucbConfig, RconucbPolicy, RconucbVariant};
use crate::conmnl::{MnlConfig, MnlKind, MnlPolicy};
use crate::error::{Error, Result};
use crate::glm::{DesignMatrix, Feature, LinkFunction};
use crate::spanner::Spanner;

/// Arms offered at one round, sorted by arm id.
#[derive(Debug, Clone)]
pub struct ArmPool {
    pub round: usize,
    pub ids: Vec<usize>,
    pub features: Vec<Feature>,
    /// Per-arm revenue, used by assortment policies. Empty for dueling policies.
    pub revenues: Vec<f64>,
}

impl ArmPool {
    pub fn new(round: usize, ids: Vec<usize>, features: Vec<Feature>) -> Result<Self> {
        if ids.len() != features.len() {
            return Err(Error::DimensionMismatch {
                expected: ids.len(),
                got: features.len(),
            });
        }
        if ids.len() < 2 {
            return Err(Error::Domain(format!("arm pool needs at least 2 arms, got {}", ids.len())));
        }
        let mut order: Vec<usize> = (0..ids.len()).collect();
        order.sort_by_key(|&i| ids[i]);
        if order.windows(2).any(|w| ids[w[0]] == ids[w[1]]) {
            return Err(Error::Domain("arm pool contains a duplicate id".to_string()));
        }
        Ok(Self {
            round,
            ids: order.iter().map(|&i| ids[i]).collect(),
            features: order.iter().map(|&i| features[i].clone()).collect(),
            revenues: Vec::new(),
        })
    }

    pub fn with_revenues(mut self, revenues: Vec<f64>) -> Self {
        self.revenues = revenues;
        self
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features[0].len()
    }

    /// Position of an arm id in the pool.
    pub fn index_of(&self, id: usize) -> Option<usize> {
        self.ids.binary_search(&id).ok()
    }
}

/// Key-term features plus their spanner; immutable and shared across runs.
#[derive(Debug, Clone)]
pub struct KeytermCatalog {
    pub features: Vec<Feature>,
    pub spanner: Spanner,
}

impl KeytermCatalog {
    pub fn new(features: Vec<Feature>, approx_factor: f64) -> Result<Self> {
        let spanner = crate::spanner::build_spanner(&features, approx_factor)?;
        Ok(Self { features, spanner })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }
}

/// Outcome of a multinomial choice: an index into the offered list, or no purchase.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Choice {
    Item(usize),
    Outside,
}

/// Source of user feedback. Implementations hold the hidden preference vector.
pub trait FeedbackOracle {
    /// `true` when `first` beats `second` at the arm level.
    fn duel_arms(&mut self, first: &Feature, second: &Feature) -> bool;
    fn duel_keyterms(&mut self, first: &Feature, second: &Feature) -> bool;
    /// Absolute click feedback on a single arm.
    fn click(&mut self, x: &Feature) -> bool;
    fn choose_arms(&mut self, offered: &[Feature]) -> Choice;
    fn choose_keyterms(&mut self, offered: &[Feature]) -> Choice;
}

/// Per-round inputs handed to a policy.
pub struct RoundInput<'a> {
    pub t: usize,
    /// Conversations scheduled this round.
    pub conversations: usize,
    /// Cumulative conversation budget `b(t)`.
    pub budget: f64,
    pub pool: &'a ArmPool,
    pub keyterms: &'a KeytermCatalog,
    pub arm_rng: &'a mut ChaCha8Rng,
    pub keyterm_rng: &'a mut ChaCha8Rng,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Selection {
    Pair(usize, usize),
    Single(usize),
    Assortment(Vec<usize>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Outcome {
    Duel(bool),
    Click(bool),
    Choice(Choice),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    /// Arm ids that were shown.
    pub selection: Selection,
    /// Key-term ids queried in each conversation.
    pub conversations: Vec<Vec<usize>>,
    pub outcome: Outcome,
    /// Confidence radius used for arm selection (0 while exploring).
    pub alpha: f64,
    /// `|d_t|_{M_t^{-1}}` for duels, `sum_i |x_i|_{M_t^{-1}}` for assortments.
    pub uncertainty: f64,
    /// UCB utilities per pool arm, when the policy computes them.
    pub utilities: Vec<f64>,
    /// `|x_a|_{M_t^{-1}}` per pool arm, alongside `utilities`.
    pub widths: Vec<f64>,
    /// Parameter estimate used for the arm decision.
    pub theta: Option<Feature>,
}

pub trait Policy: Send {
    fn algorithm(&self) -> Algorithm;
    fn step(&mut self, input: RoundInput<'_>, oracle: &mut dyn FeedbackOracle) -> Result<RoundRecord>;
    /// Design matrix driving exploration, when the policy keeps one.
    fn design(&self) -> Option<&DesignMatrix>;
    /// Number of key-term observations recorded so far.
    fn keyterm_observations(&self) -> usize;
}

/// Every algorithm the harness can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    ConDuel,
    ConDuelRandom,
    ConDuelMaxInp,
    MaxInp,
    RandomOpt,
    RconucbPosNeg,
    RconucbDiff,
    ConMnl,
    ConMnlUcb,
    ConMnlRandom,
    UcbMnl,
}

/// How regret is measured for an algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegretKind {
    /// Best utility minus the mean utility of the shown pair.
    Dueling,
    /// Best utility minus the utility of the single shown arm.
    Absolute,
    /// Optimal expected revenue minus the offered assortment's.
    Assortment,
}

impl Algorithm {
    pub const ALL: [Algorithm; 11] = [
        Algorithm::ConDuel,
        Algorithm::ConDuelRandom,
        Algorithm::ConDuelMaxInp,
        Algorithm::MaxInp,
        Algorithm::RandomOpt,
        Algorithm::RconucbPosNeg,
        Algorithm::RconucbDiff,
        Algorithm::ConMnl,
        Algorithm::ConMnlUcb,
        Algorithm::ConMnlRandom,
        Algorithm::UcbMnl,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Algorithm::ConDuel => "ConDuel",
            Algorithm::ConDuelRandom => "ConDuel-Random",
            Algorithm::ConDuelMaxInp => "ConDuel-MaxInp",
            Algorithm::MaxInp => "MaxInp",
            Algorithm::RandomOpt => "Random-opt",
            Algorithm::RconucbPosNeg => "Rconucb-PosNeg",
            Algorithm::RconucbDiff => "Rconucb-Diff",
            Algorithm::ConMnl => "ConMNL",
            Algorithm::ConMnlUcb => "ConMNL-ucb",
            Algorithm::ConMnlRandom => "ConMNL-random",
            Algorithm::UcbMnl => "UCB-MNL",
        }
    }

    pub fn regret_kind(self) -> RegretKind {
        match self {
            Algorithm::RconucbPosNeg | Algorithm::RconucbDiff => RegretKind::Absolute,
            Algorithm::ConMnl | Algorithm::ConMnlUcb | Algorithm::ConMnlRandom | Algorithm::UcbMnl => {
                RegretKind::Assortment
            }
            _ => RegretKind::Dueling,
        }
    }

    pub fn is_mnl(self) -> bool {
        self.regret_kind() == RegretKind::Assortment
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .iter()
            .copied()
            .find(|a| a.tag().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Domain(format!("unknown algorithm {s:?}")))
    }
}

/// Estimator and exploration constants shared by all policies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyConfig {
    pub link: LinkFunction,
    pub lambda: f64,
    pub delta: f64,
    /// Overrides the link's derived slope bound when set.
    pub kappa1: Option<f64>,
    pub kappa2: f64,
    pub tol: f64,
    pub max_iters: usize,
    /// Multiplier on the theoretical confidence radius.
    pub alpha_scale: f64,
    pub pair_mode: PairMode,
    /// Assortment size for the multinomial policies.
    pub q: usize,
    /// Length of the random exploration phase of the multinomial policies.
    pub t0: usize,
}

impl Default for PolicyConfig {
    fn default() -> Self {
        Self {
            link: LinkFunction::Sigmoid,
            lambda: 1.0,
            delta: 0.1,
            kappa1: None,
            kappa2: 0.05,
            tol: 1e-8,
            max_iters: 100,
            alpha_scale: DEFAULT_ALPHA_SCALE,
            pair_mode: PairMode::SampledFirst,
            q: 4,
            t0: 50,
        }
    }
}

/// Default multiplier on the confidence radii; see the README for the rationale.
pub const DEFAULT_ALPHA_SCALE: f64 = 0.02;

impl PolicyConfig {
    pub fn kappa1(&self) -> f64 {
        self.kappa1.unwrap_or_else(|| self.link.kappa1())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Domain(what.to_string()));
        if !(self.lambda > 0.0) {
            return bad("lambda must be positive");
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return bad("delta must lie in (0, 1)");
        }
        if !(self.kappa1() > 0.0) {
            return bad("kappa1 must be positive");
        }
        if !(self.kappa2 > 0.0) {
            return bad("kappa2 must be positive");
        }
        if !(self.tol > 0.0) || self.max_iters == 0 {
            return bad("solver tolerance and iteration cap must be positive");
        }
        if !(self.alpha_scale >= 0.0) {
            return bad("alpha scale must be non-negative");
        }
        if self.q < 1 {
            return bad("assortment size must be at least 1");
        }
        if self.t0 < 1 {
            return bad("the exploration phase needs at least one round");
        }
        Ok(())
    }
}

/// Fresh policy for `algorithm` on `dim`-dimensional features.
pub fn build_policy(algorithm: Algorithm, cfg: &PolicyConfig, dim: usize) -> Result<Box<dyn Policy>> {
    cfg.validate()?;
    let duel = |kind: DuelKind| -> Result<Box<dyn Policy>> {
        let dc = DuelConfig {
            link: cfg.link,
            lambda: cfg.lambda,
            delta: cfg.delta,
            kappa1: cfg.kappa1(),
            tol: cfg.tol,
            max_iters: cfg.max_iters,
            alpha_scale: cfg.alpha_scale,
            pair_mode: cfg.pair_mode,
        };
        Ok(Box::new(DuelPolicy::new(kind, dc, dim)?))
    };
    let rconucb = |variant: RconucbVariant| -> Result<Box<dyn Policy>> {
        let rc = RconucbConfig {
            alpha_scale: cfg.alpha_scale,
            delta: cfg.delta,
            ..RconucbConfig::default()
        };
        Ok(Box::new(RconucbPolicy::new(variant, rc, dim)?))
    };
    let mnl = |kind: MnlKind| -> Result<Box<dyn Policy>> {
        let mc = MnlConfig {
            q: cfg.q,
            t0: cfg.t0,
            kappa2: cfg.kappa2,
            alpha_scale: cfg.alpha_scale,
            tol: cfg.tol,
            max_iters: cfg.max_iters,
        };
        Ok(Box::new(MnlPolicy::new(kind, mc, dim)?))
    };
    match algorithm {
        Algorithm::ConDuel => duel(DuelKind::ConDuel),
        Algorithm::ConDuelRandom => duel(DuelKind::ConDuelRandom),
        Algorithm::ConDuelMaxInp => duel(DuelKind::ConDuelMaxInp),
        Algorithm::MaxInp => duel(DuelKind::MaxInp),
        Algorithm::RandomOpt => duel(DuelKind::RandomOpt),
        Algorithm::RconucbPosNeg => rconucb(RconucbVariant::PosNeg),
        Algorithm::RconucbDiff => rconucb(RconucbVariant::Diff),
        Algorithm::ConMnl => mnl(MnlKind::ConMnl),
        Algorithm::ConMnlUcb => mnl(MnlKind::ConMnlUcb),
        Algorithm::ConMnlRandom => mnl(MnlKind::ConMnlRandom),
        Algorithm::UcbMnl => mnl(MnlKind::UcbMnl),
    }
}
