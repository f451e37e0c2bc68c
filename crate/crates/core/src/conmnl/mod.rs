//! Conversational multinomial-logit assortment bandits and the UCB-MNL baseline.

mod assortment;
mod choice;

pub use assortment::{estimated_revenue, optimal_assortment};
pub use choice::{
    alpha_mnl, expected_revenue, mnl_information, mnl_log_likelihood, mnl_mle_fit, mnl_probs, mnl_score,
    probs_from_utilities, ChoiceHistory, ChoiceObservation, ChoiceProbs, NEWTON_RIDGE,
};

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::Rng;

use crate::error::{Error, Result};
use crate::estimator::Level;
use crate::glm::{DesignMatrix, Feature};
use crate::policy::{Algorithm, Choice, FeedbackOracle, Outcome, Policy, RoundInput, RoundRecord, Selection};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MnlKind {
    /// Key-terms drawn iid from the spanner.
    ConMnl,
    /// The `q` key-terms with the largest optimistic utility.
    ConMnlUcb,
    /// Key-terms drawn iid from every key-term.
    ConMnlRandom,
    /// No conversations.
    UcbMnl,
}

impl MnlKind {
    pub fn algorithm(self) -> Algorithm {
        match self {
            MnlKind::ConMnl => Algorithm::ConMnl,
            MnlKind::ConMnlUcb => Algorithm::ConMnlUcb,
            MnlKind::ConMnlRandom => Algorithm::ConMnlRandom,
            MnlKind::UcbMnl => Algorithm::UcbMnl,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MnlConfig {
    pub q: usize,
    pub t0: usize,
    pub kappa2: f64,
    pub alpha_scale: f64,
    pub tol: f64,
    pub max_iters: usize,
}

/// `z_a = x_a^T theta + alpha |x_a|_{M^{-1}}`, with the widths alongside.
pub fn ucb_utilities(theta: &Feature, design: &DesignMatrix, alpha: f64, features: &[Feature]) -> (Vec<f64>, Vec<f64>) {
    features
        .iter()
        .map(|x| {
            let w = design.mahalanobis(x);
            (x.dot(theta) + alpha * w, w)
        })
        .unzip()
}

/// Phase-dependent design state: a raw Gram sum while exploring, then a
/// maintained inverse.
#[derive(Debug, Clone)]
enum Gram {
    Exploring(DMatrix<f64>),
    Ready(DesignMatrix),
}

#[derive(Debug, Clone)]
pub struct MnlPolicy {
    kind: MnlKind,
    cfg: MnlConfig,
    dim: usize,
    theta: Feature,
    gram: Gram,
    history: ChoiceHistory,
    rank_one_updates: usize,
}

impl MnlPolicy {
    pub fn new(kind: MnlKind, cfg: MnlConfig, dim: usize) -> Result<Self> {
        if cfg.q == 0 || cfg.t0 == 0 {
            return Err(Error::Domain("assortment size and exploration length must be positive".to_string()));
        }
        Ok(Self {
            kind,
            cfg,
            dim,
            theta: Feature::zeros(dim),
            gram: Gram::Exploring(DMatrix::zeros(dim, dim)),
            history: ChoiceHistory::new(dim),
            rank_one_updates: 0,
        })
    }

    pub fn theta(&self) -> &Feature {
        &self.theta
    }

    pub fn history(&self) -> &ChoiceHistory {
        &self.history
    }

    /// Outer products added to the design so far.
    pub fn rank_one_updates(&self) -> usize {
        self.rank_one_updates
    }

    fn absorb(&mut self, offered: Vec<Feature>, chosen: Choice, level: Level) -> Result<()> {
        for x in &offered {
            match &mut self.gram {
                Gram::Exploring(m) => m.ger(1.0, x, x, 1.0),
                Gram::Ready(m) => m.update(x),
            }
        }
        self.rank_one_updates += offered.len();
        self.history.push(&ChoiceObservation { offered, chosen, level })
    }

    fn converse(&mut self, ids: Vec<usize>, features: &[Feature], oracle: &mut dyn FeedbackOracle) -> Result<Vec<usize>> {
        let offered: Vec<Feature> = ids.iter().map(|&k| features[k].clone()).collect();
        let chosen = oracle.choose_keyterms(&offered);
        self.absorb(offered, chosen, Level::KeyTerm)?;
        Ok(ids)
    }
}

fn iid_draws<R: Rng + ?Sized>(from: &[usize], q: usize, rng: &mut R) -> Vec<usize> {
    (0..q).map(|_| from[rng.random_range(0..from.len())]).collect()
}

impl Policy for MnlPolicy {
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
        if pool.revenues.len() != pool.len() {
            return Err(Error::DimensionMismatch {
                expected: pool.len(),
                got: pool.revenues.len(),
            });
        }
        let q = self.cfg.q;
        let members = keyterms.spanner.member_ids().to_vec();
        let all: Vec<usize> = (0..keyterms.len()).collect();
        let mut asked = Vec::new();

        if t <= self.cfg.t0 {
            if self.kind != MnlKind::UcbMnl {
                for _ in 0..conversations {
                    let ids = iid_draws(&members, q, keyterm_rng);
                    asked.push(self.converse(ids, &keyterms.features, oracle)?);
                }
            }
            let mut offer: Vec<usize> = sample(arm_rng, pool.len(), q.min(pool.len())).into_vec();
            offer.sort_unstable();
            let offered: Vec<Feature> = offer.iter().map(|&i| pool.features[i].clone()).collect();
            let chosen = oracle.choose_arms(&offered);
            self.absorb(offered, chosen, Level::Arm)?;
            if t == self.cfg.t0 {
                let Gram::Exploring(m) = &self.gram else {
                    unreachable!("exploration ends once")
                };
                let design = DesignMatrix::from_matrix(m.clone()).map_err(|_| {
                    Error::Structural(format!("Gram matrix after {} exploration rounds is singular", self.cfg.t0))
                })?;
                self.gram = Gram::Ready(design);
            }
            return Ok(RoundRecord {
                round: t,
                selection: Selection::Assortment(offer.iter().map(|&i| pool.ids[i]).collect()),
                conversations: asked,
                outcome: Outcome::Choice(chosen),
                alpha: 0.0,
                uncertainty: 0.0,
                utilities: Vec::new(),
                widths: Vec::new(),
                theta: None,
            });
        }

        let alpha = self.cfg.alpha_scale * alpha_mnl(t, budget, self.dim, self.cfg.kappa2)?;
        for _ in 0..conversations {
            let ids = match self.kind {
                MnlKind::UcbMnl => break,
                MnlKind::ConMnl => iid_draws(&members, q, keyterm_rng),
                MnlKind::ConMnlRandom => iid_draws(&all, q, keyterm_rng),
                MnlKind::ConMnlUcb => {
                    let Gram::Ready(design) = &self.gram else {
                        return Err(Error::Structural("design matrix not initialized".to_string()));
                    };
                    let (z, _) = ucb_utilities(&self.theta, design, alpha, &keyterms.features);
                    let mut order = all.clone();
                    order.sort_by(|&a, &b| z[b].total_cmp(&z[a]).then(a.cmp(&b)));
                    order.truncate(q);
                    order
                }
            };
            asked.push(self.converse(ids, &keyterms.features, oracle)?);
        }

        self.theta = mnl_mle_fit(&self.history, &self.theta, self.cfg.tol, self.cfg.max_iters)?;
        let Gram::Ready(design) = &self.gram else {
            return Err(Error::Structural("design matrix not initialized".to_string()));
        };
        let (z, widths) = ucb_utilities(&self.theta, design, alpha, &pool.features);
        let offer = optimal_assortment(&z, &pool.revenues, q);
        let uncertainty = offer.iter().map(|&i| widths[i]).sum();
        let offered: Vec<Feature> = offer.iter().map(|&i| pool.features[i].clone()).collect();
        let chosen = if offered.is_empty() {
            Choice::Outside
        } else {
            let c = oracle.choose_arms(&offered);
            self.absorb(offered, c, Level::Arm)?;
            c
        };
        Ok(RoundRecord {
            round: t,
            selection: Selection::Assortment(offer.iter().map(|&i| pool.ids[i]).collect()),
            conversations: asked,
            outcome: Outcome::Choice(chosen),
            alpha,
            uncertainty,
            utilities: z,
            widths,
            theta: Some(self.theta.clone()),
        })
    }

    fn design(&self) -> Option<&DesignMatrix> {
        match &self.gram {
            Gram::Ready(m) => Some(m),
            Gram::Exploring(_) => None,
        }
    }

    fn keyterm_observations(&self) -> usize {
        self.history.count(Level::KeyTerm)
    }
}
