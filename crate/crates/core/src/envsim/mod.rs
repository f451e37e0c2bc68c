//! Simulated worlds, stochastic users, conversation schedules, regret and the
//! multi-seed experiment runner.

mod feedback;
mod regret;
mod runner;
mod schedule;

pub use feedback::{sample_choice_feedback, sample_click_feedback, sample_duel_feedback, SimulatedUser};
pub use regret::{absolute_regret, dueling_regret, mnl_regret};
pub use runner::{run_experiment, simulate_run, simulate_run_with, ExperimentSpec, RegretTrace, RunTrace};
pub use schedule::Schedule;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::StandardNormal;
use serde_json::Value;

use crate::error::{check_dim, Error, Result};
use crate::glm::{keyterm_features, Feature, LinkFunction, WeightGraph};
use crate::policy::KeytermCatalog;
use crate::rng::{seeded, Purpose};

/// Tolerance on unit norms of stored arm and preference vectors.
pub const UNIT_NORM_TOL: f64 = 1e-9;

/// Arms, key-terms and a population of hidden preference vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Environment {
    link: LinkFunction,
    arms: Vec<Feature>,
    graph: WeightGraph,
    keyterms: Vec<Feature>,
    users: Vec<Feature>,
    provenance: Value,
}

fn check_unit(what: &str, i: usize, x: &Feature) -> Result<()> {
    let n = x.norm();
    if (n - 1.0).abs() > UNIT_NORM_TOL {
        return Err(Error::Structural(format!("{what} {i} has norm {n}, expected 1")));
    }
    Ok(())
}

impl Environment {
    pub fn new(
        link: LinkFunction,
        arms: Vec<Feature>,
        graph: WeightGraph,
        users: Vec<Feature>,
        provenance: Value,
    ) -> Result<Self> {
        let Some(first) = arms.first() else {
            return Err(Error::Structural("environment has no arms".to_string()));
        };
        let d = first.len();
        if d == 0 {
            return Err(Error::Structural("features must have positive dimension".to_string()));
        }
        if users.is_empty() {
            return Err(Error::Structural("environment has no users".to_string()));
        }
        for (i, x) in arms.iter().enumerate() {
            check_dim(d, x.len())?;
            check_unit("arm", i, x)?;
        }
        for (u, th) in users.iter().enumerate() {
            check_dim(d, th.len())?;
            check_unit("user", u, th)?;
        }
        check_dim(arms.len(), graph.num_arms())?;
        let keyterms = keyterm_features(&graph, &arms)?;
        Ok(Self {
            link,
            arms,
            graph,
            keyterms,
            users,
            provenance,
        })
    }

    pub fn dim(&self) -> usize {
        self.arms[0].len()
    }

    pub fn link(&self) -> LinkFunction {
        self.link
    }

    pub fn arms(&self) -> &[Feature] {
        &self.arms
    }

    pub fn graph(&self) -> &WeightGraph {
        &self.graph
    }

    pub fn keyterm_features(&self) -> &[Feature] {
        &self.keyterms
    }

    pub fn users(&self) -> &[Feature] {
        &self.users
    }

    pub fn user(&self, u: usize) -> Result<&Feature> {
        self.users
            .get(u)
            .ok_or_else(|| Error::Domain(format!("user {u} out of range ({} users)", self.users.len())))
    }

    pub fn provenance(&self) -> &Value {
        &self.provenance
    }

    /// Key-term features with their `approx_factor`-spanner.
    pub fn catalog(&self, approx_factor: f64) -> Result<KeytermCatalog> {
        KeytermCatalog::new(self.keyterms.clone(), approx_factor)
    }
}

/// Size of a synthetic world.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticConfig {
    pub users: usize,
    pub keyterms: usize,
    pub arms: usize,
    pub dim: usize,
    /// Largest number of arms a key-term relates to.
    pub max_related: usize,
    pub link: LinkFunction,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            users: 200,
            keyterms: 500,
            arms: 5000,
            dim: 10,
            max_related: 10,
            link: LinkFunction::Sigmoid,
        }
    }
}

fn gaussian_unit<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Feature {
    loop {
        let v = Feature::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = v.norm();
        if n > 0.0 {
            return v / n;
        }
    }
}

/// Gaussian directions for users and arms; each key-term relates to a uniform
/// number in `1..=max_related` of uniformly chosen arms, and an arm left
/// without key-terms gets one uniformly chosen key-term.
pub fn gen_synthetic(cfg: &SyntheticConfig, seed: u64) -> Result<Environment> {
    if cfg.users == 0 || cfg.keyterms == 0 || cfg.arms == 0 || cfg.dim == 0 || cfg.max_related == 0 {
        return Err(Error::Domain("synthetic sizes must all be positive".to_string()));
    }
    let mut rng = seeded(seed, Purpose::Environment);
    let arms: Vec<Feature> = (0..cfg.arms).map(|_| gaussian_unit(&mut rng, cfg.dim)).collect();
    let mut related = vec![Vec::new(); cfg.arms];
    for k in 0..cfg.keyterms {
        let n_k = rng.random_range(1..=cfg.max_related).min(cfg.arms);
        for a in sample(&mut rng, cfg.arms, n_k) {
            related[a].push(k);
        }
    }
    for ks in related.iter_mut() {
        if ks.is_empty() {
            ks.push(rng.random_range(0..cfg.keyterms));
        }
    }
    let graph = WeightGraph::equal_weights(cfg.keyterms, &related)?;
    let mut user_rng = seeded(seed, Purpose::Users);
    let users = (0..cfg.users).map(|_| gaussian_unit(&mut user_rng, cfg.dim)).collect();
    let provenance = serde_json::json!({
        "source": "synthetic",
        "seed": seed,
        "users": cfg.users,
        "keyterms": cfg.keyterms,
        "arms": cfg.arms,
        "dim": cfg.dim,
        "max_related": cfg.max_related,
    });
    Environment::new(cfg.link, arms, graph, users, provenance)
}
