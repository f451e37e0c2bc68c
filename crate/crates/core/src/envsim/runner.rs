//! Multi-seed, multi-user experiment runner.
//!
//! Each `(user, seed)` cell is an independent run; cells execute in parallel
//! and are reduced in `(seed, user)` order, so results never depend on the
//! worker count.

use rand::seq::index::sample;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::feedback::SimulatedUser;
use super::regret::{absolute_regret, dueling_regret, mnl_regret};
use super::schedule::Schedule;
use super::Environment;
use crate::error::{Error, Result};
use crate::policy::{build_policy, Algorithm, ArmPool, KeytermCatalog, Policy, PolicyConfig, RoundInput, RoundRecord, Selection};
use crate::rng::{Purpose, RunSeed};

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub algorithm: Algorithm,
    pub policy: PolicyConfig,
    pub horizon: usize,
    pub seeds: Vec<u64>,
    /// Indices into the environment's user list.
    pub users: Vec<usize>,
    pub schedule: Schedule,
    pub pool_size: usize,
}

impl ExperimentSpec {
    pub fn validate(&self, env: &Environment) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Domain("horizon must be at least 1".to_string()));
        }
        if self.seeds.is_empty() || self.users.is_empty() {
            return Err(Error::Domain("need at least one seed and one user".to_string()));
        }
        if self.pool_size < 2 || self.pool_size > env.arms().len() {
            return Err(Error::Domain(format!(
                "pool size {} must lie in [2, {}]",
                self.pool_size,
                env.arms().len()
            )));
        }
        for &u in &self.users {
            env.user(u)?;
        }
        self.schedule.validate()?;
        self.policy.validate()
    }

    /// Short hash of every setting that affects the simulation.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(format!("{self:?}").as_bytes());
        hex::encode(&digest[..8])
    }
}

/// Instantaneous regret of one `(user, seed)` run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub user: usize,
    pub seed: u64,
    pub instant: Vec<f64>,
}

/// All runs of one algorithm, ordered by seed then user.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretTrace {
    pub algorithm: Algorithm,
    pub fingerprint: String,
    pub horizon: usize,
    pub seeds: Vec<u64>,
    pub runs: Vec<RunTrace>,
}

fn prefix_sum(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .scan(0.0, |acc, &x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

impl RegretTrace {
    /// Per seed, the instantaneous regret averaged over users.
    pub fn per_seed_instant(&self) -> Vec<Vec<f64>> {
        self.seeds
            .iter()
            .map(|&s| {
                let runs: Vec<&RunTrace> = self.runs.iter().filter(|r| r.seed == s).collect();
                let n = runs.len() as f64;
                (0..self.horizon)
                    .map(|t| runs.iter().map(|r| r.instant[t]).sum::<f64>() / n)
                    .collect()
            })
            .collect()
    }

    pub fn per_seed_cumulative(&self) -> Vec<Vec<f64>> {
        self.per_seed_instant().iter().map(|v| prefix_sum(v)).collect()
    }

    /// Mean and standard error across seeds of the cumulative regret, per round.
    pub fn cumulative_summary(&self) -> (Vec<f64>, Vec<f64>) {
        let cum = self.per_seed_cumulative();
        let n = cum.len() as f64;
        (0..self.horizon)
            .map(|t| {
                let mean = cum.iter().map(|c| c[t]).sum::<f64>() / n;
                let se = if cum.len() > 1 {
                    let var = cum.iter().map(|c| (c[t] - mean).powi(2)).sum::<f64>() / (n - 1.0);
                    (var / n).sqrt()
                } else {
                    0.0
                };
                (mean, se)
            })
            .unzip()
    }

    pub fn final_mean(&self) -> f64 {
        self.cumulative_summary().0[self.horizon - 1]
    }

    pub fn final_stderr(&self) -> f64 {
        self.cumulative_summary().1[self.horizon - 1]
    }
}

/// Runs every `(seed, user)` cell of `spec`.
pub fn run_experiment(env: &Environment, catalog: &KeytermCatalog, spec: &ExperimentSpec) -> Result<RegretTrace> {
    spec.validate(env)?;
    let cells: Vec<(u64, usize)> = spec
        .seeds
        .iter()
        .flat_map(|&s| spec.users.iter().map(move |&u| (s, u)))
        .collect();
    let results: Vec<Result<RunTrace>> = cells
        .par_iter()
        .map(|&(seed, user)| simulate_run(env, catalog, spec, user, seed).map(|(trace, _)| trace))
        .collect();
    let runs = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(RegretTrace {
        algorithm: spec.algorithm,
        fingerprint: spec.fingerprint(),
        horizon: spec.horizon,
        seeds: spec.seeds.clone(),
        runs,
    })
}

/// One run; returns the trace and the final policy state.
pub fn simulate_run(
    env: &Environment,
    catalog: &KeytermCatalog,
    spec: &ExperimentSpec,
    user: usize,
    seed: u64,
) -> Result<(RunTrace, Box<dyn Policy>)> {
    simulate_run_with(env, catalog, spec, user, seed, |_, _, _| {})
}

/// [`simulate_run`] calling `observe(pool, record, policy)` after every round.
pub fn simulate_run_with(
    env: &Environment,
    catalog: &KeytermCatalog,
    spec: &ExperimentSpec,
    user: usize,
    seed: u64,
    mut observe: impl FnMut(&ArmPool, &RoundRecord, &dyn Policy),
) -> Result<(RunTrace, Box<dyn Policy>)> {
    spec.validate(env)?;
    let theta = env.user(user)?;
    let run = RunSeed::new(seed, user);
    let mut policy = build_policy(spec.algorithm, &spec.policy, env.dim())?;
    let mut instant = Vec::with_capacity(spec.horizon);
    let wrap = |round: usize, e: Error| Error::Run {
        algorithm: spec.algorithm.tag().to_string(),
        user,
        seed,
        round,
        source: Box::new(e),
    };
    for t in 1..=spec.horizon {
        let mut pool_rng = run.stream(t, Purpose::Pool);
        let mut ids = sample(&mut pool_rng, env.arms().len(), spec.pool_size).into_vec();
        ids.sort_unstable();
        let feats = ids.iter().map(|&i| env.arms()[i].clone()).collect();
        let mut pool = ArmPool::new(t, ids, feats).map_err(|e| wrap(t, e))?;
        if spec.algorithm.is_mnl() {
            pool.revenues = pool.features.iter().map(|x| x.dot(theta)).collect();
        }
        let mut oracle = SimulatedUser {
            link: env.link(),
            theta,
            arm_rng: run.stream(t, Purpose::ArmFeedback),
            keyterm_rng: run.stream(t, Purpose::KeytermFeedback),
        };
        let mut arm_rng = run.stream(t, Purpose::ArmSelect);
        let mut keyterm_rng = run.stream(t, Purpose::KeytermSelect);
        let input = RoundInput {
            t,
            conversations: spec.schedule.conversations_this_round(t),
            budget: spec.schedule.budget(t),
            pool: &pool,
            keyterms: catalog,
            arm_rng: &mut arm_rng,
            keyterm_rng: &mut keyterm_rng,
        };
        let record = policy.step(input, &mut oracle).map_err(|e| wrap(t, e))?;
        let regret = match &record.selection {
            Selection::Pair(a, b) => dueling_regret(theta, &pool, *a, *b),
            Selection::Single(a) => absolute_regret(theta, &pool, *a),
            Selection::Assortment(c) => mnl_regret(theta, &pool, c, spec.policy.q),
        }
        .map_err(|e| wrap(t, e))?;
        // Exact optimizers leave rounding-level negatives only.
        instant.push(regret.max(0.0));
        observe(&pool, &record, policy.as_ref());
    }
    Ok((RunTrace { user, seed, instant }, policy))
}
