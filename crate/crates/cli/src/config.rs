//! Flat `key = value` run configuration.
//!
//! Precedence, lowest first: built-in defaults, `CONDUEL_OUT_DIR` for the
//! output directory, the configuration file, then command-line overrides.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use conduel_core::conduel::PairMode;
use conduel_core::envsim::{Schedule, SyntheticConfig};
use conduel_core::ingest::BuildConfig;
use conduel_core::{Algorithm, LinkFunction, PolicyConfig};

use crate::error::CliError;

pub const OUT_DIR_VAR: &str = "CONDUEL_OUT_DIR";

/// Every recognized key, for error messages and documentation.
pub const KEYS: &[&str] = &[
    "algorithms",
    "env",
    "horizon",
    "seeds",
    "users",
    "schedule",
    "pool_size",
    "lambda",
    "delta",
    "kappa1",
    "kappa2",
    "tol",
    "max_iters",
    "alpha_scale",
    "pair_mode",
    "q",
    "t0",
    "approx_factor",
    "out_dir",
    "workers",
    "link",
    "dim",
    "env_seed",
    "synth.users",
    "synth.keyterms",
    "synth.arms",
    "synth.max_related",
    "prep.items",
    "prep.users",
    "prep.tags_per_item",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub algorithms: Vec<Algorithm>,
    /// Environment file; a synthetic environment is generated when absent.
    pub env: Option<PathBuf>,
    pub synthetic: SyntheticConfig,
    pub prep: BuildConfig,
    pub env_seed: u64,
    pub horizon: usize,
    pub seeds: Vec<u64>,
    /// Number of users simulated, taken from the start of the user list.
    pub users: usize,
    pub schedule: Schedule,
    pub pool_size: usize,
    pub policy: PolicyConfig,
    /// Spanner approximation factor.
    pub approx_factor: f64,
    pub out_dir: PathBuf,
    /// Worker threads; `None` uses one per processor.
    pub workers: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            algorithms: vec![Algorithm::ConDuel],
            env: None,
            synthetic: SyntheticConfig::default(),
            prep: BuildConfig::default(),
            env_seed: 0,
            horizon: 3000,
            seeds: (0..10).collect(),
            users: 20,
            schedule: Schedule::LinearFloor(10),
            pool_size: 50,
            policy: PolicyConfig::default(),
            approx_factor: 2.0,
            out_dir: PathBuf::from("results"),
            workers: None,
        }
    }
}

/// Where a setting came from, for error messages.
#[derive(Debug, Clone)]
pub enum Origin {
    File { path: PathBuf, line: usize },
    Flag,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::File { path, line } => write!(f, "{}:{line}", path.display()),
            Origin::Flag => write!(f, "command line"),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str, origin: &Origin) -> Result<T, CliError> {
    value
        .trim()
        .parse()
        .map_err(|_| CliError::Config(format!("{origin}: invalid value {value:?} for {key}")))
}

/// `"0-9"`, `"1,4,7"` or a mix such as `"0-2,10"`.
pub fn parse_seeds(s: &str) -> Option<Vec<u64>> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim) {
        match part.split_once('-') {
            Some((a, b)) => {
                let (a, b): (u64, u64) = (a.trim().parse().ok()?, b.trim().parse().ok()?);
                if a > b {
                    return None;
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().ok()?),
        }
    }
    Some(out)
}

fn parse_algorithms(s: &str) -> Option<Vec<Algorithm>> {
    s.split(',').map(|a| a.trim().parse().ok()).collect()
}

impl RunConfig {
    /// Defaults with the output directory taken from the environment when set.
    pub fn from_env() -> Self {
        let mut cfg = Self::default();
        if let Some(dir) = std::env::var_os(OUT_DIR_VAR).filter(|v| !v.is_empty()) {
            cfg.out_dir = PathBuf::from(dir);
        }
        cfg
    }

    pub fn set(&mut self, key: &str, value: &str, origin: &Origin) -> Result<(), CliError> {
        let v = value.trim();
        let p = |k: &str| -> Result<f64, CliError> { parse(k, v, origin) };
        let u = |k: &str| -> Result<usize, CliError> { parse(k, v, origin) };
        let bad = || CliError::Config(format!("{origin}: invalid value {value:?} for {key}"));
        match key {
            "algorithms" => self.algorithms = parse_algorithms(v).ok_or_else(bad)?,
            "env" => self.env = if v.is_empty() { None } else { Some(PathBuf::from(v)) },
            "horizon" => self.horizon = u(key)?,
            "seeds" => self.seeds = parse_seeds(v).ok_or_else(bad)?,
            "users" => self.users = u(key)?,
            "schedule" => self.schedule = v.parse().map_err(|_| bad())?,
            "pool_size" => self.pool_size = u(key)?,
            "lambda" => self.policy.lambda = p(key)?,
            "delta" => self.policy.delta = p(key)?,
            "kappa1" => self.policy.kappa1 = Some(p(key)?),
            "kappa2" => self.policy.kappa2 = p(key)?,
            "tol" => self.policy.tol = p(key)?,
            "max_iters" => self.policy.max_iters = u(key)?,
            "alpha_scale" => self.policy.alpha_scale = p(key)?,
            "pair_mode" => self.policy.pair_mode = PairMode::from_name(v).ok_or_else(bad)?,
            "q" => self.policy.q = u(key)?,
            "t0" => self.policy.t0 = u(key)?,
            "approx_factor" => self.approx_factor = p(key)?,
            "out_dir" => self.out_dir = PathBuf::from(v),
            "workers" => self.workers = Some(u(key)?),
            "link" => {
                let link = LinkFunction::from_name(v).ok_or_else(bad)?;
                self.synthetic.link = link;
                self.policy.link = link;
            }
            "dim" => {
                self.synthetic.dim = u(key)?;
                self.prep.dim = self.synthetic.dim;
            }
            "env_seed" => self.env_seed = parse(key, v, origin)?,
            "synth.users" => self.synthetic.users = u(key)?,
            "synth.keyterms" => self.synthetic.keyterms = u(key)?,
            "synth.arms" => self.synthetic.arms = u(key)?,
            "synth.max_related" => self.synthetic.max_related = u(key)?,
            "prep.items" => self.prep.items = u(key)?,
            "prep.users" => self.prep.users = u(key)?,
            "prep.tags_per_item" => self.prep.tags_per_item = u(key)?,
            _ => {
                return Err(CliError::Config(format!(
                    "{origin}: unknown key {key:?}; known keys: {}",
                    KEYS.join(", ")
                )))
            }
        }
        Ok(())
    }

    /// Applies a `key = value` file; `#` starts a comment.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        for (i, line) in text.lines().enumerate() {
            let origin = Origin::File {
                path: path.to_path_buf(),
                line: i + 1,
            };
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("{origin}: expected key = value")))?;
            self.set(key.trim(), value, &origin)?;
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, pair: &str) -> Result<(), CliError> {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("override {pair:?} is not of the form key=value")))?;
        self.set(key.trim(), value, &Origin::Flag)
    }

    /// Checks every run setting before any work starts.
    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        if self.algorithms.is_empty() {
            return bad("no algorithms selected".to_string());
        }
        if self.horizon == 0 {
            return bad("horizon must be at least 1".to_string());
        }
        if self.seeds.is_empty() {
            return bad("seed list is empty".to_string());
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return bad("seed list repeats a seed".to_string());
        }
        if self.users == 0 {
            return bad("users must be at least 1".to_string());
        }
        if self.pool_size < 2 {
            return bad("pool_size must be at least 2".to_string());
        }
        if !(self.approx_factor >= 1.0) {
            return bad(format!("approx_factor must be at least 1, got {}", self.approx_factor));
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".to_string());
        }
        if self.synthetic.users == 0 || self.synthetic.keyterms == 0 || self.synthetic.arms < 2 || self.synthetic.dim == 0 {
            return bad("synthetic environment sizes must be positive".to_string());
        }
        if self.synthetic.max_related == 0 {
            return bad("synth.max_related must be at least 1".to_string());
        }
        self.schedule.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.policy.validate().map_err(|e| CliError::Config(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_syntax() {
        assert_eq!(parse_seeds("0-3"), Some(vec![0, 1, 2, 3]));
        assert_eq!(parse_seeds("5, 2,7-8"), Some(vec![5, 2, 7, 8]));
        assert_eq!(parse_seeds("3-1"), None);
        assert_eq!(parse_seeds("x"), None);
        assert_eq!(parse_seeds(""), None);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let mut c = RunConfig::default();
        let err = c.apply_override("horizn=5").unwrap_err();
        assert!(err.to_string().contains("unknown key \"horizn\""));
        assert!(c.apply_override("horizon").is_err());
        assert!(c.apply_override("horizon=-1").is_err());
    }

    #[test]
    fn overrides_apply_and_validate() {
        let mut c = RunConfig::default();
        c.apply_override("algorithms=ConDuel,maxinp").unwrap();
        c.apply_override("schedule=log:5").unwrap();
        c.apply_override("link=clamped-linear").unwrap();
        assert_eq!(c.algorithms, vec![Algorithm::ConDuel, Algorithm::MaxInp]);
        assert_eq!(c.schedule, Schedule::LogFloor(5));
        assert_eq!(c.policy.link, LinkFunction::ClampedLinear);
        c.validate().unwrap();
        c.apply_override("delta=2").unwrap();
        assert!(c.validate().is_err());
    }
}
