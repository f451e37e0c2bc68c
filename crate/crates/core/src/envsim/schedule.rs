use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Cumulative conversation budget `b(t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Schedule {
    /// `n floor(t / 50)`
    LinearFloor(u32),
    /// `n floor(ln t)`
    LogFloor(u32),
    /// `b t`
    Proportional(f64),
}

/// Rounds per block of [`Schedule::LinearFloor`].
pub const LINEAR_BLOCK: usize = 50;

impl Schedule {
    pub fn none() -> Self {
        Schedule::Proportional(0.0)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Schedule::Proportional(b) if !(0.0..=1.0).contains(&b) => {
                Err(Error::Domain(format!("proportional rate must lie in [0, 1], got {b}")))
            }
            _ => Ok(()),
        }
    }

    /// `b(t)`, with `b(0) = 0`.
    pub fn budget(&self, t: usize) -> f64 {
        if t == 0 {
            return 0.0;
        }
        match *self {
            Schedule::LinearFloor(n) => n as f64 * (t / LINEAR_BLOCK) as f64,
            Schedule::LogFloor(n) => n as f64 * (t as f64).ln().floor(),
            Schedule::Proportional(b) => b * t as f64,
        }
    }

    /// `floor(b(t)) - floor(b(t - 1))` for `t >= 1`.
    pub fn conversations_this_round(&self, t: usize) -> usize {
        if t == 0 {
            return 0;
        }
        let now = self.budget(t).floor();
        let before = self.budget(t - 1).floor();
        (now - before).max(0.0) as usize
    }
}

impl fmt::Display for Schedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Schedule::LinearFloor(n) => write!(f, "linear:{n}"),
            Schedule::LogFloor(n) => write!(f, "log:{n}"),
            Schedule::Proportional(b) => write!(f, "prop:{b}"),
        }
    }
}

impl FromStr for Schedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Domain(format!("bad schedule {s:?}; expected none, linear:N, log:N or prop:B"));
        if s == "none" {
            return Ok(Schedule::none());
        }
        let (kind, arg) = s.split_once(':').ok_or_else(bad)?;
        let schedule = match kind {
            "linear" => Schedule::LinearFloor(arg.parse().map_err(|_| bad())?),
            "log" => Schedule::LogFloor(arg.parse().map_err(|_| bad())?),
            "prop" => Schedule::Proportional(arg.parse().map_err(|_| bad())?),
            _ => return Err(bad()),
        };
        schedule.validate()?;
        Ok(schedule)
    }
}
