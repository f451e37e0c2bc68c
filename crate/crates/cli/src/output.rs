//! Regret CSV files.
//!
//! Per-seed file `t,seed,instant_regret,cum_regret`, rows ordered by seed then
//! `t`; aggregate file `t,mean_cum,stderr_cum`. Every regret value is the
//! per-seed average over users, written with 17 significant digits.

use std::path::Path;

use conduel_core::envsim::RegretTrace;

use crate::error::CliError;

pub const SEED_HEADER: [&str; 4] = ["t", "seed", "instant_regret", "cum_regret"];
pub const AGG_HEADER: [&str; 3] = ["t", "mean_cum", "stderr_cum"];

pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_rows<I>(path: &Path, header: &[&str], rows: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let fail = |e: csv::Error| CliError::Output(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(fail)?;
    w.write_record(header).map_err(fail)?;
    for row in rows {
        w.write_record(&row).map_err(fail)?;
    }
    w.flush().map_err(|e| CliError::io(path.display().to_string(), e))
}

pub fn write_seed_csv(trace: &RegretTrace, path: &Path) -> Result<(), CliError> {
    let instant = trace.per_seed_instant();
    let cumulative = trace.per_seed_cumulative();
    let rows = trace.seeds.iter().enumerate().flat_map(|(i, seed)| {
        let (inst, cum) = (&instant[i], &cumulative[i]);
        (0..trace.horizon).map(move |t| vec![(t + 1).to_string(), seed.to_string(), real(inst[t]), real(cum[t])])
    });
    write_rows(path, &SEED_HEADER, rows)
}

pub fn write_aggregate_csv(trace: &RegretTrace, path: &Path) -> Result<(), CliError> {
    let (mean, se) = trace.cumulative_summary();
    let rows = (0..trace.horizon).map(|t| vec![(t + 1).to_string(), real(mean[t]), real(se[t])]);
    write_rows(path, &AGG_HEADER, rows)
}

/// Mean cumulative regret and its standard error per round, from either file
/// kind.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub label: String,
    pub mean: Vec<f64>,
    pub stderr: Vec<f64>,
}

fn malformed(path: &Path, row: usize, what: &str) -> CliError {
    CliError::Config(format!("{}: row {row}: {what}", path.display()))
}

pub fn read_curve(path: &Path) -> Result<Curve, CliError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let header: Vec<String> = r
        .headers()
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if rec.len() != header.len() {
            return Err(malformed(path, i + 1, "wrong number of fields"));
        }
        let vals = rec
            .iter()
            .map(|f| f.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
            .collect::<Option<Vec<f64>>>()
            .ok_or_else(|| malformed(path, i + 1, "non-numeric field"))?;
        rows.push(vals);
    }
    if rows.is_empty() {
        return Err(CliError::Config(format!("{}: no data rows", path.display())));
    }
    let label = path
        .file_stem()
        .and_then(|s| s.to_str())
        .map(|s| s.strip_suffix(".agg").unwrap_or(s).to_string())
        .unwrap_or_default();
    let h: Vec<&str> = header.iter().map(String::as_str).collect();
    let (mean, stderr) = if h == AGG_HEADER {
        for (i, row) in rows.iter().enumerate() {
            if row[0] != (i + 1) as f64 {
                return Err(malformed(path, i + 1, "rounds must run 1, 2, ..."));
            }
        }
        (rows.iter().map(|r| r[1]).collect(), rows.iter().map(|r| r[2]).collect())
    } else if h == SEED_HEADER {
        summarize_seed_rows(path, &rows)?
    } else {
        return Err(CliError::Config(format!("{}: unrecognized header {header:?}", path.display())));
    };
    Ok(Curve { label, mean, stderr })
}

/// Groups per-seed rows and recomputes the mean and standard error.
fn summarize_seed_rows(path: &Path, rows: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>), CliError> {
    let mut series: Vec<(f64, Vec<f64>)> = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        let (t, seed, cum) = (row[0], row[1], row[3]);
        match series.last_mut() {
            Some((s, v)) if *s == seed => {
                if t != (v.len() + 1) as f64 {
                    return Err(malformed(path, i + 1, "rounds must run 1, 2, ... within a seed"));
                }
                v.push(cum);
            }
            _ => {
                if t != 1.0 {
                    return Err(malformed(path, i + 1, "a seed's rows must start at round 1"));
                }
                series.push((seed, vec![cum]));
            }
        }
    }
    let horizon = series[0].1.len();
    if series.iter().any(|(_, v)| v.len() != horizon) {
        return Err(CliError::Config(format!("{}: seeds have different horizons", path.display())));
    }
    let n = series.len() as f64;
    Ok((0..horizon)
        .map(|t| {
            let mean = series.iter().map(|(_, v)| v[t]).sum::<f64>() / n;
            let se = if series.len() > 1 {
                let var = series.iter().map(|(_, v)| (v[t] - mean).powi(2)).sum::<f64>() / (n - 1.0);
                (var / n).sqrt()
            } else {
                0.0
            };
            (mean, se)
        })
        .unzip())
}
