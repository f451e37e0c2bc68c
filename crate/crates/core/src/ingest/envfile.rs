//! Self-describing JSON environment files.
//!
//! ```text
//! {
//!   "format": "conduel-environment",
//!   "version": 1,
//!   "d": <dimension>,
//!   "link": "sigmoid" | "clamped-linear",
//!   "users": [[theta_1...], ...],          // one unit vector per user
//!   "arms": [[x_1...], ...],               // one unit vector per arm
//!   "keyterm_count": <K>,
//!   "weights": [[arm, keyterm, w], ...],   // arm-major
//!   "provenance": {...},
//!   "checksum": "<sha256 hex>"
//! }
//! ```
//!
//! Reals are written as `%.16e` (17 significant digits), which round-trips
//! every `f64`. The checksum is the SHA-256 of the compact serialization of
//! every other field with keys in sorted order.

use std::path::Path;

use serde_json::{Map, Number, Value};
use sha2::{Digest, Sha256};

use crate::envsim::Environment;
use crate::error::{Error, Result};
use crate::glm::{Feature, LinkFunction, WeightGraph};

pub const FORMAT: &str = "conduel-environment";
pub const VERSION: u64 = 1;

fn real(x: f64) -> Result<Value> {
    if !x.is_finite() {
        return Err(Error::Format(format!("cannot store non-finite value {x}")));
    }
    let n: Number = format!("{x:.16e}")
        .parse()
        .map_err(|e| Error::Format(format!("number formatting: {e}")))?;
    Ok(Value::Number(n))
}

fn vector(x: &Feature) -> Result<Value> {
    Ok(Value::Array(x.iter().map(|&v| real(v)).collect::<Result<_>>()?))
}

fn checksum(body: &Map<String, Value>) -> String {
    let text = serde_json::to_string(body).expect("values serialize");
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// The environment as a JSON document, checksum included.
pub fn to_value(env: &Environment) -> Result<Value> {
    let mut body = Map::new();
    body.insert("format".into(), Value::from(FORMAT));
    body.insert("version".into(), Value::from(VERSION));
    body.insert("d".into(), Value::from(env.dim()));
    body.insert("link".into(), Value::from(env.link().name()));
    body.insert(
        "users".into(),
        Value::Array(env.users().iter().map(vector).collect::<Result<_>>()?),
    );
    body.insert(
        "arms".into(),
        Value::Array(env.arms().iter().map(vector).collect::<Result<_>>()?),
    );
    body.insert("keyterm_count".into(), Value::from(env.graph().num_keyterms()));
    let weights = env
        .graph()
        .triples()
        .map(|(a, k, w)| Ok(Value::Array(vec![Value::from(a), Value::from(k), real(w)?])))
        .collect::<Result<_>>()?;
    body.insert("weights".into(), Value::Array(weights));
    body.insert("provenance".into(), env.provenance().clone());
    let sum = checksum(&body);
    body.insert("checksum".into(), Value::from(sum));
    Ok(Value::Object(body))
}

pub fn to_string(env: &Environment) -> Result<String> {
    let mut text = serde_json::to_string_pretty(&to_value(env)?).expect("values serialize");
    text.push('\n');
    Ok(text)
}

fn field<'a>(body: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
    body.get(key).ok_or_else(|| Error::Format(format!("missing field {key:?}")))
}

fn as_usize(v: &Value, what: &str) -> Result<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| Error::Format(format!("{what} must be a non-negative integer")))
}

fn as_f64(v: &Value, what: &str) -> Result<f64> {
    v.as_f64().ok_or_else(|| Error::Format(format!("{what} must be a number")))
}

fn as_vectors(v: &Value, d: usize, what: &str) -> Result<Vec<Feature>> {
    let rows = v.as_array().ok_or_else(|| Error::Format(format!("{what} must be an array")))?;
    rows.iter()
        .enumerate()
        .map(|(i, row)| {
            let xs = row
                .as_array()
                .ok_or_else(|| Error::Format(format!("{what}[{i}] must be an array")))?;
            if xs.len() != d {
                return Err(Error::Format(format!("{what}[{i}] has {} entries, expected {d}", xs.len())));
            }
            let vals = xs.iter().map(|x| as_f64(x, what)).collect::<Result<Vec<_>>>()?;
            Ok(Feature::from_vec(vals))
        })
        .collect()
}

pub fn from_value(value: Value) -> Result<Environment> {
    let Value::Object(mut body) = value else {
        return Err(Error::Format("top level must be an object".to_string()));
    };
    let stored = match body.remove("checksum") {
        Some(Value::String(s)) => s,
        _ => return Err(Error::Format("missing checksum".to_string())),
    };
    if field(&body, "format")?.as_str() != Some(FORMAT) {
        return Err(Error::Format(format!("not a {FORMAT} document")));
    }
    let version = field(&body, "version")?.as_u64();
    if version != Some(VERSION) {
        return Err(Error::Format(format!(
            "version mismatch: file has {version:?}, this build reads {VERSION}"
        )));
    }
    let actual = checksum(&body);
    if actual != stored {
        return Err(Error::Format(format!("checksum mismatch: stored {stored}, computed {actual}")));
    }
    let d = as_usize(field(&body, "d")?, "d")?;
    let link_name = field(&body, "link")?.as_str().unwrap_or_default();
    let link = LinkFunction::from_name(link_name).ok_or_else(|| Error::Format(format!("unknown link {link_name:?}")))?;
    let users = as_vectors(field(&body, "users")?, d, "users")?;
    let arms = as_vectors(field(&body, "arms")?, d, "arms")?;
    let k = as_usize(field(&body, "keyterm_count")?, "keyterm_count")?;
    let mut rows = vec![Vec::new(); arms.len()];
    let triples = field(&body, "weights")?
        .as_array()
        .ok_or_else(|| Error::Format("weights must be an array".to_string()))?;
    for t in triples {
        let parts = t.as_array().filter(|p| p.len() == 3).ok_or_else(|| {
            Error::Format("each weight must be an [arm, keyterm, weight] triple".to_string())
        })?;
        let a = as_usize(&parts[0], "weight arm")?;
        let key = as_usize(&parts[1], "weight keyterm")?;
        let w = as_f64(&parts[2], "weight")?;
        rows.get_mut(a)
            .ok_or_else(|| Error::Format(format!("weight references arm {a} of {}", arms.len())))?
            .push((key, w));
    }
    let graph = WeightGraph::new(k, rows)?;
    let provenance = body.remove("provenance").unwrap_or(Value::Null);
    Environment::new(link, arms, graph, users, provenance)
}

pub fn from_str(text: &str) -> Result<Environment> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    from_value(value)
}

pub fn export_environment(env: &Environment, path: &Path) -> Result<()> {
    std::fs::write(path, to_string(env)?).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn import_environment(path: &Path) -> Result<Environment> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    from_str(&text).map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envsim::{gen_synthetic, SyntheticConfig};

    fn env() -> Environment {
        let cfg = SyntheticConfig {
            users: 3,
            keyterms: 12,
            arms: 30,
            dim: 3,
            max_related: 4,
            link: LinkFunction::Sigmoid,
        };
        gen_synthetic(&cfg, 17).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let e = env();
        let text = to_string(&e).unwrap();
        let back = from_str(&text).unwrap();
        assert_eq!(back, e);
        assert_eq!(to_string(&back).unwrap(), text);
    }

    #[test]
    fn awkward_reals_round_trip() {
        for x in [0.1, 1.0 / 3.0, f64::MIN_POSITIVE, 5e-324, -1.7976931348623157e308, 0.0, -0.0] {
            let v = real(x).unwrap();
            assert_eq!(v.as_f64().unwrap().to_bits(), x.to_bits());
        }
        assert!(real(f64::NAN).is_err());
    }

    #[test]
    fn tampering_is_detected() {
        let text = to_string(&env()).unwrap();
        let tampered = text.replacen("\"keyterm_count\": 12", "\"keyterm_count\": 13", 1);
        assert_ne!(tampered, text);
        assert!(from_str(&tampered).unwrap_err().to_string().contains("checksum"));
        let mut v: Value = serde_json::from_str(&text).unwrap();
        v["version"] = Value::from(2u64);
        assert!(from_value(v).unwrap_err().to_string().contains("version"));
    }
}
