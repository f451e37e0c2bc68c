//! Tag-assignment datasets in the HetRec 2011 layout
//! (`userID<TAB>itemID<TAB>tagID<TAB>...`, one header line).

use std::cmp::Reverse;
use std::collections::{BTreeSet, HashMap};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, SVD};
use serde_json::json;

use crate::envsim::Environment;
use crate::error::{Error, Result};
use crate::glm::{normalize, Feature, LinkFunction, WeightGraph};
use crate::rng::{seeded, Purpose};

/// Deduplicated `(user, item, tag)` triples over dense ids.
#[derive(Debug, Clone, PartialEq)]
pub struct RawInteractions {
    pub triples: Vec<(usize, usize, usize)>,
    /// Original tokens, indexed by dense id.
    pub users: Vec<String>,
    pub items: Vec<String>,
    pub tags: Vec<String>,
    /// Data lines read before deduplication.
    pub raw_records: usize,
}

fn detect_delimiter(header: &str, path: &Path) -> Result<char> {
    if header.contains('\t') {
        Ok('\t')
    } else if header.contains(',') {
        Ok(',')
    } else {
        Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: "header has neither tab nor comma separators".to_string(),
        })
    }
}

/// Numeric tokens sort numerically, before any non-numeric token.
fn token_key(s: &str) -> (u8, u64, &str) {
    match s.parse::<u64>() {
        Ok(v) => (0, v, s),
        Err(_) => (1, 0, s),
    }
}

/// Dense ids in ascending original-id order.
fn dictionary(tokens: impl Iterator<Item = String>) -> (Vec<String>, HashMap<String, usize>) {
    let mut uniq: Vec<String> = tokens.collect::<BTreeSet<_>>().into_iter().collect();
    uniq.sort_by(|a, b| token_key(a).cmp(&token_key(b)));
    let index = uniq.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
    (uniq, index)
}

pub fn parse_hetrec<P: AsRef<Path>>(paths: &[P]) -> Result<RawInteractions> {
    let mut rows: Vec<[String; 3]> = Vec::new();
    for path in paths {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let text = String::from_utf8_lossy(&bytes);
        let mut lines = text.lines();
        let Some(header) = lines.next() else {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: "file is empty".to_string(),
            });
        };
        let delim = detect_delimiter(header, path)?;
        for (i, line) in lines.enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(delim).map(str::trim).collect();
            if fields.len() < 3 || fields[..3].iter().any(|f| f.is_empty()) {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 2,
                    message: format!("expected at least 3 non-empty fields, got {line:?}"),
                });
            }
            rows.push([fields[0].to_string(), fields[1].to_string(), fields[2].to_string()]);
        }
    }
    if rows.is_empty() {
        let shown: Vec<PathBuf> = paths.iter().map(|p| p.as_ref().to_path_buf()).collect();
        return Err(Error::Structural(format!("no interaction records in {shown:?}")));
    }
    let raw_records = rows.len();
    let (users, user_ix) = dictionary(rows.iter().map(|r| r[0].clone()));
    let (items, item_ix) = dictionary(rows.iter().map(|r| r[1].clone()));
    let (tags, tag_ix) = dictionary(rows.iter().map(|r| r[2].clone()));
    let triples: BTreeSet<(usize, usize, usize)> = rows
        .iter()
        .map(|r| (user_ix[&r[0]], item_ix[&r[1]], tag_ix[&r[2]]))
        .collect();
    Ok(RawInteractions {
        triples: triples.into_iter().collect(),
        users,
        items,
        tags,
        raw_records,
    })
}

/// Selection caps and feature dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildConfig {
    pub items: usize,
    pub users: usize,
    pub tags_per_item: usize,
    pub dim: usize,
}

impl Default for BuildConfig {
    fn default() -> Self {
        Self {
            items: 2000,
            users: 100,
            tags_per_item: 20,
            dim: 10,
        }
    }
}

/// Environment plus the identity of everything kept.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedDataset {
    pub env: Environment,
    pub item_ids: Vec<String>,
    pub user_ids: Vec<String>,
    pub keyterm_ids: Vec<String>,
    pub singular_values: Vec<f64>,
}

/// `n` dense ids with the largest counts, ties by id; returned ascending.
fn top_by_count(counts: &[usize], n: usize) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..counts.len()).collect();
    ids.sort_by_key(|&i| (Reverse(counts[i]), i));
    ids.truncate(n);
    ids.sort_unstable();
    ids
}

/// Rows of `factor * sqrt(s)` for the leading `d` singular triplets, each row
/// normalized. Rows at rounding level (no interactions) become seeded random
/// unit vectors.
fn scaled_rows<R: rand::Rng>(factor: &DMatrix<f64>, order: &[usize], s: &[f64], rng: &mut R) -> Vec<Feature> {
    let d = order.len();
    let raw: Vec<Feature> = (0..factor.nrows())
        .map(|r| Feature::from_fn(d, |j, _| factor[(r, order[j])] * s[order[j]].sqrt()))
        .collect();
    let largest = raw.iter().map(|x| x.norm()).fold(0.0, f64::max);
    raw.into_iter()
        .map(|x| {
            if x.norm() > ZERO_ROW_TOL * largest {
                return normalize(&x).expect("row norm is positive");
            }
            loop {
                let v = Feature::from_fn(d, |_, _| rng.random::<f64>() * 2.0 - 1.0);
                if let Ok(u) = normalize(&v) {
                    break u;
                }
            }
        })
        .collect()
}

const ZERO_ROW_TOL: f64 = 1e-10;

pub fn build_environment(raw: &RawInteractions, cfg: &BuildConfig, seed: u64) -> Result<PreparedDataset> {
    if raw.triples.is_empty() {
        return Err(Error::Structural("no interactions".to_string()));
    }
    if cfg.items == 0 || cfg.users == 0 || cfg.tags_per_item == 0 || cfg.dim == 0 {
        return Err(Error::Domain("selection caps and dimension must be positive".to_string()));
    }
    if raw.items.len() < cfg.items || raw.users.len() < cfg.users {
        return Err(Error::Structural(format!(
            "dataset has {} items and {} users but the caps ask for {} and {}; lower the item/user caps",
            raw.items.len(),
            raw.users.len(),
            cfg.items,
            cfg.users
        )));
    }
    if cfg.dim > cfg.items.min(cfg.users) {
        return Err(Error::Domain(format!(
            "dimension {} exceeds the {}x{} feedback matrix rank",
            cfg.dim, cfg.users, cfg.items
        )));
    }

    let mut item_counts = vec![0usize; raw.items.len()];
    let mut user_counts = vec![0usize; raw.users.len()];
    for &(u, i, _) in &raw.triples {
        item_counts[i] += 1;
        user_counts[u] += 1;
    }
    let kept_items = top_by_count(&item_counts, cfg.items);
    let kept_users = top_by_count(&user_counts, cfg.users);
    let item_pos: HashMap<usize, usize> = kept_items.iter().enumerate().map(|(p, &i)| (i, p)).collect();
    let user_pos: HashMap<usize, usize> = kept_users.iter().enumerate().map(|(p, &u)| (u, p)).collect();

    // Tags of each kept item and the number of kept items carrying each tag.
    let mut item_tags: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); kept_items.len()];
    let mut feedback = DMatrix::<f64>::zeros(kept_users.len(), kept_items.len());
    for &(u, i, k) in &raw.triples {
        if let Some(&p) = item_pos.get(&i) {
            item_tags[p].insert(k);
            if let Some(&q) = user_pos.get(&u) {
                feedback[(q, p)] = 1.0;
            }
        }
    }
    let mut tag_spread = vec![0usize; raw.tags.len()];
    for tags in &item_tags {
        for &k in tags {
            tag_spread[k] += 1;
        }
    }
    let chosen: Vec<Vec<usize>> = item_tags
        .iter()
        .map(|tags| {
            let mut v: Vec<usize> = tags.iter().copied().collect();
            v.sort_by_key(|&k| (Reverse(tag_spread[k]), k));
            v.truncate(cfg.tags_per_item);
            v
        })
        .collect();
    let vocab: Vec<usize> = chosen.iter().flatten().copied().collect::<BTreeSet<_>>().into_iter().collect();
    let vocab_pos: HashMap<usize, usize> = vocab.iter().enumerate().map(|(p, &k)| (k, p)).collect();
    let related: Vec<Vec<usize>> = chosen
        .iter()
        .map(|ks| ks.iter().map(|k| vocab_pos[k]).collect())
        .collect();
    let graph = WeightGraph::equal_weights(vocab.len(), &related)?;

    let svd = SVD::new(feedback, true, true);
    let u = svd.u.as_ref().expect("left vectors requested");
    let v_t = svd.v_t.as_ref().expect("right vectors requested");
    let s: Vec<f64> = svd.singular_values.iter().copied().collect();
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    order.truncate(cfg.dim);
    let mut rng = seeded(seed, Purpose::Environment);
    let arms = scaled_rows(&v_t.transpose(), &order, &s, &mut rng);
    let users = scaled_rows(u, &order, &s, &mut rng);
    let singular_values: Vec<f64> = order.iter().map(|&j| s[j]).collect();

    let item_ids: Vec<String> = kept_items.iter().map(|&i| raw.items[i].clone()).collect();
    let user_ids: Vec<String> = kept_users.iter().map(|&u| raw.users[u].clone()).collect();
    let keyterm_ids: Vec<String> = vocab.iter().map(|&k| raw.tags[k].clone()).collect();
    let provenance = json!({
        "source": "hetrec",
        "raw_records": raw.raw_records,
        "unique_triples": raw.triples.len(),
        "seed": seed,
        "caps": {"items": cfg.items, "users": cfg.users, "tags_per_item": cfg.tags_per_item},
        "keyterm_count": vocab.len(),
        "singular_values": singular_values,
        "item_ids": item_ids,
        "user_ids": user_ids,
        "keyterm_ids": keyterm_ids,
    });
    let env = Environment::new(LinkFunction::Sigmoid, arms, graph, users, provenance)?;
    Ok(PreparedDataset {
        env,
        item_ids,
        user_ids,
        keyterm_ids,
        singular_values,
    })
}
