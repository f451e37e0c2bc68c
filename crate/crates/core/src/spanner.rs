//! C-approximate barycentric spanners of the key-term feature set.
//!
//! Construction starts from a basis picked by pivoted Gram-Schmidt and then
//! repeatedly swaps in any key-term that grows `|det(basis)|` by more than a
//! factor `C`. By Cramer's rule the growth factor of putting `x` in slot `i` is
//! the `i`-th coordinate of `x` in the current basis, so the loop ends exactly
//! when every key-term has coefficients bounded by `C`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::glm::Feature;

/// Pivots smaller than this fraction of the first pivot count as rank loss.
pub const RANK_TOL: f64 = 1e-9;
pub const DEFAULT_APPROX_FACTOR: f64 = 2.0;
const MAX_SWAPS: usize = 100_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Spanner {
    member_ids: Vec<usize>,
    basis: DMatrix<f64>,
    approx_factor: f64,
}

impl Spanner {
    pub fn member_ids(&self) -> &[usize] {
        &self.member_ids
    }

    /// Basis matrix whose columns are the member features.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn member_feature(&self, slot: usize) -> Feature {
        self.basis.column(slot).into_owned()
    }

    pub fn approx_factor(&self) -> f64 {
        self.approx_factor
    }

    pub fn dim(&self) -> usize {
        self.member_ids.len()
    }
}

/// Indices of `d` linearly independent features, largest residual first.
fn pivoted_basis(features: &[Feature], d: usize) -> Result<Vec<usize>> {
    let mut residual: Vec<Feature> = features.to_vec();
    let mut chosen: Vec<usize> = Vec::with_capacity(d);
    let mut first_pivot = 0.0;
    for step in 0..d {
        let mut best: Option<(usize, f64)> = None;
        for (k, r) in residual.iter().enumerate() {
            if chosen.contains(&k) {
                continue;
            }
            let n = r.norm();
            if best.is_none_or(|(_, bn)| n > bn) {
                best = Some((k, n));
            }
        }
        let (k, norm) = best.unwrap_or((0, 0.0));
        if step == 0 {
            first_pivot = norm;
        }
        if best.is_none() || norm <= RANK_TOL * first_pivot || norm == 0.0 {
            return Err(Error::Structural(format!(
                "key-term features span only rank {step} of {d}"
            )));
        }
        let q = &residual[k] / norm;
        for r in residual.iter_mut() {
            let c = q.dot(r);
            r.axpy(-c, &q, 1.0);
        }
        chosen.push(k);
    }
    Ok(chosen)
}

fn basis_of(features: &[Feature], ids: &[usize], d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(d, ids.len(), |r, c| features[ids[c]][r])
}

/// Builds a `c`-approximate barycentric spanner. Deterministic in input order.
pub fn build_spanner(features: &[Feature], c: f64) -> Result<Spanner> {
    if !(c >= 1.0) {
        return Err(Error::Domain(format!("approximation factor must be >= 1, got {c}")));
    }
    let d = features
        .first()
        .map(|x| x.len())
        .ok_or_else(|| Error::Structural("empty key-term set".to_string()))?;
    if let Some(bad) = features.iter().find(|x| x.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: bad.len(),
        });
    }
    let mut members = pivoted_basis(features, d)?;
    let all = DMatrix::from_fn(d, features.len(), |r, k| features[k][r]);

    for _ in 0..MAX_SWAPS {
        let basis = basis_of(features, &members, d);
        let lu = basis.lu();
        let coeffs = lu.solve(&all).ok_or_else(|| Error::Numerical {
            what: "spanner basis became singular".to_string(),
            residual: 0.0,
        })?;
        let swap = (0..features.len()).find_map(|k| {
            (0..d)
                .find(|&i| coeffs[(i, k)].abs() > c)
                .map(|i| (k, i))
        });
        match swap {
            Some((k, i)) => members[i] = k,
            None => {
                return Ok(Spanner {
                    basis: basis_of(features, &members, d),
                    member_ids: members,
                    approx_factor: c,
                })
            }
        }
    }
    Err(Error::Numerical {
        what: format!("spanner swap loop exceeded {MAX_SWAPS} swaps"),
        residual: 0.0,
    })
}

/// Coordinates of `x` in the spanner basis.
pub fn spanner_coefficients(s: &Spanner, x: &Feature) -> Result<DVector<f64>> {
    crate::error::check_dim(s.dim(), x.len())?;
    s.basis.clone().lu().solve(x).ok_or_else(|| Error::Numerical {
        what: "spanner basis solve failed".to_string(),
        residual: f64::NAN,
    })
}

/// `E[(x - y)(x - y)^T]` for `x, y` drawn iid uniformly from the members.
pub fn member_difference_covariance(s: &Spanner) -> DMatrix<f64> {
    let d = s.dim();
    let n = s.member_ids.len();
    let mut sigma = DMatrix::zeros(d, d);
    for i in 0..n {
        for j in 0..n {
            let diff = s.basis.column(i) - s.basis.column(j);
            sigma.ger(1.0, &diff, &diff, 1.0);
        }
    }
    sigma / (n * n) as f64
}

fn lambda_min(m: DMatrix<f64>) -> f64 {
    m.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
        .max(0.0)
}

/// Smallest eigenvalue of the member-difference covariance.
pub fn spanner_lambda_b(s: &Spanner) -> f64 {
    lambda_min(member_difference_covariance(s))
}

/// Smallest eigenvalue of `E[x x^T]` over members, the curvature constant of
/// the multinomial conversations.
pub fn spanner_lambda_b_second_moment(s: &Spanner) -> f64 {
    let n = s.member_ids.len() as f64;
    lambda_min(&s.basis * s.basis.transpose() / n)
}
