//! Cardinality-constrained revenue maximization under a multinomial logit.
//!
//! For a threshold `l`, `C(l)` holds up to `q` items with the largest positive
//! `(r_i - l) exp(z_i)`. The optimal revenue `l*` is the fixed point of
//! `F(l) = sum_{C(l)} (r_i - l) exp(z_i) = l`, and `C(l*)` is optimal.
//! Every quantity is evaluated after shifting `z` by `max(0, max z)`.

/// Estimated revenue `sum r_i e^{z_i} / (1 + sum e^{z_i})` of the items `set`.
pub fn estimated_revenue(set: &[usize], z: &[f64], revenues: &[f64]) -> f64 {
    if set.is_empty() {
        return 0.0;
    }
    let m = set.iter().map(|&i| z[i]).fold(0.0, f64::max);
    let mut num = 0.0;
    let mut den = (-m).exp();
    for &i in set {
        let e = (z[i] - m).exp();
        num += revenues[i] * e;
        den += e;
    }
    num / den
}

fn threshold_set(l: f64, z: &[f64], revenues: &[f64], q: usize, shift: f64) -> (Vec<usize>, f64) {
    let mut scored: Vec<(usize, f64)> = (0..z.len())
        .map(|i| (i, (revenues[i] - l) * (z[i] - shift).exp()))
        .filter(|&(_, v)| v > 0.0)
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(q);
    let total = scored.iter().map(|&(_, v)| v).sum();
    let mut set: Vec<usize> = scored.into_iter().map(|(i, _)| i).collect();
    set.sort_unstable();
    (set, total)
}

const BISECTION_TOL: f64 = 1e-13;
const MAX_BISECTIONS: usize = 200;

/// Revenue-maximizing set of at most `q` positions, ascending. Empty when no
/// revenue is positive.
pub fn optimal_assortment(z: &[f64], revenues: &[f64], q: usize) -> Vec<usize> {
    assert_eq!(z.len(), revenues.len(), "one utility per revenue");
    let r_max = revenues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if q == 0 || z.is_empty() || !(r_max > 0.0) {
        return Vec::new();
    }
    let shift = z.iter().copied().fold(0.0, f64::max);
    let outside = (-shift).exp();
    let r_min = revenues.iter().copied().fold(f64::INFINITY, f64::min);
    let (mut lo, mut hi) = (r_min.min(0.0), r_max);
    let mut best: (Vec<usize>, f64) = (Vec::new(), 0.0);
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= BISECTION_TOL * (1.0 + hi.abs()) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let (set, total) = threshold_set(mid, z, revenues, q, shift);
        let value = estimated_revenue(&set, z, revenues);
        if value > best.1 {
            best = (set, value);
        }
        if total > mid * outside {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (set, _) = threshold_set(lo, z, revenues, q, shift);
    let value = estimated_revenue(&set, z, revenues);
    if value > best.1 {
        best = (set, value);
    }
    best.0
}
