//! Per-round regret against the true preference vector. Arms are given by id.

use crate::conmnl::{expected_revenue, optimal_assortment};
use crate::error::{Error, Result};
use crate::glm::Feature;
use crate::policy::ArmPool;

fn position(pool: &ArmPool, id: usize) -> Result<usize> {
    pool.index_of(id)
        .ok_or_else(|| Error::Domain(format!("arm {id} is not in the round-{} pool", pool.round)))
}

fn best_utility(theta: &Feature, pool: &ArmPool) -> f64 {
    pool.features.iter().map(|x| x.dot(theta)).fold(f64::NEG_INFINITY, f64::max)
}

/// Best utility minus the mean utility of the pair.
pub fn dueling_regret(theta: &Feature, pool: &ArmPool, first: usize, second: usize) -> Result<f64> {
    let a = pool.features[position(pool, first)?].dot(theta);
    let b = pool.features[position(pool, second)?].dot(theta);
    Ok(best_utility(theta, pool) - 0.5 * (a + b))
}

/// Best utility minus the utility of the shown arm.
pub fn absolute_regret(theta: &Feature, pool: &ArmPool, arm: usize) -> Result<f64> {
    let a = pool.features[position(pool, arm)?].dot(theta);
    Ok(best_utility(theta, pool) - a)
}

/// Optimal expected revenue under the true utilities minus that of `offer`.
/// Revenues come from the pool.
pub fn mnl_regret(theta: &Feature, pool: &ArmPool, offer: &[usize], q: usize) -> Result<f64> {
    if pool.revenues.len() != pool.len() {
        return Err(Error::DimensionMismatch {
            expected: pool.len(),
            got: pool.revenues.len(),
        });
    }
    let z: Vec<f64> = pool.features.iter().map(|x| x.dot(theta)).collect();
    let best = optimal_assortment(&z, &pool.revenues, q);
    let value = |positions: &[usize]| {
        let feats: Vec<Feature> = positions.iter().map(|&i| pool.features[i].clone()).collect();
        let revs: Vec<f64> = positions.iter().map(|&i| pool.revenues[i]).collect();
        expected_revenue(&feats, theta, &revs)
    };
    let chosen: Vec<usize> = offer.iter().map(|&id| position(pool, id)).collect::<Result<_>>()?;
    Ok(value(&best) - value(&chosen))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pool(rng: &mut ChaCha8Rng, n: usize, d: usize, theta: &Feature) -> ArmPool {
        let feats: Vec<Feature> = (0..n)
            .map(|_| {
                let v = Feature::from_fn(d, |_, _| rng.random::<f64>() * 2.0 - 1.0);
                let nv = v.norm();
                v / nv
            })
            .collect();
        let revs = feats.iter().map(|x| x.dot(theta)).collect();
        ArmPool::new(1, (10..10 + n).collect(), feats).unwrap().with_revenues(revs)
    }

    #[test]
    fn dueling_regret_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let theta = Feature::from_vec(vec![0.6, 0.8, 0.0]);
        let p = pool(&mut rng, 8, 3, &theta);
        let u: Vec<f64> = p.features.iter().map(|x| x.dot(&theta)).collect();
        let (star, _) = u.iter().enumerate().fold((0, f64::MIN), |b, (i, &v)| if v > b.1 { (i, v) } else { b });
        let s = p.ids[star];
        assert!(dueling_regret(&theta, &p, s, s).unwrap().abs() < 1e-15);
        let gap = u[star] - u[2];
        assert!((dueling_regret(&theta, &p, s, p.ids[2]).unwrap() - gap / 2.0).abs() < 1e-15);
        let r = dueling_regret(&theta, &p, p.ids[3], p.ids[5]).unwrap();
        assert!((r - (u[star] - 0.5 * (u[3] + u[5]))).abs() < 1e-15);
        assert!((absolute_regret(&theta, &p, p.ids[2]).unwrap() - gap).abs() < 1e-15);
        assert!(dueling_regret(&theta, &p, 0, s).is_err());
    }

    #[test]
    fn mnl_regret_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let theta = Feature::from_vec(vec![0.0, 1.0]);
        let p = pool(&mut rng, 9, 2, &theta);
        let z: Vec<f64> = p.features.iter().map(|x| x.dot(&theta)).collect();
        let best: Vec<usize> = optimal_assortment(&z, &p.revenues, 3).iter().map(|&i| p.ids[i]).collect();
        assert!(mnl_regret(&theta, &p, &best, 3).unwrap().abs() < 1e-15);
        let full = mnl_regret(&theta, &p, &[], 3).unwrap();
        assert!(full > 0.0);
        // Enumerated optimum over all subsets of size at most 3.
        let mut top = 0.0f64;
        for mask in 0u32..(1 << 9) {
            if mask.count_ones() > 3 {
                continue;
            }
            let set: Vec<usize> = (0..9).filter(|i| mask & (1 << i) != 0).collect();
            let feats: Vec<Feature> = set.iter().map(|&i| p.features[i].clone()).collect();
            let revs: Vec<f64> = set.iter().map(|&i| p.revenues[i]).collect();
            top = top.max(expected_revenue(&feats, &theta, &revs));
        }
        assert!((full - top).abs() < 1e-12);
    }
}
