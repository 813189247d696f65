//! Seeded random instances for tests, benchmarks and the `gen` command.
//!
//! All generators draw from [`ChaCha8Rng`] in a fixed order, so a seed
//! reproduces the same instance on every platform.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
pub use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::integrands::IntegrandFamily;
use crate::measures::{push_weights, DiscreteMeasure, FeatureMap};
use crate::moment::{Constraint, MomentProblem};
use crate::transport::TransportProblem;

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Probability reference with weights proportional to draws from `[0.5, 1.5]`.
fn reference(rng: &mut ChaCha8Rng, n: usize) -> Result<DiscreteMeasure<f64>> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
    let total: f64 = raw.iter().sum();
    DiscreteMeasure::from_weights(raw.iter().map(|w| w / total).collect())
}

/// Column 0 is the constant 1; the others are uniform on `[−1, 1]`.
fn features(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Result<FeatureMap<f64>> {
    let rows = (0..n)
        .map(|_| {
            std::iter::once(1.0)
                .chain((1..k).map(|_| rng.gen_range(-1.0..1.0)))
                .collect()
        })
        .collect();
    FeatureMap::new(rows)
}

/// Relative-entropy problem whose target is the moment vector of a random
/// positive measure `Q_z = R_z·u_z`, `u_z ∈ [0.2, 2]`.
pub fn entropy_instance(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Result<MomentProblem<f64>> {
    let r = reference(rng, n)?;
    let t = features(rng, n, k)?;
    let q: Vec<f64> = r.weights().iter().map(|&w| w * rng.gen_range(0.2..2.0)).collect();
    let target = push_weights(&t, &q);
    MomentProblem::equality(r, IntegrandFamily::relative_entropy(), t, target)
}

/// Relative-entropy problem with a known dual: the target is the moment
/// vector of `R·exp⟨y, θ⟩` with every non-mass `|y_k| ∈ [0.5, 1.5]`,
/// rescaled to total mass in `[0.6, 1.2]`.
pub fn tilted_instance(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Result<(MomentProblem<f64>, Vec<f64>)> {
    let r = reference(rng, n)?;
    let t = features(rng, n, k)?;
    let mut y: Vec<f64> = (0..k)
        .map(|i| {
            if i == 0 {
                0.0
            } else {
                let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                sign * rng.gen_range(0.5..1.5)
            }
        })
        .collect();
    let unscaled: Vec<f64> = (0..n)
        .map(|z| r.weights()[z] * t.row(z).iter().zip(&y).map(|(a, b)| a * b).sum::<f64>().exp())
        .collect();
    let mass: f64 = unscaled.iter().sum();
    let wanted = rng.gen_range(0.6..1.2);
    y[0] = (wanted / mass).ln();
    let q: Vec<f64> = unscaled.iter().map(|w| w * wanted / mass).collect();
    let target = push_weights(&t, &q);
    Ok((
        MomentProblem::equality(r, IntegrandFamily::relative_entropy(), t, target)?,
        y,
    ))
}

/// Box problem built around an achievable moment vector. Each side is
/// infinite with probability 0.15 and otherwise offset by `[0, 0.2]`.
pub fn box_instance(rng: &mut ChaCha8Rng, n: usize, k: usize) -> Result<MomentProblem<f64>> {
    let base = entropy_instance(rng, n, k)?;
    let centre = base.target().expect("equality instance").to_vec();
    let mut lower = Vec::with_capacity(k);
    let mut upper = Vec::with_capacity(k);
    for &c in &centre {
        lower.push(if rng.gen_bool(0.15) {
            f64::NEG_INFINITY
        } else {
            c - rng.gen_range(0.0..0.2)
        });
        upper.push(if rng.gen_bool(0.15) {
            f64::INFINITY
        } else {
            c + rng.gen_range(0.0..0.2)
        });
    }
    base.with_constraint(Constraint::Box { lower, upper })
}

/// Transport problem on a rational grid: masses are integer counts in
/// `0..=5` over their sum (at least one nonzero), costs are quarters in
/// `[0, 2.5]`.
pub fn transport_instance(rng: &mut ChaCha8Rng, m: usize, n: usize) -> Result<TransportProblem<f64>> {
    let mut marginal = |len: usize| -> Vec<f64> {
        let mut counts: Vec<u32> = (0..len).map(|_| rng.gen_range(0..=5)).collect();
        if counts.iter().all(|&c| c == 0) {
            counts[0] = 1;
        }
        let total: u32 = counts.iter().sum();
        counts.iter().map(|&c| f64::from(c) / f64::from(total)).collect()
    };
    let mu = marginal(m);
    let nu = marginal(n);
    let cost = (0..m * n).map(|_| f64::from(rng.gen_range(0..=10u32)) / 4.0).collect();
    TransportProblem::from_row_major(mu, nu, cost)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_reproduce() {
        let a = entropy_instance(&mut rng_from_seed(7), 5, 3).unwrap();
        let b = entropy_instance(&mut rng_from_seed(7), 5, 3).unwrap();
        assert_eq!(a, b);
        let c = entropy_instance(&mut rng_from_seed(8), 5, 3).unwrap();
        assert_ne!(a, c);
        let s = transport_instance(&mut rng_from_seed(1), 3, 4).unwrap();
        assert_eq!(s, transport_instance(&mut rng_from_seed(1), 3, 4).unwrap());
    }

    #[test]
    fn tilted_target_matches_dual() {
        let (p, y) = tilted_instance(&mut rng_from_seed(3), 3, 2).unwrap();
        let w = p.recover_weights(&y);
        let x = push_weights(p.features(), &w);
        let target = p.target().unwrap();
        for k in 0..2 {
            assert!((x[k] - target[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn box_contains_its_centre() {
        for seed in 0..20 {
            let p = box_instance(&mut rng_from_seed(seed), 6, 3).unwrap();
            assert!(matches!(p.constraint(), Constraint::Box { .. }));
        }
    }
}
