//! Helpers shared by the physics and acceptance suites.
#![allow(dead_code)]

use h2pinn::model::NetworkConfig;
use h2pinn::model::ParameterSet;
use h2pinn::physics::{loss, CollocationBatch, CollocationPoint, LossOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn tiny() -> NetworkConfig {
    NetworkConfig {
        bu_layers: vec![2, 2],
        gate_layers: vec![2],
        eu_layers: vec![2, 2],
        ..NetworkConfig::default()
    }
}

pub fn random_params(config: &NetworkConfig, seed: u64) -> ParameterSet {
    let mut p = ParameterSet::init(config, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb1a5);
    for v in p.values_mut() {
        *v += rng.random_range(-0.3..0.3);
    }
    p
}

pub fn mixed_batch(n_inner: usize, n_outer: usize, seed: u64) -> CollocationBatch {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = Vec::new();
    for _ in 0..n_inner {
        pts.push(CollocationPoint {
            r: [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)],
            half_separation: rng.random_range(0.2..3.0),
        });
    }
    for _ in 0..n_outer {
        pts.push(CollocationPoint {
            r: [rng.random_range(10.5..18.0), rng.random_range(10.5..18.0), rng.random_range(-18.0..18.0)],
            half_separation: rng.random_range(0.2..3.0),
        });
    }
    CollocationBatch::new(pts, 17.5)
}

/// `∂ total / ∂θ` against central differences with step `1e-5`.
pub fn worst_gradient_error(config: &NetworkConfig, seed: u64) -> f64 {
    let params = random_params(config, seed);
    let batch = mixed_batch(7, 3, seed + 1);
    assert!(batch.boundary_count() > 0);
    let grad = loss(&batch, &params, &LossOptions::with_gradient()).unwrap().gradient.unwrap();
    let scale = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
    let mut worst = 0.0f64;
    for i in 0..params.len() {
        let mut p = params.clone();
        p.values_mut()[i] += 1e-5;
        let fp = loss(&batch, &p, &LossOptions::value_only()).unwrap().loss.total;
        p.values_mut()[i] -= 2e-5;
        let fm = loss(&batch, &p, &LossOptions::value_only()).unwrap().loss.total;
        let fd = (fp - fm) / 2e-5;
        // Components far below the gradient scale are limited by round-off in fd.
        let denom = fd.abs().max(1e-6 * scale);
        worst = worst.max((grad[i] - fd).abs() / denom);
    }
    worst
}
