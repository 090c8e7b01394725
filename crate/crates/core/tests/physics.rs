use h2pinn::autodiff::{distance, SpatialJet};
use h2pinn::model::{wavefunction, Group, NetworkConfig, ParameterSet};
use h2pinn::physics::{loss, potential, residual, CollocationBatch, CollocationPoint, LossOptions};
use proptest::prelude::*;

mod common;
use common::{mixed_batch, random_params, tiny, worst_gradient_error};

#[test]
fn loss_gradient_matches_finite_differences() {
    for seed in [3, 11] {
        let worst = worst_gradient_error(&tiny(), seed);
        assert!(worst < 1e-6, "seed {seed}: worst relative error {worst:e}");
    }
}

fn united_atom_field(r: [f64; 3]) -> SpatialJet {
    let coords = SpatialJet::coordinates(r);
    distance(&coords, [0.0; 3]).unwrap().scale(-2.0).exp()
}

proptest! {
    #[test]
    fn united_atom_residual_vanishes(dir in prop::array::uniform3(-1.0..1.0f64), radius in 0.1..10.0f64) {
        let n = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
        prop_assume!(n > 1e-3);
        let r = [dir[0] / n * radius, dir[1] / n * radius, dir[2] / n * radius];
        let res = residual(&united_atom_field(r), -2.0, r, 0.0).unwrap();
        prop_assert!(res.abs() <= 1e-10, "{}", res);
    }

    #[test]
    fn boundary_term_ignores_energy_unit(seed in 0u64..1000, shift in -1.0..1.0f64) {
        let config = tiny();
        let params = random_params(&config, seed);
        let batch = mixed_batch(4, 4, seed);
        let base = loss(&batch, &params, &LossOptions::value_only()).unwrap().loss;
        let mut moved = params.clone();
        moved.group_mut(Group::Energy).iter_mut().for_each(|v| *v += shift);
        let after = loss(&batch, &moved, &LossOptions::value_only()).unwrap().loss;
        prop_assert_eq!(base.bc, after.bc);
    }
}

#[test]
fn potential_examples() {
    assert_eq!(potential([0.0; 3], 1.0).unwrap(), -2.0);
    assert_eq!(potential([0.0; 3], 0.5).unwrap(), -4.0);
    assert!(potential([1.0, 0.0, 0.0], 1.0).is_err());
}

#[test]
fn lcao_residual_matches_closed_form() {
    // ψ = e^{-d1} + e^{-d2} with ∇²e^{-d} = (1 - 2/d) e^{-d}.
    let (d1, d2) = (2.0f64, 4.0f64);
    let (e1, e2) = ((-d1).exp(), (-d2).exp());
    let psi = e1 + e2;
    let lap = (1.0 - 2.0 / d1) * e1 + (1.0 - 2.0 / d2) * e2;
    let v = -1.0 / d1 - 1.0 / d2;
    let expected = -0.5 * lap + v * psi + 0.5 * psi;

    let params = ParameterSet::zeros(&NetworkConfig::default());
    let r = [3.0, 0.0, 0.0];
    let eval = wavefunction(r, 1.0, &params).unwrap();
    let got = residual(&eval.psi, -0.5, r, 1.0).unwrap();
    assert!((got - expected).abs() < 1e-15, "{got} vs {expected}");
}

#[test]
fn zero_jet_has_zero_residual() {
    assert_eq!(residual(&SpatialJet::constant(0.0), -0.7, [0.3, 0.1, 0.2], 1.0).unwrap(), 0.0);
}

#[test]
fn pde_term_is_the_pointwise_mean() {
    let config = NetworkConfig::default();
    let params = random_params(&config, 5);
    let batch = mixed_batch(3, 0, 9);
    let got = loss(&batch, &params, &LossOptions::value_only()).unwrap().loss;
    let mut sum = 0.0;
    for p in batch.points() {
        let e = wavefunction(p.r, p.half_separation, &params).unwrap();
        sum += residual(&e.psi, e.energy, p.r, p.half_separation).unwrap().powi(2);
    }
    let mean = sum / 3.0;
    assert!((got.pde - mean).abs() <= 1e-12 * mean, "{} vs {mean}", got.pde);
    assert_eq!(got.bc, 0.0);
    assert_eq!(got.total, got.pde + got.bc);
}

#[test]
fn single_point_loss_is_its_squared_residual() {
    let params = ParameterSet::zeros(&NetworkConfig::default());
    let p = CollocationPoint {
        r: [0.4, -0.2, 0.9],
        half_separation: 1.0,
    };
    let got = loss(&CollocationBatch::new(vec![p], 17.5), &params, &LossOptions::value_only()).unwrap().loss;
    let e = wavefunction(p.r, 1.0, &params).unwrap();
    assert_eq!(e.energy, 0.0);
    let res = residual(&e.psi, 0.0, p.r, 1.0).unwrap();
    assert!((got.pde - res * res).abs() <= 1e-15 * res * res);
}

#[test]
fn empty_batch_is_rejected() {
    let params = ParameterSet::zeros(&NetworkConfig::default());
    assert!(loss(&CollocationBatch::new(Vec::new(), 17.5), &params, &LossOptions::value_only()).is_err());
}

#[test]
fn mean_is_independent_of_chunking() {
    // Larger than one parallel chunk so the ordered reduction is exercised.
    let config = NetworkConfig::default();
    let params = random_params(&config, 1);
    let batch = mixed_batch(700, 300, 2);
    let whole = loss(&batch, &params, &LossOptions::value_only()).unwrap().loss;
    let mut pde = 0.0;
    for p in batch.points() {
        let e = wavefunction(p.r, p.half_separation, &params).unwrap();
        pde += residual(&e.psi, e.energy, p.r, p.half_separation).unwrap().powi(2);
    }
    pde /= batch.len() as f64;
    assert!((whole.pde - pde).abs() <= 1e-12 * pde);
}
