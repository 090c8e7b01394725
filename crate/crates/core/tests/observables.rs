use h2pinn::model::{NetworkConfig, ParameterSet, Parity};
use h2pinn::observables::*;
use h2pinn::oracle;
use std::f64::consts::PI;

const LCAO_R1: LcaoField = LcaoField {
    half_separation: 1.0,
    parity: Parity::Symmetric,
};

fn mc(n: usize) -> QuadratureSpec {
    QuadratureSpec::monte_carlo(n, 0)
}

fn within(est: Estimate, target: f64, sigmas: f64) -> bool {
    (est.value - target).abs() <= sigmas * est.stderr
}

#[test]
fn single_orbital_norm_is_pi() {
    let f = SlaterOrbital { center: [0.0; 3], zeta: 1.0 };
    let est = norm_squared(&f, &QuadratureSpec::default()).unwrap();
    assert!(within(est, PI, 3.0), "{est:?}");
}

#[test]
fn lcao_norm_matches_overlap_formula() {
    let d: f64 = 2.0;
    let s = (-d).exp() * (1.0 + d + d * d / 3.0);
    let exact = 2.0 * PI * (1.0 + s);
    assert!((exact - 9.968).abs() < 1e-3);
    let quad = oracle::lcao_norm_squared(1.0, Parity::Symmetric).unwrap();
    assert!((quad - exact).abs() < 1e-9);
    let est = norm_squared(&LCAO_R1, &QuadratureSpec::default()).unwrap();
    assert!(within(est, exact, 3.0), "{est:?}");
}

#[test]
fn norm_scales_quadratically() {
    let q = mc(20_000);
    let base = norm_squared(&LCAO_R1, &q).unwrap().value;
    let scaled = norm_squared(&Scaled { inner: LCAO_R1, factor: 3.5 }, &q).unwrap().value;
    assert!((scaled - 12.25 * base).abs() <= 1e-12 * scaled);
}

#[test]
fn united_atom_energy() {
    let f = SlaterOrbital { center: [0.0; 3], zeta: 2.0 };
    let est = expectation_energy(&f, 0.0, &QuadratureSpec::default()).unwrap();
    assert!(within(est, -2.0, 3.0) || (est.value + 2.0).abs() < 1e-12, "{est:?}");
}

#[test]
fn lcao_energy_matches_prolate_quadrature() {
    let est = expectation_energy(&LCAO_R1, 1.0, &QuadratureSpec::default()).unwrap();
    let reference = oracle::lcao_energy(1.0, Parity::Symmetric).unwrap();
    assert!((reference + 1.053772).abs() < 1e-6);
    assert!(within(est, reference, 3.0), "{est:?} vs {reference}");
}

#[test]
fn separated_atoms_total_energy() {
    let f = LcaoField {
        half_separation: 6.0,
        parity: Parity::Symmetric,
    };
    let est = expectation_energy(&f, 6.0, &QuadratureSpec::default()).unwrap();
    let total = total_energy(est.value, 6.0).unwrap();
    assert!((total + 0.5).abs() < 5e-3, "{total}");
}

#[test]
fn energy_is_scale_invariant() {
    let q = mc(20_000);
    let a = expectation_energy(&LCAO_R1, 1.0, &q).unwrap().value;
    for c in [1e-3, -2.0, 70.0] {
        let b = expectation_energy(&Scaled { inner: LCAO_R1, factor: c }, 1.0, &q).unwrap().value;
        assert!((a - b).abs() <= 1e-12 * a.abs(), "c = {c}: {a} vs {b}");
    }
}

#[test]
fn stderr_shrinks_as_inverse_root_n() {
    let errs: Vec<f64> = [10_000, 40_000, 160_000]
        .iter()
        .map(|&n| norm_squared(&LCAO_R1, &mc(n)).unwrap().stderr)
        .collect();
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((2.0 / 1.5..=2.0 * 1.5).contains(&ratio), "{errs:?}");
    }
}

#[test]
fn grid_quadrature_cross_checks_monte_carlo() {
    let g = norm_squared(&LCAO_R1, &QuadratureSpec::grid(0.15)).unwrap();
    let exact = oracle::lcao_norm_squared(1.0, Parity::Symmetric).unwrap();
    assert!((g.value - exact).abs() < 0.02 * exact, "{g:?}");
}

#[test]
fn lcao_energy_respects_variational_bound() {
    let grid = oracle::FdGrid {
        spacing: 0.1,
        ..oracle::FdGrid::default()
    };
    for r in [0.5, 1.0, 2.0] {
        let exact = oracle::fd_extrapolated(r, &grid, &[0.2, 0.1]).unwrap().energy;
        let est = expectation_energy(
            &LcaoField {
                half_separation: r,
                parity: Parity::Symmetric,
            },
            r,
            &mc(200_000),
        )
        .unwrap();
        assert!(est.value >= exact - 3.0 * est.stderr, "R {r}: {est:?} < {exact}");
    }
}

#[test]
fn total_energy_examples() {
    assert!((total_energy(-0.6, 1.0).unwrap() + 0.1).abs() < 1e-15);
    assert!((total_energy(-0.5, 1e12).unwrap() + 0.5).abs() < 1e-12);
    assert_eq!(total_energy(-2.0, 0.25).unwrap(), 0.0);
    assert!(total_energy(-1.0, 0.0).is_err());
}

fn random_energy_unit(seed: u64) -> ParameterSet {
    let mut p = ParameterSet::init(&NetworkConfig::default(), seed);
    for (i, v) in p.values_mut().iter_mut().enumerate() {
        *v += 0.1 * (i as f64 * 1.3 + seed as f64).cos();
    }
    p
}

#[test]
fn autodiff_force_matches_finite_differences() {
    for seed in 0..4 {
        let p = random_energy_unit(seed);
        for i in 0..10 {
            let r = 0.3 + 0.25 * i as f64;
            let a = force(&p, r, ForceMethod::Autodiff, [0.2, 3.0]).unwrap();
            let f = force(&p, r, ForceMethod::FiniteDifference { step: FD_FORCE_STEP }, [0.2, 3.0]).unwrap();
            assert!((a - f).abs() < 1e-5, "seed {seed} R {r}: {a} vs {f}");
        }
    }
}

#[test]
fn cusp_of_single_orbital_and_lcao() {
    let f = SlaterOrbital { center: [1.0, 0.0, 0.0], zeta: 1.0 };
    assert!((cusp_diagnostic(&f, [1.0, 0.0, 0.0]).unwrap() + 1.0).abs() < 1e-12);
    let expected = -1.0 / (1.0 + (-2.0f64).exp());
    let got = cusp_diagnostic(&LCAO_R1, [1.0, 0.0, 0.0]).unwrap();
    assert!((got - expected).abs() < 1e-3, "{got} vs {expected}");
}

#[test]
fn cusp_rejects_vanishing_field() {
    let f = Scaled { inner: LCAO_R1, factor: 0.0 };
    assert!(cusp_diagnostic(&f, [1.0, 0.0, 0.0]).is_err());
}

#[test]
fn single_point_scan_has_consistent_row() {
    let p = random_energy_unit(1);
    let rows = pes_scan(&p, &[1.3], [0.2, 3.0], &mc(5_000)).unwrap();
    assert_eq!(rows.len(), 1);
    let row = rows[0];
    assert_eq!(row.e_total_nn, row.e_nn + 0.5 / 1.3);
    assert_eq!(row.e_total_expect, row.e_expect + 0.5 / 1.3);
    assert!((row.force_autodiff - row.force_fd).abs() < 1e-5);
    let mut buf = Vec::new();
    write_pes_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf.clone()).unwrap();
    assert_eq!(text.lines().next().unwrap(), PES_HEADER.join(","));
    let back = read_pes_csv(buf.as_slice()).unwrap();
    let mut again = Vec::new();
    write_pes_csv(&back, &mut again).unwrap();
    assert_eq!(buf, again);
}

#[test]
fn scan_outside_range_marks_fd_force_missing() {
    let p = random_energy_unit(2);
    let rows = pes_scan(&p, &[0.2, 3.2], [0.2, 3.0], &mc(2_000)).unwrap();
    assert!(rows.iter().all(|r| r.force_fd.is_nan()));
    assert!(rows.iter().all(|r| r.force_autodiff.is_finite()));
}
