//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! fails if any criterion fails. The desk-scale training dominates the runtime.

use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use h2pinn::autodiff::{distance, SpatialJet};
use h2pinn::model::{wavefunction, Group, NetworkConfig, ParameterSet, Parity};
use h2pinn::observables::{cusp_diagnostic, expectation_energy, force, ForceMethod, LcaoField, NeuralField, QuadratureSpec, SlaterOrbital, FD_FORCE_STEP};
use h2pinn::oracle::{self, FdGrid, REFINEMENT_SPACINGS};
use h2pinn::physics::{loss, residual, LossOptions};
use h2pinn::sampler::{sample_batch, SamplerConfig};
use h2pinn::trainer::{fine_tune, train, Checkpoint, TrainingConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;

struct Report {
    failed: Vec<String>,
}

impl Report {
    fn record(&mut self, name: &str, pass: bool, detail: String) {
        let line = format!("[{}] {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        // Written past the test harness capture so the lines always show.
        let mut out = std::io::stdout().lock();
        writeln!(out, "{line}").unwrap();
        out.flush().unwrap();
        if !pass {
            self.failed.push(name.to_string());
        }
    }
}

fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs().max(1e-300)
}

fn autodiff_exactness(rep: &mut Report) {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let r: [f64; 3] = std::array::from_fn(|_| rng.random_range(-5.0..5.0));
        let [x, y, z] = SpatialJet::coordinates(r);
        worst = worst.max(rel_err((x * x + y * y + z * z).lap, 6.0));
        let d = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
        let slater = distance(&SpatialJet::coordinates(r), [0.0; 3]).unwrap().scale(-1.0).exp();
        worst = worst.max(rel_err(slater.lap, (1.0 - 2.0 / d) * (-d).exp()));
        worst = worst.max(rel_err((x * y.exp()).lap, r[0] * r[1].exp()));
    }
    let secs = t.elapsed().as_secs_f64();
    rep.record(
        "1 autodiff exactness",
        worst < 1e-12 && secs < 1.0,
        format!("worst relative Laplacian error {worst:.2e} over 100 points in {secs:.3} s"),
    );
}

fn gradient_oracle(rep: &mut Report) {
    let t = Instant::now();
    let worst = common::worst_gradient_error(&common::tiny(), 3);
    let secs = t.elapsed().as_secs_f64();
    rep.record(
        "2 gradient oracle",
        worst < 1e-6 && secs < 10.0,
        format!("worst relative error {worst:.2e} on a 10-point batch in {secs:.3} s"),
    );
}

fn united_atom(rep: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let dir: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let n = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt().max(1e-3);
        let radius = rng.random_range(0.1..10.0);
        let r = dir.map(|c| c / n * radius);
        let psi = distance(&SpatialJet::coordinates(r), [0.0; 3]).unwrap().scale(-2.0).exp();
        worst = worst.max(residual(&psi, -2.0, r, 0.0).unwrap().abs());
    }
    rep.record("3 united-atom residual", worst <= 1e-10, format!("max |residual| {worst:.2e} over 100 points"));
}

fn symmetry(rep: &mut Report) {
    let config = NetworkConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for set in 0..10 {
        let mut params = ParameterSet::init(&config, set);
        for v in params.values_mut() {
            *v += rng.random_range(-0.3..0.3);
        }
        for _ in 0..100 {
            let r: [f64; 3] = std::array::from_fn(|_| rng.random_range(-6.0..6.0));
            let half = rng.random_range(0.2..3.0);
            let a = wavefunction(r, half, &params).unwrap().psi.value;
            let b = wavefunction([-r[0], r[1], r[2]], half, &params).unwrap().psi.value;
            worst = worst.max((a - b).abs());
        }
    }
    rep.record("4 inversion symmetry", worst <= 1e-12, format!("max |ψ(x) - ψ(-x)| {worst:.2e} over 10³ configurations"));
}

struct OracleData {
    e_r1: f64,
}

fn oracle_convergence(rep: &mut Report) -> OracleData {
    let t = Instant::now();
    let grid = FdGrid::default();
    let x = oracle::fd_extrapolated(1.0, &grid, &REFINEMENT_SPACINGS).unwrap();
    let rs = [0.94, 0.97, 1.0, 1.03, 1.06];
    let totals: Vec<f64> = rs
        .iter()
        .map(|&r| {
            let e = if r == 1.0 { x.energy } else { oracle::fd_extrapolated(r, &grid, &REFINEMENT_SPACINGS).unwrap().energy };
            e + 0.5 / r
        })
        .collect();
    let r_min = parabola_vertex(&rs, &totals);
    let pass = (x.energy + 1.1026).abs() < 1e-3 && x.spread < 1e-3 && (r_min - 1.0).abs() <= 0.03;
    rep.record(
        "5 oracle convergence",
        pass,
        format!(
            "E(R=1) = {:.7} (levels {}), spread {:.1e}, total-energy minimum at R = {r_min:.4} ({:.0} s)",
            x.energy,
            x.levels.iter().map(|(h, e)| format!("h={h}: {e:.7}")).collect::<Vec<_>>().join(", "),
            x.spread,
            t.elapsed().as_secs_f64()
        ),
    );
    OracleData { e_r1: x.energy }
}

/// Least-squares parabola through the points; returns the abscissa of its vertex.
fn parabola_vertex(x: &[f64], y: &[f64]) -> f64 {
    let x0 = x[x.len() / 2];
    let mut s = [0.0; 5];
    let mut b = [0.0; 3];
    for (&xi, &yi) in x.iter().zip(y) {
        let u = xi - x0;
        for (k, sk) in s.iter_mut().enumerate() {
            *sk += u.powi(k as i32);
        }
        for (k, bk) in b.iter_mut().enumerate() {
            *bk += yi * u.powi(k as i32);
        }
    }
    let m = [[s[0], s[1], s[2]], [s[1], s[2], s[3]], [s[2], s[3], s[4]]];
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(m);
    let solve = |col: usize| {
        let mut mc = m;
        for row in 0..3 {
            mc[row][col] = b[row];
        }
        det(mc) / d
    };
    let (c1, c2) = (solve(1), solve(2));
    x0 - c1 / (2.0 * c2)
}

fn desk_training(rep: &mut Report, data: &OracleData) -> Checkpoint {
    let network = NetworkConfig::default();
    let sampler = SamplerConfig::default();
    let training = TrainingConfig::desk();
    let t = Instant::now();
    let main = train(&network, &sampler, &training, |_| {}).unwrap();
    let tuned = fine_tune(&main.checkpoint, &sampler, &training, |_| {}).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let first = main.log[0].loss.total;
    let best = main.checkpoint.metadata.best_total_loss;
    rep.record(
        "6 desk training: runtime",
        secs < 600.0,
        format!("{} + {} epochs of {} points in {secs:.0} s", training.epochs_main, training.epochs_finetune, sampler.n_points),
    );
    rep.record("6a desk training: loss decay", best <= 0.01 * first, format!("best {best:.3e} vs epoch-1 {first:.3e}"));

    let params = &tuned.checkpoint.params;
    let h = expectation_energy(&NeuralField::new(params, 1.0), 1.0, &QuadratureSpec::default()).unwrap();
    let lcao = oracle::lcao_energy(1.0, Parity::Symmetric).unwrap();
    let diff = h.value - data.e_r1;
    rep.record(
        "6b desk training: ⟨Ĥ⟩ at R=1 vs oracle",
        diff.abs() <= 2e-2 && diff >= -3.0 * h.stderr,
        format!("⟨Ĥ⟩ = {:.5} ± {:.1e}, oracle {:.5}, difference {diff:+.4}", h.value, h.stderr, data.e_r1),
    );
    rep.record(
        "6c desk training: improves on LCAO",
        h.value < lcao - 3.0 * h.stderr,
        format!("⟨Ĥ⟩ = {:.5} ± {:.1e}, LCAO {lcao:.5}", h.value, h.stderr),
    );

    let grid = FdGrid::default();
    let mut ev = h2pinn::model::Evaluator::new(params);
    let mut worst = (0.0f64, 0.0);
    for k in 0..=8 {
        let r = 0.5 + 0.25 * k as f64;
        let exact = oracle::fd_extrapolated(r, &grid, &[0.1, 0.05]).unwrap().energy;
        let d = (ev.energy(r) - exact).abs();
        if d > worst.0 {
            worst = (d, r);
        }
    }
    rep.record(
        "6d desk training: E_nn(R) vs oracle",
        worst.0 <= 5e-2,
        format!("max |E_nn - E_oracle| = {:.4} at R = {} over R ∈ [0.5, 2.5]", worst.0, worst.1),
    );

    freezing(rep, &main.checkpoint, &tuned.checkpoint);
    tuned.checkpoint
}

fn freezing(rep: &mut Report, before: &Checkpoint, after: &Checkpoint) {
    let same_bu = before.params.group(Group::Basis) == after.params.group(Group::Basis);
    let same_gate = before.params.group(Group::Gate) == after.params.group(Group::Gate);
    let probe = sample_batch(&SamplerConfig { seed: 12345, ..SamplerConfig::default() }, 1);
    let bc = |p: &ParameterSet| loss(&probe, p, &LossOptions::value_only()).unwrap().loss.bc;
    let (b0, b1) = (bc(&before.params), bc(&after.params));
    rep.record(
        "7 fine-tune freezing",
        same_bu && same_gate && b0 == b1,
        format!("bu identical {same_bu}, gate identical {same_gate}, probe bc {b0:.6e} -> {b1:.6e}"),
    );
}

fn force_consistency(rep: &mut Report, params: &ParameterSet) {
    let mut worst = 0.0f64;
    for k in 0..20 {
        let r = 0.3 + 0.13 * k as f64;
        let a = force(params, r, ForceMethod::Autodiff, [0.2, 3.0]).unwrap();
        let f = force(params, r, ForceMethod::FiniteDifference { step: FD_FORCE_STEP }, [0.2, 3.0]).unwrap();
        worst = worst.max((a - f).abs());
    }
    rep.record("8 force consistency", worst < 1e-5, format!("max |F_autodiff - F_fd| {worst:.2e} at 20 R values"));
}

fn cusp(rep: &mut Report, params: &ParameterSet) {
    let single = cusp_diagnostic(&SlaterOrbital { center: [1.0, 0.0, 0.0], zeta: 1.0 }, [1.0, 0.0, 0.0]).unwrap();
    let lcao_field = LcaoField {
        half_separation: 1.0,
        parity: Parity::Symmetric,
    };
    let lcao = cusp_diagnostic(&lcao_field, [1.0, 0.0, 0.0]).unwrap();
    let lcao_target = -1.0 / (1.0 + (-2.0f64).exp());
    let trained: Vec<f64> = [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]
        .iter()
        .map(|&n| cusp_diagnostic(&NeuralField::new(params, 1.0), n).unwrap())
        .collect();
    let pass = (single + 1.0).abs() <= 1e-12 && (lcao - lcao_target).abs() <= 1e-3 && trained.iter().all(|c| (-1.05..=-0.75).contains(c));
    rep.record(
        "9 cusp diagnostic",
        pass,
        format!("single orbital {single}, LCAO {lcao:.5} (target {lcao_target:.5}), trained {:.4} / {:.4}", trained[0], trained[1]),
    );
}

fn reproducibility(rep: &mut Report) {
    let dir = tempfile::tempdir().unwrap();
    let run = |out: &str| {
        let go = |args: &[&str]| {
            let status = Command::new(env!("CARGO_BIN_EXE_h2pinn"))
                .args(args)
                .current_dir(dir.path())
                .env("RUST_LOG", "warn")
                .status()
                .unwrap();
            assert!(status.success());
        };
        go(&["--deterministic", "train", "--epochs", "20", "--points", "2000", "--seed", "11", "--out", out]);
        let ck = format!("{out}/checkpoint.json");
        let scan = format!("{out}/scan");
        go(&["--deterministic", "scan", "--checkpoint", &ck, "--steps", "5", "--samples", "20000", "--out", &scan]);
    };
    run("a");
    run("b");
    let same = |f: &str| std::fs::read(dir.path().join("a").join(f)).unwrap() == std::fs::read(dir.path().join("b").join(f)).unwrap();
    let (log, pes) = (same("train_log.csv"), same("scan/pes.csv"));
    let nonempty = std::fs::metadata(Path::new(dir.path()).join("a/scan/pes.csv")).unwrap().len() > 0;
    rep.record(
        "10 reproducibility",
        log && pes && nonempty,
        format!("training logs identical {log}, PES CSVs identical {pes}"),
    );
}

#[test]
fn acceptance_criteria() {
    let mut rep = Report { failed: Vec::new() };
    autodiff_exactness(&mut rep);
    gradient_oracle(&mut rep);
    united_atom(&mut rep);
    symmetry(&mut rep);
    let data = oracle_convergence(&mut rep);
    let trained = desk_training(&mut rep, &data);
    force_consistency(&mut rep, &trained.params);
    cusp(&mut rep, &trained.params);
    reproducibility(&mut rep);
    assert!(rep.failed.is_empty(), "failed criteria: {:?}", rep.failed);
}
