//! Energy surface, forces and cusp values of a saved checkpoint.
//!
//! Usage: `pes_scan checkpoint.json [samples]`

use std::path::Path;

use h2pinn::observables::{cusp_diagnostic, pes_scan, NeuralField, QuadratureSpec};
use h2pinn::trainer::Checkpoint;

fn main() -> h2pinn::Result<()> {
    let mut args = std::env::args().skip(1);
    let path = args.next().expect("usage: pes_scan checkpoint.json [samples]");
    let samples = args.next().map(|s| s.parse().expect("samples")).unwrap_or(200_000);
    let ck = Checkpoint::load(Path::new(&path))?;
    let range = ck.config.sampler.r_range;
    let grid: Vec<f64> = (0..11).map(|k| 0.5 + 0.2 * k as f64).collect();
    let rows = pes_scan(&ck.params, &grid, range, &QuadratureSpec::monte_carlo(samples, 0))?;
    println!("{:>5} {:>10} {:>18} {:>11} {:>11} {:>8}", "R", "E_nn", "<H>", "F_autodiff", "F_fd", "gate");
    for r in &rows {
        println!(
            "{:>5.2} {:>10.5} {:>10.5} ± {:.1e} {:>11.5} {:>11.5} {:>8.4}",
            r.half_separation, r.e_nn, r.e_expect, r.e_expect_stderr, r.force_autodiff, r.force_fd, r.gate_value
        );
    }
    let field = NeuralField::new(&ck.params, 1.0);
    println!("cusp at R = 1: {:.4}", cusp_diagnostic(&field, [1.0, 0.0, 0.0])?);
    Ok(())
}
