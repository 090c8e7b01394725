//! Finite-difference reference curve for the electronic ground state.
//!
//! Usage: `oracle_reference [spacing]` (default 0.05; extrapolates over 4h, 2h, h).

use h2pinn::model::Parity;
use h2pinn::oracle::{self, FdGrid};

fn main() -> h2pinn::Result<()> {
    let spacing: f64 = std::env::args().nth(1).map(|s| s.parse().expect("spacing")).unwrap_or(0.05);
    let grid = FdGrid::default().with_spacing(spacing);
    let rs: Vec<f64> = (0..9).map(|k| 0.5 + 0.25 * k as f64).collect();
    let rows = oracle::pes_reference(&rs, &grid, true)?;
    println!("{:>6} {:>12} {:>12} {:>12}", "R", "E_fd", "E_total", "E_lcao");
    for row in &rows {
        let lcao = oracle::lcao_energy(row.half_separation, Parity::Symmetric)?;
        println!("{:>6.2} {:>12.7} {:>12.7} {:>12.7}", row.half_separation, row.e_electronic, row.e_total, lcao);
    }
    let l = oracle::limit_energies();
    println!("limits: united atom {}, separated atoms {}", l.united_atom, l.separated_atom);
    Ok(())
}
