//! Two-center Coulomb Hamiltonian and the physics-informed loss.
//!
//! In atomic units the electronic Hamiltonian is
//! `Ĥ = -½∇² - 1/|r - R₁| - 1/|r - R₂|`. The loss is the mean squared
//! residual `Ĥψ - E(R)ψ` over all collocation points plus the mean of `ψ²`
//! over points outside the cutoff radius.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autodiff::{SpatialJet, Tape, LANES};
use crate::error::{Error, Result};
use crate::model::{nuclei, record_wavefunction_lanes, Group, ParameterSet};

/// Points per work unit. Fixed so that the reduction order, and therefore
/// every bit of the loss and gradient, is independent of the thread count.
const CHUNK: usize = 256;

/// Electron-nuclear attraction `V(r)` for nuclei at `(±R, 0, 0)`.
pub fn potential(r: [f64; 3], half_separation: f64) -> Result<f64> {
    let mut v = 0.0;
    for n in nuclei(half_separation) {
        let d = ((r[0] - n[0]).powi(2) + (r[1] - n[1]).powi(2) + (r[2] - n[2]).powi(2)).sqrt();
        if d == 0.0 {
            return Err(Error::SingularPoint {
                point: r,
                half_separation,
            });
        }
        v -= 1.0 / d;
    }
    Ok(v)
}

/// `Ĥψ = -½∇²ψ + Vψ` at one point.
pub fn apply_hamiltonian(psi: &SpatialJet, r: [f64; 3], half_separation: f64) -> Result<f64> {
    Ok(-0.5 * psi.lap + potential(r, half_separation)? * psi.value)
}

/// `Ĥψ - Eψ` at one point.
pub fn residual(psi: &SpatialJet, energy: f64, r: [f64; 3], half_separation: f64) -> Result<f64> {
    Ok(apply_hamiltonian(psi, r, half_separation)? - energy * psi.value)
}

/// One electron position paired with a geometry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollocationPoint {
    pub r: [f64; 3],
    pub half_separation: f64,
}

/// Collocation points with the boundary subset `|r| > r_cut` marked.
#[derive(Clone, Debug, PartialEq)]
pub struct CollocationBatch {
    points: Vec<CollocationPoint>,
    boundary: Vec<bool>,
    r_cut: f64,
}

impl CollocationBatch {
    pub fn new(points: Vec<CollocationPoint>, r_cut: f64) -> Self {
        let boundary = points
            .iter()
            .map(|p| (p.r[0] * p.r[0] + p.r[1] * p.r[1] + p.r[2] * p.r[2]).sqrt() > r_cut)
            .collect();
        Self { points, boundary, r_cut }
    }

    pub fn points(&self) -> &[CollocationPoint] {
        &self.points
    }

    pub fn boundary_mask(&self) -> &[bool] {
        &self.boundary
    }

    pub fn r_cut(&self) -> f64 {
        self.r_cut
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn boundary_count(&self) -> usize {
        self.boundary.iter().filter(|&&b| b).count()
    }
}

/// The two loss terms and their sum.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub pde: f64,
    pub bc: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn new(pde: f64, bc: f64) -> Self {
        Self { pde, bc, total: pde + bc }
    }

    pub fn is_finite(&self) -> bool {
        self.pde.is_finite() && self.bc.is_finite() && self.total.is_finite()
    }
}

#[derive(Clone, Debug, Default)]
pub struct LossOptions {
    pub gradient: bool,
    /// Units excluded from the gradient (their entries are exactly zero).
    pub frozen: Vec<Group>,
}

impl LossOptions {
    pub fn value_only() -> Self {
        Self::default()
    }

    pub fn with_gradient() -> Self {
        Self {
            gradient: true,
            frozen: Vec::new(),
        }
    }

    pub fn freeze(mut self, group: Group) -> Self {
        self.frozen.push(group);
        self
    }
}

#[derive(Clone, Debug)]
pub struct LossEvaluation {
    pub loss: LossBreakdown,
    /// `∂ total / ∂θ`, present when requested.
    pub gradient: Option<Vec<f64>>,
}

struct Partial {
    pde_sum: f64,
    bc_sum: f64,
    grad: Vec<f64>,
}

fn chunk_loss(points: &[CollocationPoint], mask: &[bool], params: &ParameterSet, opts: &LossOptions, n_all: f64, n_bc: f64) -> Result<Partial> {
    let mut tape = Tape::new(params.values());
    for g in &opts.frozen {
        tape.freeze(params.layout().group_range(*g));
    }
    let mut grad = if opts.gradient { vec![0.0; params.len()] } else { Vec::new() };
    let mut pde_sum = 0.0;
    let mut bc_sum = 0.0;
    for (pack, pack_mask) in points.chunks(LANES).zip(mask.chunks(LANES)) {
        // Padding lanes repeat the last point and receive zero seeds.
        let last = pack[pack.len() - 1];
        let mut rs = [last.r; LANES];
        let mut hs = [last.half_separation; LANES];
        let mut v = [0.0; LANES];
        for (l, p) in pack.iter().enumerate() {
            rs[l] = p.r;
            hs[l] = p.half_separation;
        }
        for l in 0..LANES {
            v[l] = potential(rs[l], hs[l])?;
        }
        tape.clear();
        let nodes = record_wavefunction_lanes(&mut tape, &rs, &hs, params)?;
        let lap = tape.laplacian(nodes.psi);
        let val = tape.value(nodes.psi);
        let kinetic = tape.scale(lap, -0.5);
        let v_node = tape.scalar_input_lanes(v, false);
        let v_minus_e = tape.sub(v_node, nodes.energy);
        let pot = tape.mul(v_minus_e, val);
        let res = tape.add(kinetic, pot);
        let res_v = tape.lanes(res)[0].value;
        let psi_v = tape.lanes(val)[0].value;
        let mut res_seed = [0.0; LANES];
        let mut bc_seed = [0.0; LANES];
        for (l, &on_boundary) in pack_mask.iter().enumerate() {
            pde_sum += res_v[l] * res_v[l];
            res_seed[l] = 2.0 * res_v[l] / n_all;
            if on_boundary {
                bc_sum += psi_v[l] * psi_v[l];
                bc_seed[l] = 2.0 * psi_v[l] / n_bc;
            }
        }
        if opts.gradient {
            tape.backward_seeded(&[(res, res_seed), (val, bc_seed)], &mut grad);
        }
    }
    Ok(Partial { pde_sum, bc_sum, grad })
}

/// Physics-informed loss over a batch, optionally with its parameter gradient.
///
/// Chunks are evaluated in parallel and reduced in index order.
pub fn loss(batch: &CollocationBatch, params: &ParameterSet, opts: &LossOptions) -> Result<LossEvaluation> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let n_all = batch.len() as f64;
    let n_bc_count = batch.boundary_count();
    if n_bc_count == 0 {
        log::warn!("no collocation point lies beyond r_cut = {}; boundary term is 0", batch.r_cut);
    }
    let n_bc = n_bc_count.max(1) as f64;
    let partials: Vec<Result<Partial>> = batch
        .points
        .par_chunks(CHUNK)
        .zip(batch.boundary.par_chunks(CHUNK))
        .map(|(pts, mask)| chunk_loss(pts, mask, params, opts, n_all, n_bc))
        .collect();
    let mut pde_sum = 0.0;
    let mut bc_sum = 0.0;
    let mut grad = opts.gradient.then(|| vec![0.0; params.len()]);
    for part in partials {
        let part = part?;
        pde_sum += part.pde_sum;
        bc_sum += part.bc_sum;
        if let Some(g) = grad.as_mut() {
            for (a, b) in g.iter_mut().zip(&part.grad) {
                *a += b;
            }
        }
    }
    let bc = if n_bc_count == 0 { 0.0 } else { bc_sum / n_bc };
    Ok(LossEvaluation {
        loss: LossBreakdown::new(pde_sum / n_all, bc),
        gradient: grad,
    })
}
