//! Physical observables of a trained (or injected) wavefunction.
//!
//! Integrals over all space are estimated either by uniform Monte Carlo over
//! the sampling box or by a midpoint grid over the same box. The energy
//! expectation uses the exact jet Laplacian of the trial field, so
//! `⟨Ĥ⟩ = ∫ψ Ĥψ / ∫ψ²` carries no finite-difference error.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autodiff::{distance, SpatialJet};
use crate::error::{Error, Result};
use crate::model::{atomic_orbitals, lcao, Evaluator, ParameterSet, Parity};
use crate::oracle;
use crate::physics::potential;

/// Step of the central-difference force, in units of the half-separation.
pub const FD_FORCE_STEP: f64 = 1e-3;

/// Shell radii of the cusp diagnostic.
pub const CUSP_SHELLS: [f64; 3] = [0.02, 0.04, 0.08];

const MC_CHUNK: usize = 8192;

/// A scalar field with exact spatial derivatives.
pub trait TrialField: Sync {
    /// Jets at each point, in order.
    fn jets(&self, points: &[[f64; 3]]) -> Result<Vec<SpatialJet>>;
}

/// `e^{-ζ|r - c|}`.
#[derive(Clone, Copy, Debug)]
pub struct SlaterOrbital {
    pub center: [f64; 3],
    pub zeta: f64,
}

impl TrialField for SlaterOrbital {
    fn jets(&self, points: &[[f64; 3]]) -> Result<Vec<SpatialJet>> {
        points
            .iter()
            .map(|&r| {
                let d = distance(&SpatialJet::coordinates(r), self.center).map_err(|_| Error::SingularPoint {
                    point: r,
                    half_separation: self.center[0].abs(),
                })?;
                Ok(d.scale(-self.zeta).exp())
            })
            .collect()
    }
}

/// The unnormalized two-center guess `φ₁ ± φ₂`.
#[derive(Clone, Copy, Debug)]
pub struct LcaoField {
    pub half_separation: f64,
    pub parity: Parity,
}

impl TrialField for LcaoField {
    fn jets(&self, points: &[[f64; 3]]) -> Result<Vec<SpatialJet>> {
        points
            .iter()
            .map(|&r| {
                let (a, b) = atomic_orbitals(r, self.half_separation)?;
                Ok(lcao(a, b, self.parity))
            })
            .collect()
    }
}

/// Another field multiplied by a constant.
#[derive(Clone, Copy, Debug)]
pub struct Scaled<F> {
    pub inner: F,
    pub factor: f64,
}

impl<F: TrialField> TrialField for Scaled<F> {
    fn jets(&self, points: &[[f64; 3]]) -> Result<Vec<SpatialJet>> {
        Ok(self.inner.jets(points)?.into_iter().map(|j| j.scale(self.factor)).collect())
    }
}

/// The network wavefunction at a fixed geometry.
#[derive(Clone, Copy, Debug)]
pub struct NeuralField<'a> {
    pub params: &'a ParameterSet,
    pub half_separation: f64,
}

impl<'a> NeuralField<'a> {
    pub fn new(params: &'a ParameterSet, half_separation: f64) -> Self {
        Self { params, half_separation }
    }
}

impl TrialField for NeuralField<'_> {
    fn jets(&self, points: &[[f64; 3]]) -> Result<Vec<SpatialJet>> {
        let pts: Vec<_> = points.iter().map(|&r| (r, self.half_separation)).collect();
        Ok(Evaluator::new(self.params).wavefunction_many(&pts)?.into_iter().map(|w| w.psi).collect())
    }
}

/// Jets with points sitting exactly on a singularity dropped (`None`).
fn jets_skipping_singular(field: &impl TrialField, points: &[[f64; 3]]) -> Result<Vec<Option<SpatialJet>>> {
    match field.jets(points) {
        Ok(j) => Ok(j.into_iter().map(Some).collect()),
        Err(Error::SingularPoint { .. }) => points
            .iter()
            .map(|p| match field.jets(std::slice::from_ref(p)) {
                Ok(j) => Ok(Some(j[0])),
                Err(Error::SingularPoint { .. }) => Ok(None),
                Err(e) => Err(e),
            })
            .collect(),
        Err(e) => Err(e),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum QuadratureMethod {
    MonteCarloUniform { n_samples: usize, seed: u64 },
    Grid { spacing: f64 },
}

/// How integrals over all space are approximated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    #[serde(flatten)]
    pub method: QuadratureMethod,
    /// The integration box is `[-w, w]³`.
    pub box_half_width: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self::monte_carlo(1_000_000, 0)
    }
}

impl QuadratureSpec {
    pub const MIN_BOX_HALF_WIDTH: f64 = 18.0;
    pub const MIN_SAMPLES: usize = 1000;

    pub fn monte_carlo(n_samples: usize, seed: u64) -> Self {
        Self {
            method: QuadratureMethod::MonteCarloUniform { n_samples, seed },
            box_half_width: Self::MIN_BOX_HALF_WIDTH,
        }
    }

    pub fn grid(spacing: f64) -> Self {
        Self {
            method: QuadratureMethod::Grid { spacing },
            box_half_width: Self::MIN_BOX_HALF_WIDTH,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.box_half_width >= Self::MIN_BOX_HALF_WIDTH) {
            return Err(Error::InvalidConfig(format!(
                "integration box half-width {} does not cover [-18, 18]³",
                self.box_half_width
            )));
        }
        match self.method {
            QuadratureMethod::MonteCarloUniform { n_samples, .. } if n_samples < Self::MIN_SAMPLES => {
                Err(Error::InvalidConfig(format!("n_samples = {n_samples} is below {}", Self::MIN_SAMPLES)))
            }
            QuadratureMethod::Grid { spacing } if !(spacing > 0.0 && spacing < self.box_half_width) => {
                Err(Error::InvalidConfig(format!("grid spacing {spacing} is not usable")))
            }
            _ => Ok(()),
        }
    }
}

/// A value with its uncertainty: a standard error for Monte Carlo, a
/// grid-halving difference for grid quadrature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
}

/// Per-point integrands: `ψ²` and `ψ Ĥψ`.
#[derive(Clone, Copy, Default)]
struct Sums {
    n: usize,
    w: f64,
    u: f64,
    ww: f64,
    uu: f64,
    uw: f64,
}

impl Sums {
    fn push(&mut self, w: f64, u: f64) {
        self.n += 1;
        self.w += w;
        self.u += u;
        self.ww += w * w;
        self.uu += u * u;
        self.uw += u * w;
    }

    fn merge(&mut self, o: &Sums) {
        self.n += o.n;
        self.w += o.w;
        self.u += o.u;
        self.ww += o.ww;
        self.uu += o.uu;
        self.uw += o.uw;
    }
}

/// Accumulates `ψ²` and, if `half_separation` is given, `ψ Ĥψ` over a chunk.
fn accumulate(field: &impl TrialField, points: &[[f64; 3]], half_separation: Option<f64>, weight: f64) -> Result<Sums> {
    let jets = jets_skipping_singular(field, points)?;
    let mut s = Sums::default();
    for (p, j) in points.iter().zip(jets) {
        let Some(j) = j else { continue };
        let u = match half_separation {
            Some(r) => match potential(*p, r) {
                Ok(v) => j.value * (-0.5 * j.lap + v * j.value),
                Err(Error::SingularPoint { .. }) => continue,
                Err(e) => return Err(e),
            },
            None => 0.0,
        };
        s.push(weight * j.value * j.value, weight * u);
    }
    Ok(s)
}

fn mc_chunk_points(seed: u64, chunk: usize, len: usize, w: f64) -> Vec<[f64; 3]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    (0..len).map(|_| [rng.random_range(-w..w), rng.random_range(-w..w), rng.random_range(-w..w)]).collect()
}

fn monte_carlo(field: &impl TrialField, half_separation: Option<f64>, n: usize, seed: u64, w: f64) -> Result<Sums> {
    let chunks = n.div_ceil(MC_CHUNK);
    let parts: Vec<Result<Sums>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let len = MC_CHUNK.min(n - c * MC_CHUNK);
            accumulate(field, &mc_chunk_points(seed, c, len, w), half_separation, 1.0)
        })
        .collect();
    let mut total = Sums::default();
    for p in parts {
        total.merge(&p?);
    }
    // Points dropped as singular still count as samples of a zero integrand.
    total.n = n;
    Ok(total)
}

/// Midpoint rule on `cells³` cells; returns `(Σ ψ², Σ ψĤψ)` times the cell volume.
fn grid_sums(field: &impl TrialField, half_separation: Option<f64>, cells: usize, w: f64) -> Result<(f64, f64)> {
    let h = 2.0 * w / cells as f64;
    let coord = |i: usize| -w + (i as f64 + 0.5) * h;
    let parts: Vec<Result<Sums>> = (0..cells)
        .into_par_iter()
        .map(|i| {
            let x = coord(i);
            let mut slab = Sums::default();
            let mut pts = Vec::with_capacity(cells);
            for j in 0..cells {
                pts.clear();
                pts.extend((0..cells).map(|k| [x, coord(j), coord(k)]));
                slab.merge(&accumulate(field, &pts, half_separation, 1.0)?);
            }
            Ok(slab)
        })
        .collect();
    let mut total = Sums::default();
    for p in parts {
        total.merge(&p?);
    }
    let vol = h * h * h;
    Ok((total.w * vol, total.u * vol))
}

fn grid_cells(spacing: f64, w: f64) -> usize {
    // An even count keeps the origin off the grid and allows exact halving.
    let n = (2.0 * w / spacing).round() as usize;
    (n + n % 2).max(2)
}

/// `∫ψ² d³r`.
pub fn norm_squared(field: &impl TrialField, quad: &QuadratureSpec) -> Result<Estimate> {
    quad.validate()?;
    let w = quad.box_half_width;
    match quad.method {
        QuadratureMethod::MonteCarloUniform { n_samples, seed } => {
            let s = monte_carlo(field, None, n_samples, seed, w)?;
            let vol = (2.0 * w).powi(3);
            let n = s.n as f64;
            let mean = s.w / n;
            let var = (s.ww / n - mean * mean).max(0.0) * n / (n - 1.0);
            Ok(Estimate {
                value: vol * mean,
                stderr: vol * (var / n).sqrt(),
            })
        }
        QuadratureMethod::Grid { spacing } => {
            let cells = grid_cells(spacing, w);
            let (fine, _) = grid_sums(field, None, cells, w)?;
            let (coarse, _) = grid_sums(field, None, cells / 2, w)?;
            Ok(Estimate {
                value: fine,
                stderr: (fine - coarse).abs() / 3.0,
            })
        }
    }
}

/// `⟨Ĥ⟩ = ∫ψĤψ / ∫ψ²` for nuclei at `(±R, 0, 0)`.
///
/// The Monte Carlo error is the delta-method standard error of the ratio,
/// which accounts for the correlation between numerator and denominator.
pub fn expectation_energy(field: &impl TrialField, half_separation: f64, quad: &QuadratureSpec) -> Result<Estimate> {
    quad.validate()?;
    let w = quad.box_half_width;
    match quad.method {
        QuadratureMethod::MonteCarloUniform { n_samples, seed } => {
            let s = monte_carlo(field, Some(half_separation), n_samples, seed, w)?;
            let n = s.n as f64;
            let (mw, mu) = (s.w / n, s.u / n);
            let e = mu / mw;
            // Sample variance of u - e·w.
            let var = ((s.uu - 2.0 * e * s.uw + e * e * s.ww) / n - (mu - e * mw).powi(2)).max(0.0) * n / (n - 1.0);
            Ok(Estimate {
                value: e,
                stderr: (var / n).sqrt() / mw.abs(),
            })
        }
        QuadratureMethod::Grid { spacing } => {
            let cells = grid_cells(spacing, w);
            let (wf, uf) = grid_sums(field, Some(half_separation), cells, w)?;
            let (wc, uc) = grid_sums(field, Some(half_separation), cells / 2, w)?;
            let fine = uf / wf;
            Ok(Estimate {
                value: fine,
                stderr: (fine - uc / wc).abs() / 3.0,
            })
        }
    }
}

/// Electronic energy plus the nuclear repulsion `1/(2R)`.
pub fn total_energy(electronic: f64, half_separation: f64) -> Result<f64> {
    if !(half_separation > 0.0) {
        return Err(Error::OutOfRange {
            value: half_separation,
            min: 0.0,
            max: f64::INFINITY,
        });
    }
    Ok(electronic + 0.5 / half_separation)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForceMethod {
    Autodiff,
    FiniteDifference { step: f64 },
}

/// `-d(E_nn(R) + 1/(2R))/dR`.
///
/// The finite-difference variant needs `R ± step` inside `trained_range`.
pub fn force(params: &ParameterSet, half_separation: f64, method: ForceMethod, trained_range: [f64; 2]) -> Result<f64> {
    let r = half_separation;
    if !(r > 0.0) {
        return Err(Error::OutOfRange {
            value: r,
            min: 0.0,
            max: f64::INFINITY,
        });
    }
    let mut ev = Evaluator::new(params);
    match method {
        ForceMethod::Autodiff => {
            let (_, de) = ev.energy_with_derivative(r);
            Ok(-de + 0.5 / (r * r))
        }
        ForceMethod::FiniteDifference { step } => {
            let [lo, hi] = trained_range;
            if r - step < lo || r + step > hi {
                return Err(Error::OutOfRange {
                    value: r,
                    min: lo + step,
                    max: hi - step,
                });
            }
            // Only E_nn is differenced; the repulsion term is differentiated exactly.
            let de = (ev.energy(r + step) - ev.energy(r - step)) / (2.0 * step);
            Ok(-de + 0.5 / (r * r))
        }
    }
}

/// The 26 directions of the degree-7 cubature on the sphere with weights
/// summing to one: 6 faces, 12 edges, 8 corners of the cube.
fn sphere_design() -> Vec<([f64; 3], f64)> {
    let mut out = Vec::with_capacity(26);
    let s2 = std::f64::consts::FRAC_1_SQRT_2;
    let s3 = 1.0 / 3f64.sqrt();
    for axis in 0..3 {
        for sign in [1.0, -1.0] {
            let mut d = [0.0; 3];
            d[axis] = sign;
            out.push((d, 1.0 / 21.0));
        }
    }
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        for sa in [1.0, -1.0] {
            for sb in [1.0, -1.0] {
                let mut d = [0.0; 3];
                d[a] = sa * s2;
                d[b] = sb * s2;
                out.push((d, 4.0 / 105.0));
            }
        }
    }
    for sx in [1.0, -1.0] {
        for sy in [1.0, -1.0] {
            for sz in [1.0, -1.0] {
                out.push(([sx * s3, sy * s3, sz * s3], 9.0 / 280.0));
            }
        }
    }
    out
}

/// Spherically averaged radial log-derivative at a nucleus, `-Z = -1` for an
/// exact eigenfunction.
///
/// On each shell of radius ε the average of `∂ψ/∂r` is divided by the average
/// of `ψ`; the shell ratios are then extrapolated linearly (least squares) to
/// ε = 0.
pub fn cusp_diagnostic(field: &impl TrialField, nucleus: [f64; 3]) -> Result<f64> {
    let design = sphere_design();
    let mut ratios = Vec::with_capacity(CUSP_SHELLS.len());
    for &eps in &CUSP_SHELLS {
        let pts: Vec<[f64; 3]> = design
            .iter()
            .map(|(d, _)| [nucleus[0] + eps * d[0], nucleus[1] + eps * d[1], nucleus[2] + eps * d[2]])
            .collect();
        let jets = field.jets(&pts)?;
        let mut avg_psi = 0.0;
        let mut avg_dr = 0.0;
        for ((d, wt), j) in design.iter().zip(&jets) {
            avg_psi += wt * j.value;
            avg_dr += wt * (j.grad[0] * d[0] + j.grad[1] * d[1] + j.grad[2] * d[2]);
        }
        if !(avg_psi.abs() > 1e-12) {
            return Err(Error::Domain {
                op: "cusp ratio (wavefunction vanishes at the nucleus)",
                value: avg_psi,
            });
        }
        ratios.push(avg_dr / avg_psi);
    }
    let n = CUSP_SHELLS.len() as f64;
    let mx = CUSP_SHELLS.iter().sum::<f64>() / n;
    let my = ratios.iter().sum::<f64>() / n;
    let sxx: f64 = CUSP_SHELLS.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = CUSP_SHELLS.iter().zip(&ratios).map(|(x, y)| (x - mx) * (y - my)).sum();
    Ok(my - sxy / sxx * mx)
}

/// Column names of the PES table, in order.
pub const PES_HEADER: [&str; 10] = [
    "R",
    "E_nn",
    "E_expect",
    "E_expect_stderr",
    "E_total_nn",
    "E_total_expect",
    "force_autodiff",
    "force_fd",
    "gate_value",
    "E_lcao",
];

/// One geometry of a potential-energy scan.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PesRow {
    #[serde(rename = "R")]
    pub half_separation: f64,
    #[serde(rename = "E_nn")]
    pub e_nn: f64,
    #[serde(rename = "E_expect")]
    pub e_expect: f64,
    #[serde(rename = "E_expect_stderr")]
    pub e_expect_stderr: f64,
    #[serde(rename = "E_total_nn")]
    pub e_total_nn: f64,
    #[serde(rename = "E_total_expect")]
    pub e_total_expect: f64,
    pub force_autodiff: f64,
    /// `NaN` when `R ± step` leaves the trained range.
    pub force_fd: f64,
    pub gate_value: f64,
    #[serde(rename = "E_lcao")]
    pub e_lcao: f64,
}

impl PesRow {
    fn fields(&self) -> [f64; 10] {
        [
            self.half_separation,
            self.e_nn,
            self.e_expect,
            self.e_expect_stderr,
            self.e_total_nn,
            self.e_total_expect,
            self.force_autodiff,
            self.force_fd,
            self.gate_value,
            self.e_lcao,
        ]
    }
}

/// Formats a float with 12 significant digits.
pub fn format_sig12(x: f64) -> String {
    format!("{x:.11e}")
}

/// Writes the scan as CSV with the [`PES_HEADER`] columns.
pub fn write_pes_csv<W: std::io::Write>(rows: &[PesRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PES_HEADER)?;
    for row in rows {
        w.write_record(row.fields().iter().map(|&x| format_sig12(x)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_pes_csv<R: std::io::Read>(input: R) -> Result<Vec<PesRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header: Vec<String> = r.headers()?.iter().map(str::to_owned).collect();
    if header != PES_HEADER {
        return Err(Error::InvalidConfig(format!("unexpected PES header {header:?}")));
    }
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Evaluates every PES column at each `R` of `grid`.
///
/// Points outside `trained_range` are evaluated anyway (with a warning); their
/// finite-difference force is `NaN` when the stencil leaves the range.
pub fn pes_scan(params: &ParameterSet, grid: &[f64], trained_range: [f64; 2], quad: &QuadratureSpec) -> Result<Vec<PesRow>> {
    quad.validate()?;
    let parity = params.config().parity;
    let mut rows = Vec::with_capacity(grid.len());
    for &r in grid {
        if r < trained_range[0] || r > trained_range[1] {
            log::warn!("R = {r} lies outside the trained range [{}, {}]; values are extrapolated", trained_range[0], trained_range[1]);
        }
        let mut ev = Evaluator::new(params);
        let e_nn = ev.energy(r);
        let gate_value = ev.gate(r);
        let expect = expectation_energy(&NeuralField::new(params, r), r, quad)?;
        let force_fd = match force(params, r, ForceMethod::FiniteDifference { step: FD_FORCE_STEP }, trained_range) {
            Ok(f) => f,
            Err(Error::OutOfRange { .. }) => f64::NAN,
            Err(e) => return Err(e),
        };
        rows.push(PesRow {
            half_separation: r,
            e_nn,
            e_expect: expect.value,
            e_expect_stderr: expect.stderr,
            e_total_nn: total_energy(e_nn, r)?,
            e_total_expect: total_energy(expect.value, r)?,
            force_autodiff: force(params, r, ForceMethod::Autodiff, trained_range)?,
            force_fd,
            gate_value,
            e_lcao: oracle::lcao_energy(r, parity)?,
        });
    }
    Ok(rows)
}
