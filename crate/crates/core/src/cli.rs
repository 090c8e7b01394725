//! Command-line front end.
//!
//! Every run-producing command writes `resolved_config.json` next to its
//! outputs and holds a lock file in the output directory while it works.
//! Thread count follows `RAYON_NUM_THREADS`.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{nuclei, Evaluator, NetworkConfig, Parity};
use crate::observables::{self, cusp_diagnostic, expectation_energy, force, norm_squared, ForceMethod, NeuralField, PesRow, QuadratureSpec, FD_FORCE_STEP};
use crate::oracle::{self, FdGrid, ReferenceRow};
use crate::sampler::SamplerConfig;
use crate::trainer::{fine_tune, train, write_log_csv, Checkpoint, TrainLogRow, TrainingConfig};

/// Everything a run depends on.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub network: NetworkConfig,
    pub sampler: SamplerConfig,
    pub training: TrainingConfig,
    pub quadrature: QuadratureSpec,
    pub output_dir: PathBuf,
    /// Reductions are always performed in a fixed order; the flag is
    /// recorded so that runs can state the guarantee they relied on.
    pub deterministic: bool,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.network.validate()?;
        self.sampler.validate()?;
        self.training.validate()?;
        self.quadrature.validate()
    }

    fn write(&self, dir: &Path) -> Result<()> {
        write_atomic(&dir.join("resolved_config.json"), serde_json::to_string_pretty(self)?.as_bytes())
    }
}

#[derive(Debug, Parser)]
#[command(name = "h2pinn", version, about = "Neural wavefunction and energy surfaces for H2+")]
pub struct Cli {
    /// Record bit-stable reductions in the resolved config.
    #[arg(long, global = true)]
    pub deterministic: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Main training phase from a fresh initialization.
    Train(TrainArgs),
    /// Train the energy unit alone on top of a checkpoint.
    Finetune(FinetuneArgs),
    /// Potential-energy-surface scan of a checkpoint.
    Scan(ScanArgs),
    /// Report every observable at a single R.
    Eval(EvalArgs),
    /// Reference energies independent of the network.
    Oracle(OracleArgs),
    /// Error table of a PES scan against a reference table.
    Compare(CompareArgs),
}

#[derive(Debug, Args)]
pub struct SamplerFlags {
    /// Collocation points per epoch.
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub r_min: Option<f64>,
    #[arg(long)]
    pub r_max: Option<f64>,
    #[arg(long = "box")]
    pub box_half_width: Option<f64>,
    #[arg(long)]
    pub r_cut: Option<f64>,
}

impl SamplerFlags {
    fn apply(&self, s: &mut SamplerConfig) {
        if let Some(n) = self.points {
            s.n_points = n;
        }
        if let Some(v) = self.r_min {
            s.r_range[0] = v;
        }
        if let Some(v) = self.r_max {
            s.r_range[1] = v;
        }
        if let Some(v) = self.box_half_width {
            s.box_half_width = v;
        }
        if let Some(v) = self.r_cut {
            s.r_cut = v;
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "runs/train")]
    pub out: PathBuf,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Use the full paper-scale sampler and epoch count.
    #[arg(long)]
    pub full_scale: bool,
    #[arg(long)]
    pub parity: Option<ParityArg>,
    #[command(flatten)]
    pub sampler: SamplerFlags,
}

#[derive(Debug, Args)]
pub struct FinetuneArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "runs/finetune")]
    pub out: PathBuf,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[command(flatten)]
    pub sampler: SamplerFlags,
}

#[derive(Debug, Args)]
pub struct QuadFlags {
    /// Monte Carlo sample count.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub quad_seed: Option<u64>,
    /// Use midpoint grid quadrature with this spacing instead of Monte Carlo.
    #[arg(long)]
    pub grid_spacing: Option<f64>,
}

impl QuadFlags {
    fn resolve(&self) -> Result<QuadratureSpec> {
        let q = match self.grid_spacing {
            Some(h) => QuadratureSpec::grid(h),
            None => QuadratureSpec::monte_carlo(self.samples.unwrap_or(1_000_000), self.quad_seed.unwrap_or(0)),
        };
        q.validate()?;
        Ok(q)
    }
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Defaults to the trained range.
    #[arg(long)]
    pub r_min: Option<f64>,
    #[arg(long)]
    pub r_max: Option<f64>,
    #[arg(long, default_value_t = 29)]
    pub steps: usize,
    #[arg(long, default_value = "runs/scan")]
    pub out: PathBuf,
    #[command(flatten)]
    pub quad: QuadFlags,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub r: f64,
    #[command(flatten)]
    pub quad: QuadFlags,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum OracleMode {
    Fd,
    Lcao,
    Limits,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ParityArg {
    Symmetric,
    Antisymmetric,
}

impl From<ParityArg> for Parity {
    fn from(p: ParityArg) -> Self {
        match p {
            ParityArg::Symmetric => Parity::Symmetric,
            ParityArg::Antisymmetric => Parity::Antisymmetric,
        }
    }
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, value_enum)]
    pub mode: OracleMode,
    /// A single half-separation; overrides the range flags.
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub r_min: f64,
    #[arg(long, default_value_t = 2.5)]
    pub r_max: f64,
    #[arg(long, default_value_t = 21)]
    pub steps: usize,
    /// Finest grid spacing.
    #[arg(long, default_value_t = 0.025)]
    pub spacing: f64,
    #[arg(long, default_value_t = 12.0)]
    pub half_length: f64,
    #[arg(long, default_value_t = 12.0)]
    pub max_rho: f64,
    /// Report the single-grid value instead of the extrapolation.
    #[arg(long)]
    pub no_extrapolate: bool,
    #[arg(long, value_enum, default_value_t = ParityArg::Symmetric)]
    pub parity: ParityArg,
    /// Write the table here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub pes: PathBuf,
    pub reference: PathBuf,
    /// Write the table here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Held for the lifetime of a command writing into a directory.
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        let path = dir.join(".h2pinn.lock");
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                writeln!(f, "{}", std::process::id())?;
                Ok(Self { path })
            }
            Err(e) if e.kind() == io::ErrorKind::AlreadyExists => Err(Error::Locked(dir.to_path_buf())),
            Err(e) => Err(e.into()),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.path);
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    {
        let mut f = File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write(&mut buf)?;
    Ok(buf)
}

fn progress_logger(every: usize) -> impl FnMut(&TrainLogRow) {
    let start = Instant::now();
    move |row: &TrainLogRow| {
        if row.epoch == 1 || row.epoch % every == 0 {
            log::info!(
                "{} epoch {:>5}  loss {:.4e}  pde {:.4e}  bc {:.4e}  {:.1}s",
                row.phase.as_str(),
                row.epoch,
                row.loss.total,
                row.loss.pde,
                row.loss.bc,
                start.elapsed().as_secs_f64()
            );
        }
    }
}

pub fn cmd_train(args: &TrainArgs, deterministic: bool) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig {
            training: TrainingConfig::desk(),
            ..RunConfig::default()
        },
    };
    if args.full_scale {
        cfg.sampler = SamplerConfig {
            seed: cfg.sampler.seed,
            ..SamplerConfig::full_scale()
        };
        cfg.training.epochs_main = TrainingConfig::default().epochs_main;
    }
    if let Some(e) = args.epochs {
        cfg.training.epochs_main = e;
    }
    if let Some(lr) = args.lr {
        cfg.training.lr_main = lr;
    }
    if let Some(s) = args.seed {
        cfg.training.seed = s;
        cfg.sampler.seed = s;
    }
    if let Some(p) = args.parity {
        cfg.network.parity = p.into();
    }
    args.sampler.apply(&mut cfg.sampler);
    cfg.output_dir = args.out.clone();
    cfg.deterministic |= deterministic;
    cfg.validate()?;

    let _lock = DirLock::acquire(&args.out)?;
    cfg.write(&args.out)?;
    let out = train(&cfg.network, &cfg.sampler, &cfg.training, progress_logger(100))?;
    out.checkpoint.save(&args.out.join("checkpoint.json"))?;
    write_atomic(&args.out.join("train_log.csv"), &csv_bytes(|b| write_log_csv(&out.log, b))?)?;
    log::info!("best loss {:.4e} at epoch {}", out.checkpoint.metadata.best_total_loss, out.checkpoint.metadata.epoch);
    Ok(cfg)
}

pub fn cmd_finetune(args: &FinetuneArgs, deterministic: bool) -> Result<RunConfig> {
    let ck = Checkpoint::load(&args.checkpoint)?;
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig {
            network: ck.config.network.clone(),
            sampler: ck.config.sampler.clone(),
            training: ck.config.training.clone(),
            ..RunConfig::default()
        },
    };
    if let Some(e) = args.epochs {
        cfg.training.epochs_finetune = e;
    }
    if let Some(lr) = args.lr {
        cfg.training.lr_finetune = lr;
    }
    args.sampler.apply(&mut cfg.sampler);
    cfg.network = ck.config.network.clone();
    cfg.output_dir = args.out.clone();
    cfg.deterministic |= deterministic;
    cfg.validate()?;

    let _lock = DirLock::acquire(&args.out)?;
    cfg.write(&args.out)?;
    let out = fine_tune(&ck, &cfg.sampler, &cfg.training, progress_logger(200))?;
    out.checkpoint.save(&args.out.join("checkpoint.json"))?;
    write_atomic(&args.out.join("finetune_log.csv"), &csv_bytes(|b| write_log_csv(&out.log, b))?)?;
    Ok(cfg)
}

/// `steps` evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..steps).map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64).collect(),
    }
}

pub fn cmd_scan(args: &ScanArgs, deterministic: bool) -> Result<Vec<PesRow>> {
    let ck = Checkpoint::load(&args.checkpoint)?;
    let trained = ck.config.sampler.r_range;
    let lo = args.r_min.unwrap_or(trained[0]);
    let hi = args.r_max.unwrap_or(trained[1]);
    if args.steps == 0 || !(lo > 0.0 && hi >= lo) {
        return Err(Error::InvalidConfig(format!("scan needs steps ≥ 1 and 0 < r_min ≤ r_max (got {lo}, {hi}, {})", args.steps)));
    }
    let quad = args.quad.resolve()?;
    let cfg = RunConfig {
        network: ck.config.network.clone(),
        sampler: ck.config.sampler.clone(),
        training: ck.config.training.clone(),
        quadrature: quad,
        output_dir: args.out.clone(),
        deterministic,
    };
    let _lock = DirLock::acquire(&args.out)?;
    cfg.write(&args.out)?;
    let rows = observables::pes_scan(&ck.params, &linspace(lo, hi, args.steps), trained, &quad)?;
    write_atomic(&args.out.join("pes.csv"), &csv_bytes(|b| observables::write_pes_csv(&rows, b))?)?;
    Ok(rows)
}

pub fn cmd_eval(args: &EvalArgs, out: &mut impl Write) -> Result<()> {
    let ck = Checkpoint::load(&args.checkpoint)?;
    let r = args.r;
    let quad = args.quad.resolve()?;
    let trained = ck.config.sampler.r_range;
    if r < trained[0] || r > trained[1] {
        log::warn!("R = {r} lies outside the trained range [{}, {}]", trained[0], trained[1]);
    }
    let mut ev = Evaluator::new(&ck.params);
    let e_nn = ev.energy(r);
    let field = NeuralField::new(&ck.params, r);
    let expect = expectation_energy(&field, r, &quad)?;
    let norm = norm_squared(&field, &quad)?;
    let f_ad = force(&ck.params, r, ForceMethod::Autodiff, trained)?;
    let f_fd = force(&ck.params, r, ForceMethod::FiniteDifference { step: FD_FORCE_STEP }, trained).unwrap_or(f64::NAN);
    let [n1, n2] = nuclei(r);
    let lcao = oracle::lcao_energy(r, ck.config.network.parity)?;
    writeln!(out, "R                 {r}")?;
    writeln!(out, "E_nn              {e_nn:.8}")?;
    writeln!(out, "E_expect          {:.8} ± {:.2e}", expect.value, expect.stderr)?;
    writeln!(out, "E_lcao            {lcao:.8}")?;
    writeln!(out, "E_total_nn        {:.8}", observables::total_energy(e_nn, r)?)?;
    writeln!(out, "E_total_expect    {:.8}", observables::total_energy(expect.value, r)?)?;
    writeln!(out, "force_autodiff    {f_ad:.8}")?;
    writeln!(out, "force_fd          {f_fd:.8}")?;
    writeln!(out, "gate              {:.8}", ev.gate(r))?;
    writeln!(out, "norm_squared      {:.6} ± {:.2e}", norm.value, norm.stderr)?;
    for (i, n) in [n1, n2].iter().enumerate() {
        match cusp_diagnostic(&field, *n) {
            Ok(c) => writeln!(out, "cusp_nucleus_{}    {c:.6}", i + 1)?,
            Err(e) => writeln!(out, "cusp_nucleus_{}    unavailable ({e})", i + 1)?,
        }
    }
    Ok(())
}

/// Reference rows; failures are reported per row and the first one returned
/// after all rows have been attempted.
pub fn cmd_oracle(args: &OracleArgs, out: &mut impl Write) -> Result<Vec<ReferenceRow>> {
    if args.mode == OracleMode::Limits {
        let l = oracle::limit_energies();
        writeln!(out, "united_atom {:?}", l.united_atom)?;
        writeln!(out, "separated_atom {:?}", l.separated_atom)?;
        return Ok(Vec::new());
    }
    let rs = match args.r {
        Some(r) => vec![r],
        None => linspace(args.r_min, args.r_max, args.steps),
    };
    let grid = FdGrid {
        half_length_x: args.half_length,
        max_rho: args.max_rho,
        spacing: args.spacing,
        ..FdGrid::default()
    };
    let parity: Parity = args.parity.into();
    if args.mode == OracleMode::Fd && parity != Parity::Symmetric {
        return Err(Error::InvalidConfig("the finite-difference oracle solves the symmetric ground state only".into()));
    }
    let results: Vec<Result<ReferenceRow>> = rs
        .par_iter()
        .map(|&r| match args.mode {
            OracleMode::Fd => oracle::reference_row(r, &grid, !args.no_extrapolate),
            _ => oracle::lcao_row(r, parity),
        })
        .collect();
    let mut rows = Vec::with_capacity(results.len());
    let mut first_err = None;
    for (r, res) in rs.iter().zip(results) {
        match res {
            Ok(row) => rows.push(row),
            Err(e) => {
                log::error!("R = {r}: {e}");
                first_err.get_or_insert(e);
            }
        }
    }
    let bytes = csv_bytes(|b| oracle::write_reference_csv(&rows, b))?;
    match &args.out {
        Some(p) => write_atomic(p, &bytes)?,
        None => out.write_all(&bytes)?,
    }
    match first_err {
        Some(e) => Err(e),
        None => Ok(rows),
    }
}

pub const COMPARE_HEADER: [&str; 7] = ["R", "dE_nn", "dE_expect", "E_expect_stderr", "dE_lcao", "dE_total_nn", "variational_violation"];

/// One line of the comparison table; differences are scan minus reference.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CompareRow {
    pub half_separation: f64,
    pub d_nn: f64,
    pub d_expect: f64,
    pub expect_stderr: f64,
    pub d_lcao: f64,
    pub d_total_nn: f64,
    /// `⟨Ĥ⟩` below the reference by more than three standard errors.
    pub violation: bool,
}

/// Matches rows whose `R` agree to within `1e-9`.
pub fn compare(pes: &[PesRow], reference: &[ReferenceRow]) -> Result<Vec<CompareRow>> {
    let mut out = Vec::new();
    for p in pes {
        let Some(r) = reference.iter().find(|r| (r.half_separation - p.half_separation).abs() <= 1e-9) else {
            log::warn!("R = {} has no reference row", p.half_separation);
            continue;
        };
        let d_expect = p.e_expect - r.e_electronic;
        out.push(CompareRow {
            half_separation: p.half_separation,
            d_nn: p.e_nn - r.e_electronic,
            d_expect,
            expect_stderr: p.e_expect_stderr,
            d_lcao: p.e_lcao - r.e_electronic,
            d_total_nn: p.e_total_nn - r.e_total,
            violation: d_expect < -3.0 * p.e_expect_stderr,
        });
    }
    Ok(out)
}

pub fn cmd_compare(args: &CompareArgs, out: &mut impl Write) -> Result<Vec<CompareRow>> {
    let pes = observables::read_pes_csv(File::open(&args.pes)?)?;
    let reference = oracle::read_reference_csv(File::open(&args.reference)?)?;
    let rows = compare(&pes, &reference)?;
    if rows.is_empty() {
        return Err(Error::DisjointGrids {
            left: args.pes.display().to_string(),
            right: args.reference.display().to_string(),
        });
    }
    let bytes = csv_bytes(|b| {
        let mut w = csv::Writer::from_writer(b);
        w.write_record(COMPARE_HEADER)?;
        for r in &rows {
            w.write_record([
                observables::format_sig12(r.half_separation),
                observables::format_sig12(r.d_nn),
                observables::format_sig12(r.d_expect),
                observables::format_sig12(r.expect_stderr),
                observables::format_sig12(r.d_lcao),
                observables::format_sig12(r.d_total_nn),
                r.violation.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    })?;
    match &args.out {
        Some(p) => write_atomic(p, &bytes)?,
        None => out.write_all(&bytes)?,
    }
    let max_abs = |f: fn(&CompareRow) -> f64| rows.iter().map(f).fold(0.0f64, |m, x| m.max(x.abs()));
    let violations = rows.iter().filter(|r| r.violation).count();
    eprintln!(
        "{} rows  max|dE_nn| {:.3e}  max|dE_expect| {:.3e}  max|dE_lcao| {:.3e}  variational violations {}",
        rows.len(),
        max_abs(|r| r.d_nn),
        max_abs(|r| r.d_expect),
        max_abs(|r| r.d_lcao),
        violations
    );
    Ok(rows)
}

pub fn run(cli: &Cli) -> Result<()> {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match &cli.command {
        Command::Train(a) => cmd_train(a, cli.deterministic).map(drop),
        Command::Finetune(a) => cmd_finetune(a, cli.deterministic).map(drop),
        Command::Scan(a) => cmd_scan(a, cli.deterministic).map(drop),
        Command::Eval(a) => cmd_eval(a, &mut out),
        Command::Oracle(a) => cmd_oracle(a, &mut out).map(drop),
        Command::Compare(a) => cmd_compare(a, &mut out).map(drop),
    }
}

/// Parses the process arguments, runs, and returns the exit code.
pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
