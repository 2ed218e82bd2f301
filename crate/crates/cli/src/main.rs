//! `geoptics`: runs the front tracking solvers, expansion builders, probes and
//! convergence sweeps from the command line.
//!
//! Exit codes: 0 on success, 1 when the input is rejected, 2 when a solver or
//! check fails at run time. Diagnostics go to standard error.

mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use geoptics::geo_optics::{assemble_auxiliary, assemble_expansion, build_correction_compact, evolve_profiles, project_initial, separation_time};
use geoptics::harness::{
    convergence_sweep, coupled_nu, default_lambda_hat, local_estimate_probe, probes_csv, strength_expansion_probe, sweep_csv, tv_decay_probe, StrengthSetup,
    Variant,
};
use geoptics::models::{build_model, model_lint, ModelParams, State, SystemModel};
use geoptics::scalar_ft::{scalar_evolve, AffineFlux};
use geoptics::system_ft::{ft_evolve, FtParams};
use geoptics::system_riemann::RiemannSolver;
use geoptics::tracking::events_csv;
use geoptics::{Error, PiecewiseConstantFn};
use serde::Serialize;

use crate::config::{read_piecewise, ExperimentConfig};

/// Why a command stopped.
#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidPiecewise(_)
            | Error::DimensionMismatch { .. }
            | Error::UnknownModel(_)
            | Error::InadmissibleState(_)
            | Error::InitialTvTooLarge { .. }
            | Error::OutsideSmallAmplitude { .. }
            | Error::RangeNotOnGrid { .. }
            | Error::MultipleJumpsInWindow(_)
            | Error::TooFewPoints(_)
            | Error::Config(_) => Failure::Validation(e.to_string()),
            _ => Failure::Runtime(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "geoptics", version, about = "Front tracking for hyperbolic systems and their geometric-optics expansions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelArgs {
    /// burgers, psystem, euler1d or steady-euler2d
    #[arg(long)]
    model: String,
    /// Adiabatic exponent
    #[arg(long, default_value_t = 1.4)]
    gamma: f64,
    /// p-system pressure scale
    #[arg(long, default_value_t = 1.0)]
    k: f64,
}

impl ModelArgs {
    fn build(&self) -> Result<Arc<dyn SystemModel>, Failure> {
        Ok(build_model(&self.model, ModelParams { gamma: self.gamma, k: self.k })?)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Burgers front tracking on the 2^-ν grid
    Scalar {
        /// Piecewise JSON initial data
        #[arg(long)]
        init: PathBuf,
        #[arg(long, default_value_t = 8)]
        nu: u32,
        /// Snapshot times, comma separated
        #[arg(long, value_delimiter = ',', required = true)]
        times: Vec<f64>,
        /// Event log CSV
        #[arg(long)]
        events: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solves one Riemann problem and prints the fan as JSON
    Riemann {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        left: Vec<f64>,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        right: Vec<f64>,
        /// Small-amplitude radius
        #[arg(long, default_value_t = geoptics::system_riemann::DEFAULT_DELTA)]
        delta: f64,
    },
    /// System front tracking from piecewise constant data
    Evolve {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        init: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        times: Vec<f64>,
        /// Rarefaction splitting threshold
        #[arg(long, default_value_t = 1e-2)]
        delta_r: f64,
        #[arg(long, default_value_t = geoptics::system_ft::DEFAULT_FRONT_CAP)]
        front_cap: usize,
        #[arg(long)]
        events: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Snapshots of the geometric-optics expansion of U⁰ + εU¹
    Expand {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        u1: PathBuf,
        #[arg(long)]
        eps: f64,
        /// Grid exponent; coupled to ε and TV(U¹) when absent
        #[arg(long)]
        nu: Option<u32>,
        #[arg(long, value_delimiter = ',', required = true)]
        times: Vec<f64>,
        /// plain, or auxiliary (quadratic terms plus compact corrections after T₀)
        #[arg(long, value_enum, default_value_t = ExpandVariant::Plain)]
        variant: ExpandVariant,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Local estimate, wave strength and decay probes
    Probe {
        #[command(subcommand)]
        probe: Probe,
    },
    /// Convergence sweep driven by a JSON experiment config
    Sweep(SweepArgs),
    /// Checks a model's eigenstructure at seeded samples
    LintModel {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ExpandVariant {
    Plain,
    Auxiliary,
}

#[derive(Clone, Copy, ValueEnum)]
enum SetupArg {
    FirstOrder,
    Quadratic,
    Corrected,
}

#[derive(Subcommand)]
enum Probe {
    /// One front tracking step of length h against the expansion near a jump
    Local {
        #[command(flatten)]
        model: ModelArgs,
        #[arg(long)]
        u1: PathBuf,
        #[arg(long)]
        eps: f64,
        #[arg(long)]
        nu: Option<u32>,
        /// Family whose profile jumps at x0
        #[arg(long)]
        family: usize,
        #[arg(long, allow_hyphen_values = true)]
        x0: f64,
        #[arg(long, default_value_t = 0.0)]
        t0: f64,
        #[arg(long)]
        h: f64,
        /// Defaults to 2 max|λ| + 1 over the model's sampling box
        #[arg(long)]
        lambda_hat: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Wave strengths across one jump of the expansion states, over an ε chain
    Strength {
        #[command(flatten)]
        model: ModelArgs,
        /// Family that jumps
        #[arg(long)]
        family: usize,
        #[arg(long, value_enum, default_value_t = SetupArg::FirstOrder)]
        setup: SetupArg,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        sigma_left: Vec<f64>,
        #[arg(long, allow_hyphen_values = true)]
        sigma: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        eps: Vec<f64>,
        /// Print the full record with fitted slopes as JSON instead of CSV
        #[arg(long)]
        json: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Total variation of the Burgers solution over time
    Decay {
        #[arg(long)]
        init: PathBuf,
        #[arg(long, default_value_t = 8)]
        nu: u32,
        #[arg(long, value_delimiter = ',', required = true)]
        times: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the ε list
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    #[arg(long)]
    nu: Option<u32>,
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    #[arg(long)]
    parallelism: Option<usize>,
    #[arg(long)]
    budget_secs: Option<f64>,
    /// Sweep CSV path
    #[arg(long)]
    out: Option<PathBuf>,
    /// Full record as JSON
    #[arg(long)]
    json: Option<PathBuf>,
    /// Print the effective config and exit
    #[arg(long)]
    print_config: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    Plain,
    Auxiliary,
    Noncompact,
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::Runtime(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("records serialize");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct Snapshot {
    t: f64,
    solution: PiecewiseConstantFn,
}

fn check_times(times: &[f64]) -> Result<f64, Failure> {
    if times.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return Err(Failure::Validation(format!("times must be finite and nonnegative, got {times:?}")));
    }
    Ok(times.iter().copied().fold(0.0, f64::max))
}

fn to_state(model: &dyn SystemModel, v: &[f64]) -> Result<State, Failure> {
    if v.len() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: v.len() }.into());
    }
    let s = State::from_row_slice(v);
    model.check(&s)?;
    Ok(s)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Scalar { init, nu, times, events, out } => {
            let t_final = check_times(&times)?;
            let data = read_piecewise(&init)?;
            if data.dim() != 1 {
                return Err(Error::DimensionMismatch { expected: 1, got: data.dim() }.into());
            }
            let data = data.quantize_to_grid(nu)?;
            let flux = AffineFlux::burgers_covering(nu, data.sup_norm())?;
            let traj = scalar_evolve(&data, &flux, t_final)?;
            let snaps: Vec<Snapshot> = times.iter().map(|&t| traj.snapshot(t).map(|solution| Snapshot { t, solution })).collect::<Result<_, _>>()?;
            if let Some(p) = events {
                emit(Some(&p), &events_csv(traj.events()))?;
            }
            emit(out.as_deref(), &to_json(&snaps))
        }
        Command::Riemann { model, left, right, delta } => {
            let m = model.build()?;
            let (l, r) = (to_state(m.as_ref(), &left)?, to_state(m.as_ref(), &right)?);
            let fan = RiemannSolver::new(m).with_delta(delta).riemann_solve(&l, &r)?;
            emit(None, &to_json(&fan))
        }
        Command::Evolve { model, init, times, delta_r, front_cap, events, out } => {
            let m = model.build()?;
            let t_final = check_times(&times)?;
            let data = read_piecewise(&init)?;
            let params = FtParams { delta_r, front_cap, ..FtParams::default() };
            let traj = ft_evolve(m, &data, t_final, &params)?;
            let snaps: Vec<Snapshot> = times.iter().map(|&t| traj.snapshot(t).map(|solution| Snapshot { t, solution })).collect::<Result<_, _>>()?;
            if let Some(p) = events {
                emit(Some(&p), &traj.events_csv())?;
            }
            emit(out.as_deref(), &to_json(&snaps))
        }
        Command::Expand { model, u1, eps, nu, times, variant, out } => {
            let m = model.build()?;
            let t_final = check_times(&times)?;
            if !(eps > 0.0 && eps < 1.0) {
                return Err(Failure::Validation(format!("eps must lie in (0, 1), got {eps}")));
            }
            let u1 = read_piecewise(&u1)?;
            let nu = nu.unwrap_or_else(|| coupled_nu(eps, u1.total_variation()));
            let p = evolve_profiles(&project_initial(m, &u1, nu, eps)?, eps * t_final)?;
            let mut snaps = Vec::with_capacity(times.len());
            match variant {
                ExpandVariant::Plain => {
                    for &t in &times {
                        snaps.push(Snapshot { t, solution: assemble_expansion(&p, t)? });
                    }
                }
                ExpandVariant::Auxiliary => {
                    let t0 = separation_time(&p)?;
                    let compact = if t_final >= t0 { build_correction_compact(&p, t0)? } else { Vec::new() };
                    for &t in &times {
                        let corr = if t >= t0 { &compact[..] } else { &[] };
                        snaps.push(Snapshot { t, solution: assemble_auxiliary(&p, t, corr)? });
                    }
                }
            }
            emit(out.as_deref(), &to_json(&snaps))
        }
        Command::Probe { probe } => run_probe(probe),
        Command::Sweep(args) => run_sweep(args),
        Command::LintModel { model, samples, seed, out } => {
            let m = model.build()?;
            let report = model_lint(m.as_ref(), samples, seed)?;
            emit(out.as_deref(), &to_json(&report))?;
            if report.pass {
                Ok(())
            } else {
                Err(Failure::Runtime(format!("model {} failed the eigenstructure checks", report.model)))
            }
        }
    }
}

fn run_probe(probe: Probe) -> Result<(), Failure> {
    match probe {
        Probe::Local { model, u1, eps, nu, family, x0, t0, h, lambda_hat, out } => {
            let m = model.build()?;
            if !(eps > 0.0 && eps < 1.0 && h > 0.0 && t0 >= 0.0) {
                return Err(Failure::Validation(format!("need 0 < eps < 1, h > 0, t0 >= 0 (eps = {eps}, h = {h}, t0 = {t0})")));
            }
            if family >= m.dim() {
                return Err(Failure::Validation(format!("family {family} out of range for {}", m.id())));
            }
            let u1 = read_piecewise(&u1)?;
            let nu = nu.unwrap_or_else(|| coupled_nu(eps, u1.total_variation()));
            let lh = lambda_hat.unwrap_or_else(|| default_lambda_hat(m.as_ref()));
            let p = evolve_profiles(&project_initial(m, &u1, nu, eps)?, eps * (t0 + h))?;
            let rec = local_estimate_probe(&p, family, x0, t0, h, lh, &FtParams::coupled(eps, nu))?;
            emit(out.as_deref(), &probes_csv(&[rec]))
        }
        Probe::Strength { model, family: k, setup, sigma_left, sigma, eps, json, out } => {
            let m = model.build()?;
            if k >= m.dim() {
                return Err(Failure::Validation(format!("family {k} out of range for {}", m.id())));
            }
            let setup = match setup {
                SetupArg::FirstOrder => StrengthSetup::FirstOrder,
                SetupArg::Quadratic => StrengthSetup::Quadratic,
                SetupArg::Corrected => StrengthSetup::Corrected,
            };
            let rec = strength_expansion_probe(m, k, setup, &sigma_left, sigma, &eps)?;
            emit(out.as_deref(), &if json { to_json(&rec) } else { probes_csv(&rec.records) })
        }
        Probe::Decay { init, nu, times, out } => {
            let data = read_piecewise(&init)?;
            let rec = tv_decay_probe(&data, nu, &times)?;
            emit(out.as_deref(), &to_json(&rec))
        }
    }
}

fn run_sweep(args: SweepArgs) -> Result<(), Failure> {
    let mut cfg = ExperimentConfig::from_file(&args.config)?;
    if let Some(e) = args.eps {
        cfg.eps = e;
    }
    if args.nu.is_some() {
        cfg.nu = args.nu;
    }
    if let Some(v) = args.variant {
        cfg.variant = match v {
            VariantArg::Plain => Variant::Plain,
            VariantArg::Auxiliary => Variant::Auxiliary,
            VariantArg::Noncompact => Variant::Noncompact,
        };
    }
    if let Some(p) = args.parallelism {
        cfg.parallelism = p;
    }
    if args.budget_secs.is_some() {
        cfg.budget_secs = args.budget_secs;
    }
    if args.out.is_some() {
        cfg.output.csv = args.out;
    }
    if args.json.is_some() {
        cfg.output.json = args.json;
    }
    if args.print_config {
        return emit(None, &to_json(&cfg));
    }
    let base = args.config.parent().map(Path::to_path_buf).unwrap_or_default();
    let loaded = cfg.load(&base)?;
    let cfg = &loaded.config;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.parallelism).build().map_err(|e| Failure::Runtime(e.to_string()))?;
    let rec = pool.install(|| convergence_sweep(loaded.model.clone(), &loaded.u1, &cfg.eps, &cfg.settings()))?;
    if let Some(p) = &cfg.output.json {
        emit(Some(p), &to_json(&rec))?;
    }
    if !rec.monotone() {
        eprintln!("note: E(eps) is not monotone along the chain: {:?}", rec.sup_errors());
    }
    emit(cfg.output.csv.as_deref(), &sweep_csv(&rec))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
