//! `cohere` command-line front end.
//!
//! Every subcommand reads its numeric settings from flags first, then from an
//! optional flat TOML file (`--config`), then from built-in defaults. Keys in
//! the file use the flag names (`target-mean` or `target_mean`).

use crate::error::Error;
use crate::hydrogen::{fractional_revival_times, kepler_period, revival_ratio, revival_time};
use crate::identity::{run_verification, RadialRule, SphereRule, VerifyConfig};
use crate::io::{
    format_s, write_autocorr_csv, write_grid_binary, write_grid_csv, write_levels_csv,
    write_moments_csv, StateDescriptor,
};
use crate::position::{ellipse_to_angular, fields_on_grid, GridSpec, DEFAULT_GRID_BUDGET};
use crate::state::{
    autocorrelation_many, build_state_default, level_distribution, level_stats, solve_scale,
    CoherentState, LevelIndex,
};
use crate::su2::AngularParams;
use crate::weights::{log_moment, WeightSpec};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

/// Default sample count for `autocorr`.
const DEFAULT_AUTOCORR_SAMPLES: usize = 100_000;
/// Default grid: the 80000-unit square used for the n = 160 snapshots.
const DEFAULT_GRID_WIDTH: f64 = 80_000.0;
const DEFAULT_GRID_SAMPLES: usize = 201;

#[derive(Debug, Parser)]
#[command(
    name = "cohere",
    version,
    about = "Hydrogen coherent states: solve, evolve, sample, verify"
)]
pub struct Cli {
    /// Flat TOML file with default values for subcommand flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads for parallel kernels.
    #[arg(long, global = true, env = "COHERE_THREADS")]
    pub threads: Option<usize>,
    /// Work budget for grid evaluation (levels^2 x samples^2).
    #[arg(long, global = true, env = "COHERE_BUDGET")]
    pub budget: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the scale giving a target mean level and write a descriptor.
    Solve(SolveArgs),
    /// Autocorrelation trace |<ψ(0)|ψ(t)>|^2 as CSV.
    Autocorr(AutocorrArgs),
    /// Planar |Ψ| fields at a list of times.
    Grid(GridArgs),
    /// Level distribution (n, p_n) as CSV.
    Levels(LevelsArgs),
    /// Resolution-of-identity checks; JSON report.
    Verify(VerifyArgs),
    /// Weight-function utilities.
    #[command(subcommand)]
    Weights(WeightsCommand),
}

#[derive(Debug, Subcommand)]
pub enum WeightsCommand {
    /// ln rho_n for n = 0..=n-max as CSV.
    Moments(MomentsArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FamilyArg {
    Exponential,
    Stretched,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum IndexArg {
    Principal,
    Summation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GridFormat {
    Csv,
    Bin,
    Both,
}

#[derive(Debug, Args)]
pub struct WeightArgs {
    /// Weight family; `stretched` needs --alpha.
    #[arg(long, value_enum)]
    pub family: Option<FamilyArg>,
    /// Exponent of rho(u) = exp(-u^alpha).
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub weight: WeightArgs,
    /// Target mean level.
    #[arg(long)]
    pub target_mean: Option<f64>,
    /// Label the target refers to.
    #[arg(long, value_enum)]
    pub index: Option<IndexArg>,
    /// Relative tolerance on the mean.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    /// Orbit eccentricity for the angular parameters (0 = fiducial).
    #[arg(long)]
    pub eccentricity: Option<f64>,
    /// Descriptor output path.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AutocorrArgs {
    /// State descriptor (TOML).
    pub descriptor: PathBuf,
    #[arg(long)]
    pub t_start: Option<f64>,
    /// End time; default 1.1 T_r.
    #[arg(long)]
    pub t_end: Option<f64>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Sample densely around one fractional revival: 0, T_r/5, T_r/4, T_r/3, T_r/2 or T_r.
    #[arg(long)]
    pub focus: Option<String>,
    /// Relative half-width of the focus window.
    #[arg(long)]
    pub focus_width: Option<f64>,
    /// CSV output path; stdout if absent.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    pub descriptor: PathBuf,
    #[arg(long)]
    pub width: Option<f64>,
    /// Samples per side.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Comma-separated times; default 0, T_r/5, T_r/4, T_r/3, T_r/2, T_r.
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    #[arg(long, value_enum)]
    pub format: Option<GridFormat>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LevelsArgs {
    pub descriptor: PathBuf,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub weight: WeightArgs,
    /// Largest 2j for the SU(2) check.
    #[arg(long)]
    pub su2_two_j_max: Option<u32>,
    /// Largest summation index for the radial check.
    #[arg(long)]
    pub radial_n_max: Option<u64>,
    /// Principal cut-off of the assembled identity.
    #[arg(long)]
    pub n_max: Option<u32>,
    #[arg(long)]
    pub polar_order: Option<usize>,
    #[arg(long)]
    pub azimuthal: Option<usize>,
    /// Gauss-Laguerre order (exponential weight).
    #[arg(long)]
    pub radial_order: Option<usize>,
    /// Relative tolerance of the adaptive radial rule (stretched weights).
    #[arg(long)]
    pub adaptive_tol: Option<f64>,
    /// Comma-separated window half-widths for the finite-Γ check.
    #[arg(long, value_delimiter = ',')]
    pub gammas: Option<Vec<f64>>,
    #[arg(long)]
    pub su2_tol: Option<f64>,
    #[arg(long)]
    pub radial_tol: Option<f64>,
    #[arg(long)]
    pub full_tol: Option<f64>,
    /// JSON output path; stdout if absent.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MomentsArgs {
    #[command(flatten)]
    pub weight: WeightArgs,
    #[arg(long)]
    pub n_max: Option<u64>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

/// A failed run: message plus exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Domain(_)
            | Error::OutOfTable { .. }
            | Error::InsufficientOrder { .. }
            | Error::DensityUnavailable(_)
            | Error::Descriptor(_) => EXIT_USAGE,
            Error::Budget { .. } => EXIT_BUDGET,
            Error::Divergent(_) | Error::Numerical(_) | Error::Io(_) => EXIT_NUMERICAL,
        };
        let message = match &e {
            Error::Budget { required, budget } => format!(
                "refusing: grid needs a budget of {required} (current {budget}); raise --budget or COHERE_BUDGET"
            ),
            _ => e.to_string(),
        };
        Failure { code, message }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e).into()
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

/// Values from `--config`.
#[derive(Debug, Default)]
struct FileConfig(toml::Table);

impl FileConfig {
    fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(FileConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("config {}: {e}", path.display())))?;
        let table: toml::Table = text
            .parse()
            .map_err(|e| Failure::usage(format!("config {}: {e}", path.display())))?;
        Ok(FileConfig(table))
    }

    fn get<T: DeserializeOwned>(&self, key: &str) -> CliResult<Option<T>> {
        let snake = key.replace('-', "_");
        let Some(v) = self.0.get(key).or_else(|| self.0.get(&snake)) else {
            return Ok(None);
        };
        v.clone()
            .try_into()
            .map(Some)
            .map_err(|e| Failure::usage(format!("config key {key}: {e}")))
    }

    fn pick<T: DeserializeOwned>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }

    fn pick_or<T: DeserializeOwned>(&self, flag: Option<T>, key: &str, default: T) -> CliResult<T> {
        Ok(self.pick(flag, key)?.unwrap_or(default))
    }
}

fn family_from_str(s: &str) -> CliResult<FamilyArg> {
    FamilyArg::from_str(s, true).map_err(|_| Failure::usage(format!("unknown weight family {s:?}")))
}

fn resolve_weight(args: &WeightArgs, cfg: &FileConfig) -> CliResult<WeightSpec> {
    let family = match args.family {
        Some(f) => Some(f),
        None => cfg
            .get::<String>("family")?
            .map(|s| family_from_str(&s))
            .transpose()?,
    };
    let alpha = cfg.pick(args.alpha, "alpha")?;
    match (family, alpha) {
        (Some(FamilyArg::Exponential), None) => Ok(WeightSpec::Exponential),
        (Some(FamilyArg::Exponential), Some(_)) => Err(Failure::usage(
            "--alpha does not apply to the exponential family",
        )),
        (_, Some(a)) => Ok(WeightSpec::stretched(a)?),
        (_, None) => Err(Failure::usage(
            "weight not specified: give --alpha or --family exponential",
        )),
    }
}

fn positive(name: &str, x: f64) -> CliResult<f64> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(Failure::usage(format!(
            "{name} must be finite and > 0, got {x}"
        )))
    }
}

fn open_out<'a>(path: Option<&Path>, stdout: &'a mut dyn Write) -> CliResult<Box<dyn Write + 'a>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(stdout),
    })
}

fn load_state(path: &Path) -> CliResult<CoherentState> {
    Ok(StateDescriptor::read(path)?.build()?)
}

fn state_revival_time(state: &CoherentState) -> CliResult<f64> {
    Ok(revival_time(
        level_stats(state).mean_at(LevelIndex::Principal),
    )?)
}

fn cmd_solve(args: &SolveArgs, cfg: &FileConfig, out: &mut dyn Write) -> CliResult<()> {
    let weight = resolve_weight(&args.weight, cfg)?;
    let target = cfg
        .pick(args.target_mean, "target-mean")?
        .ok_or_else(|| Failure::usage("--target-mean is required"))?;
    let target = positive("target mean", target)?;
    let index = match args.index {
        Some(i) => i,
        None => match cfg.get::<String>("index")? {
            Some(s) => IndexArg::from_str(&s, true)
                .map_err(|_| Failure::usage(format!("unknown index {s:?}")))?,
            None => IndexArg::Principal,
        },
    };
    let index = match index {
        IndexArg::Principal => LevelIndex::Principal,
        IndexArg::Summation => LevelIndex::Summation,
    };
    let tol = cfg.pick_or(args.tol, "tol", 1e-12)?;
    let gamma = cfg.pick_or(args.gamma, "gamma", 0.0)?;
    let angular = match cfg.pick(args.eccentricity, "eccentricity")? {
        Some(e) => ellipse_to_angular(e)?,
        None => AngularParams::fiducial(),
    };
    let out_path: PathBuf = cfg.pick_or(args.out.clone(), "out", PathBuf::from("state.toml"))?;

    let ln_s = solve_scale(&weight, target, tol, index)?;
    let state = build_state_default(&weight, ln_s, gamma, angular)?;
    let stats = level_stats(&state);
    let mean = stats.mean_at(LevelIndex::Principal);
    let spread = stats.spread();
    let t_r = revival_time(mean)?;
    let ratio = revival_ratio(mean, spread)?;

    let mut desc = StateDescriptor::from_state(&state);
    desc.mean_principal = Some(mean);
    desc.spread = Some(spread);
    desc.revival_time = Some(t_r);
    desc.revival_ratio = Some(ratio);
    desc.write(&out_path)?;

    writeln!(out, "descriptor: {}", out_path.display())?;
    writeln!(out, "ln_s: {}", ln_s)?;
    writeln!(out, "s: {}", format_s(ln_s))?;
    writeln!(out, "mean_principal: {mean}")?;
    writeln!(out, "spread: {spread}")?;
    writeln!(
        out,
        "levels: {}..={}",
        state.coeffs().n_min + 1,
        state.coeffs().n_max + 1
    )?;
    writeln!(out, "kepler_period: {:e}", kepler_period(mean))?;
    writeln!(out, "revival_time: {t_r:e}")?;
    writeln!(out, "revival_ratio: {ratio}")?;
    if ratio >= 1.0 {
        writeln!(out, "warning: no clean revival (ratio >= 1)")?;
    }
    Ok(())
}

fn focus_time(label: &str, t_r: f64) -> CliResult<f64> {
    fractional_revival_times(t_r)?
        .into_iter()
        .find(|(l, _)| l.eq_ignore_ascii_case(label))
        .map(|(_, t)| t)
        .ok_or_else(|| {
            Failure::usage(format!(
                "unknown focus {label:?}; use 0, T_r/5, T_r/4, T_r/3, T_r/2 or T_r"
            ))
        })
}

fn cmd_autocorr(args: &AutocorrArgs, cfg: &FileConfig, out: &mut dyn Write) -> CliResult<()> {
    let samples = cfg.pick_or(args.samples, "samples", DEFAULT_AUTOCORR_SAMPLES)?;
    if samples == 0 {
        return Err(Failure::usage("samples must be >= 1"));
    }
    let state = load_state(&args.descriptor)?;
    let t_r = state_revival_time(&state)?;
    let (t0, t1) = match cfg.pick(args.focus.clone(), "focus")? {
        Some(label) => {
            let centre = focus_time(&label, t_r)?;
            let w = positive(
                "focus width",
                cfg.pick_or(args.focus_width, "focus-width", 0.02)?,
            )?;
            let half = w * if centre > 0.0 { centre } else { t_r };
            ((centre - half).max(0.0), centre + half)
        }
        None => (
            cfg.pick_or(args.t_start, "t-start", 0.0)?,
            cfg.pick_or(args.t_end, "t-end", 1.1 * t_r)?,
        ),
    };
    if !(t0.is_finite() && t1.is_finite() && t1 >= t0) {
        return Err(Failure::usage(format!("invalid time range [{t0}, {t1}]")));
    }
    let times: Vec<f64> = if samples == 1 {
        vec![t0]
    } else {
        (0..samples)
            .map(|i| t0 + (t1 - t0) * i as f64 / (samples - 1) as f64)
            .collect()
    };
    let values = autocorrelation_many(&state, &times);
    let mut w = open_out(cfg.pick(args.out.clone(), "out")?.as_deref(), out)?;
    write_autocorr_csv(&mut w, &times, &values)?;
    w.flush()?;
    Ok(())
}

fn file_stem_for(label: &str) -> String {
    match label {
        "0" => "t0".into(),
        "T_r" => "tr".into(),
        l => format!("tr_over_{}", l.trim_start_matches("T_r/")),
    }
}

fn cmd_grid(args: &GridArgs, cfg: &FileConfig, budget: u64, out: &mut dyn Write) -> CliResult<()> {
    let width = cfg.pick_or(args.width, "width", DEFAULT_GRID_WIDTH)?;
    let samples = cfg.pick_or(args.samples, "samples", DEFAULT_GRID_SAMPLES)?;
    if samples == 0 {
        return Err(Failure::usage("samples must be >= 2"));
    }
    let spec = GridSpec::new(width, samples)?;
    let format = match args.format {
        Some(f) => f,
        None => match cfg.get::<String>("format")? {
            Some(s) => GridFormat::from_str(&s, true)
                .map_err(|_| Failure::usage(format!("unknown format {s:?}")))?,
            None => GridFormat::Csv,
        },
    };
    let out_dir: PathBuf = cfg.pick_or(args.out_dir.clone(), "out-dir", PathBuf::from("."))?;
    let state = load_state(&args.descriptor)?;
    let named: Vec<(String, f64)> = match cfg.pick(args.times.clone(), "times")? {
        Some(ts) => {
            if ts.is_empty() {
                return Err(Failure::usage("empty time list"));
            }
            ts.iter()
                .enumerate()
                .map(|(i, &t)| (format!("t{i:03}"), t))
                .collect()
        }
        None => fractional_revival_times(state_revival_time(&state)?)?
            .into_iter()
            .map(|(l, t)| (file_stem_for(l), t))
            .collect(),
    };
    let times: Vec<f64> = named.iter().map(|(_, t)| *t).collect();
    let fields = fields_on_grid(&state, spec, &times, budget)?;
    std::fs::create_dir_all(&out_dir)?;
    for ((stem, t), field) in named.iter().zip(&fields) {
        if matches!(format, GridFormat::Csv | GridFormat::Both) {
            let p = out_dir.join(format!("grid_{stem}.csv"));
            let mut w = BufWriter::new(File::create(&p)?);
            write_grid_csv(&mut w, field)?;
            w.flush()?;
            writeln!(out, "{} t={t:e}", p.display())?;
        }
        if matches!(format, GridFormat::Bin | GridFormat::Both) {
            let p = out_dir.join(format!("grid_{stem}.bin"));
            let mut w = BufWriter::new(File::create(&p)?);
            write_grid_binary(&mut w, field)?;
            w.flush()?;
            writeln!(out, "{} t={t:e}", p.display())?;
        }
    }
    Ok(())
}

fn cmd_levels(args: &LevelsArgs, cfg: &FileConfig, out: &mut dyn Write) -> CliResult<()> {
    let state = load_state(&args.descriptor)?;
    let levels = level_distribution(&state);
    let mut w = open_out(cfg.pick(args.out.clone(), "out")?.as_deref(), out)?;
    write_levels_csv(&mut w, &levels)?;
    w.flush()?;
    Ok(())
}

fn cmd_verify(args: &VerifyArgs, cfg: &FileConfig, out: &mut dyn Write) -> CliResult<i32> {
    let weight = if args.weight.family.is_none()
        && args.weight.alpha.is_none()
        && cfg.get::<toml::Value>("family")?.is_none()
        && cfg.get::<toml::Value>("alpha")?.is_none()
    {
        WeightSpec::Exponential
    } else {
        resolve_weight(&args.weight, cfg)?
    };
    let defaults = VerifyConfig::default();
    let radial = match cfg.pick(args.radial_order, "radial-order")? {
        Some(order) if order > 0 => RadialRule::GaussLaguerre { order },
        Some(_) => return Err(Failure::usage("radial order must be >= 1")),
        None if weight == WeightSpec::Exponential => defaults.radial,
        None => RadialRule::Adaptive {
            rel_tol: positive(
                "adaptive tolerance",
                cfg.pick_or(args.adaptive_tol, "adaptive-tol", 1e-12)?,
            )?,
        },
    };
    let polar = cfg.pick(args.polar_order, "polar-order")?;
    let azimuthal = cfg.pick(args.azimuthal, "azimuthal")?;
    let sphere = match (polar, azimuthal) {
        (None, None) => None,
        (p, a) => {
            let p = p.or(a).unwrap_or(0);
            let a = a.unwrap_or(p);
            if p == 0 || a == 0 {
                return Err(Failure::usage("sphere orders must be >= 1"));
            }
            Some(SphereRule {
                polar_order: p,
                azimuthal: a,
            })
        }
    };
    let tol = |flag: Option<f64>, key: &str, d: f64| -> CliResult<f64> {
        positive(key, cfg.pick_or(flag, key, d)?)
    };
    let gammas = cfg.pick_or(args.gammas.clone(), "gammas", defaults.gammas.clone())?;
    for &g in &gammas {
        positive("gamma window", g)?;
    }
    let vc = VerifyConfig {
        weight,
        su2_two_j_max: cfg.pick_or(args.su2_two_j_max, "su2-two-j-max", defaults.su2_two_j_max)?,
        sphere,
        radial_n_max: cfg.pick_or(args.radial_n_max, "radial-n-max", defaults.radial_n_max)?,
        radial,
        full_n_max: cfg.pick_or(args.n_max, "n-max", defaults.full_n_max)?,
        gammas,
        su2_tol: tol(args.su2_tol, "su2-tol", defaults.su2_tol)?,
        radial_tol: tol(args.radial_tol, "radial-tol", defaults.radial_tol)?,
        full_tol: tol(args.full_tol, "full-tol", defaults.full_tol)?,
    };
    if vc.full_n_max == 0 {
        return Err(Failure::usage("n-max must be >= 1"));
    }
    let report = run_verification(&vc);
    let json = serde_json::to_string_pretty(&report).map_err(|e| Failure {
        code: EXIT_NUMERICAL,
        message: e.to_string(),
    })?;
    let mut w = open_out(cfg.pick(args.out.clone(), "out")?.as_deref(), out)?;
    writeln!(w, "{json}")?;
    w.flush()?;
    Ok(if report.passed {
        EXIT_OK
    } else if report.any_insufficient_order() {
        EXIT_USAGE
    } else {
        EXIT_NUMERICAL
    })
}

fn cmd_moments(args: &MomentsArgs, cfg: &FileConfig, out: &mut dyn Write) -> CliResult<()> {
    let weight = resolve_weight(&args.weight, cfg)?;
    let n_max = cfg.pick_or(args.n_max, "n-max", 20)?;
    let moments = (0..=n_max)
        .map(|n| Ok((n, log_moment(&weight, n)?)))
        .collect::<crate::Result<Vec<_>>>()?;
    let mut w = open_out(cfg.pick(args.out.clone(), "out")?.as_deref(), out)?;
    write_moments_csv(&mut w, &moments)?;
    w.flush()?;
    Ok(())
}

fn configure_threads(threads: Option<usize>) -> CliResult<()> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(Failure::usage("thread count must be >= 1"));
        }
        // A second configuration in the same process keeps the first pool.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    Ok(())
}

fn dispatch(cli: &Cli, stdout: &mut dyn Write) -> CliResult<i32> {
    let cfg = FileConfig::load(cli.config.as_deref())?;
    configure_threads(cfg.pick(cli.threads, "threads")?)?;
    let budget = cfg.pick_or(cli.budget, "budget", DEFAULT_GRID_BUDGET)?;
    match &cli.command {
        Command::Solve(a) => cmd_solve(a, &cfg, stdout).map(|_| EXIT_OK),
        Command::Autocorr(a) => cmd_autocorr(a, &cfg, stdout).map(|_| EXIT_OK),
        Command::Grid(a) => cmd_grid(a, &cfg, budget, stdout).map(|_| EXIT_OK),
        Command::Levels(a) => cmd_levels(a, &cfg, stdout).map(|_| EXIT_OK),
        Command::Verify(a) => cmd_verify(a, &cfg, stdout),
        Command::Weights(WeightsCommand::Moments(a)) => {
            cmd_moments(a, &cfg, stdout).map(|_| EXIT_OK)
        }
    }
}

/// Parse `args` and run; returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = write!(stderr, "{e}");
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(&cli, stdout) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
    }
}
