//! Command-line surface.
//!
//! Arguments are parsed by clap, then resolved into a [`RunConfig`] with every
//! default filled in. The resolved config is what actually runs, and it is
//! embedded as `resolved_config` in every JSON output; feeding that section
//! back through `--config` reproduces the run.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::baseline::{self, BaselineSpec, Tendency};
use crate::epimetrics::{self, EpiContext, TransmissionProfile};
use crate::error::{Error, Result};
use crate::fitter::{self, FitConfig, FitReport, Target};
use crate::gammadist::GammaParams;
use crate::simulator::{self, RemovalModel, Sampling, SimConfig};
use crate::smoother::KernelSmoother;
use crate::timeseries::{self, DatasetManifest, EpiDataset, TimeSeries, TimeUnit};

pub const EXIT_OK: i32 = 0;
pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Default quadrature step for the reproduction-number integral.
pub const DEFAULT_R0_STEP: f64 = 0.01;
/// Default grid step for `smooth` output, in the dataset's unit.
pub const DEFAULT_SMOOTH_STEP: f64 = 0.25;

#[derive(Debug, Parser)]
#[command(
    name = "epidelay",
    version,
    about = "Estimate recovery and death delay distributions from aggregate epidemic data"
)]
pub struct Cli {
    /// Output directory
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Worker threads for the grid search (default: available parallelism)
    #[arg(long, global = true)]
    pub workers: Option<usize>,

    /// Print the table of defaults and exit
    #[arg(long)]
    pub show_defaults: bool,

    /// Run a resolved config (e.g. the `resolved_config` section of a report)
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Option<CliCommand>,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Kernel-smoothed incidence on a uniform grid
    Smooth(SmoothArgs),
    /// Fit the recovery kernel
    FitRecovery(FitArgs),
    /// Fit the death kernel
    FitDeath(FitArgs),
    /// Compare a fitted kernel against constant-rate estimators
    BaselineCompare(BaselineArgs),
    /// Basic reproduction number and herd-immunity threshold
    Metrics(MetricsArgs),
    /// Integrate the classical or distributed model forward
    Simulate(SimulateArgs),
    /// Mean, median, mode and variance of a gamma kernel
    GammaSummary(GammaArgs),
}

fn parse_pair(s: &str) -> std::result::Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected two comma-separated numbers, got {s:?}"))?;
    let a = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let b = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((a, b))
}

#[derive(Debug, Args)]
pub struct SmoothArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub bandwidth_multiplier: f64,
    /// Output grid step
    #[arg(long)]
    pub dt: Option<f64>,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("p0_source").required(true).args(["p0", "estimate_p0"]))]
pub struct FitArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub p0: Option<f64>,
    /// Estimate p0 from cumulative (or summed new) recoveries and deaths
    #[arg(long)]
    pub estimate_p0: bool,
    #[arg(long)]
    pub shape_max: Option<f64>,
    #[arg(long)]
    pub scale_max: Option<f64>,
    #[arg(long)]
    pub shape_step: Option<f64>,
    #[arg(long)]
    pub scale_step: Option<f64>,
    /// Feasible mode window, `lo,hi`
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub mode_window: Option<(f64, f64)>,
    /// Quadrature step
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub bandwidth_multiplier: f64,
}

#[derive(Debug, Args)]
pub struct BaselineArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    /// Fit report produced by fit-recovery / fit-death
    #[arg(long, conflicts_with_all = ["shape", "scale"])]
    pub fit_report: Option<PathBuf>,
    #[arg(long, requires = "scale")]
    pub shape: Option<f64>,
    #[arg(long, requires = "shape")]
    pub scale: Option<f64>,
    /// Needed with --shape/--scale; taken from the report otherwise
    #[arg(long, value_parser = ["recovery", "death"])]
    pub target: Option<String>,
    #[arg(long)]
    pub p0: Option<f64>,
    /// Comma-separated subset of mean,median,mode
    #[arg(long, default_value = "mean,median,mode")]
    pub tendencies: String,
    /// Survey sample size for the three-sigma bands
    #[arg(long)]
    pub survey_n: Option<u32>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub bandwidth_multiplier: f64,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    /// Use this reproduction number directly
    #[arg(long, conflicts_with_all = ["recovery", "recovery_report"])]
    pub r0: Option<f64>,
    /// Recovery kernel `shape,scale`
    #[arg(long, value_parser = parse_pair)]
    pub recovery: Option<(f64, f64)>,
    /// Death kernel `shape,scale`
    #[arg(long, value_parser = parse_pair)]
    pub death: Option<(f64, f64)>,
    #[arg(long, conflicts_with = "recovery")]
    pub recovery_report: Option<PathBuf>,
    #[arg(long, conflicts_with = "death")]
    pub death_report: Option<PathBuf>,
    #[arg(long, conflicts_with = "beta_table")]
    pub beta: Option<f64>,
    /// CSV with columns eta,beta
    #[arg(long)]
    pub beta_table: Option<PathBuf>,
    #[arg(long)]
    pub s0: Option<f64>,
    #[arg(long)]
    pub population: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub tau: f64,
    #[arg(long)]
    pub p0: Option<f64>,
    #[arg(long)]
    pub dt: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// JSON simulation config
    #[arg(long)]
    pub sim_config: PathBuf,
    /// Also write a fit-ready dataset with this sampling
    #[arg(long, value_parser = ["daily", "weekly"])]
    pub export: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 0.0)]
    pub noise_scale: f64,
    /// Override the config's integration step
    #[arg(long)]
    pub dt: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GammaArgs {
    #[arg(long)]
    pub shape: f64,
    #[arg(long)]
    pub scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothCommand {
    pub manifest: PathBuf,
    pub bandwidth_multiplier: f64,
    pub grid_step: f64,
    pub t_end: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitCommand {
    pub manifest: PathBuf,
    pub estimate_p0: bool,
    pub bandwidth_multiplier: f64,
    pub fit: FitConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaselineCommand {
    pub manifest: PathBuf,
    pub target: Target,
    pub kernel: GammaParams,
    pub survival_probability: f64,
    pub tendencies: Vec<Tendency>,
    pub survey_sample_size: Option<u32>,
    pub quadrature_step: f64,
    pub bandwidth_multiplier: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsCommand {
    /// Given directly; skips the integral.
    pub r0: Option<f64>,
    pub recovery: Option<GammaParams>,
    pub death: Option<GammaParams>,
    pub transmission: Option<TransmissionProfile>,
    pub context: Option<EpiContext>,
    pub survival_probability: f64,
    pub quadrature_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateCommand {
    pub sim: SimConfig,
    pub export: Option<Sampling>,
    pub seed: Option<u64>,
    pub noise_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum CommandConfig {
    Smooth(SmoothCommand),
    FitRecovery(FitCommand),
    FitDeath(FitCommand),
    BaselineCompare(BaselineCommand),
    Metrics(MetricsCommand),
    Simulate(SimulateCommand),
    GammaSummary(GammaParams),
}

/// Fully resolved invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    /// `None` uses every available core.
    pub workers: Option<usize>,
    #[serde(flatten)]
    pub command: CommandConfig,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub field: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

fn diag(field: &str, message: impl Into<String>) -> Diagnostic {
    Diagnostic {
        field: field.to_string(),
        message: message.into(),
    }
}

/// Everything that would stop `run` from starting. Empty means go.
pub fn validate_config(config: &RunConfig) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    if config.workers == Some(0) {
        out.push(diag("workers", "must be at least 1"));
    }
    if let Some(parent) = existing_ancestor(&config.output_dir) {
        if fs::metadata(&parent)
            .map(|m| m.permissions().readonly())
            .unwrap_or(true)
        {
            out.push(diag(
                "output_dir",
                format!("{} is not writable", parent.display()),
            ));
        }
    }
    let need_file = |out: &mut Vec<Diagnostic>, field: &str, p: &Path| {
        if !p.is_file() {
            out.push(diag(field, format!("{} does not exist", p.display())));
        }
    };

    match &config.command {
        CommandConfig::Smooth(c) => {
            need_file(&mut out, "manifest", &c.manifest);
            if !(c.bandwidth_multiplier > 0.0) {
                out.push(diag("bandwidth_multiplier", "must be positive"));
            }
            if !(c.grid_step > 0.0) {
                out.push(diag("grid_step", "must be positive"));
            }
        }
        CommandConfig::FitRecovery(c) | CommandConfig::FitDeath(c) => {
            need_file(&mut out, "manifest", &c.manifest);
            if !(c.bandwidth_multiplier > 0.0) {
                out.push(diag("bandwidth_multiplier", "must be positive"));
            }
            out.extend(c.fit.diagnostics().into_iter().map(|m| diag("fit", m)));
        }
        CommandConfig::BaselineCompare(c) => {
            need_file(&mut out, "manifest", &c.manifest);
            if !(0.0..=1.0).contains(&c.survival_probability) {
                out.push(diag(
                    "survival_probability",
                    "survival_probability out of [0,1]",
                ));
            }
            if GammaParams::new(c.kernel.shape, c.kernel.scale).is_err() {
                out.push(diag("kernel", "shape and scale must be positive"));
            }
            if c.tendencies.is_empty() {
                out.push(diag("tendencies", "at least one tendency required"));
            }
            if !(c.quadrature_step > 0.0) {
                out.push(diag("quadrature_step", "must be positive"));
            }
        }
        CommandConfig::Metrics(c) => {
            if !(0.0..=1.0).contains(&c.survival_probability) {
                out.push(diag(
                    "survival_probability",
                    "survival_probability out of [0,1]",
                ));
            }
            match c.r0 {
                Some(r0) if !(r0 > 0.0) => out.push(diag("r0", "must be positive")),
                Some(_) => {}
                None => {
                    if c.recovery.is_none() {
                        out.push(diag("recovery", "recovery kernel or r0 required"));
                    }
                    if c.transmission.is_none() {
                        out.push(diag("transmission", "beta or beta table required"));
                    }
                    match &c.context {
                        None => out.push(diag("context", "s0 and population required")),
                        Some(ctx) => {
                            if let Err(e) = EpiContext::new(
                                ctx.susceptible_initial,
                                ctx.population,
                                ctx.latent_period,
                            ) {
                                out.push(diag("context", e.to_string()));
                            }
                        }
                    }
                    if !(c.quadrature_step > 0.0) {
                        out.push(diag("quadrature_step", "must be positive"));
                    }
                }
            }
        }
        CommandConfig::Simulate(c) => {
            out.extend(c.sim.diagnostics().into_iter().map(|m| diag("sim", m)));
            if !(c.noise_scale >= 0.0) {
                out.push(diag("noise_scale", "must be non-negative"));
            }
        }
        CommandConfig::GammaSummary(p) => {
            if GammaParams::new(p.shape, p.scale).is_err() {
                out.push(diag("gamma", "shape and scale must be positive"));
            }
        }
    }
    out
}

fn existing_ancestor(path: &Path) -> Option<PathBuf> {
    let mut cur = Some(path);
    while let Some(p) = cur {
        let candidate = if p.as_os_str().is_empty() {
            Path::new(".")
        } else {
            p
        };
        if candidate.exists() {
            return Some(candidate.to_path_buf());
        }
        cur = p.parent();
    }
    None
}

fn manifest_unit(path: &Path) -> Result<TimeUnit> {
    Ok(DatasetManifest::read(path)?.time_unit)
}

fn estimate_p0(ds: &EpiDataset) -> Result<f64> {
    let pick = |cum: &Option<TimeSeries>, new: &Option<TimeSeries>| {
        cum.as_ref()
            .map(TimeSeries::last_value)
            .or_else(|| new.as_ref().map(TimeSeries::total))
    };
    let recovered = pick(&ds.cumulative_recoveries, &ds.new_recoveries)
        .ok_or_else(|| Error::invalid("estimating p0 needs recovery counts"))?;
    let deaths = pick(&ds.cumulative_deaths, &ds.new_deaths)
        .ok_or_else(|| Error::invalid("estimating p0 needs death counts"))?;
    epimetrics::estimate_survival_probability(recovered, deaths)
}

/// Reads a fit report written by `fit-recovery` / `fit-death`.
pub fn read_fit_report(path: &Path) -> Result<FitReport> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}

fn target_from(s: &str) -> Target {
    if s == "death" {
        Target::Death
    } else {
        Target::Recovery
    }
}

fn resolve_fit(args: FitArgs, target: Target) -> Result<FitCommand> {
    let unit = manifest_unit(&args.manifest)?;
    let p0 = match args.p0 {
        Some(p0) => p0,
        None => estimate_p0(&timeseries::load_dataset(&args.manifest)?)?,
    };
    let mut fit = FitConfig::defaults(target, unit, p0);
    if let Some(v) = args.shape_max {
        fit.shape_max = v;
    }
    if let Some(v) = args.scale_max {
        fit.scale_max = v;
    }
    if let Some(v) = args.shape_step {
        fit.shape_step = v;
    }
    if let Some(v) = args.scale_step {
        fit.scale_step = v;
    }
    if let Some((lo, hi)) = args.mode_window {
        fit.mode_lower = lo;
        fit.mode_upper = hi;
    }
    if let Some(v) = args.dt {
        fit.quadrature_step = v;
    }
    Ok(FitCommand {
        manifest: args.manifest,
        estimate_p0: args.p0.is_none(),
        bandwidth_multiplier: args.bandwidth_multiplier,
        fit,
    })
}

fn resolve_baseline(args: BaselineArgs) -> Result<BaselineCommand> {
    let unit = manifest_unit(&args.manifest)?;
    let tendencies = args
        .tendencies
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse())
        .collect::<Result<Vec<Tendency>>>()?;

    let (target, kernel, report_p0) = match (&args.fit_report, args.shape, args.scale) {
        (Some(path), _, _) => {
            let report = read_fit_report(path)?;
            let r = report.result;
            (r.target, r.optimal, Some(r.survival_probability))
        }
        (None, Some(shape), Some(scale)) => {
            let target = target_from(args.target.as_deref().unwrap_or("recovery"));
            (target, GammaParams { shape, scale }, None)
        }
        _ => {
            return Err(Error::invalid(
                "baseline-compare needs --fit-report or --shape/--scale",
            ))
        }
    };
    let survival_probability = args
        .p0
        .or(report_p0)
        .ok_or_else(|| Error::invalid("baseline-compare needs --p0 with explicit parameters"))?;
    let survey_sample_size = args.survey_n.or(Some(match target {
        Target::Recovery => baseline::DEFAULT_SURVEY_SIZE_RECOVERY,
        Target::Death => baseline::DEFAULT_SURVEY_SIZE_DEATH,
    }));
    let quadrature_step = args
        .dt
        .unwrap_or_else(|| FitConfig::defaults(target, unit, survival_probability).quadrature_step);
    Ok(BaselineCommand {
        manifest: args.manifest,
        target,
        kernel,
        survival_probability,
        tendencies,
        survey_sample_size,
        quadrature_step,
        bandwidth_multiplier: args.bandwidth_multiplier,
    })
}

fn resolve_metrics(args: MetricsArgs) -> Result<MetricsCommand> {
    let mut p0 = args.p0;
    let mut kernel_from =
        |pair: Option<(f64, f64)>, report: &Option<PathBuf>| -> Result<Option<GammaParams>> {
            if let Some((shape, scale)) = pair {
                return Ok(Some(GammaParams { shape, scale }));
            }
            match report {
                Some(path) => {
                    let r = read_fit_report(path)?.result;
                    p0 = p0.or(Some(r.survival_probability));
                    Ok(Some(r.optimal))
                }
                None => Ok(None),
            }
        };
    let recovery = kernel_from(args.recovery, &args.recovery_report)?;
    let death = kernel_from(args.death, &args.death_report)?;

    let transmission = match (args.beta, &args.beta_table) {
        (Some(b), _) => Some(TransmissionProfile::Constant { value: b }),
        (None, Some(path)) => Some(TransmissionProfile::from_csv(path)?),
        (None, None) => None,
    };
    let context = match (args.s0, args.population) {
        (Some(s0), Some(n)) => Some(EpiContext {
            susceptible_initial: s0,
            population: n,
            latent_period: args.tau,
        }),
        (None, Some(n)) => Some(EpiContext {
            susceptible_initial: n,
            population: n,
            latent_period: args.tau,
        }),
        _ => None,
    };
    Ok(MetricsCommand {
        r0: args.r0,
        recovery,
        // a single kernel stands in for both outcomes
        death: death.or(recovery),
        transmission,
        context,
        survival_probability: p0.unwrap_or(1.0),
        quadrature_step: args.dt.unwrap_or(DEFAULT_R0_STEP),
    })
}

fn resolve_simulate(args: SimulateArgs) -> Result<SimulateCommand> {
    let text = fs::read_to_string(&args.sim_config).map_err(|source| Error::Io {
        path: args.sim_config.clone(),
        source,
    })?;
    let mut sim: SimConfig = serde_json::from_str(&text)?;
    if let Some(dt) = args.dt {
        sim.step = dt;
    }
    let export = args.export.as_deref().map(|s| match s {
        "weekly" => Sampling::Weekly,
        _ => Sampling::Daily,
    });
    Ok(SimulateCommand {
        sim,
        export,
        seed: args.seed,
        noise_scale: args.noise_scale,
    })
}

/// Fills in every default. Reads manifests, fit reports and config files as
/// needed.
pub fn resolve(cli: Cli) -> Result<Option<RunConfig>> {
    if let Some(path) = &cli.config {
        if cli.command.is_some() {
            return Err(Error::invalid(
                "--config replays a resolved run and takes no subcommand",
            ));
        }
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        let value: serde_json::Value = serde_json::from_str(&text)?;
        // accept either a bare config or a full report carrying one
        let section = value.get("resolved_config").cloned().unwrap_or(value);
        return Ok(Some(serde_json::from_value(section)?));
    }
    let Some(command) = cli.command else {
        return Ok(None);
    };
    let command = match command {
        CliCommand::Smooth(a) => {
            let ds = timeseries::load_dataset(&a.manifest)?;
            let unit = ds.time_unit;
            CommandConfig::Smooth(SmoothCommand {
                grid_step: a.dt.unwrap_or(match unit {
                    TimeUnit::Days => DEFAULT_SMOOTH_STEP,
                    TimeUnit::Weeks => 0.05,
                }),
                t_end: ds.window().1,
                manifest: a.manifest,
                bandwidth_multiplier: a.bandwidth_multiplier,
            })
        }
        CliCommand::FitRecovery(a) => CommandConfig::FitRecovery(resolve_fit(a, Target::Recovery)?),
        CliCommand::FitDeath(a) => CommandConfig::FitDeath(resolve_fit(a, Target::Death)?),
        CliCommand::BaselineCompare(a) => CommandConfig::BaselineCompare(resolve_baseline(a)?),
        CliCommand::Metrics(a) => CommandConfig::Metrics(resolve_metrics(a)?),
        CliCommand::Simulate(a) => CommandConfig::Simulate(resolve_simulate(a)?),
        CliCommand::GammaSummary(a) => CommandConfig::GammaSummary(GammaParams {
            shape: a.shape,
            scale: a.scale,
        }),
    };
    Ok(Some(RunConfig {
        output_dir: cli.out.unwrap_or_else(|| PathBuf::from(".")),
        workers: cli.workers,
        command,
    }))
}

/// Files written and text meant for stdout.
#[derive(Debug, Default)]
pub struct RunOutcome {
    pub files: Vec<PathBuf>,
    pub stdout: Option<String>,
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    resolved_config: &'a RunConfig,
    #[serde(flatten)]
    body: &'a T,
}

struct Writer<'a> {
    config: &'a RunConfig,
    outcome: RunOutcome,
}

impl<'a> Writer<'a> {
    fn new(config: &'a RunConfig) -> Result<Self> {
        fs::create_dir_all(&config.output_dir).map_err(|source| Error::Io {
            path: config.output_dir.clone(),
            source,
        })?;
        Ok(Self {
            config,
            outcome: RunOutcome::default(),
        })
    }

    fn text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.config.output_dir.join(name);
        fs::write(&path, text).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        self.outcome.files.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, body: &T) -> Result<String> {
        let doc = Document {
            resolved_config: self.config,
            body,
        };
        let text = serde_json::to_string_pretty(&doc)? + "\n";
        self.text(name, &text)?;
        Ok(text)
    }
}

fn smoother_for(ds: &EpiDataset, multiplier: f64) -> Result<KernelSmoother> {
    KernelSmoother::new(ds.incidence.clone(), multiplier)
}

fn observed_for(ds: &EpiDataset, target: Target) -> Result<TimeSeries> {
    ds.series(target.label())
        .cloned()
        .ok_or_else(|| Error::invalid(format!("dataset has no {} series", target.label())))
}

fn pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| Error::invalid(format!("worker pool: {e}")))
}

#[derive(Serialize)]
struct SmoothBody {
    bandwidth: f64,
    observations: usize,
    grid_points: usize,
}

#[derive(Serialize)]
struct MetricsBody {
    r0: f64,
    hit: f64,
}

#[derive(Serialize)]
struct SimulateBody<'a> {
    steps: usize,
    conservation_error: f64,
    final_state: [f64; 4],
    warnings: &'a [String],
    #[serde(skip_serializing_if = "Option::is_none")]
    exported_manifest: Option<PathBuf>,
}

#[derive(Serialize)]
struct GammaBody {
    shape: f64,
    scale: f64,
    mean: f64,
    median: f64,
    mode: Option<f64>,
    variance: f64,
}

/// Executes a resolved config.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    let mut w = Writer::new(config)?;
    match &config.command {
        CommandConfig::Smooth(c) => {
            let ds = timeseries::load_dataset(&c.manifest)?;
            let s = smoother_for(&ds, c.bandwidth_multiplier)?;
            let n = (c.t_end / c.grid_step + 1e-9).floor() as usize;
            let grid: Vec<f64> = (0..=n).map(|k| k as f64 * c.grid_step).collect();
            let values = s.evaluate_grid(&grid);
            let mut csv = String::from("t,j_hat\n");
            for (t, v) in grid.iter().zip(&values) {
                csv.push_str(&format!("{t},{v}\n"));
            }
            w.text("smooth.csv", &csv)?;
            w.json(
                "smooth.json",
                &SmoothBody {
                    bandwidth: s.bandwidth(),
                    observations: ds.incidence.len(),
                    grid_points: grid.len(),
                },
            )?;
        }
        CommandConfig::FitRecovery(c) | CommandConfig::FitDeath(c) => {
            let ds = timeseries::load_dataset(&c.manifest)?;
            let s = smoother_for(&ds, c.bandwidth_multiplier)?;
            let observed = observed_for(&ds, c.fit.target)?;
            let result = pool(config.workers)?.install(|| fitter::fit(&s, &observed, &c.fit))?;
            let report = fitter::fit_report(&result, &observed);
            let stem = match c.fit.target {
                Target::Recovery => "fit_recovery",
                Target::Death => "fit_death",
            };
            w.json(&format!("{stem}.json"), &report)?;
            w.text(&format!("{stem}.csv"), &report.to_csv_string())?;
        }
        CommandConfig::BaselineCompare(c) => {
            let ds = timeseries::load_dataset(&c.manifest)?;
            let active = ds.active.clone().ok_or_else(|| {
                Error::invalid("baseline comparison needs an active-cases series")
            })?;
            let observed = observed_for(&ds, c.target)?;
            let s = smoother_for(&ds, c.bandwidth_multiplier)?;
            let fit = fitter::evaluate_kernel(
                &s,
                &observed,
                &c.kernel,
                c.target,
                c.survival_probability,
                c.quadrature_step,
            )?;
            let specs: Vec<BaselineSpec> = c
                .tendencies
                .iter()
                .map(|&tendency| BaselineSpec {
                    tendency,
                    target: c.target,
                    survival_probability: c.survival_probability,
                    gamma: c.kernel,
                    survey_sample_size: c.survey_sample_size,
                })
                .collect();
            let report = baseline::compare(&fit, &specs, &active, &observed)?;
            w.json("comparison.json", &report)?;

            let pairs = baseline::common_stamps(&active, &observed);
            let mut csv = String::from("t,observed,predicted\n");
            for &(_, j) in &pairs {
                csv.push_str(&format!(
                    "{},{},{}\n",
                    observed.times()[j],
                    observed.values()[j],
                    fit.predicted.values()[j]
                ));
            }
            w.text("distributed.csv", &csv)?;
            for outcome in &report.baselines {
                let mut csv = String::from("t,classical,lower,upper\n");
                for (k, (t, v)) in outcome.curve.iter().enumerate() {
                    let (lo, hi) = match &outcome.band {
                        Some((lo, hi)) => (lo.values()[k].to_string(), hi.values()[k].to_string()),
                        None => (String::new(), String::new()),
                    };
                    csv.push_str(&format!("{t},{v},{lo},{hi}\n"));
                }
                w.text(&format!("baseline_{}.csv", outcome.tendency.name()), &csv)?;
            }
        }
        CommandConfig::Metrics(c) => {
            let r0 = match c.r0 {
                Some(r0) => r0,
                None => {
                    let missing =
                        || Error::invalid("metrics needs r0 or kernels, beta and context");
                    let recovery = c.recovery.ok_or_else(missing)?;
                    let death = c.death.unwrap_or(recovery);
                    let ctx = c.context.ok_or_else(missing)?;
                    let profile = c.transmission.as_ref().ok_or_else(missing)?;
                    epimetrics::basic_reproduction_number(
                        &ctx,
                        profile,
                        &GammaParams::new(recovery.shape, recovery.scale)?,
                        &GammaParams::new(death.shape, death.scale)?,
                        c.survival_probability,
                        c.quadrature_step,
                    )?
                }
            };
            let body = MetricsBody {
                r0,
                hit: epimetrics::herd_immunity_threshold(r0)?,
            };
            let text = w.json("metrics.json", &body)?;
            w.outcome.stdout = Some(text);
        }
        CommandConfig::Simulate(c) => {
            let state = match c.sim.removal {
                RemovalModel::Classical { .. } => simulator::simulate_classical(&c.sim)?,
                RemovalModel::Distributed { .. } => simulator::simulate_distributed(&c.sim)?,
            };
            w.text("trajectory.csv", &state.to_csv_string())?;
            let exported_manifest = match c.export {
                Some(sampling) => {
                    let ds = simulator::export_dataset(&state, sampling, c.seed, c.noise_scale)?;
                    let path = timeseries::write_dataset(&ds, &config.output_dir.join("dataset"))?;
                    w.outcome.files.push(path.clone());
                    Some(path)
                }
                None => None,
            };
            let last = state.len() - 1;
            w.json(
                "simulate.json",
                &SimulateBody {
                    steps: last,
                    conservation_error: state.conservation_error(),
                    final_state: [
                        state.susceptible[last],
                        state.infected[last],
                        state.recovered[last],
                        state.dead[last],
                    ],
                    warnings: &state.warnings,
                    exported_manifest,
                },
            )?;
        }
        CommandConfig::GammaSummary(p) => {
            let p = GammaParams::new(p.shape, p.scale)?;
            let body = GammaBody {
                shape: p.shape,
                scale: p.scale,
                mean: p.mean(),
                median: p.median(),
                mode: p.mode().ok(),
                variance: p.variance(),
            };
            let text = w.json("gamma_summary.json", &body)?;
            w.outcome.stdout = Some(text);
        }
    }
    Ok(w.outcome)
}

/// Every default the tool applies, as printed by `--show-defaults`.
pub fn defaults_table() -> String {
    let days = FitConfig::defaults(Target::Recovery, TimeUnit::Days, f64::NAN);
    let weeks = FitConfig::defaults(Target::Recovery, TimeUnit::Weeks, f64::NAN);
    let rows: Vec<(&str, String, String)> = vec![
        (
            "shape_max",
            days.shape_max.to_string(),
            weeks.shape_max.to_string(),
        ),
        (
            "scale_max",
            days.scale_max.to_string(),
            weeks.scale_max.to_string(),
        ),
        (
            "shape_step",
            days.shape_step.to_string(),
            weeks.shape_step.to_string(),
        ),
        (
            "scale_step",
            days.scale_step.to_string(),
            weeks.scale_step.to_string(),
        ),
        (
            "mode_window",
            format!("{},{}", days.mode_lower, days.mode_upper),
            format!("{},{}", weeks.mode_lower, weeks.mode_upper),
        ),
        (
            "quadrature_step",
            days.quadrature_step.to_string(),
            weeks.quadrature_step.to_string(),
        ),
        (
            "smooth_grid_step",
            DEFAULT_SMOOTH_STEP.to_string(),
            "0.05".into(),
        ),
        (
            "bandwidth",
            "n^(-1/5) x 1.0".into(),
            "n^(-1/5) x 1.0".into(),
        ),
        (
            "r0_quadrature_step",
            DEFAULT_R0_STEP.to_string(),
            DEFAULT_R0_STEP.to_string(),
        ),
        ("tail_mass", "1e-12".into(), "1e-12".into()),
        (
            "survey_n (recovery, death)",
            format!(
                "{},{}",
                baseline::DEFAULT_SURVEY_SIZE_RECOVERY,
                baseline::DEFAULT_SURVEY_SIZE_DEATH
            ),
            "same".into(),
        ),
        ("latent_period", "0".into(), "0".into()),
        ("simulation_step", "0.1".into(), "0.1".into()),
        ("workers", "available parallelism".into(), "same".into()),
    ];
    let mut out = format!("{:<28}{:<24}{}\n", "parameter", "daily data", "weekly data");
    for (name, d, w) in rows {
        out.push_str(&format!("{name:<28}{d:<24}{w}\n"));
    }
    out
}

/// Entry point shared by the binary and tests. Returns the exit code.
pub fn execute<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    if cli.show_defaults {
        print!("{}", defaults_table());
        return EXIT_OK;
    }
    let config = match resolve(cli) {
        Ok(Some(config)) => config,
        Ok(None) => {
            eprintln!("error: no command given\n\nUsage: epidelay [OPTIONS] <COMMAND>\nTry 'epidelay --help'.");
            return EXIT_USAGE;
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.class());
            return EXIT_RUNTIME;
        }
    };
    let diagnostics = validate_config(&config);
    if !diagnostics.is_empty() {
        for d in &diagnostics {
            eprintln!("error[validation]: {d}");
        }
        return EXIT_RUNTIME;
    }
    match run(&config) {
        Ok(outcome) => {
            if let Some(text) = outcome.stdout {
                print!("{text}");
            }
            for f in &outcome.files {
                eprintln!("wrote {}", f.display());
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", e.class());
            EXIT_RUNTIME
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gamma_config(shape: f64) -> RunConfig {
        RunConfig {
            output_dir: std::env::temp_dir(),
            workers: None,
            command: CommandConfig::GammaSummary(GammaParams { shape, scale: 1.0 }),
        }
    }

    #[test]
    fn valid_config_has_no_diagnostics() {
        assert!(validate_config(&gamma_config(2.0)).is_empty());
        assert_eq!(validate_config(&gamma_config(-1.0)).len(), 1);
    }

    #[test]
    fn fit_diagnostics_name_fields() {
        let mut fit = FitConfig::defaults(Target::Recovery, TimeUnit::Days, 1.3);
        fit.mode_lower = 50.0;
        let cfg = RunConfig {
            output_dir: std::env::temp_dir(),
            workers: Some(0),
            command: CommandConfig::FitRecovery(FitCommand {
                manifest: PathBuf::from("/definitely/not/here.json"),
                estimate_p0: false,
                bandwidth_multiplier: 1.0,
                fit,
            }),
        };
        let msgs: Vec<String> = validate_config(&cfg)
            .iter()
            .map(ToString::to_string)
            .collect();
        assert!(msgs
            .iter()
            .any(|m| m.contains("survival_probability out of [0,1]")));
        assert!(msgs.iter().any(|m| m.contains("mode_lower")));
        assert!(msgs.iter().any(|m| m.starts_with("manifest:")));
        assert!(msgs.iter().any(|m| m.starts_with("workers:")));
    }

    #[test]
    fn run_config_round_trips() {
        let cfg = RunConfig {
            output_dir: PathBuf::from("out"),
            workers: Some(3),
            command: CommandConfig::FitDeath(FitCommand {
                manifest: PathBuf::from("m.json"),
                estimate_p0: true,
                bandwidth_multiplier: 2.0,
                fit: FitConfig::defaults(Target::Death, TimeUnit::Weeks, 0.9),
            }),
        };
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains("\"command\":\"fit-death\""));
        let back: RunConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }

    #[test]
    fn pair_parser() {
        assert_eq!(parse_pair("3,40").unwrap(), (3.0, 40.0));
        assert!(parse_pair("3").is_err());
        assert!(parse_pair("a,b").is_err());
    }

    #[test]
    fn defaults_table_lists_everything() {
        let t = defaults_table();
        for key in [
            "shape_step",
            "mode_window",
            "quadrature_step",
            "tail_mass",
            "workers",
        ] {
            assert!(t.contains(key), "{key}");
        }
    }
}
