//! Command-line front end for the `dyndisc` bounds engine.
//!
//! Argument parsing, the sweep driver and the verification suite live here so
//! they can be exercised without spawning the binary.

use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use dyndisc::bounds::{copies_threshold, cpf_disjoint_bound, cpf_kmax_bound, klnn_cpf_bound, ucpf_total_error};
use dyndisc::channels::{classical_fidelity, unique_set, ChannelModel, FidelitySource, UniqueFidelitySet2};
use dyndisc::gaussian::ProbeEnergy;
use dyndisc::oracle::{
    additive_validation_grid, brute_total_error, loss_validation_grid, validate_closed_forms, verify_degeneracy,
    DegeneracyProtocol,
};
use dyndisc::patterns::{is_valid_k, klnn_distribution};
use dyndisc::protocol::{Neighbourhood, Resource, Scenario, ScenarioReport, Task};

pub const THREADS_ENV: &str = "DYNDISC_THREADS";
pub const CSV_HEADER: &str = "axis1,axis2,p_lower,p_upper,p_cl_lower,delta_adv,M,Mbar";

/// A failure that ends the process.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    /// Bad arguments; exit status 2.
    Usage(String),
    /// Numerical, I/O or verification failure; exit status 1.
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 1,
        }
    }

    /// The single stderr line for this error.
    pub fn line(&self) -> String {
        let msg = match self {
            CliError::Usage(m) | CliError::Failure(m) => m,
        };
        format!("error: {}", msg.split_whitespace().collect::<Vec<_>>().join(" "))
    }
}

impl From<dyndisc::Error> for CliError {
    fn from(e: dyndisc::Error) -> Self {
        use dyndisc::Error::*;
        match e {
            InvalidArgument(_) | ResourceLimit(_) | UnsupportedDomain(_) | NoThreshold(_) => {
                CliError::Usage(e.to_string())
            }
            Numerical(_) | ClosedFormInvalid { .. } => CliError::Failure(e.to_string()),
        }
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T, CliError> {
    Err(CliError::Usage(msg.into()))
}

fn failure(msg: impl std::fmt::Display) -> CliError {
    CliError::Failure(msg.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "dyndisc", version, about = "Error bounds for discriminating patterns of bosonic Gaussian channels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Bounds for a single scenario.
    Bound(BoundArgs),
    /// Advantage map over one or two swept parameters, written as CSV.
    Sweep(SweepArgs),
    /// Oracle-versus-analytic verification suite.
    Verify(VerifyArgs),
    /// Average channel use above which the single-target advantage is guaranteed.
    Threshold(ThresholdArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelKind {
    /// Pure-loss channels, parameters --eta-b and --eta-t.
    Loss,
    /// Additive-noise channels, parameters --nu-b and --nu-t.
    Additive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskKind {
    Cpf,
    Ucpf,
    Bcpf,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VerifyLevel {
    Quick,
    Full,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum)]
    pub model: ModelKind,
    #[arg(long)]
    pub eta_b: Option<f64>,
    #[arg(long)]
    pub eta_t: Option<f64>,
    #[arg(long)]
    pub nu_b: Option<f64>,
    #[arg(long)]
    pub nu_t: Option<f64>,
    /// Mean photon number per signal mode.
    #[arg(long)]
    pub ns: Option<f64>,
    #[arg(long, default_value = "closed-form", value_parser = parse_source)]
    pub source: FidelitySource,
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct ResourceArgs {
    /// Copies of the quantum probe.
    #[arg(long)]
    pub copies: Option<f64>,
    /// Average channel use; the quantum probe gets the matching number of copies.
    #[arg(long)]
    pub mbar: Option<f64>,
    /// Total photons per channel, so that the average channel use is this over N_S.
    #[arg(long)]
    pub photons_per_channel: Option<f64>,
}

impl ResourceArgs {
    pub fn resource(&self) -> Resource {
        match (self.copies, self.mbar, self.photons_per_channel) {
            (Some(c), _, _) => Resource::Copies(c),
            (_, Some(b), _) => Resource::AverageUse(b),
            (_, _, Some(p)) => Resource::PhotonsPerChannel(p),
            _ => unreachable!("clap requires one resource flag"),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ProblemArgs {
    #[arg(long, value_enum, default_value = "cpf")]
    pub task: TaskKind,
    /// Target count for --task ucpf.
    #[arg(long)]
    pub u: Option<usize>,
    /// Comma-separated target counts for --task bcpf.
    #[arg(long, value_delimiter = ',')]
    pub targets: Vec<usize>,
    /// Number of channels.
    #[arg(long)]
    pub m: usize,
    /// Neighbourhood width, or "max" for m-1.
    #[arg(long, default_value = "max", value_parser = parse_k)]
    pub k: Neighbourhood,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub resource: ResourceArgs,
}

#[derive(Debug, Clone, Args)]
pub struct BoundArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long, value_enum, default_value = "json")]
    pub format: OutputFormat,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Swept parameter as NAME:MIN:MAX:STEPS, NAME one of eta_t, nu_t, eta_b, nu_b, n_s. Give once or twice.
    #[arg(long = "axis", required = true, value_parser = parse_axis)]
    pub axes: Vec<Axis>,
    /// CSV destination; standard output when absent.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[arg(value_enum, default_value = "quick")]
    pub level: VerifyLevel,
    /// Perturbs the analytic fidelities so that the suite must fail.
    #[arg(long, hide = true)]
    pub corrupt_fidelity: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ThresholdArgs {
    #[arg(long)]
    pub m: usize,
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, value_enum, default_value = "json")]
    pub format: OutputFormat,
}

fn parse_source(s: &str) -> Result<FidelitySource, String> {
    FidelitySource::from_str(s).map_err(|e| e.to_string())
}

fn parse_k(s: &str) -> Result<Neighbourhood, String> {
    if s == "max" {
        return Ok(Neighbourhood::Max);
    }
    s.parse::<usize>()
        .map(Neighbourhood::Width)
        .map_err(|_| format!("expected a positive integer or \"max\", got '{s}'"))
}

/// A swept model parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Param {
    EtaB,
    EtaT,
    NuB,
    NuT,
    Ns,
}

impl FromStr for Param {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.replace('-', "_").as_str() {
            "eta_b" => Ok(Param::EtaB),
            "eta_t" => Ok(Param::EtaT),
            "nu_b" => Ok(Param::NuB),
            "nu_t" => Ok(Param::NuT),
            "n_s" | "ns" => Ok(Param::Ns),
            _ => Err(format!("unknown axis '{s}' (expected eta_t, nu_t, eta_b, nu_b or n_s)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub param: Param,
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Axis {
    /// Evenly spaced values with both endpoints included.
    pub fn values(&self) -> Vec<f64> {
        let last = (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| if i + 1 == self.steps { self.max } else { self.min + (self.max - self.min) * i as f64 / last })
            .collect()
    }
}

fn parse_axis(s: &str) -> Result<Axis, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 4 {
        return Err(format!("expected NAME:MIN:MAX:STEPS, got '{s}'"));
    }
    let param = parts[0].parse()?;
    let num = |t: &str| {
        t.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| format!("'{t}' is not a finite number"))
    };
    let steps = parts[3].parse::<usize>().map_err(|_| format!("steps '{}' is not an integer", parts[3]))?;
    if steps < 2 {
        return Err(format!("an axis needs at least 2 steps, got {steps}"));
    }
    Ok(Axis { param, min: num(parts[1])?, max: num(parts[2])?, steps })
}

/// Model parameters at one point, before validation.
#[derive(Debug, Clone, Copy, Default)]
struct Point {
    eta_b: Option<f64>,
    eta_t: Option<f64>,
    nu_b: Option<f64>,
    nu_t: Option<f64>,
    n_s: Option<f64>,
}

impl Point {
    fn from_args(a: &ModelArgs) -> Self {
        Point { eta_b: a.eta_b, eta_t: a.eta_t, nu_b: a.nu_b, nu_t: a.nu_t, n_s: a.ns }
    }

    fn set(&mut self, p: Param, x: f64) {
        let slot = match p {
            Param::EtaB => &mut self.eta_b,
            Param::EtaT => &mut self.eta_t,
            Param::NuB => &mut self.nu_b,
            Param::NuT => &mut self.nu_t,
            Param::Ns => &mut self.n_s,
        };
        *slot = Some(x);
    }

    fn model(&self, kind: ModelKind) -> Result<ChannelModel, CliError> {
        let need = |v: Option<f64>, flag: &str| {
            v.ok_or_else(|| CliError::Usage(format!("missing --{flag} for the {kind:?} model").to_lowercase()))
        };
        Ok(match kind {
            ModelKind::Loss => ChannelModel::pure_loss(need(self.eta_b, "eta-b")?, need(self.eta_t, "eta-t")?)?,
            ModelKind::Additive => ChannelModel::additive_noise(need(self.nu_b, "nu-b")?, need(self.nu_t, "nu-t")?)?,
        })
    }

    fn n_s(&self) -> Result<f64, CliError> {
        self.n_s.ok_or_else(|| CliError::Usage("missing --ns".into()))
    }
}

fn check_model_flags(a: &ModelArgs) -> Result<(), CliError> {
    let stray = match a.model {
        ModelKind::Loss => a.nu_b.or(a.nu_t).map(|_| "--nu-b/--nu-t"),
        ModelKind::Additive => a.eta_b.or(a.eta_t).map(|_| "--eta-b/--eta-t"),
    };
    match stray {
        Some(f) => usage(format!("{f} do not apply to the {:?} model", a.model).to_lowercase()),
        None => Ok(()),
    }
}

fn task(p: &ProblemArgs) -> Result<Task, CliError> {
    if p.u.is_some() && p.task != TaskKind::Ucpf {
        return usage("--u only applies to --task ucpf");
    }
    if !p.targets.is_empty() && p.task != TaskKind::Bcpf {
        return usage("--targets only applies to --task bcpf");
    }
    Ok(match p.task {
        TaskKind::Cpf => Task::Cpf,
        TaskKind::Uniform => Task::Uniform,
        TaskKind::Ucpf => Task::Ucpf(p.u.ok_or_else(|| CliError::Usage("--task ucpf needs --u".into()))?),
        TaskKind::Bcpf => {
            if p.targets.is_empty() {
                return usage("--task bcpf needs --targets");
            }
            Task::Bcpf(p.targets.clone())
        }
    })
}

fn scenario(p: &ProblemArgs, point: &Point) -> Result<Scenario, CliError> {
    Ok(Scenario {
        task: task(p)?,
        m: p.m,
        k: p.k,
        model: point.model(p.model.model)?,
        energy_n_s: point.n_s()?,
        resource: p.resource.resource(),
        source: p.model.source,
    })
}

/// Runs the command line `args` (including the program name), writing results to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                write!(out, "{e}").map_err(failure)?;
                return Ok(());
            }
            let text = e.to_string();
            let reason: Vec<&str> =
                text.lines().map(str::trim).take_while(|l| !l.is_empty() && !l.starts_with("Usage:")).collect();
            return usage(reason.join(" ").trim_start_matches("error:").trim().to_string());
        }
    };
    match cli.command {
        Command::Bound(a) => cmd_bound(&a, out),
        Command::Sweep(a) => cmd_sweep(&a, out),
        Command::Verify(a) => cmd_verify(&a, out),
        Command::Threshold(a) => cmd_threshold(&a, out),
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:?}"))
}

pub fn cmd_bound(a: &BoundArgs, out: &mut dyn Write) -> Result<(), CliError> {
    check_model_flags(&a.problem.model)?;
    let report = scenario(&a.problem, &Point::from_args(&a.problem.model))?.evaluate()?;
    let text = match a.format {
        OutputFormat::Json => serde_json::to_string_pretty(&report).map_err(failure)? + "\n",
        OutputFormat::Text => bound_text(&report),
    };
    out.write_all(text.as_bytes()).map_err(failure)
}

fn bound_text(r: &ScenarioReport) -> String {
    let f = &r.fidelities;
    let b = &r.bounds;
    let rows = [
        ("k", r.k.to_string()),
        ("f01", format!("{:?}", f.f01)),
        ("f11", format!("{:?}", f.f11)),
        ("f02", format!("{:?}", f.f02)),
        ("f12", format!("{:?}", f.f12)),
        ("classical_fidelity", format!("{:?}", r.classical_fidelity)),
        ("lower", format!("{:?}", b.lower)),
        ("upper_raw", format!("{:?}", b.upper_raw)),
        ("upper", format!("{:?}", b.upper)),
        ("classical_lower", fmt_opt(b.classical_lower)),
        ("delta_adv", fmt_opt(b.delta_adv)),
        ("m_copies", format!("{:?}", b.m_copies)),
        ("m_bar", format!("{:?}", b.m_bar)),
    ];
    let mut s = String::new();
    for (k, v) in rows {
        let _ = writeln!(s, "{k:<20}{v}");
    }
    s
}

/// Worker count from `DYNDISC_THREADS`, if set.
pub fn threads_from_env() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => usage(format!("{THREADS_ENV} must be a positive integer, got '{v}'")),
        },
    }
}

/// Evaluates every grid cell and renders the CSV. Rows follow the first axis
/// in the outer loop.
pub fn sweep_csv(a: &SweepArgs, threads: Option<usize>) -> Result<String, CliError> {
    let p = &a.problem;
    check_model_flags(&p.model)?;
    if a.axes.len() > 2 {
        return usage(format!("at most two --axis flags are allowed, got {}", a.axes.len()));
    }
    if a.axes.len() == 2 && a.axes[0].param == a.axes[1].param {
        return usage("the two axes must sweep different parameters");
    }
    for ax in &a.axes {
        let fits = match ax.param {
            Param::EtaB | Param::EtaT => p.model.model == ModelKind::Loss,
            Param::NuB | Param::NuT => p.model.model == ModelKind::Additive,
            Param::Ns => true,
        };
        if !fits {
            return usage(
                format!("axis {:?} does not apply to the {:?} model", ax.param, p.model.model).to_lowercase(),
            );
        }
    }
    task(p)?;

    let v1 = a.axes[0].values();
    let v2 = a.axes.get(1).map(Axis::values);
    let inner = v2.as_ref().map_or(1, Vec::len);
    let base = Point::from_args(&p.model);
    let cell = |idx: usize| -> Result<String, CliError> {
        let (i, j) = (idx / inner, idx % inner);
        let mut point = base;
        point.set(a.axes[0].param, v1[i]);
        let x2 = v2.as_ref().map(|v| {
            point.set(a.axes[1].param, v[j]);
            v[j]
        });
        let r = scenario(p, &point).and_then(|sc| Ok(sc.evaluate()?)).map_err(|e| {
            let at = x2.map_or_else(|| format!("{:?}", v1[i]), |y| format!("{:?},{y:?}", v1[i]));
            match e {
                CliError::Usage(m) => CliError::Usage(format!("at ({at}): {m}")),
                CliError::Failure(m) => CliError::Failure(format!("at ({at}): {m}")),
            }
        })?;
        let b = r.bounds;
        let opt = |x: Option<f64>| x.map_or_else(String::new, |v| format!("{v:?}"));
        Ok(format!(
            "{:?},{},{:?},{:?},{},{},{:?},{:?}\n",
            v1[i],
            x2.map_or_else(String::new, |y| format!("{y:?}")),
            b.lower,
            b.upper,
            opt(b.classical_lower),
            opt(b.delta_adv),
            b.m_copies,
            b.m_bar
        ))
    };
    let n = v1.len() * inner;
    let eval = || (0..n).into_par_iter().map(cell).collect::<Result<Vec<String>, CliError>>();
    let rows = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new().num_threads(t).build().map_err(failure)?.install(eval)?,
        None => eval()?,
    };
    let mut csv = String::with_capacity(64 * (n + 1));
    csv.push_str(CSV_HEADER);
    csv.push('\n');
    rows.iter().for_each(|r| csv.push_str(r));
    Ok(csv)
}

pub fn cmd_sweep(a: &SweepArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let csv = sweep_csv(a, threads_from_env()?)?;
    match &a.out {
        Some(path) => std::fs::write(path, csv).map_err(|e| failure(format!("cannot write {}: {e}", path.display()))),
        None => out.write_all(csv.as_bytes()).map_err(failure),
    }
}

#[derive(Debug, Serialize)]
struct ThresholdReport {
    m: usize,
    fidelities: UniqueFidelitySet2,
    classical_fidelity: f64,
    /// Average channel use at the threshold, `None` when no finite threshold exists.
    threshold_mbar: Option<f64>,
    /// Copies per probe pair at the threshold.
    threshold_copies: Option<f64>,
    reason: Option<String>,
}

pub fn cmd_threshold(a: &ThresholdArgs, out: &mut dyn Write) -> Result<(), CliError> {
    check_model_flags(&a.model)?;
    let point = Point::from_args(&a.model);
    let model = point.model(a.model.model)?;
    let energy = ProbeEnergy::new(point.n_s()?)?;
    let fids = unique_set(&model, energy, a.model.source)?;
    let f_cl = classical_fidelity(&model, energy);
    let (mbar, reason) = match copies_threshold(a.m, f_cl, &fids) {
        Ok(t) => (Some(t), None),
        Err(dyndisc::Error::NoThreshold(why)) => (None, Some(why)),
        Err(e) => return Err(e.into()),
    };
    let report = ThresholdReport {
        m: a.m,
        fidelities: fids,
        classical_fidelity: f_cl,
        threshold_mbar: mbar,
        threshold_copies: mbar.map(|t| t / (a.m - 1) as f64),
        reason,
    };
    let text = match (a.format, mbar) {
        (OutputFormat::Json, _) => serde_json::to_string_pretty(&report).map_err(failure)? + "\n",
        (OutputFormat::Text, Some(t)) => {
            format!("threshold Mbar = {t:?} (M = {:?} copies)\n", t / (a.m - 1) as f64)
        }
        (OutputFormat::Text, None) => {
            format!("no finite threshold: {}\n", report.reason.as_deref().unwrap_or_default())
        }
    };
    out.write_all(text.as_bytes()).map_err(failure)
}

/// Outcome of one verification check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub max_deviation: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.max_deviation <= self.tolerance
    }
}

/// Deviation report that does not decide the outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Note {
    pub name: String,
    pub max_deviation: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
    pub notes: Vec<Note>,
}

fn reference_models() -> [(&'static str, ChannelModel); 2] {
    [
        ("loss(1,0.7)", ChannelModel::pure_loss(1.0, 0.7).expect("valid")),
        ("additive(0.02,0.2)", ChannelModel::additive_noise(0.02, 0.2).expect("valid")),
    ]
}

fn proto_name(p: DegeneracyProtocol) -> &'static str {
    match p {
        DegeneracyProtocol::Cvghz => "cv-ghz",
        DegeneracyProtocol::KmaxTmsv => "pairwise tmsv",
    }
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

/// Largest relative gap between the engine's raw upper bound and the
/// pairwise oracle sum, over every valid `k`, CPF and uniform tasks, and
/// `M ∈ {0.5, 1, 3}`.
pub fn engine_oracle_deviation(
    m: usize,
    model: &ChannelModel,
    n_s: f64,
    source: FidelitySource,
    perturb: f64,
) -> Result<f64, CliError> {
    let energy = ProbeEnergy::new(n_s)?;
    let mut fids = unique_set(model, energy, source)?;
    fids.f01 *= perturb;
    let f_cl = classical_fidelity(model, energy);
    let mut worst: f64 = 0.0;
    for k in (1..m).filter(|&k| is_valid_k(m, k)) {
        for task in [Task::Cpf, Task::Uniform] {
            let space = task.image_space(m)?;
            let s = klnn_distribution(m, k)?;
            for copies in [0.5, 1.0, 3.0] {
                let sc = Scenario {
                    task: task.clone(),
                    m,
                    k: Neighbourhood::Width(k),
                    model: *model,
                    energy_n_s: n_s,
                    resource: Resource::Copies(copies),
                    source,
                };
                let engine = sc.evaluate_with(fids, f_cl)?.bounds.upper_raw;
                let oracle = brute_total_error(&space, &s, model, energy, copies)?.value / space.cardinality() as f64;
                let d = rel(engine, oracle);
                worst = if d.is_nan() { f64::INFINITY } else { worst.max(d) };
            }
        }
    }
    Ok(worst)
}

fn identity_deviation() -> Result<f64, CliError> {
    let fids = UniqueFidelitySet2::new(0.83, 0.61, 0.77, 0.9)?;
    let mut worst: f64 = 0.0;
    for m in 2..=10 {
        for copies in [0.5, 1.0, 3.0] {
            if m % 2 == 0 {
                let a = klnn_cpf_bound(m, 1, copies, &fids)?;
                let b = cpf_disjoint_bound(m, copies, &fids)?;
                worst = worst.max(rel(a.upper_raw, b.upper_raw)).max(rel(a.lower, b.lower));
            }
            if m >= 3 {
                let a = klnn_cpf_bound(m, m - 1, copies, &fids)?;
                let b = cpf_kmax_bound(m, copies, &fids)?;
                worst = worst.max(rel(a.upper_raw, b.upper_raw)).max(rel(a.lower, b.lower));
                let mf = m as f64;
                let want = mf * (mf - 1.0) * (fids.f01.powf(2.0 * (mf - 2.0)) * fids.f11).powf(copies);
                worst = worst.max(rel(ucpf_total_error(m, 1, copies, &fids)?, want));
            }
        }
    }
    Ok(worst)
}

/// Runs the verification suite. `corrupt` scales the analytic `F01` by
/// `1 - 1e-3`, which must make the oracle comparisons fail.
pub fn run_verify(level: VerifyLevel, corrupt: bool) -> Result<VerifyReport, CliError> {
    let perturb = if corrupt { 1.0 - 1e-3 } else { 1.0 };
    let mut r = VerifyReport::default();
    let max_m = match level {
        VerifyLevel::Quick => 3,
        VerifyLevel::Full => 4,
    };
    for (label, model) in reference_models() {
        for m in 2..=max_m {
            for source in [FidelitySource::ClosedForm, FidelitySource::Oracle] {
                let src = if source == FidelitySource::Oracle { "oracle" } else { "closed-form" };
                r.checks.push(Check {
                    name: format!("engine vs oracle, m={m}, {label}, {src} fidelities"),
                    max_deviation: engine_oracle_deviation(m, &model, 2.0, source, perturb)?,
                    tolerance: 1e-9,
                });
            }
        }
        let energy = ProbeEnergy::new(2.0)?;
        let mut degeneracy = vec![(3, DegeneracyProtocol::KmaxTmsv)];
        if level == VerifyLevel::Full {
            degeneracy.extend([(4, DegeneracyProtocol::KmaxTmsv), (4, DegeneracyProtocol::Cvghz)]);
        }
        for (m, proto) in degeneracy {
            r.checks.push(Check {
                name: format!("class degeneracy, {}, m={m}, {label}", proto_name(proto)),
                max_deviation: verify_degeneracy(m, &model, energy, proto)?.report.max_class_spread,
                tolerance: 1e-10,
            });
        }
    }
    r.checks.push(Check {
        name: "closed-form bound identities, m<=10".into(),
        max_deviation: identity_deviation()?,
        tolerance: 1e-12,
    });
    // The loss model excludes eta_t = 0; the smallest positive value gives the same float.
    let f_loss = classical_fidelity(&ChannelModel::pure_loss(1.0, f64::MIN_POSITIVE)?, ProbeEnergy::new(2.0)?);
    let f_add = classical_fidelity(&ChannelModel::additive_noise(0.0, 3.0)?, ProbeEnergy::new(2.0)?);
    r.checks.push(Check {
        name: "classical fidelity spot values".into(),
        max_deviation: (f_loss - (-1.0f64).exp()).abs().max((f_add - 0.5).abs()),
        tolerance: 1e-12,
    });
    if level == VerifyLevel::Full {
        let loss = validate_closed_forms(&loss_validation_grid())?;
        for s in &loss.summary {
            r.checks.push(Check {
                name: format!("loss closed form F{} vs oracle, {} points", s.label, s.points),
                max_deviation: s.max_deviation,
                tolerance: 1e-8,
            });
        }
        let add = validate_closed_forms(&additive_validation_grid())?;
        for s in loss.summary.iter().chain(&add.summary) {
            r.notes.push(Note {
                name: format!("{} F{}: published form vs oracle", s.family, s.label),
                max_deviation: s.max_printed_deviation,
            });
        }
        for s in &add.summary {
            r.notes.push(Note {
                name: format!("{} F{}: closed form vs oracle", s.family, s.label),
                max_deviation: s.max_deviation,
            });
        }
    }
    Ok(r)
}

pub fn cmd_verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let r = run_verify(a.level, a.corrupt_fidelity)?;
    let mut s = String::new();
    for c in &r.checks {
        let tag = if c.passed() { "PASS" } else { "FAIL" };
        let _ = writeln!(s, "{tag}  {}  max_dev={:e} tol={:e}", c.name, c.max_deviation, c.tolerance);
    }
    for n in &r.notes {
        let _ = writeln!(s, "INFO  {}  max_dev={:e}", n.name, n.max_deviation);
    }
    let failed = r.checks.iter().filter(|c| !c.passed()).count();
    let _ = writeln!(s, "{} of {} checks passed", r.checks.len() - failed, r.checks.len());
    out.write_all(s.as_bytes()).map_err(failure)?;
    if failed > 0 {
        return Err(CliError::Failure(format!("{failed} verification check(s) failed")));
    }
    Ok(())
}
