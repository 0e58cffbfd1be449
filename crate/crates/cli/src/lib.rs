//! Command-line front end. [`run`] parses an argv and returns the process
//! exit code: 0 on success, 1 on a usage error, 2 on a runtime failure.

use std::fs;
use std::io::Write as _;
use std::path::PathBuf;
use std::sync::Arc;

use anyhow::Context as _;
use bandit_lab::harness::{
    self, monte_carlo, read_trials_csv, write_aggregate_csv, write_histogram_svg, write_regret_csv,
    write_trace_csv, write_trials_csv, AlgParams, Algorithm, ExperimentPlan, GenSpec, HarnessError,
    InstanceSource, OrderKind, TrialSummary,
};
use bandit_lab::instances::DistSpec;
use bandit_lab::schedule::{
    assadi_type_schedule_reduced, king_schedule, r_round_schedule, AssadiSchedule,
    ChallengeSchedule, ScheduleRow, DEFAULT_SAMPLE_CAP,
};
use bandit_lab::{Instance, SeedSpec};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Rows kept when exporting a regret trace.
const TRACE_ROWS: usize = 10_000;

#[derive(Debug, Parser)]
#[command(
    name = "bandit-lab",
    version,
    about = "Streaming multi-armed bandits with bounded arm memory",
    long_about = "Run best-arm identification and regret experiments over streams of arms, \
                  generate instance files, print level schedules and summarise trial CSVs.\n\n\
                  Numeric flags accept scientific notation (1e4). The worker pool size comes \
                  from --workers, else the BANDIT_LAB_WORKERS environment variable."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Best-arm identification trials (rround, king, aggressive, king-no-offset).
    PacRun(RunArgs),
    /// Regret trials (uniform-explore, ucb1).
    RegretRun(RunArgs),
    /// Write an instance file.
    Gen(GenArgs),
    /// Print a level schedule as CSV: level,eps,s,c.
    Schedule(ScheduleArgs),
    /// Repeat a run over a grid of values for exactly one numeric flag.
    Sweep(SweepArgs),
    /// Summarise a per-trial CSV.
    Report(ReportArgs),
}

fn parse_num(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("`{s}` is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn parse_count(s: &str) -> Result<u64, String> {
    let v = parse_num(s)?;
    if v >= 0.0 && v.fract() == 0.0 && v <= u64::MAX as f64 {
        Ok(v as u64)
    } else {
        Err(format!("`{s}` is not a non-negative integer"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Order {
    Natural,
    Random,
}

/// Numeric knobs. Each accepts a comma-separated list, but only `sweep`
/// takes more than one value, and only for a single flag.
#[derive(Debug, Clone, Default, Args)]
struct Knobs {
    /// Number of arms (generated instances).
    #[arg(long, value_parser = parse_num, value_delimiter = ',')]
    n: Vec<f64>,
    /// Accuracy ε [default: 0.1].
    #[arg(long, value_parser = parse_num, value_delimiter = ',')]
    eps: Vec<f64>,
    /// Confidence δ [default: 0.1].
    #[arg(long, value_parser = parse_num, value_delimiter = ',')]
    delta: Vec<f64>,
    /// Rounds of the r-round algorithm [default: 1].
    #[arg(long, value_parser = parse_num, value_delimiter = ',')]
    r: Vec<f64>,
    /// Budget constant of the king algorithms [default: 117].
    #[arg(long = "C", value_parser = parse_num, value_delimiter = ',')]
    c: Vec<f64>,
    /// Divide per-level sample counts (and the king budget) by this [default: 1].
    #[arg(long, value_parser = parse_num, value_delimiter = ',')]
    reduction: Vec<f64>,
    /// Horizon of regret runs; also sets ε of the lb family [default: 1e6].
    #[arg(long = "T", value_parser = parse_num, value_delimiter = ',')]
    horizon: Vec<f64>,
    /// Exploration constant κ of uniform exploration [default: 1].
    #[arg(long, value_parser = parse_num, value_delimiter = ',')]
    kappa: Vec<f64>,
    /// Override the algorithm's arm memory.
    #[arg(long, value_parser = parse_num, value_delimiter = ',')]
    capacity: Vec<f64>,
    /// Per-level sample ceiling for aggressive promotion [default: 1e12].
    #[arg(long, value_parser = parse_num, value_delimiter = ',')]
    sample_cap: Vec<f64>,
    /// lb family: number of perturbed instances m.
    #[arg(long, value_parser = parse_num, value_delimiter = ',')]
    m: Vec<f64>,
    /// lb family: instance index j in 0..=m [default: trial mod (m+1)].
    #[arg(long, value_parser = parse_num, value_delimiter = ',')]
    j: Vec<f64>,
    /// random-order-lb family: variant 1 or 2 [default: 1].
    #[arg(long, value_parser = parse_num, value_delimiter = ',')]
    variant: Vec<f64>,
    /// assadi family: arms per block [default: 4].
    #[arg(long, value_parser = parse_num, value_delimiter = ',')]
    c1: Vec<f64>,
    /// assadi family: number of blocks [default: 64].
    #[arg(long, value_parser = parse_num, value_delimiter = ',')]
    c2: Vec<f64>,
    /// linear-gap family: first mean [default: 0.5].
    #[arg(long, value_parser = parse_num, value_delimiter = ',')]
    mu1: Vec<f64>,
}

/// One value per knob, after picking a sweep point.
#[derive(Debug, Clone, Copy, Default)]
struct Point {
    n: Option<f64>,
    eps: Option<f64>,
    delta: Option<f64>,
    r: Option<f64>,
    c: Option<f64>,
    reduction: Option<f64>,
    horizon: Option<f64>,
    kappa: Option<f64>,
    capacity: Option<f64>,
    sample_cap: Option<f64>,
    m: Option<f64>,
    j: Option<f64>,
    variant: Option<f64>,
    c1: Option<f64>,
    c2: Option<f64>,
    mu1: Option<f64>,
}

macro_rules! knob_list {
    ($mac:ident) => {
        $mac!(n, "n");
        $mac!(eps, "eps");
        $mac!(delta, "delta");
        $mac!(r, "r");
        $mac!(c, "C");
        $mac!(reduction, "reduction");
        $mac!(horizon, "T");
        $mac!(kappa, "kappa");
        $mac!(capacity, "capacity");
        $mac!(sample_cap, "sample-cap");
        $mac!(m, "m");
        $mac!(j, "j");
        $mac!(variant, "variant");
        $mac!(c1, "c1");
        $mac!(c2, "c2");
        $mac!(mu1, "mu1");
    };
}

impl Knobs {
    /// The swept flag and its values, if any flag has several values.
    fn axis(&self) -> Result<Option<(&'static str, Vec<f64>)>, CliError> {
        let mut axes: Vec<(&'static str, Vec<f64>)> = Vec::new();
        macro_rules! collect {
            ($f:ident, $name:expr) => {
                if self.$f.len() > 1 {
                    axes.push(($name, self.$f.clone()));
                }
            };
        }
        knob_list!(collect);
        match axes.len() {
            0 => Ok(None),
            1 => Ok(axes.pop()),
            _ => Err(CliError::usage(format!(
                "only one flag may take several values, got {}",
                axes.iter()
                    .map(|(n, _)| format!("--{n}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            ))),
        }
    }

    /// Point with the swept flag (if any) set to `value`.
    fn point(&self, axis: Option<(&str, f64)>) -> Point {
        let mut p = Point::default();
        macro_rules! fill {
            ($f:ident, $name:expr) => {
                p.$f = match axis {
                    Some((name, v)) if name == $name => Some(v),
                    _ => self.$f.first().copied(),
                };
            };
        }
        knob_list!(fill);
        p
    }
}

fn as_int(v: Option<f64>, flag: &str) -> Result<Option<u64>, CliError> {
    match v {
        None => Ok(None),
        Some(x) if x >= 0.0 && x.fract() == 0.0 => Ok(Some(x as u64)),
        Some(x) => Err(CliError::usage(format!(
            "--{flag} must be a non-negative integer, got {x}"
        ))),
    }
}

/// Where instances come from.
#[derive(Debug, Clone, Args)]
struct SourceArgs {
    /// Instance file (header `n=<int>`, then one mean per line).
    #[arg(long, conflicts_with = "family")]
    instance: Option<PathBuf>,
    /// Generator: uniform, normal, lognormal, exponential, beta, gamma,
    /// weibull, lb, random-order-lb, assadi, linear-gap [default: uniform].
    #[arg(long)]
    family: Option<String>,
    /// Distribution parameters, e.g. `--params 0.5,1` for normal(μ, σ²).
    #[arg(long, value_parser = parse_num, value_delimiter = ',', allow_negative_numbers = true)]
    params: Vec<f64>,
    /// Generate one instance and reuse it for every trial.
    #[arg(long)]
    fixed_instance: bool,
}

#[derive(Debug, Clone, Args)]
struct RunArgs {
    /// Algorithm name.
    #[arg(long)]
    alg: String,
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    knobs: Knobs,
    /// Leading block sizes of aggressive promotion, e.g. `4,64`.
    #[arg(long, value_parser = parse_count, value_delimiter = ',')]
    blocks: Vec<u64>,
    /// Number of trials.
    #[arg(long, alias = "seeds", default_value = "1", value_parser = parse_count)]
    trials: u64,
    /// Master seed.
    #[arg(long, default_value = "0", value_parser = parse_count)]
    seed: u64,
    /// Arrival order.
    #[arg(long, value_enum, default_value_t = Order::Natural)]
    order: Order,
    /// Worker threads.
    #[arg(long, value_parser = parse_count)]
    workers: Option<u64>,
    /// Per-trial CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// One-row aggregate CSV.
    #[arg(long)]
    aggregate: Option<PathBuf>,
    /// Gap histogram as SVG.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Regret runs: `trial_id,T,regret` CSV.
    #[arg(long)]
    regret_out: Option<PathBuf>,
    /// Regret runs: down-sampled `t,arm,cumulative_regret` of trial 0.
    #[arg(long)]
    trace_out: Option<PathBuf>,
    /// Write measured wall-clock times instead of zeros.
    #[arg(long)]
    wall_time: bool,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    knobs: Knobs,
    /// Seed; the instance is that of trial 0.
    #[arg(long, default_value = "0", value_parser = parse_count)]
    seed: u64,
    /// Output file [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScheduleKind {
    Rround,
    King,
    Aggressive,
    KingNoOffset,
}

#[derive(Debug, Args)]
struct ScheduleArgs {
    /// Which table.
    #[arg(long, value_enum)]
    kind: ScheduleKind,
    #[command(flatten)]
    knobs: Knobs,
    /// Leading block sizes (aggressive).
    #[arg(long, value_parser = parse_count, value_delimiter = ',')]
    blocks: Vec<u64>,
    /// Rows to print for the king tables.
    #[arg(long, default_value = "6", value_parser = parse_count)]
    levels: u64,
    /// Output file [default: stdout].
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Per-trial CSV to summarise.
    #[arg(long)]
    input: PathBuf,
    /// One-row aggregate CSV.
    #[arg(long)]
    aggregate: Option<PathBuf>,
    /// Gap histogram as SVG.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Runtime(anyhow::Error),
}

impl CliError {
    fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }
}

impl From<bandit_lab::Error> for CliError {
    fn from(e: bandit_lab::Error) -> Self {
        match e {
            bandit_lab::Error::Harness(HarnessError::InvalidPlan(m)) => CliError::Usage(m),
            bandit_lab::Error::Schedule(s) => CliError::Usage(s.to_string()),
            bandit_lab::Error::Instance(
                bandit_lab::instances::InstanceError::InvalidParameter(m),
            ) => CliError::Usage(m),
            other => CliError::Runtime(other.into()),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

/// Parse `argv` (program name first), run the command and return the exit
/// code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            1
        }
        Err(CliError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::PacRun(a) => run_cmd(&a, false),
        Command::RegretRun(a) => run_cmd(&a, true),
        Command::Gen(a) => gen_cmd(&a),
        Command::Schedule(a) => schedule_cmd(&a),
        Command::Sweep(a) => sweep_cmd(&a.run),
        Command::Report(a) => report_cmd(&a),
    }
}

fn algorithm(name: &str) -> Result<Algorithm, CliError> {
    name.parse().map_err(CliError::Usage)
}

/// Default arm count of the lb family: ten arms, or m+1 if that is larger.
fn lb_default_n(m: usize) -> usize {
    (m + 1).max(10)
}

fn gen_spec(source: &SourceArgs, p: &Point) -> Result<GenSpec, CliError> {
    let family = source.family.as_deref().unwrap_or("uniform");
    let n = as_int(p.n, "n")?.map(|v| v as usize);
    let need_n = || n.ok_or_else(|| CliError::usage(format!("--family {family} needs --n")));
    let eps = p.eps.unwrap_or(AlgParams::default().epsilon);
    let no_params = |spec: GenSpec| {
        if source.params.is_empty() {
            Ok(spec)
        } else {
            Err(CliError::usage(format!(
                "--family {family} takes no --params"
            )))
        }
    };
    match family {
        "lb" => {
            let m =
                as_int(p.m, "m")?.ok_or_else(|| CliError::usage("--family lb needs --m"))? as usize;
            no_params(GenSpec::LowerBound {
                m,
                n: n.unwrap_or_else(|| lb_default_n(m)),
                j: as_int(p.j, "j")?.map(|v| v as usize),
                horizon: None,
            })
        }
        "random-order-lb" => no_params(GenSpec::RandomOrderLb {
            n: need_n()?,
            epsilon: eps,
            variant: as_int(p.variant, "variant")?.unwrap_or(1) as u8,
        }),
        "assadi" => {
            let c1 = as_int(p.c1, "c1")?.unwrap_or(4) as usize;
            let c2 = as_int(p.c2, "c2")?.unwrap_or(64) as usize;
            no_params(GenSpec::Assadi {
                epsilon: eps,
                c1,
                c2,
                n: n.unwrap_or(c1 * c2 + 1),
            })
        }
        "linear-gap" => no_params(GenSpec::LinearGap {
            n: need_n()?,
            epsilon: eps,
            mu1: p.mu1.unwrap_or(0.5),
        }),
        dist => {
            let spec = DistSpec::from_parts(dist, &source.params)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            Ok(GenSpec::Dist {
                dist: spec,
                n: need_n()?,
            })
        }
    }
}

fn instance_source(
    source: &SourceArgs,
    p: &Point,
    master_seed: u64,
) -> Result<InstanceSource, CliError> {
    if let Some(path) = &source.instance {
        let inst = Instance::read_from(path)
            .with_context(|| format!("reading instance file {}", path.display()))?;
        return Ok(InstanceSource::Fixed(Arc::new(inst)));
    }
    let spec = gen_spec(source, p)?;
    if source.fixed_instance {
        let horizon = p.horizon.map_or(AlgParams::default().horizon, |t| t as u64);
        let inst = spec.generate(SeedSpec::new(master_seed, 0), horizon)?;
        Ok(InstanceSource::Fixed(Arc::new(inst)))
    } else {
        Ok(InstanceSource::Generator(spec))
    }
}

fn build_plan(a: &RunArgs, p: &Point, alg: Algorithm) -> Result<ExperimentPlan, CliError> {
    let source = instance_source(&a.source, p, a.seed)?;
    let mut plan = ExperimentPlan::new(alg, source);
    let d = AlgParams::default();
    let horizon = match p.horizon {
        None => d.horizon,
        Some(t) if t >= 1.0 && t.fract() == 0.0 => t as u64,
        Some(t) => {
            return Err(CliError::usage(format!(
                "--T must be a positive integer, got {t}"
            )))
        }
    };
    plan.params = AlgParams {
        epsilon: p.eps.unwrap_or(d.epsilon),
        delta: p.delta.unwrap_or(d.delta),
        r: as_int(p.r, "r")?.map_or(d.r, |v| v as usize),
        c: p.c.unwrap_or(d.c),
        kappa: p.kappa.unwrap_or(d.kappa),
        horizon,
        reduction: p.reduction.unwrap_or(d.reduction),
        capacity: as_int(p.capacity, "capacity")?.map(|v| v as usize),
        block_sizes: a.blocks.clone(),
        sample_cap: p.sample_cap.unwrap_or(DEFAULT_SAMPLE_CAP),
    };
    if let InstanceSource::Generator(GenSpec::LowerBound { horizon: h, .. }) = &mut plan.source {
        *h = Some(horizon);
    }
    plan.trials = a.trials;
    plan.master_seed = a.seed;
    plan.order = match a.order {
        Order::Natural => OrderKind::Natural,
        Order::Random => OrderKind::Random,
    };
    plan.workers = a.workers.map(|w| w as usize);
    Ok(plan)
}

fn run_cmd(a: &RunArgs, regret: bool) -> Result<(), CliError> {
    let alg = algorithm(&a.alg)?;
    if alg.is_regret() != regret {
        let cmd = if regret { "regret-run" } else { "pac-run" };
        return Err(CliError::usage(format!(
            "`{alg}` cannot be used with {cmd}"
        )));
    }
    if !regret && (a.regret_out.is_some() || a.trace_out.is_some()) {
        return Err(CliError::usage(
            "--regret-out and --trace-out apply to regret-run only",
        ));
    }
    if a.knobs.axis()?.is_some() {
        return Err(CliError::usage(
            "several values for one flag are only accepted by `sweep`",
        ));
    }
    let plan = build_plan(a, &a.knobs.point(None), alg)?;
    let summary = monte_carlo(&plan)?;
    write_outputs(a, &summary)?;
    if let Some(path) = &a.trace_out {
        let out = plan.run_trial(0)?;
        let trace = out.trace.expect("regret runs record a trace");
        write_trace_csv(path, &trace, &out.instance, TRACE_ROWS)?;
    }
    print_summary(&summary);
    if !summary.failures.is_empty() {
        for f in &summary.failures {
            eprintln!("trial {} failed: {}", f.trial_id, f.message);
        }
        return Err(CliError::Runtime(anyhow::anyhow!(
            "{} of {} trials failed",
            summary.failures.len(),
            plan.trials
        )));
    }
    Ok(())
}

fn write_outputs(a: &RunArgs, summary: &TrialSummary) -> Result<(), CliError> {
    if let Some(p) = &a.out {
        write_trials_csv(p, &summary.rows, a.wall_time)?;
    }
    if let Some(p) = &a.aggregate {
        write_aggregate_csv(p, summary)?;
    }
    if let Some(p) = &a.svg {
        write_histogram_svg(
            p,
            &summary.gap_histogram,
            &format!("{} returned-arm gaps", a.alg),
        )?;
    }
    if let Some(p) = &a.regret_out {
        write_regret_csv(p, &summary.rows)?;
    }
    Ok(())
}

fn print_summary(s: &TrialSummary) {
    let mut line = format!(
        "trials={} successes={} success_rate={} gap_le_0.05={} mean_total_pulls={} max_peak_residency={}",
        s.trials,
        s.success_count,
        s.success_rate(),
        s.fraction_gap_at_most(0.05),
        s.mean_total_pulls,
        s.max_peak_residency
    );
    if let Some(r) = s.mean_regret {
        line.push_str(&format!(" mean_regret={r}"));
    }
    println!("{line}");
}

pub const SWEEP_HEADER: [&str; 11] = [
    "param",
    "value",
    "trials",
    "successes",
    "success_rate",
    "mean_gap",
    "gap_le_0.05",
    "mean_total_pulls",
    "max_total_pulls",
    "max_peak_residency",
    "mean_regret",
];

fn sweep_cmd(a: &RunArgs) -> Result<(), CliError> {
    let alg = algorithm(&a.alg)?;
    let (name, values) = a.knobs.axis()?.ok_or_else(|| {
        CliError::usage("sweep needs one flag with several comma-separated values")
    })?;
    if a.svg.is_some() || a.aggregate.is_some() || a.trace_out.is_some() {
        return Err(CliError::usage(
            "sweep writes only --out (grid CSV) and --regret-out",
        ));
    }
    let mut rows = Vec::new();
    let mut regret_rows = Vec::new();
    for &v in &values {
        let plan = build_plan(a, &a.knobs.point(Some((name, v))), alg)?;
        let s = monte_carlo(&plan)?;
        if !s.failures.is_empty() {
            return Err(CliError::Runtime(anyhow::anyhow!(
                "--{name} {v}: {} trials failed, first: {}",
                s.failures.len(),
                s.failures[0].message
            )));
        }
        rows.push(vec![
            name.to_string(),
            v.to_string(),
            s.trials.to_string(),
            s.success_count.to_string(),
            s.success_rate().to_string(),
            s.mean_gap.to_string(),
            s.fraction_gap_at_most(0.05).to_string(),
            s.mean_total_pulls.to_string(),
            s.max_total_pulls.to_string(),
            s.max_peak_residency.to_string(),
            s.mean_regret.map(|r| r.to_string()).unwrap_or_default(),
        ]);
        println!("--{name} {v}: ");
        print_summary(&s);
        regret_rows.extend(s.rows);
    }
    let mut out: Box<dyn std::io::Write> = match &a.out {
        Some(p) => {
            Box::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?)
        }
        None => Box::new(std::io::sink()),
    };
    let mut w = csv::Writer::from_writer(&mut out);
    w.write_record(SWEEP_HEADER).context("writing sweep CSV")?;
    for r in &rows {
        w.write_record(r).context("writing sweep CSV")?;
    }
    w.flush().context("writing sweep CSV")?;
    drop(w);
    if let Some(p) = &a.regret_out {
        write_regret_csv(p, &regret_rows)?;
    }
    Ok(())
}

fn gen_cmd(a: &GenArgs) -> Result<(), CliError> {
    if a.knobs.axis()?.is_some() {
        return Err(CliError::usage("gen takes a single value per flag"));
    }
    let p = a.knobs.point(None);
    let inst = match &a.source.instance {
        Some(_) => {
            return Err(CliError::usage(
                "gen builds instances; pass --family, not --instance",
            ))
        }
        None => {
            let spec = gen_spec(&a.source, &p)?;
            let horizon = p.horizon.map_or(AlgParams::default().horizon, |t| t as u64);
            spec.generate(SeedSpec::new(a.seed, 0), horizon)?
        }
    };
    emit(a.out.as_ref(), &inst.to_text())
}

fn emit(path: Option<&PathBuf>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .context("writing to stdout")?,
    }
    Ok(())
}

fn schedule_cmd(a: &ScheduleArgs) -> Result<(), CliError> {
    if a.knobs.axis()?.is_some() {
        return Err(CliError::usage("schedule takes a single value per flag"));
    }
    let p = a.knobs.point(None);
    let d = AlgParams::default();
    let eps = p.eps.unwrap_or(d.epsilon);
    let delta = p.delta.unwrap_or(d.delta);
    let c = p.c.unwrap_or(d.c);
    let reduction = p.reduction.unwrap_or(1.0);
    let n = || {
        as_int(p.n, "n")?
            .map(|v| v as usize)
            .ok_or_else(|| CliError::usage("this schedule needs --n"))
    };
    let levels = a.levels as usize;
    let rows: Vec<ScheduleRow> = match a.kind {
        ScheduleKind::Rround => {
            let r = as_int(p.r, "r")?.map_or(d.r, |v| v as usize);
            r_round_schedule(n()?, r, eps, delta)
                .map_err(|e| CliError::Usage(e.to_string()))?
                .rows()
        }
        ScheduleKind::King => {
            let k = king_schedule(eps, delta, c, reduction)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            eprintln!("budget b={}", k.budget());
            k.rows(levels)
        }
        ScheduleKind::KingNoOffset => {
            let k = assadi_type_schedule_reduced(eps, delta, c, reduction)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            eprintln!("budget b={}", k.budget());
            k.rows(levels)
        }
        ScheduleKind::Aggressive => AssadiSchedule::build(
            n()?,
            eps,
            delta,
            reduction,
            p.sample_cap.unwrap_or(DEFAULT_SAMPLE_CAP),
            &a.blocks,
        )
        .map_err(|e| CliError::Usage(e.to_string()))?
        .rows(),
    };
    let mut text = String::from("level,eps,s,c\n");
    for r in rows {
        let c = r.block.map(|b| b.to_string()).unwrap_or_default();
        text.push_str(&format!("{},{},{},{}\n", r.level, r.eps, r.samples, c));
    }
    emit(a.out.as_ref(), &text)
}

fn report_cmd(a: &ReportArgs) -> Result<(), CliError> {
    let rows = read_trials_csv(&a.input)?;
    let summary = TrialSummary::from_rows(rows, Vec::new());
    if let Some(p) = &a.aggregate {
        write_aggregate_csv(p, &summary)?;
    }
    if let Some(p) = &a.svg {
        let title = summary
            .algorithm
            .map_or("returned-arm gaps".to_string(), |alg| {
                format!("{alg} returned-arm gaps")
            });
        write_histogram_svg(p, &summary.gap_histogram, &title)?;
    }
    print_summary(&summary);
    Ok(())
}

/// Re-exported for integration tests that compare against the harness.
pub use harness::TRIALS_HEADER;
