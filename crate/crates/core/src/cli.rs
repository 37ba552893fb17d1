//! The `rotmap` command line.
//!
//! Every subcommand writes its result to `--out PATH` or standard output.
//! `--config PATH` reads a flat `key = value` file whose entries act as
//! flags given before the command-line ones, so explicit flags win.
//!
//! Exit codes: 0 on success, 1 when a property check fails, 2 on usage
//! errors.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::checks::{self, CheckOutcome, Suite};
use crate::error::{Error, Result};
use crate::experiments::{
    self, align, ik, parse_eps_grid, run_alignment, run_batch, run_ik, AlignConfig, ExperimentReport, HeadChoice, IKConfig,
    LinearityConfig, LossChoice,
};
use crate::mappings::MappingKind;

pub const EXIT_OK: u8 = 0;
pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;

#[derive(Parser, Debug)]
#[command(name = "rotmap", version, about = "Differentiable mappings onto SO(3): property checks and experiments")]
struct Cli {
    /// List every property check with the module it exercises, then exit.
    #[arg(long, global = true)]
    list_checks: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Analytic derivatives against central finite differences.
    #[command(args_override_self = true)]
    Gradcheck(GradcheckArgs),
    /// Jacobian rank: full where expected, deficient at singular sets.
    #[command(args_override_self = true)]
    Rankcheck(CheckArgs),
    /// Surjectivity and pre-image structure of every mapping.
    #[command(args_override_self = true)]
    Convexity(CheckArgs),
    /// Loss-angle identities and the point-loss closed form.
    #[command(args_override_self = true)]
    Identities(CheckArgs),
    /// Weighted Procrustes converging to Gram-Schmidt.
    #[command(name = "limit-gs", args_override_self = true)]
    LimitGs(CheckArgs),
    /// Deviation from linearity along the loss gradient.
    #[command(args_override_self = true)]
    Linearity(LinearityArgs),
    /// Rotation regression from a point cloud and its rotated copy.
    #[command(args_override_self = true)]
    Align(AlignArgs),
    /// Auto-encoding inverse kinematics of a synthetic joint chain.
    #[command(args_override_self = true)]
    Ik(IkArgs),
    /// Rotation vectors on small-angle targets, restricted or shifted.
    #[command(name = "probe-restricted", args_override_self = true)]
    ProbeRestricted(ProbeArgs),
    /// Aggregate CSV reports into a markdown table.
    #[command(args_override_self = true)]
    Report(ReportArgs),
}

const SUBCOMMANDS: [&str; 10] = [
    "gradcheck",
    "rankcheck",
    "convexity",
    "identities",
    "limit-gs",
    "linearity",
    "align",
    "ik",
    "probe-restricted",
    "report",
];

#[derive(Args, Debug)]
struct Common {
    /// Seed of every random draw.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for independent runs; output does not depend on it.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Flat `key = value` file of default flags.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CheckArgs {
    #[command(flatten)]
    common: Common,
    /// Probes per check; each suite has its own default.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args, Debug)]
struct GradcheckArgs {
    #[command(flatten)]
    check: CheckArgs,
    /// Comma-separated mappings; restricts the run to their Jacobians.
    #[arg(long)]
    mapping: Option<String>,
}

#[derive(Args, Debug)]
struct LinearityArgs {
    #[command(flatten)]
    common: Common,
    /// Comma-separated mappings.
    #[arg(long, default_value = "procrustes,6d,quaternion,rotvec,rotvec-restricted")]
    mapping: String,
    /// Draws per mapping.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    /// Step sizes: `lo:hi:logspaceN`, `lo:hi:linspaceN` or a comma list.
    #[arg(long, default_value = "1e-3:1:logspace20")]
    eps: String,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Consecutive seeds starting at `--seed`.
    #[arg(long, default_value_t = 1)]
    num_seeds: u64,
    /// Comma-separated hidden layer widths.
    #[arg(long)]
    hidden: Option<String>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    eval_every: Option<usize>,
    #[arg(long)]
    test_size: Option<usize>,
}

#[derive(Args, Debug)]
struct AlignKnobs {
    #[command(flatten)]
    train: TrainArgs,
    /// Points in the base cloud.
    #[arg(long)]
    points: Option<usize>,
    /// `frobenius` or `quaternion`.
    #[arg(long)]
    loss: Option<String>,
}

#[derive(Args, Debug)]
struct AlignArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    knobs: AlignKnobs,
    /// Comma-separated heads: mapping names, or `matrix` for the raw 3×3
    /// regression evaluated with both orthonormalizations.
    #[arg(long, default_value = "procrustes,6d,quaternion,rotvec,matrix")]
    mapping: String,
    /// Restrict targets to angles below this bound (radians).
    #[arg(long)]
    max_angle: Option<f64>,
    /// Compose targets with a half-turn about x.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", default_value = "false")]
    half_turn_offset: bool,
}

#[derive(Args, Debug)]
struct IkArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    train: TrainArgs,
    /// Comma-separated mappings.
    #[arg(long, default_value = "procrustes,6d,quaternion,rotvec")]
    mapping: String,
    #[arg(long, default_value_t = 3)]
    joints: usize,
    /// `uniform`, `cmu-hips`, or comma-separated per-joint weights.
    #[arg(long, default_value = "uniform")]
    weights: String,
    /// Largest rotation angle of the non-root joints (radians).
    #[arg(long)]
    joint_limit: Option<f64>,
    /// Training trajectories.
    #[arg(long)]
    trajectories: Option<usize>,
    /// Frames per training trajectory.
    #[arg(long)]
    frames: Option<usize>,
}

#[derive(Args, Debug)]
struct ProbeArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    knobs: AlignKnobs,
    /// Radius `α` of the restricted rotation vector.
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_2)]
    max_angle: f64,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// CSV files written by the experiment subcommands.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Keep every step instead of the last one only.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", default_value = "false")]
    all_keys: bool,
    #[arg(long)]
    config: Option<PathBuf>,
}

fn usage(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

/// Inserts the entries of `--config PATH` as `--key=value` flags right after
/// the subcommand, ahead of the explicit flags.
fn expand_config(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let strings: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut path = None;
    for (i, a) in strings.iter().enumerate() {
        if a == "--config" {
            path = Some(strings.get(i + 1).cloned().ok_or_else(|| usage("--config needs a PATH"))?);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else {
        return Ok(args);
    };
    let Some(at) = strings.iter().position(|a| SUBCOMMANDS.contains(&a.as_str())) else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path).map_err(|e| usage(format!("--config {path}: {e}")))?;
    let mut inserted = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("{path}:{}: expected key = value, got '{line}'", n + 1)))?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() || key == "config" {
            return Err(usage(format!("{path}:{}: invalid key '{key}'", n + 1)));
        }
        inserted.push(OsString::from(format!("--{key}={}", value.trim())));
    }
    let mut out = args;
    out.splice(at + 1..at + 1, inserted);
    Ok(out)
}

fn parse_mappings(list: &str) -> Result<Vec<MappingKind>> {
    let kinds = list
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect::<Result<Vec<MappingKind>>>()?;
    if kinds.is_empty() {
        return Err(usage("--mapping needs at least one mapping"));
    }
    Ok(kinds)
}

fn parse_hidden(list: &str) -> Result<Vec<usize>> {
    list.split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|_| usage(format!("--hidden: bad layer width '{s}'"))))
        .collect()
}

fn seeds(common: &Common, train: &TrainArgs) -> Result<Vec<u64>> {
    if train.num_seeds == 0 {
        return Err(usage("--num-seeds must be positive"));
    }
    Ok((0..train.num_seeds).map(|k| common.seed + k).collect())
}

fn emit(out: &Option<PathBuf>, text: &str, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Error::Io(format!("{}: {e}", path.display()))),
        None => stdout.write_all(text.as_bytes()).map_err(Error::from),
    }
}

fn run_checks(outcomes: Vec<CheckOutcome>, out: &Option<PathBuf>, stdout: &mut dyn Write) -> Result<u8> {
    let mut text = String::new();
    for o in &outcomes {
        text.push_str(&o.to_string());
        text.push('\n');
    }
    stdout.write_all(text.as_bytes())?;
    if let Some(path) = out {
        fs::write(path, &text).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(if checks::all_passed(&outcomes) { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn suite_samples(suite: Suite, samples: Option<usize>) -> Result<usize> {
    match samples {
        Some(0) => Err(usage("--samples must be positive")),
        Some(n) => Ok(n),
        None => Ok(suite.default_samples()),
    }
}

fn align_config(knobs: &AlignKnobs) -> Result<AlignConfig> {
    let mut cfg = AlignConfig::default();
    let t = &knobs.train;
    if let Some(h) = &t.hidden {
        cfg.hidden = parse_hidden(h)?;
    }
    cfg.iterations = t.iterations.unwrap_or(cfg.iterations);
    cfg.batch = t.batch.unwrap_or(cfg.batch);
    cfg.lr = t.lr.unwrap_or(cfg.lr);
    cfg.eval_every = t.eval_every.unwrap_or(cfg.eval_every);
    cfg.test_size = t.test_size.unwrap_or(cfg.test_size);
    cfg.points = knobs.points.unwrap_or(cfg.points);
    if let Some(l) = &knobs.loss {
        cfg.loss = l.parse::<LossChoice>()?;
    }
    Ok(cfg)
}

fn run_align(a: &AlignArgs, stdout: &mut dyn Write) -> Result<u8> {
    let mut base = align_config(&a.knobs)?;
    base.target_max_angle = a.max_angle;
    base.target_offset = a.half_turn_offset.then(align::half_turn_x);
    let heads = a
        .mapping
        .split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| match s.trim() {
            "matrix" => Ok(HeadChoice::Matrix),
            other => other.parse().map(HeadChoice::Mapping),
        })
        .collect::<Result<Vec<_>>>()?;
    if heads.is_empty() {
        return Err(usage("--mapping needs at least one head"));
    }
    let mut configs = Vec::new();
    for head in heads {
        for seed in seeds(&a.common, &a.knobs.train)? {
            let cfg = AlignConfig { head, seed, ..base.clone() };
            cfg.validate()?;
            configs.push(cfg);
        }
    }
    let report = run_batch(configs, a.common.jobs, |c| run_alignment(&c))?;
    emit(&a.common.out, &report.to_csv(), stdout)?;
    Ok(EXIT_OK)
}

fn run_ik_cmd(a: &IkArgs, stdout: &mut dyn Write) -> Result<u8> {
    let mut base = IKConfig::with_joints(a.joints);
    base.weights = match a.weights.as_str() {
        preset @ ("uniform" | "cmu-hips") => ik::weight_preset(preset, a.joints)?,
        list => list
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|_| usage(format!("--weights: bad weight '{s}'"))))
            .collect::<Result<Vec<f64>>>()?,
    };
    let t = &a.train;
    if let Some(h) = &t.hidden {
        base.hidden = parse_hidden(h)?;
    }
    base.iterations = t.iterations.unwrap_or(base.iterations);
    base.batch = t.batch.unwrap_or(base.batch);
    base.lr = t.lr.unwrap_or(base.lr);
    base.eval_every = t.eval_every.unwrap_or(base.eval_every);
    base.test_size = t.test_size.unwrap_or(base.test_size);
    base.joint_limit = a.joint_limit.unwrap_or(base.joint_limit);
    base.trajectories = a.trajectories.unwrap_or(base.trajectories);
    base.frames = a.frames.unwrap_or(base.frames);
    let mut configs = Vec::new();
    for mapping in parse_mappings(&a.mapping)? {
        for seed in seeds(&a.common, t)? {
            let cfg = IKConfig { mapping, seed, ..base.clone() };
            cfg.validate()?;
            configs.push(cfg);
        }
    }
    let report = run_batch(configs, a.common.jobs, |c| run_ik(&c))?;
    emit(&a.common.out, &report.to_csv(), stdout)?;
    Ok(EXIT_OK)
}

fn run_probe(a: &ProbeArgs, stdout: &mut dyn Write) -> Result<u8> {
    let base = align_config(&a.knobs)?;
    let mut configs = Vec::new();
    for seed in seeds(&a.common, &a.knobs.train)? {
        for cfg in experiments::probe::probe_configs(a.max_angle, &AlignConfig { seed, ..base.clone() })? {
            cfg.validate()?;
            configs.push(cfg);
        }
    }
    let report = run_batch(configs, a.common.jobs, |c| run_alignment(&c))?;
    emit(&a.common.out, &report.to_csv(), stdout)?;
    Ok(EXIT_OK)
}

fn run_report(a: &ReportArgs, stdout: &mut dyn Write) -> Result<u8> {
    let mut report = ExperimentReport::new();
    for path in &a.inputs {
        let text = read_input(path)?;
        report.extend(ExperimentReport::from_csv(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?);
    }
    emit(&a.out, &report.summary_markdown(!a.all_keys), stdout)?;
    Ok(EXIT_OK)
}

fn read_input(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn list_checks(stdout: &mut dyn Write) -> Result<u8> {
    let mut text = String::new();
    for c in checks::CATALOG {
        text.push_str(&format!("{:<11} {:<32} {:<30} {}\n", c.suite.name(), c.name, c.anchor, c.summary));
    }
    stdout.write_all(text.as_bytes())?;
    Ok(EXIT_OK)
}

fn dispatch(cli: Cli, stdout: &mut dyn Write) -> Result<u8> {
    if cli.list_checks {
        return list_checks(stdout);
    }
    let Some(command) = cli.command else {
        return Err(usage(format!("a subcommand is required: {}", SUBCOMMANDS.join(", "))));
    };
    match command {
        Command::Gradcheck(a) => {
            let samples = suite_samples(Suite::Gradcheck, a.check.samples)?;
            let seed = a.check.common.seed;
            let outcomes = match &a.mapping {
                Some(list) => checks::gradcheck_mappings(&parse_mappings(list)?, samples, seed)?,
                None => checks::gradcheck(&MappingKind::ALL, samples, seed)?,
            };
            run_checks(outcomes, &a.check.common.out, stdout)
        }
        Command::Rankcheck(a) => run_checks(checks::rankcheck(suite_samples(Suite::Rankcheck, a.samples)?, a.common.seed)?, &a.common.out, stdout),
        Command::Convexity(a) => run_checks(checks::convexity(suite_samples(Suite::Convexity, a.samples)?, a.common.seed)?, &a.common.out, stdout),
        Command::Identities(a) => run_checks(checks::identities(suite_samples(Suite::Identities, a.samples)?, a.common.seed)?, &a.common.out, stdout),
        Command::LimitGs(a) => run_checks(checks::limit_gs(suite_samples(Suite::LimitGs, a.samples)?, a.common.seed)?, &a.common.out, stdout),
        Command::Linearity(a) => {
            let cfg = LinearityConfig {
                mappings: parse_mappings(&a.mapping)?,
                samples: a.samples,
                eps: parse_eps_grid(&a.eps)?,
                seed: a.common.seed,
            };
            let report = experiments::run_linearity_jobs(&cfg, a.common.jobs)?;
            emit(&a.common.out, &report.to_csv(), stdout)?;
            Ok(EXIT_OK)
        }
        Command::Align(a) => run_align(&a, stdout),
        Command::Ik(a) => run_ik_cmd(&a, stdout),
        Command::ProbeRestricted(a) => run_probe(&a, stdout),
        Command::Report(a) => run_report(&a, stdout),
    }
}

/// Runs the command line on `args` (program name first) and returns the
/// exit code. Results go to `stdout` unless `--out` is given; diagnostics go
/// to standard error.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args = match expand_config(args.into_iter().map(Into::into).collect()) {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_USAGE;
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return if code == 0 { EXIT_OK } else { EXIT_USAGE };
        }
    };
    match dispatch(cli, stdout) {
        Ok(code) => code,
        Err(e @ (Error::InvalidConfig(_) | Error::InvalidLoss(_) | Error::Io(_))) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CHECK_FAILED
        }
    }
}

pub fn main() -> ExitCode {
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    let code = run(std::env::args_os(), &mut lock);
    let _ = lock.flush();
    ExitCode::from(code)
}
