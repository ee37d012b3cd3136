//! Command-line front end: `run`, `mc`, `smc` and `gen`.
//!
//! Exit status is 0 on success, 2 when the formula is outside the supported
//! fragment, and 1 for usage, parse and I/O errors.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::bench::{BenchError, Generator};
use crate::blackbox::{sample_scaffolded_until, wrap_whitebox};
use crate::ltl::{parse, Formula, LtlError, Monitor, Verdict};
use crate::mdp::{FiniteMemoryStrategy, Mdp, MdpError};
use crate::model_file::{load_mdp, write_mdp, ModelFileError};
use crate::orchestrator::{self, curve_csv, JsonLines, NullSink, Report, RunConfig, RunError};
use crate::pmc::{self, PmcError};
use crate::stats::{chernoff_sample_size, StatsError};
use crate::validator::{trace_verdict, DeltaMode, LengthPolicy};

#[derive(Debug, Parser)]
#[command(name = "probcheck", version, about = "Learn, model check and statistically validate black-box MDPs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Learn the system, synthesize a strategy and estimate its satisfaction probability.
    Run(RunArgs),
    /// Model check a known MDP and export the optimal strategy.
    Mc(McArgs),
    /// Estimate the satisfaction probability of a fixed strategy by sampling.
    Smc(SmcArgs),
    /// Write a generated benchmark model.
    Gen(GenArgs),
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct ModelSource {
    /// Model file in the plain-text MDP format.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Generator spec, e.g. `grid:4x4:seed=1`, `slot:limited`, `candidate`, `crash:0.1`.
    #[arg(long)]
    pub bench: Option<String>,
}

impl ModelSource {
    fn load(&self) -> Result<Mdp, CliError> {
        match (&self.model, &self.bench) {
            (Some(path), _) => Ok(load_mdp(path)?),
            (None, Some(spec)) => Ok(spec.parse::<Generator>()?.build()?),
            (None, None) => unreachable!("clap enforces one model source"),
        }
    }
}

impl fmt::Display for ModelSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.model, &self.bench) {
            (Some(path), _) => write!(f, "file:{}", path.display()),
            (None, Some(spec)) => write!(f, "bench:{spec}"),
            (None, None) => Ok(()),
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub source: ModelSource,
    #[arg(long)]
    pub formula: String,
    /// `key=value` lines; flags override them.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub budget: Option<u64>,
    #[arg(long = "N")]
    pub n: Option<usize>,
    #[arg(long)]
    pub tdelta: Option<f64>,
    #[arg(long)]
    pub wdelta: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub nmin: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "conv-rounds")]
    pub conv_rounds: Option<usize>,
    /// Independent runs with seeds `seed, seed+1, ...`; outputs get a `-<i>` suffix.
    #[arg(long, default_value_t = 1)]
    pub trials: usize,
    /// Report JSON path.
    #[arg(long, short = 'o', default_value = "report.json")]
    pub out: PathBuf,
    /// Curve CSV path; defaults to the report path with extension `curve.csv`.
    #[arg(long)]
    pub curve: Option<PathBuf>,
    /// Learned-MDP path; defaults to the report path with extension `hypothesis.mdp`.
    #[arg(long)]
    pub hypothesis: Option<PathBuf>,
    /// Event log, one JSON object per line.
    #[arg(long)]
    pub events: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub source: ModelSource,
    #[arg(long)]
    pub formula: String,
    /// Where to write the optimal strategy as JSON.
    #[arg(long, short = 'o')]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SmcArgs {
    #[command(flatten)]
    pub source: ModelSource,
    #[arg(long)]
    pub formula: String,
    /// Strategy JSON, as written by `mc`.
    #[arg(long)]
    pub strategy: PathBuf,
    #[arg(long, default_value_t = 0.01)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.01)]
    pub delta: f64,
    /// Sample count; overrides the Chernoff size.
    #[arg(long = "N")]
    pub n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Generator spec.
    pub spec: String,
    /// Output path; standard output when absent.
    #[arg(long, short = 'o')]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Formula(#[from] LtlError),
    #[error(transparent)]
    Pmc(#[from] PmcError),
    #[error(transparent)]
    Run(Box<RunError>),
    #[error(transparent)]
    Model(Box<ModelFileError>),
    #[error(transparent)]
    Bench(#[from] BenchError),
    #[error(transparent)]
    Mdp(#[from] MdpError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {msg}")]
    Json { path: String, msg: String },
    #[error("{path}, line {line}: {msg}")]
    Config { path: String, line: usize, msg: String },
    #[error("{0}")]
    Usage(String),
}

impl From<RunError> for CliError {
    fn from(e: RunError) -> Self {
        CliError::Run(Box::new(e))
    }
}

impl From<ModelFileError> for CliError {
    fn from(e: ModelFileError) -> Self {
        CliError::Model(Box::new(e))
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        let unsupported = match self {
            CliError::Pmc(e) => matches!(e, PmcError::UnsupportedFormula { .. }),
            CliError::Run(e) => e.is_unsupported_formula(),
            _ => false,
        };
        if unsupported {
            2
        } else {
            1
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(io_err(path))
}

/// Applies one `key=value` setting to `cfg`.
pub fn apply_setting(cfg: &mut RunConfig, key: &str, value: &str) -> Result<(), String> {
    fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
        v.parse()
            .map_err(|_| format!("`{v}` is not a valid value for `{key}`"))
    }
    match key {
        "n" | "N" => cfg.n = num(key, value)?,
        "tdelta" => cfg.tdelta = num(key, value)?,
        "wdelta" => cfg.wdelta = num(key, value)?,
        "alpha" => cfg.alpha = num(key, value)?,
        "nmin" | "n_min" => cfg.n_min = num(key, value)?,
        "refine_attempts" => cfg.refine_attempts = num(key, value)?,
        "budget" => cfg.budget = num(key, value)?,
        "seed" => cfg.seed = num(key, value)?,
        "check_every" => cfg.check_every = num(key, value)?,
        "conv_rounds" | "conv-rounds" => cfg.conv_rounds = num(key, value)?,
        "stop_on_convergence" => cfg.stop_on_convergence = num(key, value)?,
        "curve_every" => cfg.curve_every = num(key, value)?,
        "pmc_tolerance" => cfg.pmc_tolerance = num(key, value)?,
        "p_stop" => cfg.eq.p_stop = num(key, value)?,
        "decay" => cfg.eq.decay = num(key, value)?,
        "floor" => cfg.eq.floor = num(key, value)?,
        "traces_per_round" => cfg.eq.traces_per_round = num(key, value)?,
        "length_per_state" => cfg.lengths.per_state = num(key, value)?,
        "length_min" => cfg.lengths.min = num(key, value)?,
        "delta_mode" => {
            cfg.delta_mode = match value {
                "significance" => DeltaMode::Significance,
                "absolute_difference" => DeltaMode::AbsoluteDifference,
                _ => return Err(format!("`{value}` is not a delta mode")),
            }
        }
        _ => return Err(format!("unknown key `{key}`")),
    }
    Ok(())
}

/// Reads a `key=value` config file; `#` starts a comment.
pub fn load_config(path: &Path, cfg: &mut RunConfig) -> Result<(), CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| CliError::Config {
            path: path.display().to_string(),
            line: i + 1,
            msg,
        };
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| err("expected `key=value`".into()))?;
        apply_setting(cfg, k.trim(), v.trim()).map_err(err)?;
    }
    Ok(())
}

impl RunArgs {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            load_config(path, &mut cfg)?;
        }
        macro_rules! flag {
            ($field:ident, $target:expr) => {
                if let Some(v) = self.$field {
                    $target = v;
                }
            };
        }
        flag!(budget, cfg.budget);
        flag!(n, cfg.n);
        flag!(tdelta, cfg.tdelta);
        flag!(wdelta, cfg.wdelta);
        flag!(alpha, cfg.alpha);
        flag!(nmin, cfg.n_min);
        flag!(seed, cfg.seed);
        flag!(conv_rounds, cfg.conv_rounds);
        cfg.validate()?;
        Ok(cfg)
    }
}

/// `path` with `-<i>` inserted before the first extension, for trial `i`.
fn trial_path(path: &Path, trial: Option<usize>) -> PathBuf {
    let Some(i) = trial else {
        return path.to_path_buf();
    };
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let (stem, ext) = match name.split_once('.') {
        Some((s, e)) => (s.to_string(), format!(".{e}")),
        None => (name.clone(), String::new()),
    };
    path.with_file_name(format!("{stem}-{i}{ext}"))
}

/// `path` with everything after the first dot of its file name replaced.
fn sibling(path: &Path, ext: &str) -> PathBuf {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let stem = name.split('.').next().unwrap_or("report");
    path.with_file_name(format!("{stem}.{ext}"))
}

/// Serialized form of a CLI run: the library report plus its model source.
#[derive(serde::Serialize)]
struct CliReport<'a> {
    system: String,
    #[serde(flatten)]
    report: &'a Report,
}

fn run_one(
    args: &RunArgs,
    model: &Mdp,
    formula: &Formula,
    cfg: &RunConfig,
    trial: Option<usize>,
) -> Result<Report, CliError> {
    let mut sut = wrap_whitebox(model.clone(), cfg.seed);
    let report = match &args.events {
        Some(path) => {
            let path = trial_path(path, trial);
            let file = fs::File::create(&path).map_err(io_err(&path))?;
            let mut sink = JsonLines(BufWriter::new(file));
            let report = orchestrator::run(&mut sut, formula, cfg, &mut sink)?;
            sink.0.flush().map_err(io_err(&path))?;
            report
        }
        None => orchestrator::run(&mut sut, formula, cfg, &mut NullSink)?,
    };
    let out = trial_path(&args.out, trial);
    let json = serde_json::to_string_pretty(&CliReport {
        system: args.source.to_string(),
        report: &report,
    })
    .map_err(|e| CliError::Json {
        path: out.display().to_string(),
        msg: e.to_string(),
    })?;
    write_file(&out, &(json + "\n"))?;
    let curve = trial_path(args.curve.as_ref().unwrap_or(&sibling(&args.out, "curve.csv")), trial);
    write_file(&curve, &curve_csv(&report.curve))?;
    let hyp = trial_path(
        args.hypothesis.as_ref().unwrap_or(&sibling(&args.out, "hypothesis.mdp")),
        trial,
    );
    write_file(&hyp, &write_mdp(&report.hypothesis.mdp))?;
    Ok(report)
}

fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let formula = parse(&args.formula)?;
    pmc::classify(&formula)?;
    let cfg = args.resolve()?;
    let model = args.source.load()?;
    if args.trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    if args.trials == 1 {
        let r = run_one(args, &model, &formula, &cfg, None)?;
        writeln!(out, "{}", summary(&r)).ok();
        return Ok(());
    }
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());
    let mut results: Vec<Option<Result<Report, CliError>>> = (0..args.trials).map(|_| None).collect();
    for chunk in (0..args.trials).collect::<Vec<_>>().chunks(workers) {
        std::thread::scope(|scope| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|&i| {
                    let cfg = RunConfig {
                        seed: cfg.seed.wrapping_add(i as u64),
                        ..cfg.clone()
                    };
                    let (model, formula) = (&model, &formula);
                    (i, scope.spawn(move || run_one(args, model, formula, &cfg, Some(i))))
                })
                .collect();
            for (i, h) in handles {
                results[i] = Some(h.join().expect("trial thread panicked"));
            }
        });
    }
    for (i, r) in results.into_iter().enumerate() {
        let r = r.expect("every trial ran")?;
        writeln!(out, "trial {i}: {}", summary(&r)).ok();
    }
    Ok(())
}

fn summary(r: &Report) -> String {
    let est = r
        .final_estimate
        .map_or_else(|| "none".to_string(), |e| e.to_string());
    format!(
        "termination={} estimate={} best={} states={} steps={}",
        serde_json::to_value(r.termination)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default(),
        est,
        r.best_estimate,
        r.hypothesis.mdp.num_states(),
        r.steps_taken
    )
}

fn cmd_mc(args: &McArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let formula = parse(&args.formula)?;
    pmc::classify(&formula)?;
    let model = args.source.load()?;
    let res = pmc::check(&model, &formula)?;
    writeln!(out, "{}", res.value).ok();
    if let Some(path) = &args.out {
        let json = serde_json::to_string_pretty(&res.strategy).expect("strategies serialize");
        write_file(path, &(json + "\n"))?;
    }
    Ok(())
}

/// Result line of `smc`.
#[derive(Debug, serde::Serialize, serde::Deserialize, PartialEq)]
pub struct SmcSummary {
    pub estimate: f64,
    pub n: usize,
    pub n_overridden: bool,
    pub epsilon: f64,
    pub delta: f64,
    pub inconclusive: usize,
}

fn cmd_smc(args: &SmcArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let formula = parse(&args.formula)?;
    pmc::classify(&formula)?;
    let model = args.source.load()?;
    let text = fs::read_to_string(&args.strategy).map_err(io_err(&args.strategy))?;
    let strategy: FiniteMemoryStrategy = serde_json::from_str(&text).map_err(|e| CliError::Json {
        path: args.strategy.display().to_string(),
        msg: e.to_string(),
    })?;
    strategy.check_against(&model)?;
    let n = match args.n {
        Some(n) if n >= 1 => n,
        Some(_) => return Err(CliError::Usage("--N must be at least 1".into())),
        None => chernoff_sample_size(args.epsilon, args.delta)?,
    };
    let monitor = Monitor::new(&formula)?;
    let max_len = LengthPolicy::default().max_len(&monitor, model.num_states());
    let bounded = monitor.horizon().is_some();
    let mut sut = wrap_whitebox(model.clone(), args.seed);
    let (mut hits, mut inconclusive) = (0, 0);
    for _ in 0..n {
        let run = sample_scaffolded_until(&mut sut, &model, &strategy, max_len, |t| {
            !bounded && trace_verdict(&model, &monitor, t) != Verdict::Inconclusive
        });
        match trace_verdict(&model, &monitor, &run.trace) {
            Verdict::True => hits += 1,
            Verdict::Inconclusive => inconclusive += 1,
            Verdict::False => {}
        }
    }
    let summary = SmcSummary {
        estimate: hits as f64 / n as f64,
        n,
        n_overridden: args.n.is_some(),
        epsilon: args.epsilon,
        delta: args.delta,
        inconclusive,
    };
    writeln!(out, "{}", serde_json::to_string(&summary).expect("plain data")).ok();
    Ok(())
}

fn cmd_gen(args: &GenArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let model = args.spec.parse::<Generator>()?.build()?;
    let text = write_mdp(&model);
    match &args.out {
        Some(path) => write_file(path, &text),
        None => {
            write!(out, "{text}").ok();
            Ok(())
        }
    }
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Run(a) => cmd_run(a, out),
        Command::Mc(a) => cmd_mc(a, out),
        Command::Smc(a) => cmd_smc(a, out),
        Command::Gen(a) => cmd_gen(a, out),
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// exit status. Help and version requests exit 0.
pub fn main_with_args<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let text = e.render().to_string();
            if code == 0 {
                write!(out, "{text}").ok();
            } else {
                write!(err, "{text}").ok();
            }
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            writeln!(err, "error: {e}").ok();
            e.exit_code()
        }
    }
}
