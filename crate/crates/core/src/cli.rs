//! Command-line front end.
//!
//! Every command writes its outputs plus a `manifest.json` into `--out`. The
//! manifest records the fully resolved argument list (with the seed made
//! explicit), so `stabtune replay --manifest DIR/manifest.json` regenerates the
//! same files. Exit codes: 0 success, 2 bad arguments, 3 bad data, 4 numerical
//! failure.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::data::{load_csv_with_split, Dataset};
use crate::error::{Error, ErrorClass, Result};
use crate::experiments::{
    alpha_sensitivity, real_data_study, run_study_with_jobs, scenario1_config, scenario1_standard_n,
    scenario2_config, summarize_real_data, write_aggregate_csv, write_alpha_csv, write_real_data_csv,
    write_real_data_summary_csv, write_replicates_csv, RealDataConfig, SimulationConfig, TrainSplit,
    DEFAULT_SEED,
};
use crate::report::{csv_io, csv_writer, fmt_float};
use crate::rng::StreamRng;
use crate::solvers::{log_grid, PenaltyKind};
use crate::tuning::{tune, Selection, SelectionCurve, Selector, TuningSettings};

pub const SEED_ENV: &str = "STABTUNE_SEED";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Parser, Debug)]
#[command(
    name = "stabtune",
    version,
    about = "Stability-based tuning for lasso, adaptive lasso and SCAD regression",
    after_help = "Any command also accepts --config FILE with `flag = value` lines; \
                  flags given on the command line take precedence. \
                  STABTUNE_SEED supplies the seed when --seed is absent."
)]
struct Cli {
    /// File of `flag = value` lines merged under the command-line flags.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Select lambda on a data file and refit the chosen model.
    #[command(args_override_self = true)]
    Tune(TuneArgs),
    /// Run a simulation study.
    #[command(args_override_self = true)]
    Simulate(SimulateArgs),
    /// Mean relative prediction error of lasso + kappa across alpha values.
    #[command(args_override_self = true)]
    Sensitivity(SensitivityArgs),
    /// Train/test evaluation of every penalty and criterion on a data file.
    #[command(args_override_self = true)]
    Realdata(RealDataArgs),
    /// Re-run a command from its manifest.
    Replay(ReplayArgs),
}

#[derive(Args, Debug, Clone, Serialize)]
struct GridArgs {
    /// log10 of the smallest lambda.
    #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
    grid_min: f64,
    /// log10 of the largest lambda.
    #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
    grid_max: f64,
    #[arg(long, default_value_t = 100)]
    grid_points: usize,
}

impl GridArgs {
    fn grid(&self) -> Result<Vec<f64>> {
        log_grid(self.grid_min, self.grid_max, self.grid_points)
    }
}

#[derive(Args, Debug, Clone, Serialize)]
struct SelectorArgs {
    /// Kappa selection keeps lambdas whose stability is within 1 - alpha of the maximum.
    #[arg(long, default_value_t = crate::stability::DEFAULT_ALPHA)]
    alpha: f64,
    /// Number of random half-splits for the stability estimate.
    #[arg(long, default_value_t = crate::stability::DEFAULT_SPLITS)]
    splits: usize,
    /// Cross-validation folds.
    #[arg(long, default_value_t = crate::criteria::DEFAULT_FOLDS)]
    folds: usize,
}

impl SelectorArgs {
    fn settings(&self) -> TuningSettings {
        TuningSettings {
            alpha: self.alpha,
            splits: self.splits,
            folds: self.folds,
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
struct RunArgs {
    /// Master seed; falls back to STABTUNE_SEED, then to a built-in default.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads. Results do not depend on this.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long, default_value = "stabtune-out")]
    out: PathBuf,
}

#[derive(Args, Debug, Clone, Serialize)]
struct TuneArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    response: String,
    /// lasso, adalasso or scad.
    #[arg(long, default_value = "lasso")]
    penalty: String,
    /// kappa, cp, bic, cv or gcv.
    #[arg(long, default_value = "kappa")]
    criterion: String,
    #[command(flatten)]
    select: SelectorArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct ScenarioArgs {
    /// 1: fixed p = 8; 2: p grows with n.
    #[arg(long, default_value_t = 1)]
    scenario: u8,
    #[arg(long)]
    n: usize,
    /// Noise level (scenario 2 only; scenario 1 uses 1).
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long, default_value_t = crate::experiments::DEFAULT_REPLICATES)]
    replicates: usize,
}

#[derive(Args, Debug, Clone, Serialize)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Comma-separated penalties.
    #[arg(long, default_value = "lasso,adalasso,scad")]
    penalties: String,
    /// Comma-separated criteria.
    #[arg(long, default_value = "kappa,cp,bic,cv,gcv")]
    criteria: String,
    #[command(flatten)]
    select: SelectorArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct SensitivityArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// `start:stop:step` (inclusive), a single value, or a comma-separated list.
    #[arg(long, default_value = "0:0.30:0.01")]
    alphas: String,
    #[command(flatten)]
    select: SelectorArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args, Debug, Clone, Serialize)]
struct RealDataArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    response: String,
    #[arg(long, default_value_t = 67)]
    train_size: usize,
    /// Column marking training rows; overrides --train-size.
    #[arg(long)]
    split_column: Option<String>,
    /// Number of random splits.
    #[arg(long, default_value_t = 1)]
    repeats: usize,
    #[arg(long, default_value = "lasso,adalasso,scad")]
    penalties: String,
    #[arg(long, default_value = "kappa,cp,bic,cv,gcv")]
    criteria: String,
    #[command(flatten)]
    select: SelectorArgs,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Extra flags appended to the recorded ones, e.g. `-- --out other --jobs 4`.
    #[arg(last = true)]
    extra: Vec<String>,
}

/// Written next to every set of outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// Resolved arguments, excluding the program name.
    pub args: Vec<String>,
    pub config: serde_json::Value,
    pub seed: u64,
    pub version: String,
    pub outputs: Vec<PathBuf>,
    pub duration_seconds: f64,
}

struct Outcome {
    config: serde_json::Value,
    outputs: Vec<PathBuf>,
}

/// Parse `args` (program name first), run the command and return the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    match run_inner(args) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e.class() {
        ErrorClass::Argument => 2,
        ErrorClass::Data => 3,
        ErrorClass::Numerical => 4,
    }
}

fn run_inner(args: Vec<OsString>) -> Result<i32> {
    let mut strings = Vec::with_capacity(args.len());
    for a in args {
        strings.push(
            a.into_string()
                .map_err(|a| Error::Argument(format!("argument is not valid UTF-8: {a:?}")))?,
        );
    }
    let program = if strings.is_empty() {
        "stabtune".to_string()
    } else {
        strings.remove(0)
    };
    let merged = merge_config(strings)?;
    dispatch(&program, merged)
}

fn dispatch(program: &str, args: Vec<String>) -> Result<i32> {
    let cli = match Cli::try_parse_from(std::iter::once(program.to_string()).chain(args.iter().cloned())) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return Ok(code);
        }
    };
    let started = Instant::now();
    let (name, seed, run, outcome) = match cli.command {
        Command::Replay(r) => return replay(program, &r),
        Command::Tune(a) => {
            let seed = resolve_seed(a.run.seed)?;
            ("tune", seed, a.run.clone(), with_jobs(a.run.jobs, || cmd_tune(&a, seed))?)
        }
        Command::Simulate(a) => {
            let seed = resolve_seed(a.run.seed)?;
            ("simulate", seed, a.run.clone(), cmd_simulate(&a, seed)?)
        }
        Command::Sensitivity(a) => {
            let seed = resolve_seed(a.run.seed)?;
            ("sensitivity", seed, a.run.clone(), with_jobs(a.run.jobs, || cmd_sensitivity(&a, seed))?)
        }
        Command::Realdata(a) => {
            let seed = resolve_seed(a.run.seed)?;
            ("realdata", seed, a.run.clone(), with_jobs(a.run.jobs, || cmd_realdata(&a, seed))?)
        }
    };
    let mut resolved = args;
    resolved.push("--seed".into());
    resolved.push(seed.to_string());
    let manifest = RunManifest {
        command: name.to_string(),
        args: resolved,
        config: outcome.config,
        seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        outputs: outcome.outputs,
        duration_seconds: started.elapsed().as_secs_f64(),
    };
    let path = run.out.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_text(&path, &(text + "\n"))?;
    Ok(0)
}

fn replay(program: &str, r: &ReplayArgs) -> Result<i32> {
    let text = fs::read_to_string(&r.manifest).map_err(|e| Error::Io {
        path: r.manifest.clone(),
        source: e,
    })?;
    let manifest: RunManifest = serde_json::from_str(&text)
        .map_err(|e| Error::Schema(format!("{}: not a run manifest: {e}", r.manifest.display())))?;
    let mut args = manifest.args;
    args.extend(r.extra.iter().cloned());
    dispatch(program, args)
}

fn resolve_seed(flag: Option<u64>) -> Result<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Argument(format!("{SEED_ENV}='{v}' is not an unsigned 64-bit integer"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match jobs {
        None => f(),
        Some(0) => Err(Error::Argument("--jobs must be at least 1".into())),
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::Argument(format!("cannot start {k} worker threads: {e}")))?
            .install(f),
    }
}

/// Pull `--config FILE` out of `args` and splice its flags in right after the
/// subcommand, so explicit flags (which come later) win.
fn merge_config(mut args: Vec<String>) -> Result<Vec<String>> {
    let mut config = None;
    let mut i = 0;
    while i < args.len() {
        if args[i] == "--" {
            break;
        }
        if args[i] == "--config" {
            if i + 1 >= args.len() {
                return Err(Error::Argument("--config needs a file".into()));
            }
            config = Some(PathBuf::from(args.remove(i + 1)));
            args.remove(i);
        } else if let Some(path) = args[i].strip_prefix("--config=") {
            config = Some(PathBuf::from(path));
            args.remove(i);
        } else {
            i += 1;
        }
    }
    let Some(path) = config else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })?;
    let (command, flags) = parse_config(&text)
        .map_err(|e| e.context(format!("config file {}", path.display())))?;
    let has_command = args.first().is_some_and(|a| !a.starts_with('-'));
    if !has_command {
        match command {
            Some(c) => args.insert(0, c),
            None => return Ok(args),
        }
    }
    let mut merged = vec![args.remove(0)];
    merged.extend(flags);
    merged.extend(args);
    Ok(merged)
}

/// `flag = value` lines (a leading `--` on the flag is optional, `_` reads as
/// `-`). `#` starts a comment. A `command` key names the subcommand.
fn parse_config(text: &str) -> Result<(Option<String>, Vec<String>)> {
    let mut command = None;
    let mut flags = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim(), v.trim()))
            .ok_or_else(|| Error::Argument(format!("line {}: expected `flag = value`", lineno + 1)))?;
        let key = key.trim_start_matches('-').replace('_', "-");
        if key.is_empty() {
            return Err(Error::Argument(format!("line {}: empty flag name", lineno + 1)));
        }
        let value = value.trim_matches('"');
        if key == "command" {
            command = Some(value.to_string());
        } else {
            flags.push(format!("--{key}"));
            flags.push(value.to_string());
        }
    }
    Ok((command, flags))
}

fn parse_list<T>(text: &str, parse: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    let items: Vec<T> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(parse)
        .collect::<Result<_>>()?;
    if items.is_empty() {
        return Err(Error::Argument(format!("empty list '{text}'")));
    }
    Ok(items)
}

/// Alpha values from `start:stop:step` (inclusive), `a,b,c` or a single value.
pub fn parse_alphas(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::Argument(format!("malformed alpha list '{spec}'"));
    let num = |s: &str| s.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(bad);
    let values = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(bad());
        }
        let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0) || stop < start {
            return Err(bad());
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        // Round away the drift of repeated decimal steps.
        (0..count)
            .map(|k| ((start + k as f64 * step) * 1e12).round() / 1e12)
            .collect()
    } else {
        parse_list(spec, |s| num(s))?
    };
    if let Some(a) = values.iter().find(|a| !(0.0..1.0).contains(*a)) {
        return Err(Error::Argument(format!("alpha must be in [0, 1), got {a}")));
    }
    Ok(values)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    write_text(path, &(serde_json::to_string_pretty(value).expect("json serializes") + "\n"))
}

fn cmd_tune(a: &TuneArgs, seed: u64) -> Result<Outcome> {
    let method = PenaltyKind::parse(&a.penalty)?;
    let selector: Selector = a.criterion.parse()?;
    let grid = a.grid.grid()?;
    let raw = crate::data::load_csv(&a.data, &a.response)?;
    let mut rng: StreamRng = crate::rng::substream(seed, 0);
    let model = tune(&raw, &method, &grid, selector, &a.select.settings(), &mut rng)?;
    let names = raw.column_names();

    create_dir(&a.run.out)?;
    let coef_path = a.run.out.join("coefficients.csv");
    let mut w = csv_writer(&coef_path)?;
    let io = |e| csv_io(&coef_path, e);
    w.write_record(["term", "estimate", "selected"]).map_err(io)?;
    w.write_record(["(intercept)".to_string(), fmt_float(model.intercept), "true".into()])
        .map_err(io)?;
    for (j, name) in names.iter().enumerate() {
        w.write_record([
            name.clone(),
            fmt_float(model.coefficients[j]),
            model.active.contains(j).to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Io {
        path: coef_path.clone(),
        source: e,
    })?;

    let curve_path = a.run.out.join("curve.csv");
    write_curve(&curve_path, &model.selection)?;

    let active: Vec<&str> = model.active.indices().iter().map(|&j| names[j].as_str()).collect();
    let summary_path = a.run.out.join("selection.json");
    let coefficients: serde_json::Map<String, serde_json::Value> = names
        .iter()
        .enumerate()
        .map(|(j, n)| (n.clone(), json!(model.coefficients[j])))
        .collect();
    write_json(
        &summary_path,
        &json!({
            "penalty": method.name(),
            "criterion": selector.name(),
            "lambda_hat": model.selection.lambda_hat,
            "lambda_index": model.selection.index,
            "active": active,
            "intercept": model.intercept,
            "coefficients": coefficients,
            "n": raw.n(),
            "p": raw.p(),
        }),
    )?;
    println!(
        "{} + {}: lambda = {}  active = {{{}}}",
        method.name(),
        selector,
        model.selection.lambda_hat,
        active.join(", ")
    );
    Ok(Outcome {
        config: json!({ "args": a, "seed": seed }),
        outputs: vec![coef_path, curve_path, summary_path],
    })
}

fn write_curve(path: &Path, selection: &Selection) -> Result<()> {
    let mut w = csv_writer(path)?;
    let io = |e| csv_io(path, e);
    match &selection.curve {
        SelectionCurve::Stability(curve) => {
            w.write_record(["lambda", "s_hat", "selected"]).map_err(io)?;
            for (k, (l, s)) in curve.lambda_grid.iter().zip(&curve.s_hat).enumerate() {
                w.write_record([fmt_float(*l), fmt_float(*s), (k == selection.index).to_string()])
                    .map_err(io)?;
            }
        }
        SelectionCurve::Scores(scores) => {
            w.write_record(["lambda", "score", "df", "sse", "selected"]).map_err(io)?;
            for (k, s) in scores.iter().enumerate() {
                w.write_record([
                    fmt_float(s.lambda),
                    fmt_float(s.score),
                    s.df_hat.to_string(),
                    fmt_float(s.sse),
                    (k == selection.index).to_string(),
                ])
                .map_err(io)?;
            }
        }
    }
    w.flush().map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn scenario_config(s: &ScenarioArgs) -> Result<SimulationConfig> {
    let mut config = match s.scenario {
        1 => {
            if let Some(sigma) = s.sigma {
                if sigma != 1.0 {
                    return Err(Error::Argument("scenario 1 fixes sigma = 1".into()));
                }
            }
            if !scenario1_standard_n(s.n) {
                eprintln!("warning: scenario 1 was designed for n in {{40, 60, 80}}, got {}", s.n);
            }
            scenario1_config(s.n)
        }
        2 => scenario2_config(s.n, s.sigma.unwrap_or(1.0)),
        other => return Err(Error::Argument(format!("unknown scenario {other}; use 1 or 2"))),
    };
    if s.n < 10 {
        return Err(Error::Argument(format!("n = {} is too small to simulate", s.n)));
    }
    config.replicates = s.replicates;
    Ok(config)
}

fn apply_common(config: &mut SimulationConfig, select: &SelectorArgs, grid: &GridArgs, seed: u64) -> Result<()> {
    config.alpha = select.alpha;
    config.splits = select.splits;
    config.folds = select.folds;
    config.lambda_grid = grid.grid()?;
    config.seed = seed;
    if !(0.0..1.0).contains(&config.alpha) {
        return Err(Error::Argument(format!("alpha must be in [0, 1), got {}", config.alpha)));
    }
    Ok(())
}

fn cmd_simulate(a: &SimulateArgs, seed: u64) -> Result<Outcome> {
    let mut config = scenario_config(&a.scenario)?;
    config.penalties = parse_list(&a.penalties, PenaltyKind::parse)?;
    config.criteria = parse_list(&a.criteria, str::parse)?;
    apply_common(&mut config, &a.select, &a.grid, seed)?;
    let jobs = a.run.jobs.unwrap_or_else(rayon::current_num_threads);
    if jobs == 0 {
        return Err(Error::Argument("--jobs must be at least 1".into()));
    }
    let report = run_study_with_jobs(&config, jobs)?;

    create_dir(&a.run.out)?;
    let rows_path = a.run.out.join("replicates.csv");
    let agg_path = a.run.out.join("aggregate.csv");
    let summary_path = a.run.out.join("summary.json");
    write_replicates_csv(&rows_path, &report.rows)?;
    write_aggregate_csv(&agg_path, &report.aggregates)?;
    write_json(
        &summary_path,
        &json!({ "config": config, "aggregates": report.aggregates }),
    )?;
    println!("penalty   criterion  true-set  mean C  mean I  median RPE  errors");
    for g in &report.aggregates {
        println!(
            "{:<9} {:<10} {:>8.2} {:>7.2} {:>7.2} {:>11.3} {:>7}",
            g.penalty, g.criterion, g.true_set_pct, g.mean_correct_zeros, g.mean_incorrect_zeros, g.rpe_median, g.errors
        );
    }
    Ok(Outcome {
        config: json!({ "args": a, "simulation": config }),
        outputs: vec![rows_path, agg_path, summary_path],
    })
}

fn cmd_sensitivity(a: &SensitivityArgs, seed: u64) -> Result<Outcome> {
    let alphas = parse_alphas(&a.alphas)?;
    let mut config = scenario_config(&a.scenario)?;
    config.penalties = vec![PenaltyKind::Lasso];
    config.criteria = vec![Selector::Kappa];
    apply_common(&mut config, &a.select, &a.grid, seed)?;
    let rows = alpha_sensitivity(&config, &alphas)?;
    create_dir(&a.run.out)?;
    let path = a.run.out.join("sensitivity.csv");
    write_alpha_csv(&path, &rows)?;
    for r in &rows {
        println!("alpha = {:.4}  mean RPE = {:.4}", r.alpha, r.mean_rpe);
    }
    Ok(Outcome {
        config: json!({ "args": a, "alphas": alphas, "simulation": config }),
        outputs: vec![path],
    })
}

fn cmd_realdata(a: &RealDataArgs, seed: u64) -> Result<Outcome> {
    let penalties = parse_list(&a.penalties, PenaltyKind::parse)?;
    let criteria = parse_list(&a.criteria, str::parse)?;
    let grid = a.grid.grid()?;
    let (raw, mask): (Dataset, Option<Vec<bool>>) =
        load_csv_with_split(&a.data, &a.response, a.split_column.as_deref())?;
    let split = match mask {
        Some(mask) => TrainSplit::Mask(mask),
        None => TrainSplit::Random(a.train_size),
    };
    let config = RealDataConfig {
        penalties,
        criteria,
        lambda_grid: grid,
        settings: a.select.settings(),
        split,
        repeats: a.repeats,
        seed,
    };
    let rows = real_data_study(&raw, &config)?;
    let summaries = summarize_real_data(&rows, raw.column_names());

    create_dir(&a.run.out)?;
    let rows_path = a.run.out.join("realdata.csv");
    let summary_path = a.run.out.join("realdata_summary.csv");
    write_real_data_csv(&rows_path, &rows)?;
    write_real_data_summary_csv(&summary_path, &summaries, raw.column_names())?;

    if config.repeats == 1 {
        println!("penalty   criterion  test PE   active set");
        for r in &rows {
            match &r.outcome {
                Ok(c) => println!(
                    "{:<9} {:<10} {:>7.3}   {{{}}}",
                    r.penalty,
                    r.criterion,
                    c.test_pe,
                    c.active.join(", ")
                ),
                Err(e) => println!("{:<9} {:<10} failed: {e}", r.penalty, r.criterion),
            }
        }
    } else {
        println!("penalty   criterion  median PE  mean PE  errors");
        for s in &summaries {
            println!(
                "{:<9} {:<10} {:>9.3} {:>8.3} {:>7}",
                s.penalty, s.criterion, s.median_pe, s.mean_pe, s.errors
            );
        }
    }
    Ok(Outcome {
        config: json!({ "args": a, "seed": seed }),
        outputs: vec![rows_path, summary_path],
    })
}
