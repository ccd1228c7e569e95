//! Command-line front end: `generate`, `split`, `train`, `evaluate`,
//! `inspect` and `compare`.
//!
//! Exit status is 0 on success, 2 for usage errors and 1 for I/O or
//! numerical failures.

use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use thiserror::Error;

use crate::dataseq::{
    generate_synthetic, parse_sequence_reader, serialize_sequence, split, DataError, Dims,
    SplitSpec, SyntheticConfig,
};
use crate::ekf::NoiseConfig;
use crate::report::{history_csv, write_report, ModelSection, RunReport};
use crate::trainer::{
    self, evaluate, grid_search_lambda, train_static_baseline, train_with_options, HyperParams,
    TrainError, TrainOptions, DEFAULT_SEED,
};
use crate::{Model, Sequence};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: {source}")]
    Data {
        path: PathBuf,
        #[source]
        source: DataError,
    },
    #[error("data: {0}")]
    Dataset(#[from] DataError),
    #[error("training: {0}")]
    Train(#[from] TrainError),
    #[error("{path}: invalid model file: {source}")]
    Model {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Dataset(DataError::InvalidConfig(_) | DataError::InvalidSplit(_)) => 2,
            CliError::Train(TrainError::InvalidHyper(_)) => 2,
            _ => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "eklf", version, about = "Kalman-filtered latent factor completion of dynamic graphs")]
pub struct Cli {
    /// Worker threads for the per-node and per-column solves (results do not
    /// depend on it).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Record all wall-clock fields as zero so repeated runs are byte-identical.
    #[arg(long, global = true)]
    pub reproducible: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a synthetic drifting sequence and its generating factors.
    Generate(GenerateArgs),
    /// Partition a sequence into train/validation/test files.
    Split(SplitArgs),
    /// Fit the filter/ALS model.
    Train(TrainArgs),
    /// Score a saved model on a held-out sequence.
    Evaluate(EvaluateArgs),
    /// Print dataset statistics.
    Inspect(InspectArgs),
    /// Split once, fit the model and the static baseline, report both.
    Compare(CompareArgs),
}

fn parse_dims(s: &str) -> Result<Dims, String> {
    let (m, t) = s
        .split_once(',')
        .ok_or_else(|| format!("expected M,T but got `{s}`"))?;
    let m = m.trim().parse().map_err(|_| format!("bad node count `{m}`"))?;
    let t = t.trim().parse().map_err(|_| format!("bad slot count `{t}`"))?;
    Ok(Dims::new(m, t))
}

/// Comma-separated `λ` values for `--lambda-grid`.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaGrid(pub Vec<f64>);

fn parse_list(s: &str) -> Result<LambdaGrid, String> {
    s.split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|_| format!("bad number `{v}`")))
        .collect::<Result<_, _>>()
        .map(LambdaGrid)
}

#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Dimensions `M,T` when the file has no `dims` header.
    #[arg(long, value_parser = parse_dims)]
    pub dims: Option<Dims>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long)]
    pub output: PathBuf,
    /// Ground-truth factors (JSON); defaults to `<output>.truth.json`.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value_t = 50)]
    pub nodes: usize,
    #[arg(long, default_value_t = 30)]
    pub slots: usize,
    #[arg(long, default_value_t = 4)]
    pub rank: usize,
    #[arg(long, default_value_t = 0.02)]
    pub density: f64,
    #[arg(long, default_value_t = 0.05)]
    pub drift: f64,
    #[arg(long, default_value_t = 0.05)]
    pub noise: f64,
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Args, Clone, Copy)]
pub struct SplitFlags {
    #[arg(long, default_value_t = 0.3)]
    pub train_frac: f64,
    #[arg(long, default_value_t = 0.1)]
    pub val_frac: f64,
    #[arg(long, default_value_t = 0.6)]
    pub test_frac: f64,
    /// Shuffle seed; defaults to the global seed.
    #[arg(long)]
    pub split_seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Output prefix; writes `<prefix>.train.txt`, `.val.txt`, `.test.txt`.
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub split: SplitFlags,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

#[derive(Debug, Args, Clone, Copy)]
pub struct HyperFlags {
    #[arg(long, default_value_t = 20)]
    pub rank: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0.01)]
    pub w_var: f64,
    #[arg(long, default_value_t = 0.1)]
    pub r_var: f64,
    #[arg(long, default_value_t = 1.0)]
    pub p0: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub err_threshold: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
}

impl HyperFlags {
    fn resolve(&self) -> Result<HyperParams<f64>, CliError> {
        let hyper = HyperParams {
            rank: self.rank,
            lambda: self.lambda,
            alpha: self.alpha,
            noise: NoiseConfig {
                w_var: self.w_var,
                r_var: self.r_var,
                p0: self.p0,
            },
            max_iters: self.max_iters,
            err_threshold: self.err_threshold,
            seed: self.seed,
        };
        hyper.validate()?;
        Ok(hyper)
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Validation sequence used for early stopping.
    #[arg(long)]
    pub val: Option<PathBuf>,
    /// Model file (JSON).
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub history_csv: Option<PathBuf>,
    /// Train once per value and keep the best on validation, e.g. `0.001,0.01,0.1`.
    #[arg(long, value_parser = parse_list)]
    pub lambda_grid: Option<LambdaGrid>,
    /// Check every filter covariance and include the summary in the history.
    #[arg(long)]
    pub audit: bool,
    #[command(flatten)]
    pub hyper: HyperFlags,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub split: SplitFlags,
    #[command(flatten)]
    pub hyper: HyperFlags,
}

/// Parses `argv` (including the program name), runs the command, and
/// returns the process exit status. Diagnostics go to `err`.
pub fn run_command<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{}", e.render());
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match cli.threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let mut buf = Vec::new();
            let res = pool.install(|| dispatch(cli, &mut buf));
            out.write_all(&buf).map_err(io_err(Path::new("<stdout>")))?;
            res
        }
        None => dispatch(cli, out),
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    let started = Instant::now();
    let clock = |r: &mut RunReport| {
        r.elapsed_seconds = if cli.reproducible {
            0.0
        } else {
            started.elapsed().as_secs_f64()
        };
    };
    match &cli.command {
        Command::Generate(a) => generate(a, out),
        Command::Split(a) => split_cmd(a, out),
        Command::Inspect(a) => inspect(a, out, clock),
        Command::Train(a) => train_cmd(a, cli.reproducible, out, clock),
        Command::Evaluate(a) => evaluate_cmd(a, out, clock),
        Command::Compare(a) => compare(a, cli.reproducible, out, clock),
    }
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_owned(),
        source,
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(io_err(path))
}

fn read_sequence(path: &Path, dims: Option<Dims>) -> Result<Sequence, CliError> {
    let file = File::open(path).map_err(io_err(path))?;
    parse_sequence_reader(BufReader::new(file), dims).map_err(|source| CliError::Data {
        path: path.to_owned(),
        source,
    })
}

fn say(out: &mut dyn Write, line: std::fmt::Arguments<'_>) -> Result<(), CliError> {
    out.write_fmt(line)
        .and_then(|_| out.write_all(b"\n"))
        .map_err(io_err(Path::new("<stdout>")))
}

fn generate(a: &GenerateArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let cfg = SyntheticConfig {
        nodes: a.nodes,
        slots: a.slots,
        rank: a.rank,
        density: a.density,
        drift_scale: a.drift,
        noise_sigma: a.noise,
        alpha: a.alpha,
        seed: a.seed,
    };
    let (seq, truth) = generate_synthetic::<f64>(&cfg)?;
    write_file(&a.output, &serialize_sequence(&seq))?;
    let truth_path = a.truth.clone().unwrap_or_else(|| {
        let mut p = a.output.clone().into_os_string();
        p.push(".truth.json");
        PathBuf::from(p)
    });
    let body = serde_json::to_string(&json!({ "config": cfg, "factors": truth }))
        .expect("factors serialize");
    write_file(&truth_path, &body)?;
    say(out, format_args!("{}", seq.stats()))
}

fn split_spec(flags: &SplitFlags, seed: u64) -> SplitSpec {
    SplitSpec::new(
        flags.train_frac,
        flags.val_frac,
        flags.test_frac,
        flags.split_seed.unwrap_or(seed),
    )
}

fn split_cmd(a: &SplitArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let seq = read_sequence(&a.input.input, a.input.dims)?;
    let spec = split_spec(&a.split, a.seed);
    let (tr, va, te) = split(&seq, &spec)?;
    for (part, name) in [(&tr, "train"), (&va, "val"), (&te, "test")] {
        let mut p = a.output.clone().into_os_string();
        p.push(format!(".{name}.txt"));
        write_file(Path::new(&p), &serialize_sequence(part))?;
    }
    say(
        out,
        format_args!("train {}  val {}  test {}", tr.len(), va.len(), te.len()),
    )
}

fn inspect(
    a: &InspectArgs,
    out: &mut dyn Write,
    clock: impl Fn(&mut RunReport),
) -> Result<(), CliError> {
    let seq = read_sequence(&a.input.input, a.input.dims)?;
    let stats = seq.stats();
    say(out, format_args!("{stats}"))?;
    if let Some(path) = &a.output {
        let mut r = RunReport::new("inspect", json!({ "dims": seq.dims() }), 0);
        r.stats = Some(stats);
        clock(&mut r);
        write_report(&r, path).map_err(io_err(path))?;
    }
    Ok(())
}

fn fit(
    a: &TrainArgs,
    tr: &Sequence,
    va: &Sequence,
    hyper: &HyperParams<f64>,
) -> Result<Model, CliError> {
    let model = match &a.lambda_grid {
        Some(_) if a.audit => {
            return Err(CliError::Usage(
                "--audit cannot be combined with --lambda-grid".into(),
            ))
        }
        Some(LambdaGrid(grid)) => grid_search_lambda(tr, va, hyper, grid)?,
        None => train_with_options(
            tr,
            va,
            hyper,
            &TrainOptions {
                audit_covariance: a.audit,
            },
        )?,
    };
    Ok(model)
}

fn train_cmd(
    a: &TrainArgs,
    reproducible: bool,
    out: &mut dyn Write,
    clock: impl Fn(&mut RunReport),
) -> Result<(), CliError> {
    let hyper = a.hyper.resolve()?;
    let tr = read_sequence(&a.input.input, a.input.dims)?;
    let va = match &a.val {
        Some(p) => read_sequence(p, Some(tr.dims()))?,
        None => Sequence::empty(tr.dims()),
    };
    let mut model = fit(a, &tr, &va, &hyper)?;
    if reproducible {
        model.clear_timings();
    }
    let body = serde_json::to_string(&model).expect("model serializes");
    write_file(&a.output, &body)?;

    let (eval_set, scored) = if va.is_empty() { ("train", &tr) } else { ("validation", &va) };
    let eval = evaluate(&model, scored)?;
    let mut r = RunReport::new(
        "train",
        json!({
            "hyper": model.hyper,
            "lambda_grid": a.lambda_grid.as_ref().map(|g| &g.0),
            "eval_set": eval_set,
            "dims": tr.dims(),
        }),
        model.hyper.seed,
    )
    .with_eval(&eval);
    r.stats = Some(tr.stats());
    r.history = model.history.clone();
    clock(&mut r);
    if let Some(path) = &a.report {
        write_report(&r, path).map_err(io_err(path))?;
    }
    if let Some(path) = &a.history_csv {
        write_file(path, &history_csv(&model.history))?;
    }
    say(
        out,
        format_args!(
            "iterations {}  best {}  {eval_set} rmse {}  mae {}",
            model.iterations_run, model.best_iteration, eval.rmse, eval.mae
        ),
    )
}

fn load_model(path: &Path) -> Result<Model, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|source| CliError::Model {
        path: path.to_owned(),
        source,
    })
}

fn evaluate_cmd(
    a: &EvaluateArgs,
    out: &mut dyn Write,
    clock: impl Fn(&mut RunReport),
) -> Result<(), CliError> {
    let model = load_model(&a.model)?;
    let test = read_sequence(&a.input, Some(model.dims))?;
    let eval = evaluate(&model, &test)?;
    let mut r = RunReport::new(
        "evaluate",
        json!({ "hyper": model.hyper, "kind": model.kind, "dims": model.dims }),
        model.hyper.seed,
    )
    .with_eval(&eval);
    r.stats = Some(test.stats());
    r.history = model.history.clone();
    clock(&mut r);
    if let Some(path) = &a.output {
        write_report(&r, path).map_err(io_err(path))?;
    }
    say(out, format_args!("rmse {}  mae {}  count {}", eval.rmse, eval.mae, eval.count))
}

fn compare(
    a: &CompareArgs,
    reproducible: bool,
    out: &mut dyn Write,
    clock: impl Fn(&mut RunReport),
) -> Result<(), CliError> {
    let hyper = a.hyper.resolve()?;
    let seq = read_sequence(&a.input.input, a.input.dims)?;
    let spec = split_spec(&a.split, hyper.seed);
    let (tr, va, te) = split(&seq, &spec)?;

    let mut eklf = trainer::train(&tr, &va, &hyper)?;
    let mut base = train_static_baseline(&tr, &va, &hyper)?;
    if reproducible {
        eklf.clear_timings();
        base.clear_timings();
    }
    let e_eval = evaluate(&eklf, &te)?;
    let b_eval = evaluate(&base, &te)?;

    let mut r = RunReport::new(
        "compare",
        json!({ "hyper": hyper, "split": spec, "dims": seq.dims() }),
        hyper.seed,
    )
    .with_eval(&e_eval);
    r.stats = Some(seq.stats());
    r.history = eklf.history.clone();
    r.baseline = Some(ModelSection::new(&base, &b_eval));
    clock(&mut r);
    write_report(&r, &a.output).map_err(io_err(&a.output))?;
    say(
        out,
        format_args!(
            "eklf rmse {} mae {}  |  static rmse {} mae {}",
            e_eval.rmse, e_eval.mae, b_eval.rmse, b_eval.mae
        ),
    )
}
