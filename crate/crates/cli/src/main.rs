use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use keybench::benchtime::{time_pipeline, timing_csv, BenchError};
use keybench::dataset::{load_dataset, Dataset, Split};
use keybench::describe::DescriptorChoice;
use keybench::detect::DetectorKind;
use keybench::eval::{
    combination_table, extract_to_dir, run_evaluation, EvalConfig, EvalError, EvalReport, FeatureSource, Granularity,
    Task,
};
use keybench::pipeline::Pipeline;
use keybench::DetectorConfig;

const CONFIG_ERROR: u8 = 2;
const DATA_ERROR: u8 = 3;
const IO_ERROR: u8 = 1;

#[derive(Parser)]
#[command(
    name = "keybench",
    version,
    about = "Evaluate and time keypoint detector/descriptor pipelines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run verification, matching and retrieval on a dataset.
    Eval(EvalArgs),
    /// Write FEATB feature files for every image.
    Extract(ExtractArgs),
    /// Time detect+describe per image.
    Time(TimeArgs),
    /// Merge eval reports into one table per DET+DESC combination.
    Report(ReportArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, required_unless_present = "external", conflicts_with = "external")]
    detector: Option<String>,
    #[arg(long, required_unless_present = "external", conflicts_with = "external")]
    descriptor: Option<String>,
    /// Directory of <sequence>/<j>.feat files used instead of a built-in pipeline.
    #[arg(long)]
    external: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', default_value = "verification,matching,retrieval")]
    tasks: Vec<Task>,
    #[arg(long, default_value = "all")]
    split: Split,
    #[arg(long, default_value_t = 100)]
    n_queries: usize,
    #[arg(long, default_value_t = 5)]
    distractor_images: usize,
    #[arg(long, default_value_t = 1000)]
    distractor_keypoints: usize,
    #[arg(long, default_value_t = 5)]
    reps: u32,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 500)]
    max_keypoints: usize,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Score units without positives as 0 instead of skipping them.
    #[arg(long)]
    strict: bool,
    /// Score retrieval per query instead of per sequence.
    #[arg(long)]
    retrieval_per_query: bool,
}

#[derive(Args)]
struct ExtractArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    detector: String,
    #[arg(long)]
    descriptor: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 500)]
    max_keypoints: usize,
}

#[derive(Args)]
struct TimeArgs {
    #[arg(long)]
    data: PathBuf,
    /// One name or a comma-separated list.
    #[arg(long, value_delimiter = ',', required = true)]
    detector: Vec<String>,
    /// One name or a comma-separated list.
    #[arg(long, value_delimiter = ',', required = true)]
    descriptor: Vec<String>,
    #[arg(long, default_value_t = 2)]
    warmup: usize,
    #[arg(long, default_value_t = 3)]
    passes: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long = "in", required = true, num_args = 1..)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "matching")]
    rank_by: Task,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl ToString) -> Self {
        Self {
            code: CONFIG_ERROR,
            message: message.to_string(),
        }
    }

    fn data(message: impl ToString) -> Self {
        Self {
            code: DATA_ERROR,
            message: message.to_string(),
        }
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        if e.is_data_error() {
            Failure::data(e)
        } else {
            Failure::config(e)
        }
    }
}

fn pipeline(detector: &str, descriptor: &str, max_keypoints: usize) -> Result<Pipeline, Failure> {
    let det: DetectorKind = detector.parse().map_err(Failure::config)?;
    let desc: DescriptorChoice = descriptor.parse().map_err(Failure::config)?;
    let config = DetectorConfig {
        max_keypoints,
        ..DetectorConfig::default()
    };
    config.validate().map_err(Failure::config)?;
    Ok(Pipeline::new(det, desc, config))
}

fn dataset(root: &Path, split: Split) -> Result<Dataset, Failure> {
    load_dataset(root, split).map_err(Failure::data)
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure {
        code: IO_ERROR,
        message: format!("cannot write output: {e}"),
    };
    match out {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(io)?;
            }
            fs::write(path, text).map_err(io)
        }
        None => std::io::stdout().write_all(text.as_bytes()).map_err(io),
    }
}

fn eval(args: EvalArgs) -> Result<(), Failure> {
    let source = match &args.external {
        Some(dir) => FeatureSource::External(dir.clone()),
        None => FeatureSource::Pipeline(pipeline(
            args.detector.as_deref().unwrap_or_default(),
            args.descriptor.as_deref().unwrap_or_default(),
            args.max_keypoints,
        )?),
    };
    let cfg = EvalConfig {
        tasks: args.tasks,
        split: args.split,
        n_queries: args.n_queries,
        n_distractor_images: args.distractor_images,
        n_distractor_keypoints: args.distractor_keypoints,
        reps: args.reps,
        master_seed: args.seed,
        max_keypoints: args.max_keypoints,
        strict: args.strict,
        granularity: if args.retrieval_per_query {
            Granularity::Query
        } else {
            Granularity::Sequence
        },
    };
    cfg.validate()?;
    let ds = dataset(&args.data, args.split)?;
    let report = run_evaluation(&ds, &source, &cfg, true)?;
    let text = match args.format {
        Format::Json => report.to_json(),
        Format::Csv => report.to_csv().map_err(Failure::data)?,
    };
    emit(args.out.as_deref(), &text)
}

fn extract(args: ExtractArgs) -> Result<(), Failure> {
    let p = pipeline(&args.detector, &args.descriptor, args.max_keypoints)?;
    let ds = dataset(&args.data, Split::All)?;
    let n = extract_to_dir(&ds, &p, &args.out, true)?;
    eprintln!("wrote {n} feature files to {}", args.out.display());
    Ok(())
}

fn time(args: TimeArgs) -> Result<(), Failure> {
    let mut pipelines = Vec::new();
    for det in &args.detector {
        for desc in &args.descriptor {
            pipelines.push(pipeline(det, desc, DetectorConfig::default().max_keypoints)?);
        }
    }
    if args.passes == 0 {
        return Err(Failure::config("--passes must be at least 1"));
    }
    let ds = dataset(&args.data, Split::All)?;
    let mut results = Vec::new();
    for p in &pipelines {
        let r = time_pipeline(&ds, p, args.warmup, args.passes).map_err(|e| match e {
            BenchError::NoPasses => Failure::config(e),
            BenchError::ClockResolution(_) => Failure {
                code: IO_ERROR,
                message: e.to_string(),
            },
            BenchError::EmptyDataset | BenchError::NothingTimed { .. } => Failure::data(e),
        })?;
        if r.excluded > 0 {
            eprintln!("{}: {} images excluded after errors", p.label(), r.excluded);
        }
        results.push(r);
    }
    emit(args.out.as_deref(), &timing_csv(&results).map_err(Failure::data)?)
}

fn report(args: ReportArgs) -> Result<(), Failure> {
    let reports = args
        .inputs
        .iter()
        .map(|path| {
            let text = fs::read_to_string(path).map_err(|e| Failure::data(format!("{}: {e}", path.display())))?;
            EvalReport::from_json(&text).map_err(|e| Failure::data(format!("{}: {e}", path.display())))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let table = combination_table(&reports, args.rank_by).map_err(Failure::data)?;
    emit(args.out.as_deref(), &table)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { CONFIG_ERROR } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match cli.command {
        Command::Eval(a) => eval(a),
        Command::Extract(a) => extract(a),
        Command::Time(a) => time(a),
        Command::Report(a) => report(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
