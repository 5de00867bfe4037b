//! `qdela`: run experiments, extract features from datasets, compare and plot
//! feature trajectories.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 I/O error.
//! Machine-readable output goes to stdout, progress notes to stderr.

mod plot;

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qdela::ela::{extract_all, ElaBudget, FeatureCode, FeatureGroup};
use qdela::harness::{self, records::format_f64, ExperimentConfig, RunRecord};
use qdela::problems::{make_problem, BehaviourKind, Domain};
use qdela::SplitRng;

use crate::plot::{plot_csv, render_svg, PlotSpec, Series};

#[derive(Parser)]
#[command(name = "qdela", version, about = "Quality-diversity runs and landscape features")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write records.csv plus the resolved config.
    Run(RunArgs),
    /// Print `code,value,status` for every feature of the selected groups.
    Features(FeaturesArgs),
    /// Mann-Whitney comparison of one feature between two records files.
    Compare(CompareArgs),
    /// Plot median and interquartile band of one feature as SVG.
    Plot(PlotArgs),
    /// Write a Latin-hypercube dataset CSV for a problem.
    Sample(SampleArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FeaturesArgs {
    #[arg(long)]
    dataset: PathBuf,
    /// Comma-separated groups: conv, distr, level, local, meta, nbc.
    #[arg(long, value_delimiter = ',', required = true)]
    groups: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Objective for conv and local.
    #[arg(long)]
    domain: Option<String>,
    /// Defaults to the dataset dimension.
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    behaviour: Option<String>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    #[arg(long)]
    feature: String,
    /// Checkpoint of both files, or of `--a` when `--at-b` is given.
    #[arg(long)]
    at: u64,
    /// Checkpoint of `--b`, e.g. the archive size of an LHS baseline.
    #[arg(long)]
    at_b: Option<u64>,
}

#[derive(Args)]
struct PlotArgs {
    /// Records files, one series each.
    #[arg(long = "in", value_delimiter = ',', num_args = 1.., required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long)]
    feature: String,
    /// SVG path; the plotted numbers go to the same path with a .csv extension.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    marker: Option<u64>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    domain: String,
    #[arg(long)]
    dim: usize,
    #[arg(long)]
    behaviour: Option<String>,
    #[arg(long)]
    m: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into() }
    }
}

impl From<qdela::Error> for Failure {
    fn from(e: qdela::Error) -> Self {
        let code = if matches!(e, qdela::Error::Io(_)) { 3 } else { 2 };
        Failure { code, message: e.to_string() }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure { code: 3, message: e.to_string() }
    }
}

type CmdResult = Result<(), Failure>;

fn open(path: &Path) -> Result<BufReader<File>, Failure> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Failure { code: 3, message: format!("{}: {e}", path.display()) })
}

fn read_records(path: &Path) -> Result<Vec<RunRecord>, Failure> {
    harness::read_records(open(path)?).map_err(|e| {
        let mut f = Failure::from(e);
        f.message = format!("{}: {}", path.display(), f.message);
        f
    })
}

fn threads_from_env() -> Result<Option<usize>, Failure> {
    match std::env::var("QDELA_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(Failure::usage(format!("QDELA_THREADS must be a positive integer, got `{v}`"))),
        },
        Err(_) => Ok(None),
    }
}

fn cmd_run(args: RunArgs) -> CmdResult {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| Failure { code: 3, message: format!("{}: {e}", args.config.display()) })?;
    let cfg = ExperimentConfig::from_toml(&text).map_err(|e| Failure::usage(format!("{}: {e}", args.config.display())))?;
    let threads = threads_from_env()?;
    eprintln!(
        "running {} x {} on {} d={} archive={}",
        cfg.runs, cfg.sampler, cfg.domain, cfg.dim, cfg.archive_size
    );
    let records = harness::run_experiment(&cfg, &args.out, threads)?;
    eprintln!(
        "wrote {} records to {}",
        records.len(),
        args.out.join(harness::RECORDS_FILE).display()
    );
    Ok(())
}

fn parse_groups(names: &[String]) -> Result<Vec<FeatureGroup>, Failure> {
    names
        .iter()
        .map(|g| g.trim().parse::<FeatureGroup>().map_err(Failure::from))
        .collect()
}

fn cmd_features(args: FeaturesArgs) -> CmdResult {
    let groups = parse_groups(&args.groups)?;
    let needs_objective = groups.iter().any(|g| g.needs_objective());
    if needs_objective && args.domain.is_none() {
        return Err(Failure::usage("groups conv and local need --domain (and optionally --dim)"));
    }
    let data = harness::read_dataset(open(&args.dataset)?)?;
    let root = SplitRng::new(args.seed);
    let problem = match &args.domain {
        Some(name) => {
            let domain: Domain = name.parse()?;
            let behaviour: BehaviourKind = match &args.behaviour {
                Some(b) => b.parse()?,
                None => domain.default_behaviour(),
            };
            let dim = args.dim.unwrap_or(data.dim());
            Some(make_problem(domain, behaviour, dim, &root.derive("problem"))?)
        }
        None => None,
    };
    let features = extract_all(&data, problem.as_ref(), &ElaBudget::default(), &groups, &root.derive("ela"))?;
    let mut out = BufWriter::new(io::stdout().lock());
    for (code, value) in &features.values {
        let v = value.value().map(format_f64).unwrap_or_default();
        writeln!(out, "{code},{v},{}", value.status())?;
    }
    out.flush()?;
    if features.evals_used > 0 {
        eprintln!("extra evaluations: {}", features.evals_used);
    }
    Ok(())
}

fn cmd_compare(args: CompareArgs) -> CmdResult {
    let code: FeatureCode = args.feature.parse()?;
    let a = read_records(&args.a)?;
    let b = read_records(&args.b)?;
    let at_b = args.at_b.unwrap_or(args.at);
    let c = harness::compare_at(&a, args.at, &b, at_b, code)?;
    println!("feature,U,p,n_a,n_b,median_a,median_b");
    println!(
        "{code},{},{},{},{},{},{}",
        c.test.u_statistic,
        format_f64(c.test.p_value),
        c.test.n_a,
        c.test.n_b,
        format_f64(c.median_a),
        format_f64(c.median_b)
    );
    Ok(())
}

/// `run/records.csv` is labelled `run`; any other file by its stem.
fn series_label(path: &Path) -> String {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    if stem == "records" {
        if let Some(parent) = path.parent().and_then(|p| p.file_name()) {
            return parent.to_string_lossy().into_owned();
        }
    }
    stem
}

fn cmd_plot(args: PlotArgs) -> CmdResult {
    let code: FeatureCode = args.feature.parse()?;
    let mut series = Vec::new();
    for path in &args.inputs {
        let records = read_records(path)?;
        let rows = harness::aggregate(&records, code)
            .map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
        series.push(Series { label: series_label(path), rows });
    }
    let spec = PlotSpec { code, series, marker: args.marker };
    let svg = render_svg(&spec).ok_or_else(|| Failure::usage(format!("{code} has no defined values to plot")))?;
    std::fs::write(&args.out, svg)?;
    let csv_path = args.out.with_extension("csv");
    std::fs::write(&csv_path, plot_csv(&spec))?;
    eprintln!("wrote {} and {}", args.out.display(), csv_path.display());
    Ok(())
}

fn cmd_sample(args: SampleArgs) -> CmdResult {
    let domain: Domain = args.domain.parse()?;
    let behaviour: BehaviourKind = match &args.behaviour {
        Some(b) => b.parse()?,
        None => domain.default_behaviour(),
    };
    let root = SplitRng::new(args.seed);
    let problem = make_problem(domain, behaviour, args.dim, &root.derive("problem"))?;
    let data = harness::lhs_dataset(&problem, args.m, &mut root.derive("lhs"))?;
    let mut w = BufWriter::new(File::create(&args.out)?);
    harness::write_dataset(&mut w, &data)?;
    w.flush()?;
    eprintln!("wrote {} samples to {}", data.len(), args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Features(a) => cmd_features(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Plot(a) => cmd_plot(a),
        Command::Sample(a) => cmd_sample(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
