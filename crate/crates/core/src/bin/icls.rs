use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use icls::bench::{
    self, cross_validate, learning_curve, load_dataset_csv, summarize_cv,
    summarize_learning_curve, synthetic_two_gaussians, Dataset, LabeledSize, Method,
    ProtocolOptions, RepeatResult,
};
use icls::selfcheck;
use icls::theory1d::{theorem1_run, Distribution1D};

/// Semi-supervised least squares classification experiments.
#[derive(Parser)]
#[command(name = "icls", version, about)]
struct Cli {
    /// Worker threads for repeats and folds (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Error/loss curves over growing unlabeled-set sizes.
    LearningCurve(LearningCurveArgs),
    /// Repeated 10-fold cross-validation.
    Cv(CvArgs),
    /// Seeded trials of the 1-D never-worse guarantee.
    Theorem1(Theorem1Args),
    /// Run the built-in numerical property battery.
    Selfcheck(SelfcheckArgs),
}

#[derive(Args)]
struct DataArgs {
    /// CSV dataset with a header row.
    #[arg(long, conflicts_with = "synth")]
    data: Option<PathBuf>,

    /// Built-in synthetic dataset (alternative to --data): `gauss2` is a
    /// balanced pair of unit-variance Gaussian classes.
    #[arg(long, value_enum)]
    synth: Option<SynthKind>,

    /// Rows in the synthetic dataset.
    #[arg(long, default_value_t = 600)]
    synth_n: usize,

    /// Name of the label column in --data.
    #[arg(long, default_value = "class")]
    label_column: String,

    /// Label value mapped to class 1.
    #[arg(long, default_value = "1")]
    positive_label: String,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    Gauss2,
}

#[derive(Args)]
struct RunArgs {
    /// Comma-separated learners to fit.
    #[arg(long, default_value = "supervised,self,usm,icls,oracle")]
    methods: String,

    /// Master seed; all per-repeat randomness derives from it.
    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Labeled-set size override (default: max(d+5, 20)).
    #[arg(long = "L")]
    l: Option<usize>,

    /// Result file path (default: $ICLS_OUT_DIR or '.', derived name).
    #[arg(long)]
    output: Option<PathBuf>,

    /// Result file format.
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,

    /// Record wall-clock training times. Timings are machine noise, so this
    /// is off by default to keep result files byte-identical across runs.
    #[arg(long)]
    measure_time: bool,
}

#[derive(Args)]
struct LearningCurveArgs {
    #[command(flatten)]
    data: DataArgs,

    #[command(flatten)]
    run: RunArgs,

    /// Unlabeled-set sizes (default: 2,4,...,1024, truncated to feasibility).
    #[arg(long = "U", value_delimiter = ',')]
    u: Option<Vec<usize>>,

    /// Split repeats per U.
    #[arg(long, default_value_t = 1000)]
    repeats: usize,
}

#[derive(Args)]
struct CvArgs {
    #[command(flatten)]
    data: DataArgs,

    #[command(flatten)]
    run: RunArgs,

    /// Cross-validation repeats (fresh fold partition each).
    #[arg(long, default_value_t = 100)]
    repeats: usize,
}

#[derive(Args)]
struct Theorem1Args {
    /// Feature/label distribution for the 1-D harness.
    #[arg(long, value_enum, default_value_t = DistKind::UniformSign)]
    dist: DistKind,

    /// Labeled sample size per trial.
    #[arg(long = "L", default_value_t = 1)]
    l: usize,

    /// Number of seeded trials.
    #[arg(long, default_value_t = 10_000)]
    trials: usize,

    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Component mean for the gaussian-mixture distribution.
    #[arg(long, default_value_t = 1.0)]
    mu: f64,

    /// Component standard deviation for the gaussian-mixture distribution.
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,

    /// Optional CSV summary output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum DistKind {
    UniformSign,
    GaussianMixture,
}

impl DistKind {
    fn name(self) -> &'static str {
        match self {
            DistKind::UniformSign => "uniform-sign",
            DistKind::GaussianMixture => "gaussian-mixture",
        }
    }

    fn build(self, mu: f64, sigma: f64) -> Result<Distribution1D> {
        Ok(match self {
            DistKind::UniformSign => Distribution1D::uniform_sign(),
            DistKind::GaussianMixture => Distribution1D::gaussian_mixture(mu, sigma)?,
        })
    }
}

#[derive(Args)]
struct SelfcheckArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Jsonl,
}

impl OutputFormat {
    fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Jsonl => "jsonl",
        }
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .format_timestamp(None)
        .init();
    if let Err(err) = run(Cli::parse()) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .context("configuring the thread pool")?;
    }
    match cli.command {
        Command::LearningCurve(args) => run_learning_curve(args),
        Command::Cv(args) => run_cv(args),
        Command::Theorem1(args) => run_theorem1(args),
        Command::Selfcheck(args) => run_selfcheck(args),
    }
}

fn load_data(args: &DataArgs, seed: u64) -> Result<Dataset> {
    match (&args.data, args.synth) {
        (Some(path), None) => {
            load_dataset_csv(path, &args.label_column, &args.positive_label)
                .with_context(|| format!("loading {}", path.display()))
        }
        (None, Some(SynthKind::Gauss2)) => {
            let synth_seed =
                bench::seeding::derive_seed(seed, &[b"synth", &(args.synth_n as u64).to_le_bytes()]);
            Ok(synthetic_two_gaussians(args.synth_n, 1.0, synth_seed)?)
        }
        (None, None) => bail!("either --data or --synth is required"),
        (Some(_), Some(_)) => unreachable!("clap rejects --data with --synth"),
    }
}

fn output_paths(
    run: &RunArgs,
    command: &str,
    dataset: &str,
) -> Result<(PathBuf, PathBuf)> {
    let results = match &run.output {
        Some(path) => path.clone(),
        None => {
            let dir = std::env::var_os("ICLS_OUT_DIR")
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("."));
            dir.join(format!(
                "{command}_{dataset}_seed{}.{}",
                run.seed,
                run.format.extension()
            ))
        }
    };
    let summary = summary_path(&results);
    Ok((results, summary))
}

fn summary_path(results: &Path) -> PathBuf {
    let stem = results
        .file_stem()
        .map(|s| s.to_string_lossy().to_string())
        .unwrap_or_else(|| "results".to_string());
    results.with_file_name(format!("{stem}_summary.csv"))
}

fn write_results(format: OutputFormat, path: &Path, results: &[RepeatResult]) -> Result<()> {
    match format {
        OutputFormat::Csv => bench::io::write_results_csv(path, results)?,
        OutputFormat::Jsonl => bench::io::write_results_jsonl(path, results)?,
    }
    Ok(())
}

fn run_learning_curve(args: LearningCurveArgs) -> Result<()> {
    let data = load_data(&args.data, args.run.seed)?;
    let methods = Method::parse_list(&args.run.methods)?;
    let schedule = args.u.unwrap_or_else(bench::default_u_schedule);
    let l = args.run.l.map_or(LabeledSize::Auto, LabeledSize::Fixed);
    let opts = ProtocolOptions {
        intercept: true,
        measure_time: args.run.measure_time,
    };

    let results = learning_curve(&data, &methods, &schedule, args.repeats, args.run.seed, l, opts)?;
    let summary = summarize_learning_curve(&results)?;

    let (results_path, summary_path) = output_paths(&args.run, "learning-curve", &data.name)?;
    write_results(args.run.format, &results_path, &results)?;
    bench::io::write_lc_summary_csv(&summary_path, &summary)?;

    println!(
        "learning-curve on '{}' (n={}, d={}): {} rows -> {}",
        data.name,
        data.n(),
        data.dim(),
        results.len(),
        results_path.display()
    );
    println!("{:<12} {:>6} {:>12} {:>12} {:>12} {:>8}", "method", "U", "mean_error", "se", "mean_loss", "worse");
    for row in &summary {
        println!(
            "{:<12} {:>6} {:>12.4} {:>12.4} {:>12.4} {:>8}",
            row.method,
            row.u,
            row.mean_error,
            row.se_error,
            row.mean_test_loss,
            row.worse_than_supervised
                .map_or_else(|| "-".to_string(), |w| w.to_string()),
        );
    }
    println!("summary -> {}", summary_path.display());
    Ok(())
}

fn run_cv(args: CvArgs) -> Result<()> {
    let data = load_data(&args.data, args.run.seed)?;
    let methods = Method::parse_list(&args.run.methods)?;
    let l = args.run.l.map_or(LabeledSize::Auto, LabeledSize::Fixed);
    let opts = ProtocolOptions {
        intercept: true,
        measure_time: args.run.measure_time,
    };

    let results = cross_validate(&data, &methods, args.repeats, args.run.seed, l, opts)?;
    let summary = summarize_cv(&results)?;

    let (results_path, summary_path) = output_paths(&args.run, "cv", &data.name)?;
    write_results(args.run.format, &results_path, &results)?;
    bench::io::write_cv_summary_csv(&summary_path, &summary)?;

    println!(
        "cv on '{}' (n={}, d={}, repeats={}): -> {}",
        data.name,
        data.n(),
        data.dim(),
        args.repeats,
        results_path.display()
    );
    println!(
        "{:<12} {:>12} {:>12} {:>8} {:>12}",
        "method", "mean_error", "se", "worse", "wilcoxon_p"
    );
    for row in &summary {
        println!(
            "{:<12} {:>12.4} {:>12.4} {:>8} {:>12}",
            row.method,
            row.mean_error,
            row.se_error,
            row.worse_than_supervised
                .map_or_else(|| "-".to_string(), |w| w.to_string()),
            row.wilcoxon_p
                .map_or_else(|| "-".to_string(), |p| format!("{p:.4}")),
        );
    }
    println!("summary -> {}", summary_path.display());
    Ok(())
}

fn run_theorem1(args: Theorem1Args) -> Result<()> {
    let dist = args.dist.build(args.mu, args.sigma)?;
    let summary = theorem1_run(&dist, args.l, args.trials, args.seed)?;
    println!(
        "theorem1 dist={} L={} trials={} seed={}",
        args.dist.name(),
        args.l,
        args.trials,
        args.seed
    );
    println!("never_worse_fraction {:.4}", summary.never_worse_fraction);
    println!(
        "mean_improvement {:.6} (se {:.6})",
        summary.mean_improvement, summary.se_improvement
    );
    println!(
        "mean_risk_sup {:.6} mean_risk_semi {:.6}",
        summary.mean_risk_sup, summary.mean_risk_semi
    );

    if let Some(path) = &args.output {
        let mut csv = String::from(
            "dist,L,trials,seed,never_worse_fraction,mean_improvement,se_improvement,mean_risk_sup,mean_risk_semi\n",
        );
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            args.dist.name(),
            args.l,
            args.trials,
            args.seed,
            summary.never_worse_fraction,
            summary.mean_improvement,
            summary.se_improvement,
            summary.mean_risk_sup,
            summary.mean_risk_semi
        ));
        write_text_atomic(path, &csv)?;
        println!("summary -> {}", path.display());
    }
    Ok(())
}

fn write_text_atomic(path: &Path, text: &str) -> Result<()> {
    use std::io::Write;
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    let mut tmp = match dir {
        Some(d) => {
            std::fs::create_dir_all(d)?;
            tempfile::NamedTempFile::new_in(d)?
        }
        None => tempfile::NamedTempFile::new_in(".")?,
    };
    tmp.write_all(text.as_bytes())?;
    tmp.persist(path)?;
    Ok(())
}

fn run_selfcheck(args: SelfcheckArgs) -> Result<()> {
    let checks = selfcheck::run_all(args.seed)?;
    let mut failures = 0usize;
    for check in &checks {
        let status = if check.passed { "PASS" } else { "FAIL" };
        println!("[{status}] {} - {}", check.name, check.detail);
        if !check.passed {
            failures += 1;
        }
    }
    if failures > 0 {
        bail!("{failures} of {} checks failed", checks.len());
    }
    println!("all {} checks passed", checks.len());
    Ok(())
}
