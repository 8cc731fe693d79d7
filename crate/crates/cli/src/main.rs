use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use blda::admm::{solve_l1blda, write_trace_csv, AdmmConfig};
use blda::bench::{run_bench, RunConfig};
use blda::dataset::{
    load_csv, make_synthetic_fig1, normalize_minmax, split, LabelColumn, LabeledDataset,
};
use blda::eval::{dim_sweep, fit, knn1_accuracy};
use blda::{Error, ErrorKind, Method, ProjectionMatrix};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "blda",
    version,
    about = "Bhattacharyya-bound discriminant analysis toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fit a projection and save it as a text matrix.
    Fit(FitArgs),
    /// Project a CSV dataset with a saved matrix.
    Transform(TransformArgs),
    /// 1-NN accuracy of a saved projection, or a dimension sweep of a method.
    Eval(EvalArgs),
    /// Run a benchmark described by a JSON config.
    Bench(BenchArgs),
    /// Generate a synthetic dataset.
    Synth(SynthArgs),
}

#[derive(Args)]
struct DataArgs {
    /// CSV file, one sample per row.
    #[arg(long)]
    data: PathBuf,
    /// Label column name or 0-based index [default: "label", else the last column].
    #[arg(long)]
    label_column: Option<LabelColumn>,
    /// Min-max normalize features to [0, 1] first.
    #[arg(long)]
    normalize: bool,
}

impl DataArgs {
    fn load(&self) -> blda::Result<LabeledDataset> {
        let data = load_csv(&self.data, &self.label_column.clone().unwrap_or_default())?;
        Ok(if self.normalize {
            normalize_minmax(&data)
        } else {
            data
        })
    }
}

#[derive(Args, Default)]
struct AdmmArgs {
    #[arg(long)]
    rho: Option<f64>,
    #[arg(long)]
    eps_pri: Option<f64>,
    #[arg(long)]
    eps_dual: Option<f64>,
    #[arg(long)]
    it_max: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl AdmmArgs {
    fn apply(&self, base: AdmmConfig) -> AdmmConfig {
        AdmmConfig {
            rho: self.rho.unwrap_or(base.rho),
            eps_pri: self.eps_pri.unwrap_or(base.eps_pri),
            eps_dual: self.eps_dual.unwrap_or(base.eps_dual),
            it_max: self.it_max.unwrap_or(base.it_max),
            seed: self.seed.unwrap_or(base.seed),
            ..base
        }
    }
}

/// ADMM settings from the `admm` section of an optional JSON config.
fn base_admm(config: Option<&Path>) -> anyhow::Result<AdmmConfig> {
    let Some(path) = config else {
        return Ok(AdmmConfig::default());
    };
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| Error::Json(e.to_string()))?;
    match value.get("admm") {
        Some(section) => {
            Ok(serde_json::from_value(section.clone()).map_err(|e| Error::Json(e.to_string()))?)
        }
        None => Ok(AdmmConfig::default()),
    }
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    method: Method,
    /// Target dimension.
    #[arg(long, short)]
    d: usize,
    /// JSON config; only its `admm` section is read.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    admm: AdmmArgs,
    /// Also write the ADMM iteration trace (L1BLDA only).
    #[arg(long)]
    trace: Option<PathBuf>,
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Args)]
struct TransformArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    projection: PathBuf,
    #[arg(long, short)]
    output: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Training CSV.
    #[arg(long)]
    train: PathBuf,
    /// Test CSV; without it the training file is split.
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long)]
    label_column: Option<LabelColumn>,
    #[arg(long)]
    normalize: bool,
    #[arg(long, default_value_t = 0.7)]
    train_fraction: f64,
    /// Saved projection to score.
    #[arg(long, conflicts_with = "method")]
    projection: Option<PathBuf>,
    /// Method to sweep over dimensions 1..=d-max.
    #[arg(long)]
    method: Option<Method>,
    #[arg(long)]
    d_max: Option<usize>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    admm: AdmmArgs,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    d_max: Option<usize>,
    #[command(flatten)]
    admm: AdmmArgs,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    emit_trace: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    Fig1,
}

#[derive(Args)]
struct SynthArgs {
    kind: SynthKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    with_outliers: bool,
    #[arg(long, short)]
    output: PathBuf,
}

fn cmd_fit(args: &FitArgs) -> anyhow::Result<()> {
    let data = args.data.load()?;
    let admm = args.admm.apply(base_admm(args.config.as_deref())?);
    let projection = if args.method == Method::L1blda {
        data.check_trainable()?;
        let fitted = solve_l1blda(&data, args.d, &admm)?;
        if !fitted.converged {
            log::warn!(
                "ADMM stopped at it_max={} without meeting the residual tolerances",
                admm.it_max
            );
        }
        if let Some(path) = &args.trace {
            write_trace_csv(path, &fitted.trace)?;
        }
        fitted.projection
    } else {
        fit(args.method, &data, args.d, &admm)?
    };
    projection.save(&args.output, admm.seed)?;
    println!(
        "{} n={} d={} objective={} -> {}",
        projection.method,
        projection.n(),
        projection.d(),
        projection.objective,
        args.output.display()
    );
    Ok(())
}

fn cmd_transform(args: &TransformArgs) -> anyhow::Result<()> {
    let data = args.data.load()?;
    let (projection, _) = ProjectionMatrix::load(&args.projection)?;
    let projected = projection.project(&data)?;
    data.map_features(projected).write_csv(&args.output)?;
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> anyhow::Result<()> {
    let column = args.label_column.clone().unwrap_or_default();
    let prep = |d: LabeledDataset| {
        if args.normalize {
            normalize_minmax(&d)
        } else {
            d
        }
    };
    let admm = args.admm.apply(base_admm(args.config.as_deref())?);
    let (train, test) = match &args.test {
        Some(test) => (
            prep(load_csv(&args.train, &column)?),
            prep(load_csv(test, &column)?),
        ),
        None => split(
            &prep(load_csv(&args.train, &column)?),
            args.train_fraction,
            admm.seed,
            true,
        )?,
    };
    match (&args.projection, args.method) {
        (Some(path), _) => {
            let (projection, _) = ProjectionMatrix::load(path)?;
            println!("accuracy {:.4}", knn1_accuracy(&train, &test, &projection)?);
        }
        (None, Some(method)) => {
            let d_max = args.d_max.unwrap_or(train.num_features());
            let report = dim_sweep(&train, &test, method, d_max, &admm)?;
            for e in &report.per_dim {
                println!("{} dim={} accuracy={:.4}", method, e.dim, e.accuracy);
            }
            println!(
                "{} best {:.2} ({})",
                method, report.best.accuracy, report.best.dim
            );
        }
        (None, None) => {
            return Err(
                Error::InvalidParameter("eval needs --projection or --method".into()).into(),
            );
        }
    }
    Ok(())
}

fn cmd_bench(args: &BenchArgs) -> anyhow::Result<()> {
    let mut cfg = RunConfig::load(&args.config)?;
    cfg.admm = args.admm.apply(cfg.admm);
    if let Some(d) = args.d_max {
        cfg.d_max = Some(d);
        for entry in &mut cfg.datasets {
            entry.d_max = None;
        }
    }
    if let Some(out) = &args.output {
        cfg.output = out.clone();
    }
    if args.workers.is_some() {
        cfg.workers = args.workers;
    }
    if args.emit_trace {
        cfg.emit_trace = true;
    }
    let outcome = run_bench(&cfg)?;
    println!(
        "{} runs, {} failed, reports in {}",
        outcome.reports.len() + outcome.failures.len(),
        outcome.failures.len(),
        cfg.output.display()
    );
    for f in &outcome.failures {
        eprintln!(
            "failed: {} {} seed={} {}: {}",
            f.dataset, f.noise, f.seed, f.method, f.error
        );
    }
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> anyhow::Result<()> {
    let data = match args.kind {
        SynthKind::Fig1 => make_synthetic_fig1(args.seed, args.with_outliers),
    };
    data.write_csv(&args.output)?;
    println!(
        "{} samples -> {}",
        data.num_samples(),
        args.output.display()
    );
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>().map(Error::kind) {
        Some(ErrorKind::Usage) => 1,
        Some(ErrorKind::Numerical) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Transform(a) => cmd_transform(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Synth(a) => cmd_synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
