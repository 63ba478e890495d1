//! `transprec` — dataset generation, model training, and experiment
//! orchestration for the precision/error surrogate pipeline.
//!
//! Errors print as a single `error: ...` line on stderr with a nonzero exit
//! code. The data directory defaults to `./data` and can be overridden with
//! `--data-dir` or the `TRANSPREC_DATA_DIR` environment variable.

use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use transprec_core::benchmarks::{by_name, catalog, fig1_expr};
use transprec_core::dataset::{
    build_dataset, extend_dataset, load, normalize_apply, normalize_fit, save,
};
use transprec_core::harness::{
    default_data_dir, emit_csv, emit_table, mae, run_experiment, split, ExperimentReport,
    ExperimentSpec,
};
use transprec_core::nn::{
    build_gcnn, save_model, train, uniform_augmenter, AugmentFn, LossKind, ModelSpec, Preset,
    TrainConfig, TrainData, GCNN_DEFAULT_CHANNELS,
};
use transprec_core::sampling::{lhs_configs, lhs_saturated};

#[derive(Parser)]
#[command(
    name = "transprec",
    about = "Precision/error datasets and knowledge-injected surrogate models",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a precision/error dataset for one benchmark.
    GenDataset(GenDatasetArgs),
    /// Train a single model on a dataset file and report test metrics.
    Train(TrainArgs),
    /// Run experiments described by a JSON spec file.
    Experiment(ExperimentArgs),
    /// Render a saved report as a table or CSV.
    Report(ReportArgs),
    /// List the benchmark catalog; optionally export dependency graphs.
    ListBenchmarks(ListArgs),
}

#[derive(Args)]
struct GenDatasetArgs {
    /// Benchmark name (fwt, saxpy, convolution, dwt, correlation,
    /// blackscholes, fig1).
    #[arg(long)]
    benchmark: String,
    /// Number of Latin-Hypercube-sampled configurations.
    #[arg(long, default_value_t = 800)]
    samples: usize,
    /// Input sets shared by every configuration.
    #[arg(long, default_value_t = 30)]
    inputs: usize,
    #[arg(long, default_value_t = 91)]
    seed: u64,
    /// Lower mantissa-width bound.
    #[arg(long, default_value_t = 2)]
    lo: u32,
    /// Upper mantissa-width bound.
    #[arg(long, default_value_t = 52)]
    hi: u32,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Append the per-assignment-edge features.
    #[arg(long, default_value_t = false)]
    extended: bool,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum ModelArg {
    Nn1,
    Nn2,
    Nn3,
    Nn4,
    Gcnn,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum RegimeArg {
    Base,
    Extended,
    Gcnn,
    Sbr,
}

#[derive(Args)]
struct TrainArgs {
    /// Dataset CSV produced by gen-dataset.
    #[arg(long)]
    dataset: PathBuf,
    #[arg(long, value_enum)]
    regime: RegimeArg,
    #[arg(long, value_enum)]
    model: ModelArg,
    /// Penalty weight for the sbr regime.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Augmented fraction of each combined batch (sbr regime).
    #[arg(long, default_value_t = 0.75)]
    aug_ratio: f64,
    #[arg(long, default_value_t = 200)]
    epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Training rows (remaining rows beyond test are unused).
    #[arg(long)]
    train_size: Option<usize>,
    /// Held-out rows for the MAE report.
    #[arg(long, default_value_t = 200)]
    test_size: usize,
    /// Where to save the trained model (optional).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON file holding one experiment spec or an array of them.
    #[arg(long)]
    spec_file: PathBuf,
    /// Where to write the JSON report (single object or array, matching the
    /// input).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Dataset cache directory (default: $TRANSPREC_DATA_DIR or ./data).
    #[arg(long)]
    data_dir: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    /// Report JSON written by `experiment`.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value = "table")]
    format: String,
}

#[derive(Args)]
struct ListArgs {
    /// Export each benchmark's dependency graph as an edge-list file into
    /// this directory.
    #[arg(long)]
    export_graphs: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {err:#}");
        std::process::exit(1);
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::GenDataset(args) => gen_dataset(args),
        Command::Train(args) => train_cmd(args),
        Command::Experiment(args) => experiment_cmd(args),
        Command::Report(args) => report_cmd(args),
        Command::ListBenchmarks(args) => list_benchmarks(args),
    }
}

fn gen_dataset(args: GenDatasetArgs) -> anyhow::Result<()> {
    let bench = by_name(&args.benchmark)?;
    if lhs_saturated(args.samples, args.lo, args.hi) {
        eprintln!(
            "note: {} samples saturate [{}, {}]; integer collisions are expected",
            args.samples, args.lo, args.hi
        );
    }
    let configs = lhs_configs(bench.n_var(), args.samples, args.lo, args.hi, args.seed)?;
    let mut ds = build_dataset(&bench, &configs, args.inputs, args.seed)?;
    if args.extended {
        ds = extend_dataset(&ds, bench.graph())?;
    }
    if let Some(parent) = args.out.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)?;
        }
    }
    save(&ds, &args.out)?;
    println!(
        "wrote {} samples x {} features to {}",
        ds.len(),
        ds.feature_width(),
        args.out.display()
    );
    Ok(())
}

fn train_cmd(args: TrainArgs) -> anyhow::Result<()> {
    let mut ds = load(&args.dataset)
        .with_context(|| format!("loading dataset {}", args.dataset.display()))?;
    let bench = by_name(&ds.benchmark_name)?;

    match (args.regime, &ds.feature_kind) {
        (RegimeArg::Extended, transprec_core::dataset::FeatureKind::Base) => {
            ds = extend_dataset(&ds, bench.graph())?;
        }
        (RegimeArg::Extended, _) => {} // already extended
        (_, transprec_core::dataset::FeatureKind::Extended) => {
            bail!(
                "regime {:?} needs a base-feature dataset",
                regime_name(args.regime)
            );
        }
        _ => {}
    }

    let test_size = args.test_size;
    let train_size = args
        .train_size
        .unwrap_or_else(|| ds.len().saturating_sub(test_size));
    let (train_idx, test_idx) = split(&ds, train_size, test_size, args.seed.wrapping_add(1))?;
    let stats = normalize_fit(&ds, &train_idx)?;
    let view = normalize_apply(&ds, &stats);

    let model_spec = match args.model {
        ModelArg::Nn1 => ModelSpec::preset(Preset::Nn1, bench.n_var(), ds.feature_width())?,
        ModelArg::Nn2 => ModelSpec::preset(Preset::Nn2, bench.n_var(), ds.feature_width())?,
        ModelArg::Nn3 => ModelSpec::preset(Preset::Nn3, bench.n_var(), ds.feature_width())?,
        ModelArg::Nn4 => ModelSpec::preset(Preset::Nn4, bench.n_var(), ds.feature_width())?,
        ModelArg::Gcnn => {
            if args.regime != RegimeArg::Gcnn {
                bail!("the gcnn model requires --regime gcnn");
            }
            build_gcnn(bench.graph(), &GCNN_DEFAULT_CHANNELS)?
        }
    };
    if args.regime == RegimeArg::Gcnn && args.model != ModelArg::Gcnn {
        bail!("--regime gcnn requires --model gcnn");
    }

    let features: Vec<Vec<f64>> = train_idx.iter().map(|&k| view.x[k].clone()).collect();
    let targets: Vec<f64> = train_idx.iter().map(|&k| view.y[k]).collect();
    let configs: Vec<_> = train_idx
        .iter()
        .map(|&k| ds.samples[k].config.clone())
        .collect();
    let data = TrainData {
        features: &features,
        targets: &targets,
        configs: &configs,
    };
    let cfg = TrainConfig {
        epochs: args.epochs,
        loss: if args.regime == RegimeArg::Sbr {
            LossKind::Sbr
        } else {
            LossKind::Mse
        },
        lambda: args.lambda,
        augmentation_ratio: if args.regime == RegimeArg::Sbr {
            args.aug_ratio
        } else {
            0.0
        },
        seed: args.seed,
        ..TrainConfig::default()
    };

    let mut aug = uniform_augmenter(bench.n_var(), 2, 52, stats.clone());
    let aug_arg: Option<&mut AugmentFn<'_>> = if args.regime == RegimeArg::Sbr {
        Some(&mut aug)
    } else {
        None
    };
    let model = train(&model_spec, &data, &cfg, aug_arg)?;

    let test_rows: Vec<Vec<f64>> = test_idx.iter().map(|&k| view.x[k].clone()).collect();
    let preds: Vec<f64> = model
        .predict(&test_rows)
        .into_iter()
        .map(|p| stats.denormalize_target(p))
        .collect();
    let truth: Vec<f64> = test_idx.iter().map(|&k| ds.samples[k].target).collect();
    println!(
        "trained {} on {} rows ({} epochs): test MAE {:.6} over {} rows",
        regime_name(args.regime),
        train_size,
        args.epochs,
        mae(&preds, &truth)?,
        test_size
    );
    if let Some(out) = args.out {
        save_model(&out, &model, &stats)?;
        println!("model saved to {}", out.display());
    }
    Ok(())
}

fn regime_name(r: RegimeArg) -> &'static str {
    match r {
        RegimeArg::Base => "base",
        RegimeArg::Extended => "extended",
        RegimeArg::Gcnn => "gcnn",
        RegimeArg::Sbr => "sbr",
    }
}

fn experiment_cmd(args: ExperimentArgs) -> anyhow::Result<()> {
    let data_dir = args.data_dir.unwrap_or_else(default_data_dir);
    let text = std::fs::read_to_string(&args.spec_file)
        .with_context(|| format!("reading {}", args.spec_file.display()))?;
    let (specs, array_input): (Vec<ExperimentSpec>, bool) = if text.trim_start().starts_with('[') {
        (serde_json::from_str(&text)?, true)
    } else {
        (vec![serde_json::from_str(&text)?], false)
    };

    let mut reports = Vec::with_capacity(specs.len());
    for spec in &specs {
        let report = run_experiment(spec, &data_dir)?;
        eprintln!(
            "{} / {} / {}: mean MAE {:.6} ({:.1}s)",
            spec.benchmark,
            spec.regime.as_str(),
            spec.model.as_str(),
            report.mean_mae,
            report.wall_clock_secs
        );
        reports.push(report);
    }

    print!("{}", emit_table(&reports));
    if let Some(out) = args.out {
        let json = if array_input {
            serde_json::to_string_pretty(&reports)?
        } else {
            serde_json::to_string_pretty(&reports[0])?
        };
        std::fs::write(&out, json)?;
        eprintln!("report written to {}", out.display());
    }
    Ok(())
}

fn report_cmd(args: ReportArgs) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))?;
    let reports: Vec<ExperimentReport> = if text.trim_start().starts_with('[') {
        serde_json::from_str(&text)?
    } else {
        vec![serde_json::from_str(&text)?]
    };
    match args.format.as_str() {
        "table" => print!("{}", emit_table(&reports)),
        "csv" => print!("{}", emit_csv(&reports)),
        other => bail!("unknown format `{other}` (expected table or csv)"),
    }
    Ok(())
}

fn list_benchmarks(args: ListArgs) -> anyhow::Result<()> {
    let mut all = catalog();
    all.push(fig1_expr());
    println!("{:<14} {:>6} {:>7}  input", "benchmark", "n_var", "edges");
    for bench in &all {
        println!(
            "{:<14} {:>6} {:>7}  {:?}",
            bench.name(),
            bench.n_var(),
            bench.graph().edges().len(),
            bench.input_shape()
        );
    }
    if let Some(dir) = args.export_graphs {
        std::fs::create_dir_all(&dir)?;
        for bench in &all {
            let path = dir.join(format!("{}.edges", bench.name()));
            std::fs::write(&path, bench.graph().to_edge_list())?;
        }
        println!("graphs exported to {}", dir.display());
    }
    Ok(())
}
