//! Experiment orchestration: dataset caching, train/test splits, the
//! regime grid (base/extended features, graph topology, regularized loss),
//! and report emission.
//!
//! Reports are fully determined by their [`ExperimentSpec`]: dataset
//! generation, splits, initialization, and augmentation all derive from
//! seeds in the spec, and the base/extended regimes share one underlying
//! dataset so comparisons are paired. Wall-clock time is kept out of the
//! serialized report so identical specs serialize byte-identically.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::benchmarks::by_name;
use crate::dataset::{
    build_dataset, dataset_file_name, extend_dataset, load, normalize_apply, normalize_fit, save,
    Dataset, FeatureKind,
};
use crate::error::{Error, Result};
use crate::graph::violation_count;
use crate::nn::{
    build_gcnn, train, uniform_augmenter, AugmentFn, LossKind, ModelSpec, Preset, TrainConfig,
    TrainData, GCNN_DEFAULT_CHANNELS,
};
use crate::sampling::{lhs_configs, lhs_saturated};

/// Knowledge-injection regime of one experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// Plain per-variable precision features.
    Base,
    /// Base features plus one column per assignment edge.
    Extended,
    /// Graph-convolutional topology over the dependency graph.
    Gcnn,
    /// Dominance-hinge regularization with unlabeled augmentation.
    Sbr,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Base => "base",
            Regime::Extended => "extended",
            Regime::Gcnn => "gcnn",
            Regime::Sbr => "sbr",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelChoice {
    Nn1,
    Nn2,
    Nn3,
    Nn4,
    Gcnn,
}

impl ModelChoice {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelChoice::Nn1 => "nn1",
            ModelChoice::Nn2 => "nn2",
            ModelChoice::Nn3 => "nn3",
            ModelChoice::Nn4 => "nn4",
            ModelChoice::Gcnn => "gcnn",
        }
    }

    fn preset(self) -> Option<Preset> {
        match self {
            ModelChoice::Nn1 => Some(Preset::Nn1),
            ModelChoice::Nn2 => Some(Preset::Nn2),
            ModelChoice::Nn3 => Some(Preset::Nn3),
            ModelChoice::Nn4 => Some(Preset::Nn4),
            ModelChoice::Gcnn => None,
        }
    }
}

fn default_dataset_samples() -> usize {
    800
}
fn default_n_inputs() -> usize {
    30
}
fn default_dataset_seed() -> u64 {
    91
}
fn default_lo() -> u32 {
    2
}
fn default_hi() -> u32 {
    52
}
fn default_train_size() -> usize {
    500
}
fn default_test_size() -> usize {
    200
}
fn default_n_seeds() -> usize {
    5
}
fn default_epochs() -> usize {
    200
}
fn default_batch_size() -> usize {
    32
}
fn default_learning_rate() -> f64 {
    1e-3
}
fn default_sbr_ratio() -> f64 {
    0.75
}
fn default_lambda() -> f64 {
    1.0
}
fn default_sbr_batch_size() -> usize {
    256
}
fn default_split_seed() -> u64 {
    1000
}
fn default_train_seed() -> u64 {
    5000
}

/// One experiment: a benchmark, a regime, a model, and every seed and size
/// needed to reproduce the run. Desk-scale defaults keep a run in the
/// minutes range; the full-scale protocol values (5000-sample datasets,
/// 1000 epochs, 20 seeds) are plain field overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub benchmark: String,
    pub regime: Regime,
    pub model: ModelChoice,
    #[serde(default = "default_dataset_samples")]
    pub dataset_samples: usize,
    #[serde(default = "default_n_inputs")]
    pub n_inputs: usize,
    #[serde(default = "default_dataset_seed")]
    pub dataset_seed: u64,
    #[serde(default = "default_lo")]
    pub lo: u32,
    #[serde(default = "default_hi")]
    pub hi: u32,
    #[serde(default = "default_train_size")]
    pub train_size: usize,
    #[serde(default = "default_test_size")]
    pub test_size: usize,
    #[serde(default = "default_n_seeds")]
    pub n_seeds: usize,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_learning_rate")]
    pub learning_rate: f64,
    #[serde(default = "default_sbr_ratio")]
    pub sbr_ratio: f64,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_sbr_batch_size")]
    pub sbr_batch_size: usize,
    #[serde(default = "default_split_seed")]
    pub split_seed: u64,
    #[serde(default = "default_train_seed")]
    pub train_seed: u64,
}

impl ExperimentSpec {
    pub fn new(benchmark: &str, regime: Regime, model: ModelChoice) -> Self {
        Self {
            benchmark: benchmark.to_string(),
            regime,
            model,
            dataset_samples: default_dataset_samples(),
            n_inputs: default_n_inputs(),
            dataset_seed: default_dataset_seed(),
            lo: default_lo(),
            hi: default_hi(),
            train_size: default_train_size(),
            test_size: default_test_size(),
            n_seeds: default_n_seeds(),
            epochs: default_epochs(),
            batch_size: default_batch_size(),
            learning_rate: default_learning_rate(),
            sbr_ratio: default_sbr_ratio(),
            lambda: default_lambda(),
            sbr_batch_size: default_sbr_batch_size(),
            split_seed: default_split_seed(),
            train_seed: default_train_seed(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed_index: usize,
    /// Test MAE in denormalized target units.
    pub mae: f64,
    /// Dominance violations of the trained model over train-split pairs.
    pub train_violations: usize,
    /// Same count over test-split pairs.
    pub test_violations: usize,
    pub final_train_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub spec: ExperimentSpec,
    pub feature_width: usize,
    pub per_seed: Vec<SeedResult>,
    pub mean_mae: f64,
    pub mean_train_violations: f64,
    pub mean_test_violations: f64,
    /// Measured, not part of the canonical serialized report.
    #[serde(skip)]
    pub wall_clock_secs: f64,
}

/// Data directory: `TRANSPREC_DATA_DIR` when set, `./data` otherwise.
pub fn default_data_dir() -> PathBuf {
    std::env::var_os("TRANSPREC_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("data"))
}

/// Disjoint uniformly-random train/test index sets, deterministic per seed.
pub fn split(
    ds: &Dataset,
    train_size: usize,
    test_size: usize,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if train_size == 0 || test_size == 0 || train_size + test_size > ds.len() {
        return Err(Error::InfeasibleSplit {
            train: train_size,
            test: test_size,
            available: ds.len(),
        });
    }
    let mut idx: Vec<usize> = (0..ds.len()).collect();
    idx.shuffle(&mut StdRng::seed_from_u64(seed));
    let test = idx.split_off(train_size);
    Ok((idx, test[..test_size].to_vec()))
}

/// Mean absolute error.
pub fn mae(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() || predictions.is_empty() {
        return Err(Error::Shape(format!(
            "mae needs equal non-empty lengths, got {} vs {}",
            predictions.len(),
            targets.len()
        )));
    }
    Ok(predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t).abs())
        .sum::<f64>()
        / predictions.len() as f64)
}

/// Loads the cached base dataset for a spec, generating and saving it when
/// absent. The cache key embeds benchmark, sample count, and dataset seed.
pub fn load_or_build_dataset(spec: &ExperimentSpec, data_dir: &Path) -> Result<Dataset> {
    let bench = by_name(&spec.benchmark)?;
    let file = data_dir.join(dataset_file_name(
        bench.name(),
        FeatureKind::Base,
        spec.dataset_samples,
        spec.dataset_seed,
    ));
    if file.exists() {
        let ds = load(&file)?;
        if ds.benchmark_name != bench.name() || ds.len() != spec.dataset_samples {
            return Err(Error::InvalidArgument(format!(
                "cached dataset {} does not match the spec",
                file.display()
            )));
        }
        return Ok(ds);
    }
    if lhs_saturated(spec.dataset_samples, spec.lo, spec.hi) {
        eprintln!(
            "note: {} samples saturate the integer range [{}, {}]; collisions are expected",
            spec.dataset_samples, spec.lo, spec.hi
        );
    }
    let configs = lhs_configs(
        bench.n_var(),
        spec.dataset_samples,
        spec.lo,
        spec.hi,
        spec.dataset_seed,
    )?;
    let ds = build_dataset(&bench, &configs, spec.n_inputs, spec.dataset_seed)?;
    fs::create_dir_all(data_dir)?;
    save(&ds, &file)?;
    Ok(ds)
}

/// Runs one experiment end to end: dataset, per-seed splits, training,
/// test MAE, and dominance-violation counts on both splits.
pub fn run_experiment(spec: &ExperimentSpec, data_dir: &Path) -> Result<ExperimentReport> {
    let started = Instant::now();
    let bench = by_name(&spec.benchmark)?;
    if spec.n_seeds == 0 {
        return Err(Error::InvalidArgument("n_seeds must be >= 1".into()));
    }
    match (spec.regime, spec.model) {
        (Regime::Gcnn, ModelChoice::Gcnn) => {}
        (Regime::Gcnn, other) => {
            return Err(Error::InvalidArgument(format!(
                "gcnn regime needs the gcnn model, got {}",
                other.as_str()
            )))
        }
        (_, ModelChoice::Gcnn) => {
            return Err(Error::InvalidArgument(
                "gcnn model only runs under the gcnn regime".into(),
            ))
        }
        _ => {}
    }

    let base = load_or_build_dataset(spec, data_dir)?;
    let ds = match spec.regime {
        Regime::Extended => extend_dataset(&base, bench.graph())?,
        _ => base,
    };

    let model_spec = match spec.model.preset() {
        Some(p) => ModelSpec::preset(p, bench.n_var(), ds.feature_width())?,
        None => build_gcnn(bench.graph(), &GCNN_DEFAULT_CHANNELS)?,
    };

    let mut per_seed = Vec::with_capacity(spec.n_seeds);
    for i in 0..spec.n_seeds {
        let (train_idx, test_idx) = split(
            &ds,
            spec.train_size,
            spec.test_size,
            spec.split_seed + i as u64,
        )?;
        let stats = normalize_fit(&ds, &train_idx)?;
        let view = normalize_apply(&ds, &stats);

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
            epochs: spec.epochs,
            batch_size: spec.batch_size,
            learning_rate: spec.learning_rate,
            loss: if spec.regime == Regime::Sbr {
                LossKind::Sbr
            } else {
                LossKind::Mse
            },
            lambda: spec.lambda,
            augmentation_ratio: if spec.regime == Regime::Sbr {
                spec.sbr_ratio
            } else {
                0.0
            },
            sbr_batch_size: spec.sbr_batch_size,
            seed: spec.train_seed + i as u64,
            ..TrainConfig::default()
        };

        let mut aug = uniform_augmenter(bench.n_var(), spec.lo, spec.hi, stats.clone());
        let aug_arg: Option<&mut AugmentFn<'_>> = if spec.regime == Regime::Sbr {
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
        let seed_mae = mae(&preds, &truth)?;

        let count_violations = |idx: &[usize]| -> Result<usize> {
            let subset: Vec<_> = idx.iter().map(|&k| ds.samples[k].config.clone()).collect();
            let rows: Vec<Vec<f64>> = idx.iter().map(|&k| view.x[k].clone()).collect();
            let preds: Vec<f64> = model
                .predict(&rows)
                .into_iter()
                .map(|p| stats.denormalize_target(p))
                .collect();
            let by_config: HashMap<Vec<u32>, f64> = subset
                .iter()
                .map(|c| c.precisions().to_vec())
                .zip(preds.iter().copied())
                .collect();
            violation_count(|c| by_config[c.precisions()], &subset)
        };

        per_seed.push(SeedResult {
            seed_index: i,
            mae: seed_mae,
            train_violations: count_violations(&train_idx)?,
            test_violations: count_violations(&test_idx)?,
            final_train_loss: model.history.last().copied().unwrap_or(f64::NAN),
        });
    }

    let n = per_seed.len() as f64;
    Ok(ExperimentReport {
        feature_width: ds.feature_width(),
        mean_mae: per_seed.iter().map(|r| r.mae).sum::<f64>() / n,
        mean_train_violations: per_seed
            .iter()
            .map(|r| r.train_violations as f64)
            .sum::<f64>()
            / n,
        mean_test_violations: per_seed
            .iter()
            .map(|r| r.test_violations as f64)
            .sum::<f64>()
            / n,
        per_seed,
        spec: spec.clone(),
        wall_clock_secs: started.elapsed().as_secs_f64(),
    })
}

fn table_columns(r: &ExperimentReport) -> [String; 7] {
    [
        r.spec.benchmark.clone(),
        r.spec.regime.as_str().to_string(),
        r.spec.model.as_str().to_string(),
        r.spec.train_size.to_string(),
        format!("{:.4}", r.mean_mae),
        format!("{:.1}", r.mean_train_violations),
        format!("{:.1}", r.mean_test_violations),
    ]
}

/// Aligned text table with an `Average` row over the numeric columns.
pub fn emit_table(reports: &[ExperimentReport]) -> String {
    let header = [
        "Benchmark",
        "Regime",
        "Model",
        "Train",
        "MAE",
        "Viol(train)",
        "Viol(test)",
    ];
    let mut rows: Vec<[String; 7]> = reports.iter().map(table_columns).collect();
    if !reports.is_empty() {
        let n = reports.len() as f64;
        rows.push([
            "Average".to_string(),
            String::new(),
            String::new(),
            String::new(),
            format!("{:.4}", reports.iter().map(|r| r.mean_mae).sum::<f64>() / n),
            format!(
                "{:.1}",
                reports.iter().map(|r| r.mean_train_violations).sum::<f64>() / n
            ),
            format!(
                "{:.1}",
                reports.iter().map(|r| r.mean_test_violations).sum::<f64>() / n
            ),
        ]);
    }
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let mut out = String::new();
    let fmt_row = |cells: &[String]| -> String {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let header_cells: Vec<String> = header.iter().map(|s| s.to_string()).collect();
    out.push_str(&fmt_row(&header_cells));
    out.push('\n');
    let _ = writeln!(
        out,
        "{}",
        "-".repeat(widths.iter().sum::<usize>() + 2 * (widths.len() - 1))
    );
    for row in &rows {
        out.push_str(&fmt_row(row));
        out.push('\n');
    }
    out
}

/// Machine-readable companion of [`emit_table`]: full-precision values, one
/// row per report plus the `Average` row.
pub fn emit_csv(reports: &[ExperimentReport]) -> String {
    let mut out = String::from(
        "benchmark,regime,model,train_size,mean_mae,mean_train_violations,mean_test_violations\n",
    );
    for r in reports {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.spec.benchmark,
            r.spec.regime.as_str(),
            r.spec.model.as_str(),
            r.spec.train_size,
            r.mean_mae,
            r.mean_train_violations,
            r.mean_test_violations
        );
    }
    if !reports.is_empty() {
        let n = reports.len() as f64;
        let _ = writeln!(
            out,
            "Average,,,,{},{},{}",
            reports.iter().map(|r| r.mean_mae).sum::<f64>() / n,
            reports.iter().map(|r| r.mean_train_violations).sum::<f64>() / n,
            reports.iter().map(|r| r.mean_test_violations).sum::<f64>() / n
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::PrecisionConfig;

    fn tiny_dataset(n: usize) -> Dataset {
        let bench = crate::benchmarks::fig1_expr();
        let configs = lhs_configs(4, n, 2, 52, 3).unwrap();
        build_dataset(&bench, &configs, 2, 5).unwrap()
    }

    #[test]
    fn split_properties() {
        let ds = tiny_dataset(40);
        let (train, test) = split(&ds, 25, 10, 7).unwrap();
        assert_eq!(train.len(), 25);
        assert_eq!(test.len(), 10);
        assert!(train.iter().all(|i| !test.contains(i)));
        let (train2, test2) = split(&ds, 25, 10, 7).unwrap();
        assert_eq!(train, train2);
        assert_eq!(test, test2);
        let (train3, _) = split(&ds, 25, 10, 8).unwrap();
        assert_ne!(train, train3);
        assert!(matches!(
            split(&ds, 35, 10, 1),
            Err(Error::InfeasibleSplit { .. })
        ));
    }

    #[test]
    fn mae_examples() {
        assert_eq!(mae(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), 0.0);
        assert_eq!(mae(&[1.0, 3.0], &[2.0, 2.0]).unwrap(), 1.0);
        assert_eq!(
            mae(&[1.0, 3.0], &[2.0, 2.0]).unwrap(),
            mae(&[3.0, 1.0], &[2.0, 2.0]).unwrap()
        );
        assert!(mae(&[1.0], &[1.0, 2.0]).is_err());
        assert!(mae(&[], &[]).is_err());
    }

    fn quick_spec(regime: Regime, model: ModelChoice) -> ExperimentSpec {
        let mut spec = ExperimentSpec::new("fig1", regime, model);
        spec.dataset_samples = 60;
        spec.n_inputs = 2;
        spec.train_size = 30;
        spec.test_size = 20;
        spec.n_seeds = 2;
        spec.epochs = 5;
        spec.sbr_batch_size = 32;
        spec
    }

    #[test]
    fn run_experiment_covers_all_regimes() {
        let dir = tempfile::tempdir().unwrap();
        for (regime, model, width) in [
            (Regime::Base, ModelChoice::Nn1, 4),
            (Regime::Extended, ModelChoice::Nn1, 7),
            (Regime::Gcnn, ModelChoice::Gcnn, 4),
            (Regime::Sbr, ModelChoice::Nn1, 4),
        ] {
            let report = run_experiment(&quick_spec(regime, model), dir.path()).unwrap();
            assert_eq!(report.feature_width, width, "{}", regime.as_str());
            assert_eq!(report.per_seed.len(), 2);
            let want =
                report.per_seed.iter().map(|r| r.mae).sum::<f64>() / report.per_seed.len() as f64;
            assert_eq!(report.mean_mae, want);
            assert!(report.wall_clock_secs > 0.0);
        }
        // The cached dataset file landed under the data dir.
        assert!(dir
            .path()
            .join(dataset_file_name("fig1", FeatureKind::Base, 60, 91))
            .exists());
    }

    #[test]
    fn run_experiment_is_byte_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let spec = quick_spec(Regime::Base, ModelChoice::Nn1);
        let a = run_experiment(&spec, dir.path()).unwrap();
        let b = run_experiment(&spec, dir.path()).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn regime_model_mismatches_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let bad = quick_spec(Regime::Gcnn, ModelChoice::Nn1);
        assert!(run_experiment(&bad, dir.path()).is_err());
        let bad = quick_spec(Regime::Base, ModelChoice::Gcnn);
        assert!(run_experiment(&bad, dir.path()).is_err());
    }

    /// Base and extended runs of one spec consume the same cached samples,
    /// differing only in feature columns, so comparisons are paired.
    #[test]
    fn base_and_extended_share_samples() {
        let dir = tempfile::tempdir().unwrap();
        let spec = quick_spec(Regime::Base, ModelChoice::Nn1);
        run_experiment(&spec, dir.path()).unwrap();
        let base = load_or_build_dataset(&spec, dir.path()).unwrap();
        let mut ext_spec = spec.clone();
        ext_spec.regime = Regime::Extended;
        run_experiment(&ext_spec, dir.path()).unwrap();
        let again = load_or_build_dataset(&ext_spec, dir.path()).unwrap();
        assert_eq!(base, again);
    }

    /// The full train-size ladder runs end to end on the cheap fixture.
    #[test]
    fn train_size_sweep_runs() {
        let dir = tempfile::tempdir().unwrap();
        let mut spec = ExperimentSpec::new("fig1", Regime::Base, ModelChoice::Nn1);
        spec.dataset_samples = 5250;
        spec.n_inputs = 3;
        spec.test_size = 200;
        spec.n_seeds = 1;
        spec.epochs = 2;
        let mut maes = Vec::new();
        for train_size in [500usize, 1000, 2000, 5000] {
            spec.train_size = train_size;
            let report = run_experiment(&spec, dir.path()).unwrap();
            assert_eq!(report.per_seed.len(), 1);
            maes.push(report.mean_mae);
        }
        assert!(maes.iter().all(|m| m.is_finite()));
    }

    #[test]
    fn violation_counts_use_dominance_pairs() {
        // Chain configs guarantee pairs; a constant-zero model cannot
        // violate any of them (ties are not violations).
        let ds = tiny_dataset(30);
        let configs: Vec<PrecisionConfig> = ds.samples.iter().map(|s| s.config.clone()).collect();
        let pairs = crate::graph::dominated_pairs(&configs).unwrap();
        let zero = violation_count(|_| 0.0, &configs).unwrap();
        assert_eq!(zero, 0);
        assert!(pairs.len() < configs.len() * configs.len());
    }

    #[test]
    fn table_and_csv_emission() {
        let dir = tempfile::tempdir().unwrap();
        let r1 = run_experiment(&quick_spec(Regime::Base, ModelChoice::Nn1), dir.path()).unwrap();
        let r2 =
            run_experiment(&quick_spec(Regime::Extended, ModelChoice::Nn1), dir.path()).unwrap();
        let table = emit_table(&[r1.clone(), r2.clone()]);
        assert!(table.starts_with("Benchmark"));
        assert_eq!(table.lines().count(), 1 + 1 + 2 + 1); // header, rule, rows, average
        assert!(table.contains("Average"));

        let csv = emit_csv(&[r1.clone(), r2.clone()]);
        let avg_line = csv.lines().last().unwrap();
        let want = (r1.mean_mae + r2.mean_mae) / 2.0;
        let got: f64 = avg_line.split(',').nth(4).unwrap().parse().unwrap();
        assert_eq!(got, want); // full-precision round trip

        let one = emit_table(std::slice::from_ref(&r1));
        assert_eq!(one.lines().count(), 4); // header, rule, row, average
    }

    #[test]
    fn report_json_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let report =
            run_experiment(&quick_spec(Regime::Base, ModelChoice::Nn1), dir.path()).unwrap();
        let json = serde_json::to_string_pretty(&report).unwrap();
        let back: ExperimentReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back.mean_mae, report.mean_mae);
        assert_eq!(back.per_seed, report.per_seed);
        assert_eq!(back.wall_clock_secs, 0.0); // timing is not serialized
    }
}
