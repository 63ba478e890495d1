//! From benchmark runs to learning-ready datasets.
//!
//! For each sampled configuration the benchmark runs once per shared input
//! set; each run's error is the maximum componentwise squared relative
//! deviation from the maximum-precision reference, clamped at
//! [`ERROR_CLAMP`], and the regression target is the negative base-10
//! logarithm of the mean clamped error (floored at [`TARGET_FLOOR`] so an
//! exact-zero error maps to a finite target of 30).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::benchmarks::Benchmark;
use crate::error::{Error, Result};
use crate::flexnum::NumFlags;
use crate::graph::DependencyGraph;
use crate::sampling::PrecisionConfig;

/// Per-combination errors at or above this level are all equally "broken".
pub const ERROR_CLAMP: f64 = 0.95;
/// Mean errors below this floor (including exact zero) share one target.
pub const TARGET_FLOOR: f64 = 1e-30;
/// Reference components smaller than this are skipped by the error metric
/// (the metric divides by the squared reference).
pub const REF_EPSILON: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Base,
    Extended,
}

impl FeatureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::Base => "base",
            FeatureKind::Extended => "extended",
        }
    }
}

/// One labeled example: a configuration with its per-input clamped errors
/// and the derived regression target.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub config: PrecisionConfig,
    /// Clamped error per input set; empty on datasets loaded from disk.
    pub raw_errors: Vec<f64>,
    pub mean_error: f64,
    pub target: f64,
    pub flags_seen: NumFlags,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub benchmark_name: String,
    pub feature_kind: FeatureKind,
    pub n_inputs: usize,
    pub seed: u64,
    pub samples: Vec<Sample>,
    /// Feature rows aligned with `samples`: the configuration itself for
    /// base datasets, plus one column per assignment edge when extended.
    pub features: Vec<Vec<f64>>,
    pub feature_names: Vec<String>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn feature_width(&self) -> usize {
        self.feature_names.len()
    }

    pub fn n_var(&self) -> usize {
        self.samples.first().map_or(0, |s| s.config.len())
    }

    pub fn targets(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.target).collect()
    }
}

/// Maximum componentwise squared relative deviation between a run's output
/// and the maximum-precision reference.
///
/// Reference components with magnitude below [`REF_EPSILON`] are skipped.
/// Executions flagged NaN/overflow, non-finite deviations, and all-skipped
/// outputs yield the `+inf` sentinel, which [`clamp_error`] levels out.
pub fn compute_error(output: &[f64], reference: &[f64], flags: &NumFlags) -> Result<f64> {
    if output.len() != reference.len() || output.is_empty() {
        return Err(Error::Shape(format!(
            "error metric needs equal non-empty lengths, got {} vs {}",
            output.len(),
            reference.len()
        )));
    }
    if flags.fatal() {
        return Ok(f64::INFINITY);
    }
    let mut worst: Option<f64> = None;
    for (&o, &r) in output.iter().zip(reference) {
        if r.abs() < REF_EPSILON {
            continue;
        }
        let d = o - r;
        let e = (d * d) / (r * r);
        if !e.is_finite() {
            return Ok(f64::INFINITY);
        }
        worst = Some(worst.map_or(e, |w: f64| w.max(e)));
    }
    Ok(worst.unwrap_or(f64::INFINITY))
}

/// Levels out errors above [`ERROR_CLAMP`]; the `+inf` sentinel clamps too.
pub fn clamp_error(e: f64) -> f64 {
    e.min(ERROR_CLAMP)
}

fn target_from_mean(mean: f64) -> f64 {
    -mean.max(TARGET_FLOOR).log10()
}

/// Runs every configuration over `n_inputs` shared input sets and assembles
/// the base-feature dataset. Deterministic for fixed arguments.
pub fn build_dataset(
    bench: &Benchmark,
    configs: &[PrecisionConfig],
    n_inputs: usize,
    seed: u64,
) -> Result<Dataset> {
    if configs.is_empty() {
        return Err(Error::InvalidArgument("no configurations given".into()));
    }
    if n_inputs == 0 {
        return Err(Error::InvalidArgument("n_inputs must be >= 1".into()));
    }
    let inputs = bench.generate_input_sets(n_inputs, seed);
    let references: Vec<Vec<f64>> = inputs
        .iter()
        .map(|inp| bench.reference_output(inp))
        .collect::<Result<_>>()?;

    let mut samples = Vec::with_capacity(configs.len());
    let mut features = Vec::with_capacity(configs.len());
    for config in configs {
        let mut raw_errors = Vec::with_capacity(n_inputs);
        let mut flags_seen = NumFlags::default();
        for (inp, reference) in inputs.iter().zip(&references) {
            let (output, flags) = bench.run(config, inp)?;
            flags_seen.merge(flags);
            raw_errors.push(clamp_error(compute_error(&output, reference, &flags)?));
        }
        let mean_error = raw_errors.iter().sum::<f64>() / raw_errors.len() as f64;
        samples.push(Sample {
            config: config.clone(),
            raw_errors,
            mean_error,
            target: target_from_mean(mean_error),
            flags_seen,
        });
        features.push(config.as_f64());
    }

    Ok(Dataset {
        benchmark_name: bench.name().to_string(),
        feature_kind: FeatureKind::Base,
        n_inputs,
        seed,
        samples,
        features,
        feature_names: (0..bench.n_var()).map(|i| format!("x{i}")).collect(),
    })
}

/// Appends one feature per assignment edge (destination precision minus
/// source precision). Base columns are unchanged.
pub fn extend_dataset(ds: &Dataset, graph: &DependencyGraph) -> Result<Dataset> {
    if ds.feature_kind != FeatureKind::Base {
        return Err(Error::InvalidArgument(
            "dataset already carries extended features".into(),
        ));
    }
    let mut out = ds.clone();
    for (row, sample) in out.features.iter_mut().zip(&ds.samples) {
        row.extend(graph.extended_features(&sample.config)?);
    }
    out.feature_names.extend(graph.feature_names());
    out.feature_kind = FeatureKind::Extended;
    Ok(out)
}

/// Per-column min/max fitted on a training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub feature_ranges: Vec<(f64, f64)>,
    pub target_range: (f64, f64),
}

impl NormStats {
    fn scale(v: f64, (lo, hi): (f64, f64)) -> f64 {
        if hi == lo {
            0.5
        } else {
            (v - lo) / (hi - lo)
        }
    }

    pub fn normalize_feature(&self, col: usize, v: f64) -> f64 {
        Self::scale(v, self.feature_ranges[col])
    }

    pub fn normalize_target(&self, v: f64) -> f64 {
        Self::scale(v, self.target_range)
    }

    pub fn denormalize_target(&self, v: f64) -> f64 {
        let (lo, hi) = self.target_range;
        lo + v * (hi - lo)
    }

    pub fn normalize_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .enumerate()
            .map(|(c, &v)| self.normalize_feature(c, v))
            .collect()
    }

    /// Base-feature view of a bare configuration, for augmentation rows.
    pub fn normalize_config(&self, config: &PrecisionConfig) -> Vec<f64> {
        self.normalize_row(&config.as_f64())
    }
}

/// Fits min-max stats on the training rows only.
pub fn normalize_fit(ds: &Dataset, train_idx: &[usize]) -> Result<NormStats> {
    if train_idx.is_empty() {
        return Err(Error::InvalidArgument("empty training index set".into()));
    }
    if let Some(&bad) = train_idx.iter().find(|&&i| i >= ds.len()) {
        return Err(Error::InvalidArgument(format!(
            "train index {bad} out of range 0..{}",
            ds.len()
        )));
    }
    let width = ds.feature_width();
    let mut feature_ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); width];
    let mut target_range = (f64::INFINITY, f64::NEG_INFINITY);
    for &i in train_idx {
        for (c, &v) in ds.features[i].iter().enumerate() {
            feature_ranges[c].0 = feature_ranges[c].0.min(v);
            feature_ranges[c].1 = feature_ranges[c].1.max(v);
        }
        let t = ds.samples[i].target;
        target_range.0 = target_range.0.min(t);
        target_range.1 = target_range.1.max(t);
    }
    Ok(NormStats {
        feature_ranges,
        target_range,
    })
}

/// All rows normalized with previously fitted stats. Training rows land in
/// [0, 1]; rows outside the fitted ranges may fall outside.
pub struct NormalizedView {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

pub fn normalize_apply(ds: &Dataset, stats: &NormStats) -> NormalizedView {
    NormalizedView {
        x: ds
            .features
            .iter()
            .map(|row| stats.normalize_row(row))
            .collect(),
        y: ds
            .samples
            .iter()
            .map(|s| stats.normalize_target(s.target))
            .collect(),
    }
}

/// Conventional file name for a generated dataset.
pub fn dataset_file_name(benchmark: &str, kind: FeatureKind, n: usize, seed: u64) -> String {
    format!("{benchmark}_{}_{n}_{seed}.csv", kind.as_str())
}

/// Writes the dataset as CSV: a `#` header carrying provenance, a column
/// name row, then one row per sample. Values use shortest round-trip
/// decimal encoding, so load reproduces them exactly.
pub fn save(ds: &Dataset, path: &Path) -> Result<()> {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "# benchmark={} kind={} seed={} n_inputs={}",
        ds.benchmark_name,
        ds.feature_kind.as_str(),
        ds.seed,
        ds.n_inputs
    );
    let _ = writeln!(out, "{},target", ds.feature_names.join(","));
    for (row, sample) in ds.features.iter().zip(&ds.samples) {
        for v in row {
            let _ = write!(out, "{v},");
        }
        let _ = writeln!(out, "{}", sample.target);
    }
    fs::write(path, out)?;
    Ok(())
}

/// Loads a CSV written by [`save`]. Per-input raw errors and flags are not
/// persisted; the mean error is reconstructed from the target.
pub fn load(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();

    let (_, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty file".into(),
    })?;
    let header = header.strip_prefix('#').ok_or(Error::Parse {
        line: 1,
        msg: "missing `# benchmark=...` header".into(),
    })?;
    let mut benchmark_name = None;
    let mut kind = None;
    let mut seed = None;
    let mut n_inputs = None;
    for part in header.split_whitespace() {
        let (key, value) = part.split_once('=').ok_or_else(|| Error::Parse {
            line: 1,
            msg: format!("malformed header field `{part}`"),
        })?;
        match key {
            "benchmark" => benchmark_name = Some(value.to_string()),
            "kind" => {
                kind = Some(match value {
                    "base" => FeatureKind::Base,
                    "extended" => FeatureKind::Extended,
                    other => {
                        return Err(Error::Parse {
                            line: 1,
                            msg: format!("unknown feature kind `{other}`"),
                        })
                    }
                })
            }
            "seed" => {
                seed = Some(value.parse().map_err(|_| Error::Parse {
                    line: 1,
                    msg: format!("bad seed `{value}`"),
                })?)
            }
            "n_inputs" => {
                n_inputs = Some(value.parse().map_err(|_| Error::Parse {
                    line: 1,
                    msg: format!("bad n_inputs `{value}`"),
                })?)
            }
            _ => {}
        }
    }
    let (benchmark_name, kind, seed, n_inputs) = match (benchmark_name, kind, seed, n_inputs) {
        (Some(b), Some(k), Some(s), Some(n)) => (b, k, s, n),
        _ => {
            return Err(Error::Parse {
                line: 1,
                msg: "header must carry benchmark, kind, seed, n_inputs".into(),
            })
        }
    };

    let (_, names_row) = lines.next().ok_or(Error::Parse {
        line: 2,
        msg: "missing column name row".into(),
    })?;
    let mut columns: Vec<String> = names_row.split(',').map(str::to_string).collect();
    if columns.pop().as_deref() != Some("target") {
        return Err(Error::Parse {
            line: 2,
            msg: "last column must be `target`".into(),
        });
    }
    let n_var = columns.iter().take_while(|c| c.starts_with('x')).count();
    if n_var == 0 {
        return Err(Error::Parse {
            line: 2,
            msg: "no base feature columns".into(),
        });
    }

    let mut samples = Vec::new();
    let mut features = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() + 1 {
            return Err(Error::Parse {
                line: idx + 1,
                msg: format!(
                    "expected {} fields, got {}",
                    columns.len() + 1,
                    fields.len()
                ),
            });
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Parse {
                line: idx + 1,
                msg: format!("bad number `{s}`"),
            })
        };
        let row: Vec<f64> = fields[..columns.len()]
            .iter()
            .map(|s| parse(s))
            .collect::<Result<_>>()?;
        let target = parse(fields[columns.len()])?;
        let precisions: Vec<u32> = row[..n_var].iter().map(|&v| v as u32).collect();
        if precisions
            .iter()
            .zip(&row)
            .any(|(&p, &v)| f64::from(p) != v)
        {
            return Err(Error::Parse {
                line: idx + 1,
                msg: "non-integer precision column".into(),
            });
        }
        let config = PrecisionConfig::new(precisions).map_err(|e| Error::Parse {
            line: idx + 1,
            msg: e.to_string(),
        })?;
        samples.push(Sample {
            config,
            raw_errors: Vec::new(),
            mean_error: 10f64.powf(-target),
            target,
            flags_seen: NumFlags::default(),
        });
        features.push(row);
    }

    Ok(Dataset {
        benchmark_name,
        feature_kind: kind,
        n_inputs,
        seed,
        samples,
        features,
        feature_names: columns,
    })
}
