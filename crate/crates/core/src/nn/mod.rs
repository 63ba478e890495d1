//! From-scratch trainable surrogate models.
//!
//! Two topologies predict the negative-log error target from a feature row:
//! plain dense stacks (the NN-1..NN-4 presets) and a graph-convolutional
//! network that consumes the per-node precisions through the dependency
//! graph's renormalized adjacency operator. Training is mini-batch Adam on
//! MSE, optionally with the dominance-hinge regularizer and unlabeled batch
//! augmentation (see [`train`]).

mod check;
mod mat;
mod net;
mod train;

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::NormStats;
use crate::error::{Error, Result};
use crate::graph::DependencyGraph;

pub use check::{gradient_check, CheckBatch};
pub use mat::Mat;
pub use net::Network;
pub use train::{
    mse, sbr_batch_split, sbr_loss, train, uniform_augmenter, AugmentFn, LossKind, TrainConfig,
    TrainData, TrainedModel,
};

/// Dense tail of the graph-convolutional topology: 128 -> 32 -> 8 neurons,
/// then the single-output layer.
pub const GCNN_DENSE_TAIL: [usize; 3] = [128, 32, 8];

/// Default channel widths of the two graph-convolutional layers.
pub const GCNN_DEFAULT_CHANNELS: [usize; 2] = [16, 16];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Dense,
    Gcnn,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    pub fn eval(self, v: f64) -> f64 {
        match self {
            Activation::Relu => v.max(0.0),
            Activation::Identity => v,
        }
    }

    #[inline]
    pub fn deriv(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// Layer-count/width presets of the dense baselines: NN-1 and NN-2 are 4
/// layers of 10x and 100x the variable count, NN-3 and NN-4 are 10 and 20
/// layers of 10x.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Nn1,
    Nn2,
    Nn3,
    Nn4,
}

impl Preset {
    pub fn hidden_layers(self, n_var: usize) -> Vec<usize> {
        match self {
            Preset::Nn1 => vec![10 * n_var; 4],
            Preset::Nn2 => vec![100 * n_var; 4],
            Preset::Nn3 => vec![10 * n_var; 10],
            Preset::Nn4 => vec![10 * n_var; 20],
        }
    }
}

/// Topology description; the output layer is always a single linear neuron.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub n_inputs: usize,
    /// Hidden dense widths (for `Gcnn`, the fixed tail after the graph
    /// layers).
    pub hidden_layers: Vec<usize>,
    /// Output channels of each graph-convolutional layer (`Gcnn` only).
    #[serde(default)]
    pub gcnn_channels: Vec<usize>,
    /// Dependency graph driving the adjacency operator (`Gcnn` only).
    #[serde(default)]
    pub graph: Option<DependencyGraph>,
}

impl ModelSpec {
    pub fn dense(n_inputs: usize, hidden_layers: Vec<usize>) -> Result<Self> {
        if n_inputs == 0 || hidden_layers.is_empty() || hidden_layers.contains(&0) {
            return Err(Error::InvalidArgument(
                "dense model needs n_inputs >= 1 and non-empty positive widths".into(),
            ));
        }
        Ok(Self {
            kind: ModelKind::Dense,
            n_inputs,
            hidden_layers,
            gcnn_channels: Vec::new(),
            graph: None,
        })
    }

    pub fn preset(preset: Preset, n_var: usize, n_inputs: usize) -> Result<Self> {
        Self::dense(n_inputs, preset.hidden_layers(n_var))
    }
}

/// Graph-convolutional topology: two graph layers over the per-node
/// precision feature, flattened into the fixed 128/32/8 dense tail and a
/// single-neuron output.
pub fn build_gcnn(graph: &DependencyGraph, channels: &[usize]) -> Result<ModelSpec> {
    if channels.is_empty() || channels.contains(&0) {
        return Err(Error::InvalidArgument(
            "gcnn needs non-empty positive channel widths".into(),
        ));
    }
    Ok(ModelSpec {
        kind: ModelKind::Gcnn,
        n_inputs: graph.n_nodes(),
        hidden_layers: GCNN_DENSE_TAIL.to_vec(),
        gcnn_channels: channels.to_vec(),
        graph: Some(graph.clone()),
    })
}

/// Renormalized propagation operator `D^{-1/2} (A + I) D^{-1/2}` where `D`
/// is the degree matrix of `A + I`. Isolated nodes are covered by the
/// self-loop, so every degree is at least 1.
pub fn renormalized_operator(adjacency: &[Vec<f64>]) -> Mat {
    let n = adjacency.len();
    let mut a_hat = Mat::zeros(n, n);
    for (i, row) in adjacency.iter().enumerate() {
        assert_eq!(row.len(), n, "adjacency must be square");
        for (j, &v) in row.iter().enumerate() {
            *a_hat.at_mut(i, j) = v;
        }
        *a_hat.at_mut(i, i) += 1.0;
    }
    let deg: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| a_hat.at(i, j)).sum::<f64>())
        .collect();
    let mut out = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            *out.at_mut(i, j) = a_hat.at(i, j) / (deg[i] * deg[j]).sqrt();
        }
    }
    out
}

/// Propagation operator of a dependency graph: the directed adjacency is
/// symmetrized (an assignment couples both endpoints) before
/// renormalization, so the operator is symmetric with spectral radius <= 1.
pub fn graph_operator(graph: &DependencyGraph) -> Mat {
    let mut a = graph.adjacency_matrix();
    for &(src, dst) in graph.edges() {
        a[dst][src] = 1.0;
    }
    renormalized_operator(&a)
}

/// One graph convolution: `activation(operator . H . W)` over an `n x d`
/// node-feature matrix and `d x c` weights.
pub fn gcl_forward(
    adjacency: &[Vec<f64>],
    node_features: &Mat,
    weights: &Mat,
    activation: Activation,
) -> Mat {
    let op = renormalized_operator(adjacency);
    let mut out = op.matmul(node_features).matmul(weights);
    for v in out.data_mut() {
        *v = activation.eval(*v);
    }
    out
}

/// Serialized model: one JSON header line (spec, seed, normalization stats),
/// then one whitespace-separated line per tensor in flat parameter order.
#[derive(Serialize, Deserialize)]
struct ModelHeader {
    spec: ModelSpec,
    seed: u64,
    normalization: NormStats,
}

pub fn save_model(path: &Path, model: &TrainedModel, norm: &NormStats) -> Result<()> {
    let header = ModelHeader {
        spec: model.network.spec().clone(),
        seed: model.seed,
        normalization: norm.clone(),
    };
    let mut out = serde_json::to_string(&header)?;
    out.push('\n');
    for (name, tensor) in model.network.named_tensors() {
        let _ = write!(out, "{name}");
        for v in tensor {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<(TrainedModel, NormStats)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header_line) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "empty model file".into(),
    })?;
    let header: ModelHeader = serde_json::from_str(header_line)?;
    let mut network = Network::init_seeded(&header.spec, 0)?;

    let mut flat = Vec::with_capacity(network.param_count());
    let expected: Vec<(String, usize)> = network
        .named_tensors()
        .into_iter()
        .map(|(n, t)| (n, t.len()))
        .collect();
    for ((idx, line), (name, len)) in lines.zip(&expected) {
        let mut parts = line.split_whitespace();
        let got = parts.next().unwrap_or("");
        if got != name {
            return Err(Error::Parse {
                line: idx + 1,
                msg: format!("expected tensor `{name}`, got `{got}`"),
            });
        }
        let vals: Vec<f64> = parts
            .map(|s| {
                s.parse().map_err(|_| Error::Parse {
                    line: idx + 1,
                    msg: format!("bad weight `{s}`"),
                })
            })
            .collect::<Result<_>>()?;
        if vals.len() != *len {
            return Err(Error::Parse {
                line: idx + 1,
                msg: format!("tensor `{name}`: expected {len} values, got {}", vals.len()),
            });
        }
        flat.extend(vals);
    }
    if flat.len() != network.param_count() {
        return Err(Error::Parse {
            line: 1,
            msg: format!(
                "model carries {} parameters, spec needs {}",
                flat.len(),
                network.param_count()
            ),
        });
    }
    network.set_params_flat(&flat);
    Ok((
        TrainedModel {
            network,
            history: Vec::new(),
            seed: header.seed,
        },
        header.normalization,
    ))
}
