//! Network state, forward/backward passes, and the Adam optimizer.

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use super::mat::Mat;
use super::{graph_operator, Activation, ModelKind, ModelSpec};
use crate::error::{Error, Result};

struct DenseLayer {
    w: Mat,
    b: Vec<f64>,
}

/// A materialized model: graph-convolution weights (possibly none) followed
/// by a dense stack ending in one linear output neuron.
pub struct Network {
    spec: ModelSpec,
    /// Symmetric renormalized propagation operator (graph models only).
    operator: Option<Mat>,
    /// Per graph layer: `in_channels x out_channels` weights (no bias, as in
    /// the plain propagation rule).
    gcls: Vec<Mat>,
    dense: Vec<DenseLayer>,
}

pub(super) struct Cache {
    /// Per sample: node activations `[H0, H1, ..]` (post-nonlinearity).
    node_acts: Vec<Vec<Mat>>,
    /// Per sample: node pre-activations per graph layer.
    node_pres: Vec<Vec<Mat>>,
    dense_input: Mat,
    pres: Vec<Mat>,
    acts: Vec<Mat>,
}

impl Cache {
    pub(super) fn predictions(&self) -> Vec<f64> {
        let out = self.acts.last().expect("at least one layer");
        (0..out.rows()).map(|r| out.at(r, 0)).collect()
    }

    fn min_abs_preactivation(&self) -> f64 {
        let mut min = f64::INFINITY;
        for pres in &self.node_pres {
            for z in pres {
                for &v in z.data() {
                    min = min.min(v.abs());
                }
            }
        }
        for z in &self.pres[..self.pres.len().saturating_sub(1)] {
            for &v in z.data() {
                min = min.min(v.abs());
            }
        }
        min
    }
}

pub(super) struct Grads {
    gcl: Vec<Mat>,
    dense: Vec<(Mat, Vec<f64>)>,
}

impl Grads {
    pub(super) fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::new();
        for g in &self.gcl {
            out.push(g.data());
        }
        for (w, b) in &self.dense {
            out.push(w.data());
            out.push(b.as_slice());
        }
        out
    }
}

impl Network {
    /// Fan-in-scaled uniform initialization, biases at zero; layer draw
    /// order is fixed so a seed pins every weight. The deliberately small
    /// +/- sqrt(1/fan_in) bound shrinks activations layer by layer, but
    /// Adam's per-parameter scaling trains through it (smoke-tested on the
    /// 20-layer preset) and the shallow presets generalize better than with
    /// variance-preserving bounds on these rough targets.
    pub fn init(spec: &ModelSpec, rng: &mut StdRng) -> Result<Self> {
        let mut init_mat = |fan_in: usize, fan_out: usize| -> Mat {
            let limit = (1.0 / fan_in as f64).sqrt();
            let data = (0..fan_in * fan_out)
                .map(|_| rng.random_range(-limit..limit))
                .collect();
            Mat::from_vec(fan_in, fan_out, data)
        };

        let (operator, gcls, dense_in) = match spec.kind {
            ModelKind::Dense => (None, Vec::new(), spec.n_inputs),
            ModelKind::Gcnn => {
                let graph = spec.graph.as_ref().ok_or_else(|| {
                    Error::InvalidArgument("gcnn spec without dependency graph".into())
                })?;
                if graph.n_nodes() != spec.n_inputs {
                    return Err(Error::InvalidArgument(format!(
                        "gcnn consumes {} node precisions but n_inputs is {}",
                        graph.n_nodes(),
                        spec.n_inputs
                    )));
                }
                if spec.gcnn_channels.is_empty() {
                    return Err(Error::InvalidArgument("gcnn without channels".into()));
                }
                let mut gcls = Vec::new();
                let mut in_ch = 1;
                for &out_ch in &spec.gcnn_channels {
                    gcls.push(init_mat(in_ch, out_ch));
                    in_ch = out_ch;
                }
                (Some(graph_operator(graph)), gcls, graph.n_nodes() * in_ch)
            }
        };

        let mut dense = Vec::new();
        let mut width = dense_in;
        for &h in &spec.hidden_layers {
            dense.push(DenseLayer {
                w: init_mat(width, h),
                b: vec![0.0; h],
            });
            width = h;
        }
        dense.push(DenseLayer {
            w: init_mat(width, 1),
            b: vec![0.0; 1],
        });

        Ok(Self {
            spec: spec.clone(),
            operator,
            gcls,
            dense,
        })
    }

    pub fn init_seeded(spec: &ModelSpec, seed: u64) -> Result<Self> {
        Self::init(spec, &mut StdRng::seed_from_u64(seed))
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// One scalar prediction per feature row.
    pub fn forward(&self, x: &Mat) -> Vec<f64> {
        self.forward_cached(x).predictions()
    }

    /// Smallest pre-activation magnitude over every nonlinear unit on this
    /// batch (the linear output layer has no kink). Finite-difference
    /// gradient probes stay off the relu kinks when this margin dwarfs the
    /// probe step.
    pub fn preactivation_margin(&self, x: &Mat) -> f64 {
        self.forward_cached(x).min_abs_preactivation()
    }

    pub(super) fn forward_cached(&self, x: &Mat) -> Cache {
        assert_eq!(x.cols(), self.spec.n_inputs, "feature width mismatch");
        let batch = x.rows();

        let (node_acts, node_pres, dense_input) = if let Some(op) = &self.operator {
            let n = op.rows();
            let mut all_acts = Vec::with_capacity(batch);
            let mut all_pres = Vec::with_capacity(batch);
            let last_ch = *self.spec.gcnn_channels.last().expect("validated");
            let mut dense_input = Mat::zeros(batch, n * last_ch);
            for s in 0..batch {
                let mut acts = vec![Mat::from_vec(n, 1, x.row(s).to_vec())];
                let mut pres = Vec::with_capacity(self.gcls.len());
                for w in &self.gcls {
                    let z = op.matmul(acts.last().unwrap()).matmul(w);
                    let mut h = z.clone();
                    for v in h.data_mut() {
                        *v = Activation::Relu.eval(*v);
                    }
                    pres.push(z);
                    acts.push(h);
                }
                let flat = acts.last().unwrap();
                for (i, &v) in flat.data().iter().enumerate() {
                    *dense_input.at_mut(s, i) = v;
                }
                all_acts.push(acts);
                all_pres.push(pres);
            }
            (all_acts, all_pres, dense_input)
        } else {
            (Vec::new(), Vec::new(), x.clone())
        };

        let mut pres = Vec::with_capacity(self.dense.len());
        let mut acts = Vec::with_capacity(self.dense.len());
        let mut a = dense_input.clone();
        let last = self.dense.len() - 1;
        for (l, layer) in self.dense.iter().enumerate() {
            let mut z = a.matmul(&layer.w);
            for r in 0..z.rows() {
                for c in 0..z.cols() {
                    *z.at_mut(r, c) += layer.b[c];
                }
            }
            let act_fn = if l == last {
                Activation::Identity
            } else {
                Activation::Relu
            };
            let mut h = z.clone();
            for v in h.data_mut() {
                *v = act_fn.eval(*v);
            }
            pres.push(z);
            a = h.clone();
            acts.push(h);
        }

        Cache {
            node_acts,
            node_pres,
            dense_input,
            pres,
            acts,
        }
    }

    /// Backpropagation from `d loss / d prediction` per row.
    pub(super) fn backward(&self, cache: &Cache, dpred: &[f64]) -> Grads {
        let batch = dpred.len();
        let mut delta = Mat::from_vec(batch, 1, dpred.to_vec());

        let mut dense_grads: Vec<(Mat, Vec<f64>)> = Vec::with_capacity(self.dense.len());
        for l in (0..self.dense.len()).rev() {
            let input = if l == 0 {
                &cache.dense_input
            } else {
                &cache.acts[l - 1]
            };
            let gw = input.transpose().matmul(&delta);
            let mut gb = vec![0.0; delta.cols()];
            for r in 0..delta.rows() {
                for (c, g) in gb.iter_mut().enumerate() {
                    *g += delta.at(r, c);
                }
            }
            dense_grads.push((gw, gb));
            if l > 0 {
                let mut prev = delta.matmul(&self.dense[l].w.transpose());
                let pre = &cache.pres[l - 1];
                for r in 0..prev.rows() {
                    for c in 0..prev.cols() {
                        *prev.at_mut(r, c) *= Activation::Relu.deriv(pre.at(r, c));
                    }
                }
                delta = prev;
            } else if self.operator.is_some() {
                delta = delta.matmul(&self.dense[0].w.transpose());
            }
        }
        dense_grads.reverse();

        let mut gcl_grads: Vec<Mat> = self
            .gcls
            .iter()
            .map(|w| Mat::zeros(w.rows(), w.cols()))
            .collect();
        if let Some(op) = &self.operator {
            let n = op.rows();
            for s in 0..batch {
                let last_ch = *self.spec.gcnn_channels.last().unwrap();
                let mut dh = Mat::from_vec(
                    n,
                    last_ch,
                    (0..n * last_ch).map(|i| delta.at(s, i)).collect(),
                );
                for l in (0..self.gcls.len()).rev() {
                    let mut dz = dh.clone();
                    let pre = &cache.node_pres[s][l];
                    for r in 0..dz.rows() {
                        for c in 0..dz.cols() {
                            *dz.at_mut(r, c) *= Activation::Relu.deriv(pre.at(r, c));
                        }
                    }
                    // Propagated input to layer l.
                    let m = op.matmul(&cache.node_acts[s][l]);
                    let gw = m.transpose().matmul(&dz);
                    for (g, v) in gcl_grads[l].data_mut().iter_mut().zip(gw.data()) {
                        *g += v;
                    }
                    if l > 0 {
                        // The operator is symmetric, so op^T = op.
                        dh = op.matmul(&dz).matmul(&self.gcls[l].transpose());
                    }
                }
            }
        }

        Grads {
            gcl: gcl_grads,
            dense: dense_grads,
        }
    }

    pub(super) fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::new();
        for g in &mut self.gcls {
            out.push(g.data_mut());
        }
        for layer in &mut self.dense {
            out.push(layer.w.data_mut());
            out.push(layer.b.as_mut_slice());
        }
        out
    }

    /// Tensors in flat parameter order, with stable names for persistence.
    pub fn named_tensors(&self) -> Vec<(String, &[f64])> {
        let mut out = Vec::new();
        for (i, g) in self.gcls.iter().enumerate() {
            out.push((format!("gcl{i}"), g.data()));
        }
        for (i, layer) in self.dense.iter().enumerate() {
            out.push((format!("w{i}"), layer.w.data()));
            out.push((format!("b{i}"), layer.b.as_slice()));
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.named_tensors().iter().map(|(_, t)| t.len()).sum()
    }

    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for (_, t) in self.named_tensors() {
            out.extend_from_slice(t);
        }
        out
    }

    pub fn set_params_flat(&mut self, vals: &[f64]) {
        let mut offset = 0;
        for slice in self.param_slices_mut() {
            slice.copy_from_slice(&vals[offset..offset + slice.len()]);
            offset += slice.len();
        }
        assert_eq!(offset, vals.len(), "flat parameter length mismatch");
    }
}

/// Adam with bias-corrected first/second moments.
pub(super) struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    t: i32,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub(super) fn new(net: &Network, lr: f64, beta1: f64, beta2: f64, epsilon: f64) -> Self {
        let sizes: Vec<usize> = net.named_tensors().iter().map(|(_, t)| t.len()).collect();
        Self {
            lr,
            beta1,
            beta2,
            epsilon,
            t: 0,
            m: sizes.iter().map(|&s| vec![0.0; s]).collect(),
            v: sizes.iter().map(|&s| vec![0.0; s]).collect(),
        }
    }

    pub(super) fn step(&mut self, net: &mut Network, grads: &Grads) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t);
        let bc2 = 1.0 - self.beta2.powi(self.t);
        let params = net.param_slices_mut();
        let gslices = grads.slices();
        debug_assert_eq!(params.len(), gslices.len());
        for ((slice, grad), (m, v)) in params
            .into_iter()
            .zip(gslices)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for i in 0..slice.len() {
                let g = grad[i];
                m[i] = self.beta1 * m[i] + (1.0 - self.beta1) * g;
                v[i] = self.beta2 * v[i] + (1.0 - self.beta2) * g * g;
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                slice[i] -= self.lr * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::fig1_expr;
    use crate::nn::{build_gcnn, ModelSpec, Preset};

    #[test]
    fn zero_weights_give_zero_outputs() {
        let spec = ModelSpec::dense(3, vec![5, 5]).unwrap();
        let mut net = Network::init_seeded(&spec, 1).unwrap();
        let zeros = vec![0.0; net.param_count()];
        net.set_params_flat(&zeros);
        let x = Mat::from_rows(&[vec![0.3, -0.7, 0.9], vec![1.0, 2.0, 3.0]]);
        assert_eq!(net.forward(&x), vec![0.0, 0.0]);
    }

    #[test]
    fn batch_forward_equals_row_by_row() {
        let spec = ModelSpec::dense(4, vec![6, 6]).unwrap();
        let net = Network::init_seeded(&spec, 7).unwrap();
        let rows = vec![
            vec![0.1, 0.9, 0.4, 0.2],
            vec![0.8, 0.3, 0.5, 0.6],
            vec![0.0, 1.0, 0.2, 0.7],
        ];
        let batch = net.forward(&Mat::from_rows(&rows));
        for (i, row) in rows.iter().enumerate() {
            let single = net.forward(&Mat::from_rows(std::slice::from_ref(row)));
            assert!((batch[i] - single[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn hand_set_linear_layer_sums_inputs() {
        // Hidden 3 -> 3 identity (relu passes positives), output all-ones.
        let spec = ModelSpec::dense(3, vec![3]).unwrap();
        let mut net = Network::init_seeded(&spec, 1).unwrap();
        let mut params = vec![0.0; net.param_count()];
        // w0 is 3x3 row-major, then b0 (3), then w1 (3x1), b1 (1).
        params[0] = 1.0;
        params[4] = 1.0;
        params[8] = 1.0;
        params[12] = 1.0;
        params[13] = 1.0;
        params[14] = 1.0;
        net.set_params_flat(&params);
        let out = net.forward(&Mat::from_rows(&[vec![0.25, 1.5, 2.0]]));
        assert!((out[0] - 3.75).abs() < 1e-15);
    }

    #[test]
    fn preset_networks_have_declared_shapes() {
        for (preset, layers, width) in [
            (Preset::Nn1, 4usize, 70usize),
            (Preset::Nn2, 4, 700),
            (Preset::Nn3, 10, 70),
            (Preset::Nn4, 20, 70),
        ] {
            let spec = ModelSpec::preset(preset, 7, 7).unwrap();
            let net = Network::init_seeded(&spec, 0).unwrap();
            // hidden layers + output layer, each with weight and bias.
            assert_eq!(net.named_tensors().len(), 2 * (layers + 1));
            assert_eq!(net.dense.len(), layers + 1);
            for l in &net.dense[..layers] {
                assert_eq!(l.w.cols(), width);
            }
            assert_eq!(net.dense.last().unwrap().w.cols(), 1);
        }
    }

    #[test]
    fn gcnn_parameter_count_matches_closed_form() {
        let g = fig1_expr().graph().clone();
        let spec = build_gcnn(&g, &[3, 5]).unwrap();
        let net = Network::init_seeded(&spec, 3).unwrap();
        // gcls: 1*3 + 3*5; dense: (4*5)*128+128, 128*32+32, 32*8+8, 8*1+1.
        let expected = 3 + 15 + (20 * 128 + 128) + (128 * 32 + 32) + (32 * 8 + 8) + (8 + 1);
        assert_eq!(net.param_count(), expected);

        let x = Mat::from_rows(&[vec![0.1, 0.5, 0.9, 0.3], vec![0.2, 0.4, 0.6, 0.8]]);
        assert_eq!(net.forward(&x).len(), 2);
    }

    #[test]
    fn init_is_deterministic_per_seed() {
        let spec = ModelSpec::dense(5, vec![9, 9]).unwrap();
        let a = Network::init_seeded(&spec, 11).unwrap();
        let b = Network::init_seeded(&spec, 11).unwrap();
        assert_eq!(a.params_flat(), b.params_flat());
        let c = Network::init_seeded(&spec, 12).unwrap();
        assert_ne!(a.params_flat(), c.params_flat());
    }
}
