//! Finite-difference validation of the hand-written backpropagation.

use super::mat::Mat;
use super::net::Network;
use super::train::sbr_loss;

const FD_STEP: f64 = 1e-5;
const KINK_MARGIN: f64 = 1e-6;

/// A fixed evaluation batch: labeled rows are the prefix of `x` covered by
/// `targets`; `pairs` index into all of `x` as `(dominated, dominating)`.
pub struct CheckBatch<'a> {
    pub x: &'a [Vec<f64>],
    pub targets: &'a [f64],
    pub pairs: &'a [(usize, usize)],
    pub lambda: f64,
}

fn loss_at(net: &Network, x: &Mat, batch: &CheckBatch<'_>, pairs: &[(usize, usize)]) -> f64 {
    let preds = net.forward(x);
    sbr_loss(
        &preds[..batch.targets.len()],
        batch.targets,
        &preds,
        pairs,
        batch.lambda,
    )
}

fn analytic_flat(
    net: &Network,
    x: &Mat,
    batch: &CheckBatch<'_>,
    pairs: &[(usize, usize)],
) -> Vec<f64> {
    let cache = net.forward_cached(x);
    let preds = cache.predictions();
    let n_labeled = batch.targets.len();
    let mut dpred = vec![0.0; preds.len()];
    for (k, t) in batch.targets.iter().enumerate() {
        dpred[k] = 2.0 * (preds[k] - t) / n_labeled.max(1) as f64;
    }
    for &(i, j) in pairs {
        if preds[i] > preds[j] {
            dpred[i] += batch.lambda;
            dpred[j] -= batch.lambda;
        }
    }
    let grads = net.backward(&cache, &dpred);
    let mut flat = Vec::new();
    for s in grads.slices() {
        flat.extend_from_slice(s);
    }
    flat
}

/// Compares analytic gradients against central finite differences and
/// returns the worst relative error over all parameters.
///
/// Pairs whose prediction gap sits within [`KINK_MARGIN`] of the hinge kink
/// at the base point are dropped from both sides of the comparison (the
/// frozen pair set makes the loss locally smooth), which is the documented
/// kink-exclusion rule.
pub fn gradient_check(net: &mut Network, batch: &CheckBatch<'_>) -> f64 {
    let x = Mat::from_rows(batch.x);
    let base_preds = net.forward(&x);
    let frozen: Vec<(usize, usize)> = batch
        .pairs
        .iter()
        .copied()
        .filter(|&(i, j)| (base_preds[i] - base_preds[j]).abs() >= KINK_MARGIN)
        .collect();

    let analytic = analytic_flat(net, &x, batch, &frozen);
    let base = net.params_flat();
    let mut worst = 0.0f64;
    let mut params = base.clone();
    for idx in 0..base.len() {
        params[idx] = base[idx] + FD_STEP;
        net.set_params_flat(&params);
        let plus = loss_at(net, &x, batch, &frozen);
        params[idx] = base[idx] - FD_STEP;
        net.set_params_flat(&params);
        let minus = loss_at(net, &x, batch, &frozen);
        params[idx] = base[idx];

        let numeric = (plus - minus) / (2.0 * FD_STEP);
        let a = analytic[idx];
        let denom = a.abs().max(numeric.abs());
        let err = if denom < 1e-6 {
            (a - numeric).abs()
        } else {
            (a - numeric).abs() / denom
        };
        worst = worst.max(err);
    }
    net.set_params_flat(&base);
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::fig1_expr;
    use crate::nn::{build_gcnn, ModelSpec};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn random_rows(rng: &mut StdRng, n: usize, width: usize) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| (0..width).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect()
    }

    /// First init seed whose pre-activations all clear a margin the
    /// finite-difference step cannot bridge, so no probe crosses a relu
    /// kink. Deterministic: the scan order is fixed.
    fn screened_network(spec: &crate::nn::ModelSpec, x: &[Vec<f64>]) -> Network {
        let xm = Mat::from_rows(x);
        for seed in 0..200 {
            let net = Network::init_seeded(spec, seed).unwrap();
            if net.preactivation_margin(&xm) > 1e-3 {
                return net;
            }
        }
        panic!("no init seed kept pre-activations away from the relu kinks");
    }

    #[test]
    fn mse_gradients_match_finite_differences() {
        let mut rng = StdRng::seed_from_u64(31);
        let spec = ModelSpec::dense(4, vec![7, 5]).unwrap();
        let x = random_rows(&mut rng, 12, 4);
        let mut net = screened_network(&spec, &x);
        assert!(net.param_count() < 1000);
        let targets: Vec<f64> = (0..12).map(|_| rng.random_range(0.0..1.0)).collect();
        let batch = CheckBatch {
            x: &x,
            targets: &targets,
            pairs: &[],
            lambda: 0.0,
        };
        let err = gradient_check(&mut net, &batch);
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn sbr_gradients_match_finite_differences() {
        let mut rng = StdRng::seed_from_u64(77);
        let spec = ModelSpec::dense(3, vec![6, 6]).unwrap();
        let x = random_rows(&mut rng, 10, 3);
        let mut net = screened_network(&spec, &x);
        let targets: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..1.0)).collect();
        let pairs = [(0usize, 7usize), (1, 8), (2, 9), (3, 6), (4, 5)];
        let batch = CheckBatch {
            x: &x,
            targets: &targets,
            pairs: &pairs,
            lambda: 1.0,
        };
        // The hinge must actually be active somewhere for this to exercise
        // the penalty path.
        let preds = net.forward(&Mat::from_rows(&x));
        assert!(
            pairs.iter().any(|&(i, j)| preds[i] - preds[j] > 1e-3),
            "want at least one active pair"
        );
        let err = gradient_check(&mut net, &batch);
        assert!(err < 1e-4, "max relative error {err}");
    }

    #[test]
    fn gcnn_gradients_match_finite_differences() {
        let mut rng = StdRng::seed_from_u64(5);
        let graph = fig1_expr().graph().clone();
        let spec = {
            // Shrink the dense tail so the parameter count stays small.
            let mut s = build_gcnn(&graph, &[3, 3]).unwrap();
            s.hidden_layers = vec![10, 6];
            s
        };
        let x = random_rows(&mut rng, 8, 4);
        let mut net = screened_network(&spec, &x);
        assert!(net.param_count() < 1000);
        let targets: Vec<f64> = (0..8).map(|_| rng.random_range(0.0..1.0)).collect();
        let batch = CheckBatch {
            x: &x,
            targets: &targets,
            pairs: &[],
            lambda: 0.0,
        };
        let err = gradient_check(&mut net, &batch);
        assert!(err < 1e-4, "max relative error {err}");
    }

    /// With no active pair the regularized gradient is bitwise the MSE
    /// gradient: the penalty path contributes exactly nothing.
    #[test]
    fn inactive_penalty_equals_mse_gradient() {
        let mut rng = StdRng::seed_from_u64(9);
        let spec = ModelSpec::dense(2, vec![5]).unwrap();
        let net = Network::init_seeded(&spec, 3).unwrap();
        let x = random_rows(&mut rng, 6, 2);
        let targets: Vec<f64> = (0..6).map(|_| rng.random_range(0.0..1.0)).collect();
        let xm = Mat::from_rows(&x);
        let preds = net.forward(&xm);
        // Orient every pair so the hinge is inactive.
        let mut pairs = Vec::new();
        for i in 0..6 {
            for j in 0..6 {
                if i != j && preds[i] < preds[j] {
                    pairs.push((i, j));
                }
            }
        }
        assert!(!pairs.is_empty());
        let with_pairs = CheckBatch {
            x: &x,
            targets: &targets,
            pairs: &pairs,
            lambda: 4.0,
        };
        let without = CheckBatch {
            x: &x,
            targets: &targets,
            pairs: &[],
            lambda: 0.0,
        };
        let g1 = analytic_flat(&net, &xm, &with_pairs, &pairs);
        let g2 = analytic_flat(&net, &xm, &without, &[]);
        assert_eq!(g1, g2);
    }
}
