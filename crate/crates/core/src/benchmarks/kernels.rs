//! Kernel definitions and hand-authored dependency graphs.
//!
//! Variable decompositions follow the cast-temporary convention: every
//! binary operation computes at some variable's precision, with operands
//! cast in from their owning variables and results assigned onward. The
//! declared edge lists are audited against the cast sites the kernels
//! actually execute (see the module tests), so graph and kernel cannot
//! drift apart.

use super::{Benchmark, InputSet, InputShape, KernelCtx, UnaryFn};
use crate::flexnum::BinOp::{Add, Div, Mul, Sub};
use crate::graph::DependencyGraph;

fn graph(n: usize, edges: &[(usize, usize)]) -> DependencyGraph {
    DependencyGraph::new(n, edges.to_vec()).expect("static graph is valid")
}

// ---------------------------------------------------------------------------
// FWT: in-place Fast Walsh-Hadamard transform of a power-of-two vector.
// Variables: 0 = data vector, 1 = butterfly temporary.

pub(super) fn fwt() -> Benchmark {
    Benchmark::new(
        "fwt",
        2,
        graph(2, &[(0, 1), (1, 0)]),
        InputShape::PowerOfTwoVector,
        fwt_kernel,
    )
    .expect("static benchmark")
}

fn fwt_kernel(ctx: &mut KernelCtx, input: &InputSet) -> Vec<f64> {
    const VEC: usize = 0;
    const BFLY: usize = 1;
    let mut data: Vec<f64> = input.values[0].iter().map(|&v| ctx.load(VEC, v)).collect();
    let n = data.len();
    let mut h = 1;
    while h < n {
        for block in (0..n).step_by(h * 2) {
            for j in block..block + h {
                let a = data[j];
                let b = data[j + h];
                let s = ctx.bin(Add, (VEC, a), (VEC, b), BFLY);
                let d = ctx.bin(Sub, (VEC, a), (VEC, b), BFLY);
                data[j] = ctx.assign(BFLY, VEC, s);
                data[j + h] = ctx.assign(BFLY, VEC, d);
            }
        }
        h *= 2;
    }
    data
}

// ---------------------------------------------------------------------------
// saxpy: out[i] = a * x[i] + y[i].
// Variables: 0 = inputs (a, x, y), 1 = product temporary, 2 = output.

pub(super) fn saxpy() -> Benchmark {
    Benchmark::new(
        "saxpy",
        3,
        graph(3, &[(0, 1), (1, 2), (0, 2)]),
        InputShape::ScalarAndTwoVectors,
        saxpy_kernel,
    )
    .expect("static benchmark")
}

fn saxpy_kernel(ctx: &mut KernelCtx, input: &InputSet) -> Vec<f64> {
    const IN: usize = 0;
    const PROD: usize = 1;
    const OUT: usize = 2;
    let a = ctx.load(IN, input.values[0][0]);
    input.values[1]
        .iter()
        .zip(&input.values[2])
        .map(|(&xr, &yr)| {
            let x = ctx.load(IN, xr);
            let y = ctx.load(IN, yr);
            let t = ctx.bin(Mul, (IN, a), (IN, x), PROD);
            ctx.bin(Add, (PROD, t), (IN, y), OUT)
        })
        .collect()
}

// ---------------------------------------------------------------------------
// convolution: 2-D convolution with a fixed 3x3 binomial kernel (zero
// padding). The coefficients are dyadic (k/16), so they are exact at every
// precision and the error comes from the data path.
// Variables: 0 = input matrix, 1 = kernel coefficients, 2 = accumulator,
// 3 = output.

pub(super) fn convolution() -> Benchmark {
    Benchmark::new(
        "convolution",
        4,
        graph(4, &[(0, 2), (1, 2), (2, 3)]),
        InputShape::Matrix,
        convolution_kernel,
    )
    .expect("static benchmark")
}

fn convolution_kernel(ctx: &mut KernelCtx, input: &InputSet) -> Vec<f64> {
    const IN: usize = 0;
    const COEF: usize = 1;
    const ACC: usize = 2;
    const OUT: usize = 3;
    const TAPS: [[f64; 3]; 3] = [
        [1.0 / 16.0, 2.0 / 16.0, 1.0 / 16.0],
        [2.0 / 16.0, 4.0 / 16.0, 2.0 / 16.0],
        [1.0 / 16.0, 2.0 / 16.0, 1.0 / 16.0],
    ];
    let rows = input.values.len();
    let cols = input.values[0].len();
    let x: Vec<Vec<f64>> = input
        .values
        .iter()
        .map(|row| row.iter().map(|&v| ctx.load(IN, v)).collect())
        .collect();
    let taps: Vec<Vec<f64>> = TAPS
        .iter()
        .map(|row| row.iter().map(|&v| ctx.load(COEF, v)).collect())
        .collect();

    let mut out = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let mut acc = ctx.load(ACC, 0.0);
            for (dr, tap_row) in taps.iter().enumerate() {
                for (dc, &tap) in tap_row.iter().enumerate() {
                    let rr = r as isize + dr as isize - 1;
                    let cc = c as isize + dc as isize - 1;
                    if rr < 0 || cc < 0 || rr >= rows as isize || cc >= cols as isize {
                        continue;
                    }
                    let p = ctx.bin(Mul, (IN, x[rr as usize][cc as usize]), (COEF, tap), ACC);
                    acc = ctx.bin(Add, (ACC, acc), (ACC, p), ACC);
                }
            }
            out.push(ctx.assign(ACC, OUT, acc));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// dwt: one-level Haar-style discrete wavelet transform, orthonormal
// coefficients (x[2i] +/- x[2i+1]) / sqrt(2).
// Variables: 0 = input, 1 = sum temporary, 2 = difference temporary,
// 3 = scale coefficient, 4 = product temporary, 5 = approximation output,
// 6 = detail output.

pub(super) fn dwt() -> Benchmark {
    Benchmark::new(
        "dwt",
        7,
        graph(7, &[(0, 1), (0, 2), (1, 4), (2, 4), (3, 4), (4, 5), (4, 6)]),
        InputShape::EvenVector,
        dwt_kernel,
    )
    .expect("static benchmark")
}

fn dwt_kernel(ctx: &mut KernelCtx, input: &InputSet) -> Vec<f64> {
    const IN: usize = 0;
    const SUM: usize = 1;
    const DIFF: usize = 2;
    const COEF: usize = 3;
    const PROD: usize = 4;
    const APPROX: usize = 5;
    const DETAIL: usize = 6;
    let x: Vec<f64> = input.values[0].iter().map(|&v| ctx.load(IN, v)).collect();
    let h = ctx.load(COEF, std::f64::consts::FRAC_1_SQRT_2);
    let half = x.len() / 2;
    let mut approx = Vec::with_capacity(half);
    let mut detail = Vec::with_capacity(half);
    for i in 0..half {
        let a = x[2 * i];
        let b = x[2 * i + 1];
        let s = ctx.bin(Add, (IN, a), (IN, b), SUM);
        let d = ctx.bin(Sub, (IN, a), (IN, b), DIFF);
        let sa = ctx.bin(Mul, (SUM, s), (COEF, h), PROD);
        approx.push(ctx.assign(PROD, APPROX, sa));
        let sd = ctx.bin(Mul, (DIFF, d), (COEF, h), PROD);
        detail.push(ctx.assign(PROD, DETAIL, sd));
    }
    approx.extend(detail);
    approx
}

// ---------------------------------------------------------------------------
// correlation: Pearson correlation matrix of the input's columns, emitted
// row-major (cols x cols entries).
// Variables: 0 = input matrix, 1 = column means, 2 = centered values,
// 3 = product temporary, 4 = accumulator, 5 = column norms, 6 = output.

pub(super) fn correlation() -> Benchmark {
    Benchmark::new(
        "correlation",
        7,
        graph(
            7,
            &[
                (0, 4),
                (4, 1),
                (0, 2),
                (1, 2),
                (2, 3),
                (3, 4),
                (4, 5),
                (5, 6),
                (4, 6),
            ],
        ),
        InputShape::Matrix,
        correlation_kernel,
    )
    .expect("static benchmark")
}

fn correlation_kernel(ctx: &mut KernelCtx, input: &InputSet) -> Vec<f64> {
    const IN: usize = 0;
    const MEAN: usize = 1;
    const CENT: usize = 2;
    const PROD: usize = 3;
    const ACC: usize = 4;
    const NORM: usize = 5;
    const OUT: usize = 6;
    let rows = input.values.len();
    let cols = input.values[0].len();
    let x: Vec<Vec<f64>> = input
        .values
        .iter()
        .map(|row| row.iter().map(|&v| ctx.load(IN, v)).collect())
        .collect();
    let count = ctx.load(ACC, rows as f64);

    let means: Vec<f64> = (0..cols)
        .map(|j| {
            let mut acc = ctx.load(ACC, 0.0);
            for row in &x {
                acc = ctx.bin(Add, (ACC, acc), (IN, row[j]), ACC);
            }
            ctx.bin(Div, (ACC, acc), (ACC, count), MEAN)
        })
        .collect();

    let centered: Vec<Vec<f64>> = x
        .iter()
        .map(|row| {
            (0..cols)
                .map(|j| ctx.bin(Sub, (IN, row[j]), (MEAN, means[j]), CENT))
                .collect()
        })
        .collect();

    let norms: Vec<f64> = (0..cols)
        .map(|j| {
            let mut acc = ctx.load(ACC, 0.0);
            for row in &centered {
                let p = ctx.bin(Mul, (CENT, row[j]), (CENT, row[j]), PROD);
                acc = ctx.bin(Add, (ACC, acc), (PROD, p), ACC);
            }
            ctx.unary(UnaryFn::Sqrt, (ACC, acc), NORM)
        })
        .collect();

    let mut out = Vec::with_capacity(cols * cols);
    for j in 0..cols {
        for k in 0..cols {
            let mut dot = ctx.load(ACC, 0.0);
            for row in &centered {
                let p = ctx.bin(Mul, (CENT, row[j]), (CENT, row[k]), PROD);
                dot = ctx.bin(Add, (ACC, dot), (PROD, p), ACC);
            }
            let den = ctx.bin(Mul, (NORM, norms[j]), (NORM, norms[k]), OUT);
            out.push(ctx.bin(Div, (ACC, dot), (OUT, den), OUT));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// BlackScholes: closed-form European call pricing over an option chain,
// with the Abramowitz-Stegun polynomial approximation of the normal CDF.
// Variables: 0 = spot, 1 = strike, 2 = rate, 3 = volatility, 4 = maturity,
// 5 = log-ratio temporary, 6 = drift numerator, 7 = vol*sqrt(T),
// 8 = d1, 9 = d2, 10 = CDF rational term k, 11 = CDF polynomial,
// 12 = CDF value, 13 = discounted strike, 14 = output price.

pub(super) fn black_scholes() -> Benchmark {
    Benchmark::new(
        "blackscholes",
        15,
        graph(
            15,
            &[
                (0, 5),
                (1, 5),
                (3, 6),
                (2, 6),
                (4, 6),
                (5, 6),
                (4, 7),
                (3, 7),
                (6, 8),
                (7, 8),
                (8, 9),
                (7, 9),
                (8, 10),
                (9, 10),
                (10, 11),
                (8, 12),
                (9, 12),
                (11, 12),
                (2, 13),
                (4, 13),
                (1, 13),
                (0, 14),
                (12, 14),
                (13, 14),
            ],
        ),
        InputShape::OptionChain,
        black_scholes_kernel,
    )
    .expect("static benchmark")
}

const SPOT: usize = 0;
const STRIKE: usize = 1;
const RATE: usize = 2;
const VOL: usize = 3;
const MAT: usize = 4;
const LOGRAT: usize = 5;
const DRIFT: usize = 6;
const VOLT: usize = 7;
const D1: usize = 8;
const D2: usize = 9;
const CDFK: usize = 10;
const POLY: usize = 11;
const CDF: usize = 12;
const DISC: usize = 13;
const PRICE: usize = 14;

fn black_scholes_kernel(ctx: &mut KernelCtx, input: &InputSet) -> Vec<f64> {
    input
        .values
        .iter()
        .map(|row| {
            let s = ctx.load(SPOT, row[0]);
            let k = ctx.load(STRIKE, row[1]);
            let r = ctx.load(RATE, row[2]);
            let sg = ctx.load(VOL, row[3]);
            let t = ctx.load(MAT, row[4]);

            let ratio = ctx.bin(Div, (SPOT, s), (STRIKE, k), LOGRAT);
            let log_ratio = ctx.unary(UnaryFn::Ln, (LOGRAT, ratio), LOGRAT);

            let var = ctx.bin(Mul, (VOL, sg), (VOL, sg), DRIFT);
            let half = ctx.load(DRIFT, 0.5);
            let half_var = ctx.bin(Mul, (DRIFT, var), (DRIFT, half), DRIFT);
            let drift = ctx.bin(Add, (RATE, r), (DRIFT, half_var), DRIFT);
            let drift_t = ctx.bin(Mul, (DRIFT, drift), (MAT, t), DRIFT);
            let numer = ctx.bin(Add, (LOGRAT, log_ratio), (DRIFT, drift_t), DRIFT);

            let sqrt_t = ctx.unary(UnaryFn::Sqrt, (MAT, t), VOLT);
            let vol_t = ctx.bin(Mul, (VOL, sg), (VOLT, sqrt_t), VOLT);

            let d1 = ctx.bin(Div, (DRIFT, numer), (VOLT, vol_t), D1);
            let d2 = ctx.bin(Sub, (D1, d1), (VOLT, vol_t), D2);

            let nd1 = norm_cdf(ctx, D1, d1);
            let nd2 = norm_cdf(ctx, D2, d2);

            let rt = ctx.bin(Mul, (RATE, r), (MAT, t), DISC);
            let minus_one = ctx.load(DISC, -1.0);
            let neg_rt = ctx.bin(Mul, (DISC, rt), (DISC, minus_one), DISC);
            let decay = ctx.unary(UnaryFn::Exp, (DISC, neg_rt), DISC);
            let discounted = ctx.bin(Mul, (STRIKE, k), (DISC, decay), DISC);

            let asset_leg = ctx.bin(Mul, (SPOT, s), (CDF, nd1), PRICE);
            let strike_leg = ctx.bin(Mul, (DISC, discounted), (CDF, nd2), PRICE);
            ctx.bin(Sub, (PRICE, asset_leg), (PRICE, strike_leg), PRICE)
        })
        .collect()
}

/// Standard normal CDF via the Abramowitz-Stegun 5-term polynomial; the
/// negative branch uses N(-x) = 1 - N(x) and hits the same cast sites.
fn norm_cdf(ctx: &mut KernelCtx, x_var: usize, x: f64) -> f64 {
    const GAMMA: f64 = 0.231_641_9;
    const COEFFS: [f64; 5] = [
        0.319_381_530,
        -0.356_563_782,
        1.781_477_937,
        -1.821_255_978,
        1.330_274_429,
    ];
    let ax = x.abs(); // sign flip is exact at every precision

    let gamma = ctx.load(CDFK, GAMMA);
    let gx = ctx.bin(Mul, (x_var, ax), (CDFK, gamma), CDFK);
    let one_k = ctx.load(CDFK, 1.0);
    let denom = ctx.bin(Add, (CDFK, one_k), (CDFK, gx), CDFK);
    let k = ctx.bin(Div, (CDFK, one_k), (CDFK, denom), CDFK);

    // Horner evaluation of a1*k + a2*k^2 + ... + a5*k^5.
    let mut acc = ctx.load(POLY, COEFFS[4]);
    for &c in COEFFS[..4].iter().rev() {
        acc = ctx.bin(Mul, (POLY, acc), (CDFK, k), POLY);
        let cv = ctx.load(POLY, c);
        acc = ctx.bin(Add, (POLY, acc), (POLY, cv), POLY);
    }
    let poly = ctx.bin(Mul, (POLY, acc), (CDFK, k), POLY);

    let x2 = ctx.bin(Mul, (x_var, ax), (x_var, ax), CDF);
    let minus_half = ctx.load(CDF, -0.5);
    let exponent = ctx.bin(Mul, (CDF, x2), (CDF, minus_half), CDF);
    let gauss = ctx.unary(UnaryFn::Exp, (CDF, exponent), CDF);
    let inv_sqrt_2pi = ctx.load(CDF, 0.398_942_280_401_432_7);
    let pdf = ctx.bin(Mul, (CDF, gauss), (CDF, inv_sqrt_2pi), CDF);

    let tail = ctx.bin(Mul, (CDF, pdf), (POLY, poly), CDF);
    let one_c = ctx.load(CDF, 1.0);
    let upper = ctx.bin(Sub, (CDF, one_c), (CDF, tail), CDF);
    if x >= 0.0 {
        upper
    } else {
        ctx.bin(Sub, (CDF, one_c), (CDF, upper), CDF)
    }
}

// ---------------------------------------------------------------------------
// fig1: the two-operand expression V1 = V2 + V3 with the cast temporary the
// tuning library inserts for mismatched operand precision. Used as a small
// fixture throughout the test suite.
// Variables: 0 = V1 (result), 1 = V2, 2 = V3, 3 = temporary.

/// The four-variable expression fixture: edges V2 -> T, V3 -> T, T -> V1.
pub fn fig1_expr() -> Benchmark {
    Benchmark::new(
        "fig1",
        4,
        graph(4, &[(1, 3), (2, 3), (3, 0)]),
        InputShape::ScalarPair,
        fig1_kernel,
    )
    .expect("static benchmark")
}

fn fig1_kernel(ctx: &mut KernelCtx, input: &InputSet) -> Vec<f64> {
    const RESULT: usize = 0;
    const LHS: usize = 1;
    const RHS: usize = 2;
    const TMP: usize = 3;
    let a = ctx.load(LHS, input.values[0][0]);
    let b = ctx.load(RHS, input.values[0][1]);
    let sum = ctx.bin(Add, (LHS, a), (RHS, b), TMP);
    vec![ctx.assign(TMP, RESULT, sum)]
}
