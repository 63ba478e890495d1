//! Precision-parameterized micro-benchmark kernels.
//!
//! Each benchmark declares a fixed number of precision-bearing variables
//! (program variables plus the cast temporaries a precision-tuning library
//! would insert) and a hand-authored [`DependencyGraph`] whose edges are
//! exactly the kernel's cast sites. Kernels execute through a [`KernelCtx`]
//! that rounds every loaded value, every operation result, and every
//! assignment at the owning variable's precision.

mod kernels;

use std::collections::BTreeSet;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::error::{Error, Result};
use crate::flexnum::{apply_op, cast, round_with_flags, BinOp, NumFlags, PrecisionSpec};
use crate::graph::DependencyGraph;
use crate::sampling::PrecisionConfig;

pub use kernels::fig1_expr;

const DEFAULT_VECTOR_LEN: usize = 256;
const DEFAULT_MATRIX_ROWS: usize = 16;
const DEFAULT_MATRIX_COLS: usize = 16;
const DEFAULT_OPTION_COUNT: usize = 8;

/// Structure of a benchmark's input data. Generation uses the default
/// sizes; validation accepts any size of the right shape so tests can run
/// small hand-built inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputShape {
    /// One row whose length is a power of two (in-place transforms).
    PowerOfTwoVector,
    /// One row of even length (pairwise transforms).
    EvenVector,
    /// Three rows: scalar `[a]`, vector `x`, vector `y` of equal length.
    ScalarAndTwoVectors,
    /// Rectangular matrix, at least 2x2.
    Matrix,
    /// Rows of `[spot, strike, rate, volatility, maturity]` with positive
    /// spot/strike/volatility/maturity.
    OptionChain,
    /// One row of two scalars.
    ScalarPair,
}

/// A structured set of real input values plus seed provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSet {
    pub values: Vec<Vec<f64>>,
    pub seed: u64,
}

impl InputSet {
    pub fn new(values: Vec<Vec<f64>>, seed: u64) -> Result<Self> {
        for row in &values {
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput("non-finite entry".into()));
            }
        }
        Ok(Self { values, seed })
    }
}

/// Unary functions kernels route through the rounding context.
#[derive(Debug, Clone, Copy)]
pub enum UnaryFn {
    Sqrt,
    Ln,
    Exp,
}

impl UnaryFn {
    fn eval(self, v: f64) -> f64 {
        match self {
            UnaryFn::Sqrt => v.sqrt(),
            UnaryFn::Ln => v.ln(),
            UnaryFn::Exp => v.exp(),
        }
    }
}

/// Execution context owning the per-variable precisions, the sticky
/// exception flags, and (when auditing) the set of cast sites hit.
///
/// Operands of [`bin`](Self::bin) and [`unary`](Self::unary) are first cast
/// to the destination variable's precision, the operation computes in
/// reference arithmetic, and the result is rounded at the destination.
/// Source == destination sites involve no cast (values are already at that
/// precision) and record no edge.
pub struct KernelCtx {
    specs: Vec<PrecisionSpec>,
    flags: NumFlags,
    trace: Option<CastTrace>,
}

impl KernelCtx {
    fn new(config: &PrecisionConfig, traced: bool) -> Self {
        Self {
            specs: (0..config.len()).map(|i| config.spec(i)).collect(),
            flags: NumFlags::default(),
            trace: traced.then(BTreeSet::new),
        }
    }

    /// Initial quantization of an input value or program constant at `var`'s
    /// precision. Not a cast site.
    pub fn load(&mut self, var: usize, raw: f64) -> f64 {
        round_with_flags(raw, self.specs[var], &mut self.flags)
    }

    fn site(&mut self, src: usize, dst: usize, v: f64) -> f64 {
        if src == dst {
            return v;
        }
        if let Some(t) = &mut self.trace {
            t.insert((src, dst));
        }
        cast(v, self.specs[dst], &mut self.flags)
    }

    /// Binary operation: operands tagged with their owning variables, result
    /// stored at `dst`.
    pub fn bin(&mut self, op: BinOp, a: (usize, f64), b: (usize, f64), dst: usize) -> f64 {
        let av = self.site(a.0, dst, a.1);
        let bv = self.site(b.0, dst, b.1);
        apply_op(op, av, bv, self.specs[dst], &mut self.flags)
    }

    /// Unary function applied at `dst`'s precision.
    pub fn unary(&mut self, f: UnaryFn, src: (usize, f64), dst: usize) -> f64 {
        let v = self.site(src.0, dst, src.1);
        round_with_flags(f.eval(v), self.specs[dst], &mut self.flags)
    }

    /// Assignment of a value held at `src` into `dst`.
    pub fn assign(&mut self, src: usize, dst: usize, v: f64) -> f64 {
        self.site(src, dst, v)
    }
}

type KernelFn = fn(&mut KernelCtx, &InputSet) -> Vec<f64>;

/// Set of cast sites `(src, dst)` hit by one traced execution.
pub type CastTrace = BTreeSet<(usize, usize)>;

/// A precision-parameterized micro-benchmark.
#[derive(Clone)]
pub struct Benchmark {
    name: &'static str,
    n_var: usize,
    graph: DependencyGraph,
    input_shape: InputShape,
    kernel: KernelFn,
}

impl Benchmark {
    pub fn new(
        name: &'static str,
        n_var: usize,
        graph: DependencyGraph,
        input_shape: InputShape,
        kernel: KernelFn,
    ) -> Result<Self> {
        if graph.n_nodes() != n_var {
            return Err(Error::Graph(format!(
                "benchmark {name}: graph has {} nodes, expected {n_var}",
                graph.n_nodes()
            )));
        }
        Ok(Self {
            name,
            n_var,
            graph,
            input_shape,
            kernel,
        })
    }

    pub fn name(&self) -> &'static str {
        self.name
    }

    pub fn n_var(&self) -> usize {
        self.n_var
    }

    pub fn graph(&self) -> &DependencyGraph {
        &self.graph
    }

    pub fn input_shape(&self) -> InputShape {
        self.input_shape
    }

    /// Runs the kernel under `config`, rounding every value through the
    /// owning variable's precision.
    pub fn run(&self, config: &PrecisionConfig, input: &InputSet) -> Result<(Vec<f64>, NumFlags)> {
        let (out, flags, _) = self.run_inner(config, input, false)?;
        Ok((out, flags))
    }

    /// [`run`](Self::run) plus the set of cast sites the execution hit, for
    /// auditing kernels against their declared dependency graphs.
    pub fn run_traced(
        &self,
        config: &PrecisionConfig,
        input: &InputSet,
    ) -> Result<(Vec<f64>, NumFlags, CastTrace)> {
        let (out, flags, trace) = self.run_inner(config, input, true)?;
        Ok((out, flags, trace.unwrap_or_default()))
    }

    fn run_inner(
        &self,
        config: &PrecisionConfig,
        input: &InputSet,
        traced: bool,
    ) -> Result<(Vec<f64>, NumFlags, Option<CastTrace>)> {
        if config.len() != self.n_var {
            return Err(Error::ArityMismatch {
                expected: self.n_var,
                got: config.len(),
            });
        }
        self.validate_input(input)?;
        let mut ctx = KernelCtx::new(config, traced);
        let out = (self.kernel)(&mut ctx, input);
        Ok((out, ctx.flags, ctx.trace))
    }

    /// Output at maximum precision; rounding is the identity there, so this
    /// bit-matches the kernel written in plain reference arithmetic.
    pub fn reference_output(&self, input: &InputSet) -> Result<Vec<f64>> {
        Ok(self.run(&PrecisionConfig::all_max(self.n_var), input)?.0)
    }

    /// Draws `count` input sets from the benchmark's input distribution,
    /// deterministically for a fixed seed.
    pub fn generate_input_sets(&self, count: usize, seed: u64) -> Vec<InputSet> {
        (0..count)
            .map(|k| {
                let set_seed = seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
                let mut rng = StdRng::seed_from_u64(set_seed);
                let values = match self.input_shape {
                    InputShape::PowerOfTwoVector | InputShape::EvenVector => {
                        vec![unit_row(&mut rng, DEFAULT_VECTOR_LEN)]
                    }
                    InputShape::ScalarAndTwoVectors => vec![
                        unit_row(&mut rng, 1),
                        unit_row(&mut rng, DEFAULT_VECTOR_LEN),
                        unit_row(&mut rng, DEFAULT_VECTOR_LEN),
                    ],
                    InputShape::Matrix => (0..DEFAULT_MATRIX_ROWS)
                        .map(|_| unit_row(&mut rng, DEFAULT_MATRIX_COLS))
                        .collect(),
                    InputShape::OptionChain => {
                        // One underlying per input set, a ladder of strikes
                        // near the money. Quotes land on dyadic market ticks,
                        // and strikes stay close to spot: far out-of-the-money
                        // prices approach zero and the relative-error metric
                        // would saturate at the clamp for every configuration.
                        let tick = |rng: &mut StdRng, lo: f64, hi: f64, step: f64| {
                            let n = ((hi - lo) / step) as u64;
                            lo + step * rng.random_range(0..=n) as f64
                        };
                        let spot = tick(&mut rng, 95.0, 105.0, 0.5);
                        let rate = tick(&mut rng, 0.0078125, 0.05, 0.001953125);
                        let vol = tick(&mut rng, 0.3, 0.4, 0.0078125);
                        let maturity = tick(&mut rng, 1.0, 1.5, 0.0625);
                        (0..DEFAULT_OPTION_COUNT)
                            .map(|k| {
                                let lo = spot * 0.9
                                    + (spot * 0.2) * k as f64 / DEFAULT_OPTION_COUNT as f64;
                                let strike = tick(&mut rng, lo, lo + 2.0, 0.25);
                                vec![spot, strike, rate, vol, maturity]
                            })
                            .collect()
                    }
                    InputShape::ScalarPair => vec![unit_row(&mut rng, 2)],
                };
                InputSet {
                    values,
                    seed: set_seed,
                }
            })
            .collect()
    }

    fn validate_input(&self, input: &InputSet) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidInput(format!("{}: {msg}", self.name)));
        match self.input_shape {
            InputShape::PowerOfTwoVector => {
                if input.values.len() != 1 {
                    return fail("expected a single vector".into());
                }
                let n = input.values[0].len();
                if n < 2 || !n.is_power_of_two() {
                    return fail(format!("length {n} is not a power of two >= 2"));
                }
            }
            InputShape::EvenVector => {
                if input.values.len() != 1 {
                    return fail("expected a single vector".into());
                }
                let n = input.values[0].len();
                if n < 2 || !n.is_multiple_of(2) {
                    return fail(format!("length {n} is not even >= 2"));
                }
            }
            InputShape::ScalarAndTwoVectors => {
                if input.values.len() != 3
                    || input.values[0].len() != 1
                    || input.values[1].len() != input.values[2].len()
                    || input.values[1].is_empty()
                {
                    return fail("expected rows [a], x, y with |x| = |y| >= 1".into());
                }
            }
            InputShape::Matrix => {
                let rows = input.values.len();
                if rows < 2 {
                    return fail("expected at least 2 rows".into());
                }
                let cols = input.values[0].len();
                if cols < 2 || input.values.iter().any(|r| r.len() != cols) {
                    return fail("expected a rectangular matrix, at least 2 columns".into());
                }
            }
            InputShape::OptionChain => {
                if input.values.is_empty() {
                    return fail("expected at least one option".into());
                }
                for (i, row) in input.values.iter().enumerate() {
                    if row.len() != 5 {
                        return fail(format!("option {i}: expected 5 fields"));
                    }
                    let (s, k, sg, t) = (row[0], row[1], row[3], row[4]);
                    if s <= 0.0 || k <= 0.0 || sg <= 0.0 || t <= 0.0 {
                        return fail(format!(
                            "option {i}: spot/strike/volatility/maturity must be positive"
                        ));
                    }
                }
            }
            InputShape::ScalarPair => {
                if input.values.len() != 1 || input.values[0].len() != 2 {
                    return fail("expected one row of two scalars".into());
                }
            }
        }
        Ok(())
    }
}

fn unit_row(rng: &mut StdRng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

/// The six catalog benchmarks, in declaration order.
pub fn catalog() -> Vec<Benchmark> {
    vec![
        kernels::fwt(),
        kernels::saxpy(),
        kernels::convolution(),
        kernels::dwt(),
        kernels::correlation(),
        kernels::black_scholes(),
    ]
}

/// Catalog lookup by name; also resolves the `fig1` testing fixture.
pub fn by_name(name: &str) -> Result<Benchmark> {
    match name {
        "fwt" => Ok(kernels::fwt()),
        "saxpy" => Ok(kernels::saxpy()),
        "convolution" => Ok(kernels::convolution()),
        "dwt" => Ok(kernels::dwt()),
        "correlation" => Ok(kernels::correlation()),
        "blackscholes" => Ok(kernels::black_scholes()),
        "fig1" => Ok(kernels::fig1_expr()),
        other => Err(Error::UnknownBenchmark(other.to_string())),
    }
}

#[cfg(test)]
mod tests;
