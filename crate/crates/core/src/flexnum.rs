//! Reduced-precision floating-point emulation.
//!
//! Values are stored as ordinary `f64`; every arithmetic operation computes
//! in full `f64` (reference) precision and the result is then rounded to the
//! target variable's mantissa width. The exponent range is always the
//! reference format's (11-bit), only the number of stored fraction bits is
//! tunable, from [`MIN_MANTISSA_BITS`] to [`MAX_MANTISSA_BITS`] where 52
//! means "reference precision" and rounding is the identity.
//!
//! Rounding is round-to-nearest, ties-to-even. Results that fall below the
//! smallest normal magnitude land on the emulated format's subnormal grid
//! (spacing `2^(-1022 - m)` for `m` fraction bits, so zero is reachable) and
//! raise the `underflow_to_zero` flag. Results that fall above the largest
//! finite magnitude become infinities and raise `overflow`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest tunable mantissa width.
pub const MIN_MANTISSA_BITS: u32 = 2;
/// Reference mantissa width (`f64`'s 52 stored fraction bits).
pub const MAX_MANTISSA_BITS: u32 = 52;

const SIGN_MASK: u64 = 1 << 63;

/// Mantissa width of one emulated variable.
///
/// Wraps the number of stored fraction bits; exponent semantics are fixed to
/// the reference format's.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PrecisionSpec(u32);

impl PrecisionSpec {
    pub fn new(mantissa_bits: u32) -> Result<Self> {
        if (MIN_MANTISSA_BITS..=MAX_MANTISSA_BITS).contains(&mantissa_bits) {
            Ok(Self(mantissa_bits))
        } else {
            Err(Error::InvalidPrecision(mantissa_bits))
        }
    }

    /// Maximum precision; rounding at this width is the identity.
    pub const fn reference() -> Self {
        Self(MAX_MANTISSA_BITS)
    }

    pub const fn mantissa_bits(self) -> u32 {
        self.0
    }
}

/// Sticky numerical-exception flags for one benchmark execution.
///
/// `overflow` records that a non-finite magnitude was produced or passed
/// through a rounding site; `nan` likewise for NaNs. Flags only ever turn on.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NumFlags {
    pub overflow: bool,
    pub underflow_to_zero: bool,
    pub nan: bool,
    pub div_by_zero: bool,
}

impl NumFlags {
    pub fn merge(&mut self, other: NumFlags) {
        self.overflow |= other.overflow;
        self.underflow_to_zero |= other.underflow_to_zero;
        self.nan |= other.nan;
        self.div_by_zero |= other.div_by_zero;
    }

    /// True when the execution produced a value the error metric cannot
    /// meaningfully compare (NaN or overflowed magnitude).
    pub fn fatal(&self) -> bool {
        self.nan || self.overflow
    }

    pub fn any(&self) -> bool {
        self.overflow || self.underflow_to_zero || self.nan || self.div_by_zero
    }
}

/// Binary operations the emulator supports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn eval(self, a: f64, b: f64) -> f64 {
        match self {
            BinOp::Add => a + b,
            BinOp::Sub => a - b,
            BinOp::Mul => a * b,
            BinOp::Div => a / b,
        }
    }
}

/// Rounds `value` to the nearest value representable with
/// `spec.mantissa_bits()` stored fraction bits, ties to even.
///
/// Non-finite inputs pass through unchanged. The operation is idempotent,
/// sign-symmetric, and monotone non-decreasing in `value`.
pub fn round_to_precision(value: f64, spec: PrecisionSpec) -> f64 {
    let m = spec.mantissa_bits();
    if m >= MAX_MANTISSA_BITS || !value.is_finite() {
        return value;
    }
    let bits = value.to_bits();
    let sign = bits & SIGN_MASK;
    // Exponent and fraction fields treated as one magnitude integer: rounding
    // the low fraction bits with carry handles binade crossings, subnormals
    // and overflow-to-infinity in a single path (the carry bumps the exponent
    // field, and an all-ones exponent with zero fraction *is* infinity).
    let mag = bits & !SIGN_MASK;
    let drop = MAX_MANTISSA_BITS - m;
    let rem = mag & ((1u64 << drop) - 1);
    let half = 1u64 << (drop - 1);
    let mut out = mag & !((1u64 << drop) - 1);
    if rem > half || (rem == half && (out >> drop) & 1 == 1) {
        out += 1u64 << drop;
    }
    f64::from_bits(sign | out)
}

/// [`round_to_precision`] with exception flagging.
///
/// Non-finite inputs pass through and set `nan` / `overflow`; finite inputs
/// that round to an infinity set `overflow`; nonzero finite inputs whose
/// result lands below the smallest normal magnitude (on the emulated
/// subnormal grid, possibly at zero) set `underflow_to_zero`.
pub fn round_with_flags(value: f64, spec: PrecisionSpec, flags: &mut NumFlags) -> f64 {
    if value.is_nan() {
        flags.nan = true;
        return value;
    }
    if value.is_infinite() {
        flags.overflow = true;
        return value;
    }
    let rounded = round_to_precision(value, spec);
    if rounded.is_infinite() {
        flags.overflow = true;
    } else if value != 0.0 && rounded.abs() < f64::MIN_POSITIVE {
        flags.underflow_to_zero = true;
    }
    rounded
}

/// Computes `op` on operands already rounded to their own variables'
/// precisions, in full reference precision, then rounds the result to
/// `result_spec`.
///
/// Division by zero with a finite nonzero numerator sets `div_by_zero` and
/// returns the signed infinity of reference semantics.
pub fn apply_op(
    op: BinOp,
    a: f64,
    b: f64,
    result_spec: PrecisionSpec,
    flags: &mut NumFlags,
) -> f64 {
    if op == BinOp::Div && b == 0.0 && a != 0.0 && a.is_finite() {
        flags.div_by_zero = true;
    }
    round_with_flags(op.eval(a, b), result_spec, flags)
}

/// Re-rounds `value` at the destination variable's precision.
///
/// Numerically identical to [`round_with_flags`]; kept as a named operation
/// so benchmark kernels mirror the assignment edges of their dependency
/// graphs one-to-one.
pub fn cast(value: f64, to_spec: PrecisionSpec, flags: &mut NumFlags) -> f64 {
    round_with_flags(value, to_spec, flags)
}
