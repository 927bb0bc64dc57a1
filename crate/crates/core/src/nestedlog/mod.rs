//! Nested logarithms and the scalar quantities built from them.
//!
//! `L_0(x) = x` and `L_j(x) = log(e + L_{j-1}(x))`. For every `x ≥ 0` the
//! iterates `L_j(x)`, `j ≥ 1`, move monotonically toward the unique fixed point
//! `ℓ* = log(e + ℓ*) ≈ 1.4204`. That monotone approach is what makes the
//! infinite products in this module certifiable: every factor past the
//! truncation point is trapped between its value at `ℓ*` and its value at the
//! first omitted index.

mod delta;
mod formulas;
mod product;

use std::f64::consts::E;
use std::sync::OnceLock;

pub use delta::{DeltaGenerator, DeltaSequence, SeriesClass};
pub use formulas::{
    alpha, f1_f2_inf, f1_inf, f2_inf, h_func, interp_exponents, optimal_deltas, phi_threshold,
    psi, CriticalConstants, InterpExponents,
};
pub use product::{product_with_terms, truncated_product, truncated_product_capped, ProductValue};

use crate::{Error, Result};

/// Hard ceiling on the number of factors any certified truncation may use.
pub const MAX_TERMS: usize = 10_000_000;

/// `L_j(x)`, the `j`-fold nested logarithm.
pub fn nested_log(j: usize, x: f64) -> Result<f64> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "nested_log requires x >= 0, got {x}"
        )));
    }
    Ok(nested_log_unchecked(j, x))
}

#[inline]
pub(crate) fn nested_log_unchecked(j: usize, x: f64) -> f64 {
    let mut l = x;
    for _ in 0..j {
        l = (E + l).ln();
    }
    l
}

/// Iterator over `L_1(x), L_2(x), ...`.
#[derive(Clone, Debug)]
pub(crate) struct NestedLogs {
    current: f64,
}

impl NestedLogs {
    pub(crate) fn new(x: f64) -> Self {
        Self { current: x }
    }
}

impl Iterator for NestedLogs {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        self.current = (E + self.current).ln();
        Some(self.current)
    }
}

/// The fixed point `ℓ*` of `ℓ ↦ log(e + ℓ)`.
pub fn log_fixed_point() -> f64 {
    static FIXED: OnceLock<f64> = OnceLock::new();
    *FIXED.get_or_init(|| {
        // g(ℓ) = ℓ − log(e + ℓ) is increasing with g(1) < 0 < g(2).
        let (mut lo, mut hi) = (1.0_f64, 2.0_f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if mid - (E + mid).ln() < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    })
}
