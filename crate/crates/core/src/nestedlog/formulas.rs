use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use super::delta::factorial_weights;
use super::{truncated_product, DeltaSequence};
use crate::{Error, Result};

/// `Ψ(r) = 1 / ∏_{j≥1} (1 + L_j(r))^{δ_j}`.
pub fn psi(r: f64, deltas: &DeltaSequence, tol: f64) -> Result<f64> {
    Ok(1.0 / truncated_product(r, deltas, 1, tol)?.value)
}

/// `(F₁^∞(Z), F₂^∞(Z))`, sharing one evaluation of `∏_{j≥2} (1 + L_j(Z))^{δ_j}`.
pub fn f1_f2_inf(z: f64, deltas: &DeltaSequence, tol: f64) -> Result<(f64, f64)> {
    let tail = truncated_product(z, deltas, 2, tol)?.value;
    let l1 = (E + z).ln();
    Ok((l1 / tail, tail / l1))
}

/// `F₁^∞(Z) = L_1(Z) ∏_{j≥2} (1 + L_j(Z))^{−δ_j}`.
pub fn f1_inf(z: f64, deltas: &DeltaSequence, tol: f64) -> Result<f64> {
    f1_f2_inf(z, deltas, tol).map(|(f1, _)| f1)
}

/// `F₂^∞(Z) = L_1(Z)^{−1} ∏_{j≥2} (1 + L_j(Z))^{δ_j}`.
pub fn f2_inf(z: f64, deltas: &DeltaSequence, tol: f64) -> Result<f64> {
    f1_f2_inf(z, deltas, tol).map(|(_, f2)| f2)
}

/// `H(r) = F₁^∞(√r)² + F₂^∞(√r)⁴`.
pub fn h_func(r: f64, deltas: &DeltaSequence, tol: f64) -> Result<f64> {
    if r.is_nan() || r < 0.0 {
        return Err(Error::InvalidArgument(format!("H requires r >= 0, got {r}")));
    }
    let (f1, f2) = f1_f2_inf(r.sqrt(), deltas, tol)?;
    Ok(f1 * f1 + f2.powi(4))
}

/// The constants `c_j` and `C(q)` in the critical-exponent formulas.
///
/// `c_j` past the end of `c` are taken to be 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriticalConstants {
    #[serde(default)]
    pub c: Vec<f64>,
    #[serde(default = "one")]
    pub c_q: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for CriticalConstants {
    fn default() -> Self {
        Self {
            c: Vec::new(),
            c_q: 1.0,
        }
    }
}

impl CriticalConstants {
    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        if !ok(self.c_q) || !self.c.iter().all(|&v| ok(v)) {
            return Err(Error::InvalidArgument(
                "critical constants must be finite and > 0".into(),
            ));
        }
        Ok(())
    }

    pub fn c_j(&self, j: usize) -> f64 {
        self.c.get(j.wrapping_sub(1)).copied().unwrap_or(1.0)
    }
}

/// `α = 1 / (1 + Σ_{j=1}^n c_j δ_j / j!)`.
pub fn alpha(deltas: &DeltaSequence, n: usize, consts: &CriticalConstants) -> f64 {
    let mut inv_fact = 1.0;
    let mut sum = 0.0;
    for j in 1..=n {
        inv_fact /= j as f64;
        if inv_fact == 0.0 {
            break;
        }
        sum += consts.c_j(j) * deltas.delta(j) * inv_fact;
    }
    1.0 / (1.0 + sum)
}

/// `Φ(s, q) = C(q) (s − 1/2)^α`.
pub fn phi_threshold(
    s: f64,
    q: f64,
    deltas: &DeltaSequence,
    n: usize,
    consts: &CriticalConstants,
) -> Result<f64> {
    if !(s >= 0.5) || !s.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "threshold requires s >= 1/2, got {s}"
        )));
    }
    if !(q > 3.0) {
        return Err(Error::InvalidArgument(format!(
            "threshold requires q > 3, got {q}"
        )));
    }
    consts.validate()?;
    if s == 0.5 {
        return Ok(0.0);
    }
    Ok(consts.c_q * (s - 0.5).powf(alpha(deltas, n, consts)))
}

/// `δ_j = C · j! / Σ_{k=1}^n k!`, returned as an explicit sequence.
pub fn optimal_deltas(c: f64, n: usize) -> Result<DeltaSequence> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidArgument(format!("C must be > 0, got {c}")));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    DeltaSequence::explicit(factorial_weights(c, n))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct InterpExponents {
    pub theta: f64,
    pub alpha: f64,
    pub k: f64,
}

/// Interpolation exponents for `q > 3`:
/// `θ = (3/2) q/(3q − 2)`, `α = (3/2)(1/2 − 1/q)` and
/// `K = max{2 + θ(1 − α), 2(1 + θ(1 − α))}`.
pub fn interp_exponents(q: f64) -> Result<InterpExponents> {
    if !(q > 3.0) {
        return Err(Error::InvalidArgument(format!("q must be > 3, got {q}")));
    }
    let theta = if q.is_infinite() {
        0.5
    } else {
        1.5 * q / (3.0 * q - 2.0)
    };
    let alpha = 1.5 * (0.5 - 1.0 / q);
    let m = theta * (1.0 - alpha);
    Ok(InterpExponents {
        theta,
        alpha,
        k: (2.0 + m).max(2.0 * (1.0 + m)),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nestedlog::nested_log;
    use proptest::prelude::*;

    const TOL: f64 = 1e-12;

    #[test]
    fn psi_examples() {
        let one = DeltaSequence::explicit(vec![1.0]).unwrap();
        assert_eq!(psi(0.0, &one, TOL).unwrap(), 0.5);
        assert_eq!(psi(0.0, &DeltaSequence::empty(), TOL).unwrap(), 1.0);
        let r = E * E - E;
        assert!((psi(r, &one, TOL).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn f1_f2_examples() {
        let empty = DeltaSequence::empty();
        assert_eq!(f1_f2_inf(0.0, &empty, TOL).unwrap(), (1.0, 1.0));

        let d2 = DeltaSequence::explicit(vec![0.0, 1.0]).unwrap();
        let z = E * E - E;
        let l2 = (E + 2.0).ln();
        let f1 = f1_inf(z, &d2, TOL).unwrap();
        assert!((f1 - 2.0 / (1.0 + l2)).abs() < 1e-14);
        assert!((f1 - 0.7839).abs() < 1e-4);
    }

    #[test]
    fn h_examples() {
        let empty = DeltaSequence::empty();
        assert_eq!(h_func(0.0, &empty, TOL).unwrap(), 2.0);
        let r = (E * E - E).powi(2);
        assert!((h_func(r, &empty, TOL).unwrap() - 4.0625).abs() < 1e-13);
    }

    #[test]
    fn h_power_law_matches_oracle() {
        // Product from j = 2 of (1 + L_j(10))^{1/j²}: 200 explicit factors plus
        // the ζ(2) tail at the fixed point.
        let seq = DeltaSequence::power_law(1.0, 2.0).unwrap();
        let z = 10.0_f64;
        let mut l = z;
        let mut log_p = 0.0;
        let mut head = 0.0;
        for j in 1..=200usize {
            l = (E + l).ln();
            let d = 1.0 / (j * j) as f64;
            head += d;
            if j >= 2 {
                log_p += d * (1.0 + l).ln();
            }
        }
        log_p += (std::f64::consts::PI.powi(2) / 6.0 - head) * (1.0 + l).ln();
        let p2 = log_p.exp();
        let l1 = (E + z).ln();
        let oracle = (l1 / p2).powi(2) + (p2 / l1).powi(4);
        let h = h_func(100.0, &seq, 1e-10).unwrap();
        assert!((h / oracle - 1.0).abs() < 1e-6, "{h} vs {oracle}");
    }

    #[test]
    fn alpha_examples() {
        let ones = DeltaSequence::constant(1.0).unwrap();
        let c = CriticalConstants::default();
        assert_eq!(alpha(&ones, 0, &c), 1.0);
        assert!((alpha(&ones, 3, &c) - 0.375).abs() < 1e-15);
        assert!((alpha(&ones, 20, &c) - (-1.0f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn phi_examples() {
        let ones = DeltaSequence::constant(1.0).unwrap();
        let c = CriticalConstants::default();
        assert_eq!(phi_threshold(0.5, 4.0, &ones, 5, &c).unwrap(), 0.0);
        let v = phi_threshold(0.6, 4.0, &ones, 3, &c).unwrap();
        assert!((v - 0.1f64.powf(0.375)).abs() < 1e-15);
        assert!((v - 0.42170).abs() < 1e-5);
        // α → 0 as the weighted sum grows without bound
        let huge = DeltaSequence::constant(1e15).unwrap();
        assert!((phi_threshold(0.6, 4.0, &huge, 1, &c).unwrap() - 1.0).abs() < 1e-12);
        assert!(phi_threshold(0.4, 4.0, &ones, 3, &c).is_err());
        assert!(phi_threshold(0.6, 3.0, &ones, 3, &c).is_err());
    }

    #[test]
    fn optimal_delta_examples() {
        let check = |c: f64, n: usize, expected: &[f64]| {
            let seq = optimal_deltas(c, n).unwrap();
            for (j, e) in expected.iter().enumerate() {
                assert!((seq.delta(j + 1) - e).abs() < 1e-15);
            }
        };
        check(1.0, 1, &[1.0]);
        check(1.0, 3, &[1.0 / 9.0, 2.0 / 9.0, 6.0 / 9.0]);
        check(2.0, 2, &[2.0 / 3.0, 4.0 / 3.0]);
    }

    #[test]
    fn interp_examples() {
        let e = interp_exponents(4.0).unwrap();
        assert!((e.theta - 0.6).abs() < 1e-12);
        assert!((e.alpha - 0.375).abs() < 1e-12);
        assert!((e.k - 2.75).abs() < 1e-12);
        let e = interp_exponents(6.0).unwrap();
        assert!((e.theta - 0.5625).abs() < 1e-12);
        assert!((e.alpha - 0.5).abs() < 1e-12);
        assert!((e.k - 2.5625).abs() < 1e-12);
        let e = interp_exponents(1e12).unwrap();
        assert!((e.theta - 0.5).abs() < 1e-9 && (e.alpha - 0.75).abs() < 1e-9);
        assert!(interp_exponents(3.0).is_err());
    }

    #[test]
    fn divergent_tail_propagates() {
        let c = DeltaSequence::constant(0.1).unwrap();
        assert!(psi(1.0, &c, TOL).is_err());
        assert!(h_func(1.0, &c, TOL).is_err());
    }

    #[test]
    fn psi_nonincreasing_on_log_grid() {
        let seq = DeltaSequence::power_law(0.8, 1.7).unwrap();
        let mut prev = psi(0.0, &seq, 1e-12).unwrap();
        assert!(prev <= 2f64.powf(-0.8) + 1e-15);
        for i in 0..200 {
            let r = 10f64.powf(-6.0 + 18.0 * i as f64 / 199.0);
            let v = psi(r, &seq, 1e-12).unwrap();
            assert!(v > 0.0 && v <= prev * (1.0 + 1e-11), "r = {r}");
            prev = v;
        }
    }

    proptest! {
        #[test]
        fn f1_f2_reciprocal(z in 0.0f64..1e9, a in 0.01f64..3.0, p in 1.05f64..4.0) {
            let seq = DeltaSequence::power_law(a, p).unwrap();
            let tol = 1e-9;
            let (f1, f2) = f1_f2_inf(z, &seq, tol).unwrap();
            prop_assert!((f1 * f2 - 1.0).abs() <= 4.0 * tol);
        }

        #[test]
        fn alpha_decreasing_in_n_and_delta(
            values in proptest::collection::vec(0.01f64..5.0, 1..10),
            bump in 0.01f64..1.0,
        ) {
            let c = CriticalConstants::default();
            let seq = DeltaSequence::explicit(values.clone()).unwrap();
            for n in 0..values.len() {
                prop_assert!(alpha(&seq, n + 1, &c) < alpha(&seq, n, &c));
            }
            let n = values.len();
            for k in 0..n {
                let mut bumped = values.clone();
                bumped[k] += bump;
                let s2 = DeltaSequence::explicit(bumped).unwrap();
                prop_assert!(alpha(&s2, n, &c) < alpha(&seq, n, &c));
            }
            let a = alpha(&seq, n, &c);
            prop_assert!(a > 0.0 && a <= 1.0);
        }

        #[test]
        fn optimal_deltas_sum_to_c(c in 0.01f64..100.0, n in 1usize..400) {
            let seq = optimal_deltas(c, n).unwrap();
            let s: f64 = (1..=n).map(|j| seq.delta(j)).sum();
            prop_assert!((s - c).abs() <= 1e-12 * c);
        }

        #[test]
        fn nested_log_agrees_with_l1(z in 0.0f64..1e6) {
            prop_assert_eq!(nested_log(1, z).unwrap(), (E + z).ln());
        }
    }
}
