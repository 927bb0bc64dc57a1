//! Osgood-type comparison bounds `ρ(t) ≤ G⁻¹(G(ρ₀) + ∫₀ᵗ γ)`.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use super::quad::adaptive_simpson;
use crate::{Error, Result};

/// Modulus `Γ` in `ρ(t) ≤ ρ₀ + ∫ γ(s) Γ(ρ(s)) ds`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modulus {
    /// `Γ(r) = r`
    Linear,
    /// `Γ(r) = r log(e + r)`
    LogLinear,
}

impl Modulus {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Self::Linear => r,
            Self::LogLinear => r * (E + r).ln(),
        }
    }

    /// `G(r) = ∫_1^r dr'/Γ(r')`, computed in `s = log r'`.
    fn g(&self, r: f64) -> Result<f64> {
        let f = |s: f64| -> Result<f64> {
            let x = s.exp();
            Ok(x / self.eval(x))
        };
        match self {
            Self::Linear => Ok(r.ln()),
            Self::LogLinear => {
                let b = r.ln();
                // integrand lies in (0, 1]
                adaptive_simpson(&f, 0.0, b, 1e-14 * b.abs().max(1e-3))
            }
        }
    }

    fn g_inverse(&self, target: f64, hint: f64) -> Result<f64> {
        if *self == Self::Linear {
            return Ok(target.exp());
        }
        // G is increasing; bracket in log r then bisect
        let mut lo = hint.ln();
        let mut hi = lo;
        let mut step = 1.0;
        while self.g(lo.exp())? > target {
            lo -= step;
            step *= 2.0;
        }
        step = 1.0;
        while self.g(hi.exp())? < target {
            hi += step;
            step *= 2.0;
            if hi > 700.0 {
                return Err(Error::NonFinite(format!("G⁻¹({target}) overflows")));
            }
        }
        while hi - lo > 1e-15 * hi.abs().max(1.0) {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            if self.g(mid.exp())? < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok((0.5 * (lo + hi)).exp())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OsgoodSample {
    pub t: f64,
    /// `∫₀ᵗ γ`
    pub gamma_integral: f64,
    pub bound: f64,
}

/// The bound at each of `gamma.len()` uniform times on `[0, T]`, with `∫γ`
/// by the trapezoid rule on the samples.
pub fn osgood_bound(rho0: f64, gamma: &[f64], modulus: Modulus, t_final: f64) -> Result<Vec<OsgoodSample>> {
    if !(rho0 > 0.0 && rho0.is_finite()) {
        return Err(Error::InvalidArgument(format!("rho0 must be finite and > 0, got {rho0}")));
    }
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::InvalidArgument(format!("T must be finite and >= 0, got {t_final}")));
    }
    if gamma.len() < 2 && !(gamma.len() == 1 && t_final == 0.0) {
        return Err(Error::InvalidArgument("gamma needs at least 2 samples on [0, T]".into()));
    }
    if let Some(g) = gamma.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
        return Err(Error::InvalidArgument(format!("gamma must be finite and >= 0, got {g}")));
    }
    let dt = if gamma.len() > 1 { t_final / (gamma.len() - 1) as f64 } else { 0.0 };
    let g0 = modulus.g(rho0)?;
    let mut out = Vec::with_capacity(gamma.len());
    let mut integral = 0.0;
    let mut bound = rho0;
    for (i, g) in gamma.iter().enumerate() {
        if i > 0 {
            integral += 0.5 * dt * (gamma[i - 1] + g);
        }
        bound = if integral == 0.0 { rho0 } else { modulus.g_inverse(g0 + integral, bound)? };
        out.push(OsgoodSample { t: i as f64 * dt, gamma_integral: integral, bound });
    }
    Ok(out)
}
