//! The log-improved Lebesgue functional, the smallness test on initial data,
//! and the radial profiles that separate the log-improved spaces.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::nestedlog::{psi, truncated_product, DeltaSequence};
use crate::spectral::{
    frac_laplacian, frac_laplacian_vec, lp_norm, lp_norm_vec, phi_bump, sobolev_norm,
    sobolev_norm_vec, Grid3, SpectralField, VectorField,
};
use crate::{Error, Result};

/// Largest `M` tried by the bracket scan before the norm is declared infinite.
pub const OVERFLOW_BOUND: f64 = 1e300;

/// Starting point of the bracket scan, relative to `max(A, 1)`.
const SCAN_START: f64 = 9.094947017729282e-13; // 2^-40

/// `φ(M) = M ∏_{j≥1} (1 + L_j(M))^{−δ_j}`.
pub fn phi_functional(m: f64, deltas: &DeltaSequence, tol: f64) -> Result<f64> {
    if m == 0.0 {
        return Ok(0.0);
    }
    Ok(m / truncated_product(m, deltas, 1, tol)?.value)
}

/// `inf { M > 0 : A ≤ φ(M) }`, the log-improved norm of a function whose
/// plain Lebesgue norm is `A`.
///
/// The first factor-2 step at which `φ` reaches `A` is located from
/// `max(A, 1)·2^{−40}` upward, then bisected to relative width `tol`. Taking the
/// first crossing keeps the infimum even where `φ` is not monotone.
pub fn loglebesgue_norm(a: f64, deltas: &DeltaSequence, tol: f64) -> Result<f64> {
    if !(a >= 0.0 && a.is_finite()) {
        return Err(Error::InvalidArgument(format!("A must be finite and >= 0, got {a}")));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidArgument(format!("tolerance must lie in (0, 1), got {tol}")));
    }
    if a == 0.0 {
        return Ok(0.0);
    }
    let ptol = 0.25 * tol;
    let phi = |m: f64| match phi_functional(m, deltas, ptol) {
        Err(Error::DivergentTail { .. }) => Err(Error::NormInfinite { bound: OVERFLOW_BOUND }),
        other => other,
    };

    let mut lo = 0.0;
    let mut hi = a.max(1.0) * SCAN_START;
    while phi(hi)? < a {
        lo = hi;
        hi *= 2.0;
        if hi > OVERFLOW_BOUND {
            return Err(Error::NormInfinite { bound: OVERFLOW_BOUND });
        }
    }
    while hi - lo > tol * hi {
        let mid = 0.5 * (lo + hi);
        if phi(mid)? >= a {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionVerdict {
    /// `‖(−Δ)^{1/4} u₀‖_{L^q}`
    pub lhs: f64,
    /// `‖u₀‖_{Ḣ^{1/2}}`
    pub h_half_norm: f64,
    /// `Ψ(‖u₀‖_{Ḣ^{1/2}})`
    pub psi_value: f64,
    /// `C₀ Ψ`
    pub threshold: f64,
    pub admissible: bool,
    /// `threshold − lhs`
    pub margin: f64,
}

impl CriterionVerdict {
    fn assemble(lhs: f64, h_half_norm: f64, psi_value: f64, c0: f64) -> Result<Self> {
        let threshold = c0 * psi_value;
        for (name, v) in [("lhs", lhs), ("h_half_norm", h_half_norm), ("psi", psi_value)] {
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("{name} = {v}")));
            }
        }
        Ok(Self {
            lhs,
            h_half_norm,
            psi_value,
            threshold,
            admissible: lhs <= threshold,
            margin: threshold - lhs,
        })
    }
}

fn check_params(q: f64, c0: f64) -> Result<()> {
    if !(q > 3.0) {
        return Err(Error::InvalidArgument(format!("q must be > 3, got {q}")));
    }
    if !(c0 > 0.0 && c0.is_finite()) {
        return Err(Error::InvalidArgument(format!("C0 must be finite and > 0, got {c0}")));
    }
    Ok(())
}

/// Smallness test `‖(−Δ)^{1/4}u₀‖_{L^q} ≤ C₀ Ψ(‖u₀‖_{Ḣ^{1/2}})` for a
/// divergence-free, mean-free velocity.
pub fn admissibility(
    u0: &VectorField,
    q: f64,
    deltas: &DeltaSequence,
    c0: f64,
    tol: f64,
) -> Result<CriterionVerdict> {
    check_params(q, c0)?;
    let scale = u0.max_abs();
    if u0.comps().iter().any(|c| c.mean().abs() > 1e-12 * scale) {
        return Err(Error::InvalidArgument("initial velocity must have zero mean".into()));
    }
    if u0.divergence_ratio() > 1e-10 {
        return Err(Error::InvalidArgument(format!(
            "initial velocity is not divergence-free (ratio {:e})",
            u0.divergence_ratio()
        )));
    }
    let lhs = lp_norm_vec(&frac_laplacian_vec(u0, 0.25)?, q)?;
    let h = sobolev_norm_vec(u0, 0.5)?;
    CriterionVerdict::assemble(lhs, h, psi(h, deltas, tol)?, c0)
}

/// [`admissibility`] for a scalar field, e.g. a synthesized radial profile.
pub fn admissibility_scalar(
    f: &SpectralField,
    q: f64,
    deltas: &DeltaSequence,
    c0: f64,
    tol: f64,
) -> Result<CriterionVerdict> {
    check_params(q, c0)?;
    let lhs = lp_norm(&frac_laplacian(f, 0.25)?, q)?;
    let h = sobolev_norm(f, 0.5)?;
    CriterionVerdict::assemble(lhs, h, psi(h, deltas, tol)?, c0)
}

/// Envelope modifier `g(|ξ|)` of a radial profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileKind {
    /// `g(r) = log(e + r)^{−β}`
    LogDecay { beta: f64 },
    /// `g(r) = log(e + r)^{α}`
    LogGrowth { alpha: f64 },
}

impl ProfileKind {
    pub fn modifier(&self, r: f64) -> f64 {
        let l = (E + r).ln();
        match *self {
            Self::LogDecay { beta } => l.powf(-beta),
            Self::LogGrowth { alpha } => l.powf(alpha),
        }
    }
}

/// Radial field `f̂(ξ) = |ξ|^{−(3/p + s)} (1 − φ(|ξ|)) g(|ξ|)`, where `φ` is the
/// Littlewood-Paley bump, so the profile vanishes for `|ξ| ≤ 1` and follows the
/// envelope from `|ξ| = 2` on.
///
/// Fails with [`Error::NonFinite`] when a coefficient or the discrete `L²`,
/// `Ḣ^{1/2}` norms overflow.
pub fn synth_radial_profile(kind: ProfileKind, p: f64, s: f64, grid: Grid3) -> Result<SpectralField> {
    if !(p > 0.0) || !s.is_finite() {
        return Err(Error::InvalidArgument(format!("need p > 0 and finite s, got p={p}, s={s}")));
    }
    let exponent = 3.0 / p + s;
    let ones = {
        let mut f = SpectralField::zeros(grid);
        f.coeffs_mut().fill(num_complex::Complex64::new(1.0, 0.0));
        f
    };
    let field = ones.map_modes(|ix, iy, iz| {
        let r = grid.k_squared(ix, iy, iz).sqrt();
        let cut = 1.0 - phi_bump(r);
        if cut == 0.0 {
            0.0
        } else {
            r.powf(-exponent) * cut * kind.modifier(r)
        }
    });
    if !field.is_finite() {
        return Err(Error::NonFinite(format!("{kind:?} profile has non-finite coefficients")));
    }
    for (name, norm) in [("L2", sobolev_norm(&field, 0.0)?), ("H^1/2", sobolev_norm(&field, 0.5)?)] {
        if !norm.is_finite() {
            return Err(Error::NonFinite(format!("{kind:?} profile has infinite discrete {name} norm")));
        }
    }
    Ok(field)
}
