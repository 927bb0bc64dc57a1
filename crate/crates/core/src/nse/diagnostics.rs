use serde::Serialize;

use super::{SolverConfig, SolverState};
use crate::nestedlog::{f1_f2_inf, h_func};
use crate::spectral::{
    advection_commutator, frac_laplacian_vec, grad_l2_sq, grad_sup_norm, sobolev_norm_vec,
    VectorField,
};
use crate::{Error, Result};

/// Width of the window used to differentiate `Y(t)` for the energy identity.
/// Five samples give a fourth-order Lagrange derivative.
pub const IDENTITY_STENCIL_POINTS: usize = 5;

/// One monitoring sample along a trajectory.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticsRow {
    pub t: f64,
    /// `‖(−Δ)^{1/2} u‖²_{L²}`
    pub y: f64,
    /// `‖u‖²_{L²}`
    pub energy: f64,
    /// `‖∇u‖²_{L²}`, evaluated in physical space
    pub grad_l2_sq: f64,
    /// `‖(−Δ) u‖²_{L²}`
    pub lap_l2_sq: f64,
    /// `‖∇u‖_{L^∞}`
    pub grad_sup: f64,
    /// `‖(−Δ)^{1/2+σ} u‖_{L²}`
    pub z: f64,
    pub h_of_y: f64,
    /// Relative residual of the enstrophy-type energy identity; absent when
    /// fewer than three samples exist.
    pub identity_residual: Option<f64>,
    pub commutator_ratio: f64,
}

impl DiagnosticsRow {
    pub const CSV_HEADER: &'static str = "t,Y,energy,grad_l2_sq,lap_l2_sq,grad_sup,Z,H_of_Y,identity_residual,commutator_ratio";

    pub fn csv_line(&self) -> String {
        let residual = self
            .identity_residual
            .map(|r| format!("{r:.17e}"))
            .unwrap_or_default();
        format!(
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{},{:.17e}",
            self.t,
            self.y,
            self.energy,
            self.grad_l2_sq,
            self.lap_l2_sq,
            self.grad_sup,
            self.z,
            self.h_of_y,
            residual,
            self.commutator_ratio
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CommutatorCheck {
    /// `‖[(−Δ)^{1/2}, u·∇] u‖_{L²}`
    pub lhs: f64,
    /// Two-term bound with unit constant.
    pub rhs: f64,
    /// `lhs / rhs`, the empirical constant; 0 when `lhs = 0`.
    pub ratio: f64,
}

/// Terms of the identity `dY/dt + 2ν‖(−Δ)u‖² = −2⟨[(−Δ)^{1/2}, u·∇]u, (−Δ)^{1/2}u⟩`
/// that do not need a time derivative.
#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) struct IdentityTerms {
    pub dissipation: f64,
    pub rhs: f64,
}

struct Core {
    y: f64,
    lap_l2_sq: f64,
    grad_sup: f64,
    z: f64,
    commutator: VectorField,
}

fn core(state: &SolverState, config: &SolverConfig) -> Result<Core> {
    let u = &state.u;
    Ok(Core {
        y: sobolev_norm_vec(u, 1.0)?.powi(2),
        lap_l2_sq: sobolev_norm_vec(u, 2.0)?.powi(2),
        grad_sup: grad_sup_norm(u),
        z: sobolev_norm_vec(u, 1.0 + 2.0 * config.sigma)?,
        commutator: advection_commutator(0.5, u, u)?,
    })
}

fn check_from_core(c: &Core, config: &SolverConfig) -> Result<CommutatorCheck> {
    let lhs = sobolev_norm_vec(&c.commutator, 0.0)?;
    let (f1, f2) = f1_f2_inf(c.z, &config.deltas, config.product_tol)?;
    let rhs = c.grad_sup * c.y.sqrt() * f1 + c.grad_sup * c.lap_l2_sq.sqrt() * f2;
    let ratio = if lhs == 0.0 { 0.0 } else { lhs / rhs };
    Ok(CommutatorCheck { lhs, rhs, ratio })
}

/// Evaluate the commutator inequality on one state.
pub fn commutator_bound_check(state: &SolverState, config: &SolverConfig) -> Result<CommutatorCheck> {
    check_from_core(&core(state, config)?, config)
}

pub(crate) fn diagnostics_with_terms(
    state: &SolverState,
    config: &SolverConfig,
) -> Result<(DiagnosticsRow, IdentityTerms)> {
    let c = core(state, config)?;
    let check = check_from_core(&c, config)?;
    let half = frac_laplacian_vec(&state.u, 0.5)?;
    let rhs = -2.0 * c.commutator.inner(&half);
    let row = DiagnosticsRow {
        t: state.t,
        y: c.y,
        energy: sobolev_norm_vec(&state.u, 0.0)?.powi(2),
        grad_l2_sq: grad_l2_sq(&state.u),
        lap_l2_sq: c.lap_l2_sq,
        grad_sup: c.grad_sup,
        z: c.z,
        h_of_y: h_func(c.y, &config.deltas, config.product_tol)?,
        identity_residual: None,
        commutator_ratio: check.ratio,
    };
    let terms = IdentityTerms {
        dissipation: 2.0 * config.nu * c.lap_l2_sq,
        rhs,
    };
    Ok((row, terms))
}

/// All diagnostics of a single state except the identity residual, which
/// needs neighbouring samples.
pub fn diagnostics(state: &SolverState, config: &SolverConfig) -> Result<DiagnosticsRow> {
    diagnostics_with_terms(state, config).map(|(row, _)| row)
}

/// Derivative at `ts[at]` of the Lagrange interpolant through all samples.
pub fn lagrange_derivative(ts: &[f64], ys: &[f64], at: usize) -> f64 {
    let ti = ts[at];
    let mut d = 0.0;
    for j in 0..ts.len() {
        let w = if j == at {
            (0..ts.len())
                .filter(|&k| k != at)
                .map(|k| 1.0 / (ti - ts[k]))
                .sum::<f64>()
        } else {
            let num: f64 = (0..ts.len())
                .filter(|&k| k != at && k != j)
                .map(|k| ti - ts[k])
                .product();
            let den: f64 = (0..ts.len())
                .filter(|&k| k != j)
                .map(|k| ts[j] - ts[k])
                .product();
            num / den
        };
        d += w * ys[j];
    }
    d
}

/// Window of at most `width` consecutive indices around `i`.
pub(crate) fn stencil_window(len: usize, i: usize, width: usize) -> std::ops::Range<usize> {
    let w = width.min(len);
    let start = i.saturating_sub(w / 2).min(len - w);
    start..start + w
}

pub(crate) fn identity_residual(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IdentitySample {
    pub t: f64,
    /// `dY/dt + 2ν‖(−Δ)u‖²`
    pub lhs: f64,
    /// `−2⟨[(−Δ)^{1/2}, u·∇]u, (−Δ)^{1/2}u⟩`
    pub rhs: f64,
    pub residual: f64,
    pub stencil_points: usize,
}

/// Energy-identity residual at every interior state of a stored history.
/// `dY/dt` comes from a Lagrange derivative over up to five neighbouring
/// states.
pub fn energy_identity_residual(history: &[SolverState], nu: f64) -> Result<Vec<IdentitySample>> {
    if history.len() < 3 {
        return Err(Error::InsufficientHistory {
            needed: 3,
            got: history.len(),
        });
    }
    let ts: Vec<f64> = history.iter().map(|s| s.t).collect();
    let ys = history
        .iter()
        .map(|s| Ok(sobolev_norm_vec(&s.u, 1.0)?.powi(2)))
        .collect::<Result<Vec<f64>>>()?;
    let mut out = Vec::with_capacity(history.len() - 2);
    for i in 1..history.len() - 1 {
        let u = &history[i].u;
        let win = stencil_window(history.len(), i, IDENTITY_STENCIL_POINTS);
        let dydt = lagrange_derivative(&ts[win.clone()], &ys[win.clone()], i - win.start);
        let lap = sobolev_norm_vec(u, 2.0)?.powi(2);
        let lhs = dydt + 2.0 * nu * lap;
        let comm = advection_commutator(0.5, u, u)?;
        let rhs = -2.0 * comm.inner(&frac_laplacian_vec(u, 0.5)?);
        out.push(IdentitySample {
            t: ts[i],
            lhs,
            rhs,
            residual: identity_residual(lhs, rhs),
            stencil_points: win.len(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lagrange_derivative_exact_for_quartics() {
        let ts = [0.0, 0.1, 0.25, 0.3, 0.5];
        let f = |t: f64| 1.0 - 2.0 * t + 3.0 * t.powi(3) - t.powi(4);
        let df = |t: f64| -2.0 + 9.0 * t * t - 4.0 * t.powi(3);
        let ys: Vec<f64> = ts.iter().map(|&t| f(t)).collect();
        for i in 0..ts.len() {
            assert!((lagrange_derivative(&ts, &ys, i) - df(ts[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn stencil_windows_stay_in_range() {
        assert_eq!(stencil_window(10, 0, 5), 0..5);
        assert_eq!(stencil_window(10, 5, 5), 3..8);
        assert_eq!(stencil_window(10, 9, 5), 5..10);
        assert_eq!(stencil_window(3, 1, 5), 0..3);
    }
}
