//! Pseudo-spectral incompressible Navier-Stokes on the periodic box.
//!
//! Time stepping is the Lawson (integrating-factor) RK4 scheme: viscous decay
//! `exp(−ν|k|²Δt)` is applied exactly mode by mode, the nonlinear term
//! `−P[(u·∇)u]` is formed pseudo-spectrally with two-thirds dealiasing, and
//! the pressure never appears explicitly.

mod diagnostics;
mod init;
mod run;
mod stepper;

use serde::{Deserialize, Serialize};

pub use diagnostics::{
    commutator_bound_check, diagnostics, energy_identity_residual, lagrange_derivative,
    CommutatorCheck, DiagnosticsRow, IdentitySample, IDENTITY_STENCIL_POINTS,
};
pub use init::{random_state, shear_mode, taylor_green};
pub use run::{run, RunFailure, Trajectory, BLOWUP_GRAD_SUP};
pub use stepper::{choose_dt, nonlinear_term, step, step_with_dt};

use crate::nestedlog::DeltaSequence;
use crate::spectral::{Grid3, VectorField};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DtPolicy {
    Fixed { dt: f64 },
    Cfl {
        #[serde(default = "default_cfl")]
        number: f64,
    },
}

fn default_cfl() -> f64 {
    0.5
}
fn default_true() -> bool {
    true
}
fn default_stride() -> usize {
    1
}
fn default_sigma() -> f64 {
    0.1
}
fn default_q() -> f64 {
    4.0
}
fn default_deltas() -> DeltaSequence {
    DeltaSequence::power_law(1.0, 2.0).expect("valid generator")
}
fn default_product_tol() -> f64 {
    1e-10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub nu: f64,
    pub dt_policy: DtPolicy,
    pub t_end: f64,
    #[serde(default = "default_true")]
    pub dealias: bool,
    #[serde(default = "default_stride")]
    pub monitor_stride: usize,
    /// `Z = ‖(−Δ)^{1/2+σ} u‖_{L²}`.
    #[serde(default = "default_sigma")]
    pub sigma: f64,
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default = "default_deltas")]
    pub deltas: DeltaSequence,
    /// Relative tolerance for the infinite products inside `H` and `F₁,₂^∞`.
    #[serde(default = "default_product_tol")]
    pub product_tol: f64,
    /// Keep a copy of the state at every diagnostics row.
    #[serde(default)]
    pub keep_snapshots: bool,
}

impl SolverConfig {
    pub fn new(nu: f64, dt_policy: DtPolicy, t_end: f64) -> Self {
        Self {
            nu,
            dt_policy,
            t_end,
            dealias: true,
            monitor_stride: 1,
            sigma: default_sigma(),
            q: default_q(),
            deltas: default_deltas(),
            product_tol: default_product_tol(),
            keep_snapshots: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return bad(format!("nu must be > 0, got {}", self.nu));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad(format!("t_end must be >= 0, got {}", self.t_end));
        }
        match self.dt_policy {
            DtPolicy::Fixed { dt } if !(dt > 0.0 && dt.is_finite()) => {
                return bad(format!("fixed dt must be > 0, got {dt}"))
            }
            DtPolicy::Cfl { number } if !(number > 0.0 && number.is_finite()) => {
                return bad(format!("CFL number must be > 0, got {number}"))
            }
            _ => {}
        }
        if self.monitor_stride == 0 {
            return bad("monitor_stride must be >= 1".into());
        }
        if !(self.sigma > 0.0 && self.sigma < 0.5) {
            return bad(format!("sigma must lie in (0, 1/2), got {}", self.sigma));
        }
        if !(self.q > 3.0) {
            return bad(format!("q must be > 3, got {}", self.q));
        }
        if !(self.product_tol > 0.0) {
            return bad("product_tol must be > 0".into());
        }
        Ok(())
    }
}

/// A point on a trajectory: time and a divergence-free, mean-free velocity.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverState {
    pub t: f64,
    pub u: VectorField,
}

impl SolverState {
    /// Validates the divergence-free and zero-mean invariants.
    pub fn new(t: f64, u: VectorField) -> Result<Self> {
        let scale = u.max_abs();
        if u.comps().iter().any(|c| c.mean().abs() > 1e-12 * scale.max(1e-300)) {
            return Err(Error::InvalidArgument("velocity must have zero mean".into()));
        }
        let u = if u.is_divergence_free() {
            u
        } else {
            u.mark_divergence_free()?
        };
        Ok(Self { t, u })
    }

    pub fn grid(&self) -> Grid3 {
        self.u.grid()
    }
}
