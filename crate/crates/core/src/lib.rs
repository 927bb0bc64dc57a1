//! Numerics for nested-logarithm regularity criteria of the 3D incompressible
//! Navier-Stokes equations.
//!
//! The crate is organised by subsystem:
//!
//! * [`nestedlog`]: nested logarithms `L_j`, certified infinite products and
//!   the scalar formulas built on them (Ψ, F₁^∞, F₂^∞, H, α, Φ, K).
//! * [`spectral`]: Fourier analysis on the periodic box `(2π)³`: transforms,
//!   fractional Laplacian, Littlewood-Paley blocks, Leray projection, norms.
//! * [`nse`]: integrating-factor RK4 pseudo-spectral solver and diagnostics.
//! * [`criterion`]: log-improved Lebesgue norm, admissibility of initial data
//!   and radial test profiles.
//! * [`limit_ode`]: the limiting scalar ODE, the `Z*` threshold and Osgood
//!   comparison bounds.
//! * [`hausdorff`]: exceptional sets, analytic dimension bounds and box counting.
//! * [`cli`]: configuration, subcommands and deterministic output.

// `!(x > 0.0)` style guards also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod criterion;
pub mod error;
pub mod hausdorff;
pub mod limit_ode;
pub mod nestedlog;
pub mod nse;
pub mod spectral;

pub use error::{Error, Result};
