//! Fourier analysis on the periodic box.

pub mod container;
mod fft;
mod field;
mod grid;
mod littlewood_paley;
mod ops;

pub use field::{SpectralField, VectorField};
pub use grid::Grid3;
pub use littlewood_paley::{
    chi, lp_projection, lp_reconstruct, phi_bump, psi_annulus, resolved_dyadic_range,
};
pub use ops::{
    advection, advection_commutator, dealias, dealias_vec, derivative, frac_laplacian,
    frac_laplacian_vec, grad_l2_sq, grad_magnitude, grad_sup_norm, gradient, laplacian,
    leray_project, lp_norm, lp_norm_vec, product, scalar_commutator, self_advection_conservative,
    sobolev_norm, sobolev_norm_vec,
};

pub(crate) use ops::projected_self_advection;
