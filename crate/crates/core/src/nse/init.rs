use num_complex::Complex64;
use rand::Rng;

use super::SolverState;
use crate::spectral::{leray_project, Grid3, SpectralField, VectorField};
use crate::Result;

/// `u = A (cos x sin y, −sin x cos y, 0)`.
pub fn taylor_green(grid: Grid3, amplitude: f64) -> Result<SolverState> {
    let u = VectorField::from_fn(grid, |x, y, _| {
        [
            amplitude * x.cos() * y.sin(),
            -amplitude * x.sin() * y.cos(),
            0.0,
        ]
    });
    SolverState::new(0.0, u)
}

/// `u = A sin(k z) x̂`.
pub fn shear_mode(grid: Grid3, amplitude: f64, k: i64) -> Result<SolverState> {
    let mut ux = SpectralField::zeros(grid);
    // sin(kz) = (e^{ikz} − e^{−ikz}) / 2i
    ux.set_mode([0, 0, k], Complex64::new(0.0, -0.5 * amplitude));
    let u = VectorField::new([ux, SpectralField::zeros(grid), SpectralField::zeros(grid)])?;
    SolverState::new(0.0, u)
}

/// Leray-projected random field supported on `1 ≤ |k| ≤ kmax`.
pub fn random_state<R: Rng>(grid: Grid3, kmax: f64, amplitude: f64, rng: &mut R) -> Result<SolverState> {
    let comps = [0, 1, 2].map(|_| SpectralField::random_band_limited(grid, kmax, amplitude, rng));
    let u = leray_project(&VectorField::new(comps)?);
    SolverState::new(0.0, u)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{advection, lp_norm_vec};
    use rand::SeedableRng;

    #[test]
    fn taylor_green_is_divergence_free() {
        let g = Grid3::periodic(16).unwrap();
        let s = taylor_green(g, 1.0).unwrap();
        assert!(s.u.divergence_ratio() <= 1e-12);
        let energy = lp_norm_vec(&s.u, 2.0).unwrap().powi(2);
        assert!((energy - g.volume() / 2.0).abs() < 1e-10 * energy);
    }

    #[test]
    fn shear_mode_has_no_self_advection() {
        let g = Grid3::periodic(16).unwrap();
        let s = shear_mode(g, 1.0, 1).unwrap();
        let phys = s.u.to_physical();
        let z = g.coord(3);
        assert!((phys[0][[5, 2, 3]] - z.sin()).abs() < 1e-14);
        let adv = advection(&s.u, &s.u, false).unwrap();
        assert!(adv.max_abs() < 1e-15);
    }

    #[test]
    fn random_state_is_valid() {
        let g = Grid3::periodic(16).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let s = random_state(g, 4.0, 1.0, &mut rng).unwrap();
        assert!(s.u.is_divergence_free());
        assert!(s.u.max_abs() > 0.0);
    }
}
