//! Smooth dyadic decomposition `f = Σ_j Δ_j f` with
//! `Δ_j f = F⁻¹(ψ(2^{−j} ξ) f̂)` and `ψ(ξ) = φ(ξ) − φ(2ξ)`.

use super::{Grid3, SpectralField};

/// `χ(t) = exp(−1/t)` for `t > 0`, zero otherwise.
pub fn chi(t: f64) -> f64 {
    if t > 0.0 {
        (-1.0 / t).exp()
    } else {
        0.0
    }
}

/// Radial bump: 1 on `r ≤ 1`, 0 on `r ≥ 2`, smooth in between.
pub fn phi_bump(r: f64) -> f64 {
    let a = chi(2.0 - r);
    let b = chi(r - 1.0);
    if a + b == 0.0 {
        // only reachable through NaN input
        return 0.0;
    }
    a / (a + b)
}

/// Annular multiplier `ψ(r) = φ(r) − φ(2r)`, supported in `1/2 < r < 2`.
pub fn psi_annulus(r: f64) -> f64 {
    phi_bump(r) - phi_bump(2.0 * r)
}

/// `Δ_j f`.
pub fn lp_projection(field: &SpectralField, j: i32) -> SpectralField {
    let g = field.grid();
    let scale = 2f64.powi(-j);
    field.map_modes(|ix, iy, iz| psi_annulus(scale * g.k_squared(ix, iy, iz).sqrt()))
}

/// Block indices `j_min..=j_max` whose multipliers sum to one on every nonzero
/// resolved wavenumber: `j_min` puts `φ(2^{1−j_min}|k|)` at zero for
/// `|k| ≥ |k|_min`, and `j_max` puts `φ(2^{−j_max}|k|)` at one for
/// `|k| ≤ |k|_max`.
pub fn resolved_dyadic_range(grid: &Grid3) -> (i32, i32) {
    let k_min = 2.0 * std::f64::consts::PI / grid.length();
    let k_max = k_min * (3.0_f64).sqrt() * (grid.n() / 2) as f64;
    let j_min = (k_min.log2()).floor() as i32;
    let j_max = (k_max.log2()).ceil() as i32;
    (j_min, j_max)
}

/// `Σ_{j = j_min}^{j_max} Δ_j f`.
pub fn lp_reconstruct(field: &SpectralField, j_min: i32, j_max: i32) -> SpectralField {
    let mut acc = SpectralField::zeros(field.grid());
    for j in j_min..=j_max {
        acc = acc.add(&lp_projection(field, j));
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_shape() {
        assert_eq!(phi_bump(0.0), 1.0);
        assert_eq!(phi_bump(1.0), 1.0);
        assert_eq!(phi_bump(2.0), 0.0);
        assert_eq!(phi_bump(5.0), 0.0);
        assert!((phi_bump(1.5) - 0.5).abs() < 1e-15);
        let mut prev = 1.0;
        for i in 0..=1000 {
            let v = phi_bump(1.0 + i as f64 / 1000.0);
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn annulus_support() {
        assert!(psi_annulus(1.5) > 0.0);
        assert_eq!(psi_annulus(2.0), 0.0);
        assert_eq!(psi_annulus(0.5), 0.0);
        assert_eq!(psi_annulus(0.25), 0.0);
    }

    #[test]
    fn telescoping_partition() {
        // Σ_{j=a}^{b} ψ(2^{−j} r) = φ(2^{−b} r) − φ(2^{−a+1} r)
        for i in 0..500 {
            let r = 1.0 + 40.0 * i as f64 / 499.0;
            let (a, b) = (0, 6);
            let sum: f64 = (a..=b).map(|j| psi_annulus(2f64.powi(-j) * r)).sum();
            let tele = phi_bump(2f64.powi(-b) * r) - phi_bump(2f64.powi(1 - a) * r);
            assert!((sum - tele).abs() < 1e-14);
            assert!((sum - 1.0).abs() < 1e-10, "r = {r}");
        }
    }
}
