use ndarray::{Array3, Zip};
use num_complex::Complex64;

use super::{fft, SpectralField, VectorField};
use crate::{Error, Result};

/// `(−Δ)^s f`, the multiplier `|k|^{2s}` applied per mode.
///
/// The `k = 0` mode is annihilated for `s > 0` and kept for `s = 0`. For
/// `s < 0` the symbol is singular there, so the field must be mean-free.
pub fn frac_laplacian(field: &SpectralField, s: f64) -> Result<SpectralField> {
    if !s.is_finite() {
        return Err(Error::InvalidArgument(format!("exponent must be finite, got {s}")));
    }
    if s == 0.0 {
        return Ok(field.clone());
    }
    if s < 0.0 && field.coeffs()[[0, 0, 0]].norm() != 0.0 {
        return Err(Error::SingularMean { exponent: 2.0 * s });
    }
    let t = field.grid().tables();
    let mut out = field.clone();
    out.coeffs_mut()
        .as_slice_mut()
        .expect("standard layout")
        .iter_mut()
        .zip(&t.k2)
        .for_each(|(c, &k2)| *c *= if k2 == 0.0 { 0.0 } else { k2_pow(k2, s) });
    Ok(out)
}

/// `k2^s`, exact-arithmetic shortcuts for the common integer and half-integer powers.
fn k2_pow(k2: f64, s: f64) -> f64 {
    match s {
        0.5 => k2.sqrt(),
        1.0 => k2,
        1.5 => k2 * k2.sqrt(),
        2.0 => k2 * k2,
        _ => k2.powf(s),
    }
}

/// `‖f‖_{Ḣ^s} = ‖(−Δ)^{s/2} f‖_{L²}`, by Parseval over the half spectrum.
pub fn sobolev_norm(field: &SpectralField, s: f64) -> Result<f64> {
    Ok(sobolev_norm_sq(field, s)?.sqrt())
}

fn sobolev_norm_sq(field: &SpectralField, s: f64) -> Result<f64> {
    if s < 0.0 && field.coeffs()[[0, 0, 0]].norm() != 0.0 {
        return Err(Error::SingularMean { exponent: s });
    }
    let g = field.grid();
    let t = g.tables();
    let nzh = g.nz_half();
    let mut acc = 0.0;
    let coeffs = field.coeffs().as_slice().expect("standard layout");
    for (cs, k2s) in coeffs.chunks_exact(nzh).zip(t.k2.chunks_exact(nzh)) {
        for (iz, (c, &k2)) in cs.iter().zip(k2s).enumerate() {
            let m = if k2 == 0.0 {
                if s == 0.0 {
                    1.0
                } else {
                    0.0
                }
            } else {
                k2_pow(k2, s)
            };
            acc += g.mode_weight(iz) * m * c.norm_sqr();
        }
    }
    Ok(acc * g.volume())
}

fn validate_p(p: f64) -> Result<()> {
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("L^p norm needs p >= 1, got {p}")));
    }
    Ok(())
}

/// `(∫ |f|^p dx)^{1/p}` by the grid rectangle rule; `p = ∞` gives the grid
/// maximum of `|f|`.
pub fn lp_norm(field: &SpectralField, p: f64) -> Result<f64> {
    validate_p(p)?;
    Ok(lp_norm_values(field.to_physical().iter().map(|v| v.abs()), p, field.grid().cell_volume()))
}

/// Vector version of [`lp_norm`] with the Euclidean norm pointwise.
pub fn lp_norm_vec(v: &VectorField, p: f64) -> Result<f64> {
    validate_p(p)?;
    let [a, b, c] = v.to_physical();
    let mags = Zip::from(&a)
        .and(&b)
        .and(&c)
        .map_collect(|x, y, z| (x * x + y * y + z * z).sqrt());
    Ok(lp_norm_values(mags.iter().copied(), p, v.grid().cell_volume()))
}

fn lp_norm_values(values: impl Iterator<Item = f64>, p: f64, cell_volume: f64) -> f64 {
    if p.is_infinite() {
        return values.fold(0.0, f64::max);
    }
    let sum: f64 = if p == 2.0 {
        values.map(|v| v * v).sum()
    } else {
        values.map(|v| v.powf(p)).sum()
    };
    (sum * cell_volume).powf(1.0 / p)
}

/// Sum of the component Sobolev norms in quadrature.
pub fn sobolev_norm_vec(v: &VectorField, s: f64) -> Result<f64> {
    let mut acc = 0.0;
    for c in v.comps() {
        acc += sobolev_norm_sq(c, s)?;
    }
    Ok(acc.sqrt())
}

pub fn frac_laplacian_vec(v: &VectorField, s: f64) -> Result<VectorField> {
    let comps = [
        frac_laplacian(v.component(0), s)?,
        frac_laplacian(v.component(1), s)?,
        frac_laplacian(v.component(2), s)?,
    ];
    Ok(VectorField::new(comps)?.with_flag(v.is_divergence_free()))
}

/// `∂f/∂x_axis`.
pub fn derivative(field: &SpectralField, axis: usize) -> SpectralField {
    let t = field.grid().tables();
    let mut out = field.clone();
    Zip::indexed(out.coeffs_mut()).for_each(|(ix, iy, iz), c| {
        let i = [ix, iy, iz][axis];
        *c *= Complex64::new(0.0, t.kd[i]);
    });
    out
}

pub fn gradient(field: &SpectralField) -> [SpectralField; 3] {
    [derivative(field, 0), derivative(field, 1), derivative(field, 2)]
}

/// Spectral Laplacian `Δf`.
pub fn laplacian(field: &SpectralField) -> SpectralField {
    let g = field.grid();
    field.map_modes(|ix, iy, iz| -g.k_squared(ix, iy, iz))
}

/// Spherical two-thirds truncation.
pub fn dealias(field: &SpectralField) -> SpectralField {
    let mut out = field.clone();
    mask_in_place(out.coeffs_mut(), &field.grid().tables().keep);
    out
}

fn mask_in_place(coeffs: &mut Array3<Complex64>, keep: &[bool]) {
    let zero = Complex64::new(0.0, 0.0);
    coeffs
        .as_slice_mut()
        .expect("standard layout")
        .iter_mut()
        .zip(keep)
        .for_each(|(c, &k)| {
            if !k {
                *c = zero;
            }
        });
}

pub fn dealias_vec(v: &VectorField) -> VectorField {
    v.map(dealias).with_flag(v.is_divergence_free())
}

/// Leray projection `û ← û − k (k·û)/|k|²`; the mean is left unchanged.
pub fn leray_project(v: &VectorField) -> VectorField {
    let t = v.grid().tables();
    let [mut a, mut b, mut c] = v.clone().into_comps();
    Zip::indexed(a.coeffs_mut())
        .and(b.coeffs_mut())
        .and(c.coeffs_mut())
        .for_each(|(ix, iy, iz), ua, ub, uc| {
            let k = [t.kd[ix], t.kd[iy], t.kd[iz]];
            let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
            if k2 == 0.0 {
                return;
            }
            let kdotu = (*ua * k[0] + *ub * k[1] + *uc * k[2]) / k2;
            *ua -= kdotu * k[0];
            *ub -= kdotu * k[1];
            *uc -= kdotu * k[2];
        });
    VectorField::new([a, b, c])
        .expect("components share a grid")
        .with_flag(true)
}

/// Grid maximum of the Frobenius norm of `∇u`.
pub fn grad_sup_norm(v: &VectorField) -> f64 {
    let g = v.grid();
    let mut acc = Array3::<f64>::zeros(g.physical_shape());
    for comp in v.comps() {
        for d in gradient(comp) {
            let phys = d.to_physical();
            Zip::from(&mut acc).and(&phys).for_each(|a, p| *a += p * p);
        }
    }
    acc.iter().fold(0.0f64, |m, v| m.max(*v)).sqrt()
}

/// Pointwise Frobenius norm of `∇u` on the grid.
pub fn grad_magnitude(v: &VectorField) -> Array3<f64> {
    let g = v.grid();
    let mut acc = Array3::<f64>::zeros(g.physical_shape());
    for comp in v.comps() {
        for d in gradient(comp) {
            let phys = d.to_physical();
            Zip::from(&mut acc).and(&phys).for_each(|a, p| *a += p * p);
        }
    }
    acc.mapv_inplace(f64::sqrt);
    acc
}

/// `‖∇u‖²_{L²}` evaluated in physical space.
pub fn grad_l2_sq(v: &VectorField) -> f64 {
    let g = v.grid();
    let mut acc = 0.0;
    for comp in v.comps() {
        for d in gradient(comp) {
            acc += d.to_physical().iter().map(|x| x * x).sum::<f64>();
        }
    }
    acc * g.cell_volume()
}

fn maybe_dealias(f: SpectralField, on: bool) -> SpectralField {
    if on {
        dealias(&f)
    } else {
        f
    }
}

/// Pseudo-spectral product `f g`, truncating inputs and output when `dealiased`.
pub fn product(f: &SpectralField, g: &SpectralField, dealiased: bool) -> Result<SpectralField> {
    f.check_same_grid(g)?;
    let fp = maybe_dealias(f.clone(), dealiased).to_physical();
    let gp = maybe_dealias(g.clone(), dealiased).to_physical();
    let prod = Zip::from(&fp).and(&gp).map_collect(|a, b| a * b);
    Ok(maybe_dealias(SpectralField::to_spectral(&prod, f.grid())?, dealiased))
}

/// Advection `(u·∇) g`, componentwise, formed in physical space.
pub fn advection(u: &VectorField, g: &VectorField, dealiased: bool) -> Result<VectorField> {
    let grid = u.grid();
    if grid != g.grid() {
        return Err(Error::ShapeMismatch {
            expected: format!("{grid:?}"),
            got: format!("{:?}", g.grid()),
        });
    }
    let up: Vec<Array3<f64>> = u
        .comps()
        .iter()
        .map(|c| maybe_dealias(c.clone(), dealiased).to_physical())
        .collect();
    let mut out = Vec::with_capacity(3);
    for gi in g.comps() {
        let mut acc = Array3::<f64>::zeros(grid.physical_shape());
        for (j, uj) in up.iter().enumerate() {
            let d = maybe_dealias(derivative(gi, j), dealiased).to_physical();
            Zip::from(&mut acc).and(uj).and(&d).for_each(|a, u, d| *a += u * d);
        }
        out.push(maybe_dealias(SpectralField::to_spectral(&acc, grid)?, dealiased));
    }
    let [a, b, c]: [SpectralField; 3] = out.try_into().expect("three components");
    VectorField::new([a, b, c])
}

/// `∇·(u ⊗ u)` with two-thirds dealiasing of the velocity and the result.
///
/// For divergence-free `u` this equals `(u·∇)u`, but needs only the six
/// products `u_i u_j` instead of nine velocity gradients.
pub fn self_advection_conservative(u: &VectorField) -> Result<VectorField> {
    conservative_advection(u, 1.0, false)
}

/// `−P ∇·(u ⊗ u)` in one pass over the spectrum.
pub(crate) fn projected_self_advection(u: &VectorField) -> Result<VectorField> {
    Ok(conservative_advection(u, -1.0, true)?.with_flag(true))
}

fn conservative_advection(u: &VectorField, sign: f64, project: bool) -> Result<VectorField> {
    const PAIRS: [[usize; 3]; 3] = [[0, 1, 2], [1, 3, 4], [2, 4, 5]];
    let grid = u.grid();
    let t = grid.tables();
    let band = Some(t.band);
    let phys: Vec<Array3<f64>> = u
        .comps()
        .iter()
        .map(|c| fft::inverse_band(c.coeffs(), band, Some(&t.keep)))
        .collect();
    let prods: Vec<Array3<Complex64>> = [(0, 0), (0, 1), (0, 2), (1, 1), (1, 2), (2, 2)]
        .iter()
        .map(|&(i, j)| fft::forward_band(&(&phys[i] * &phys[j]), band))
        .collect();
    let p: Vec<&[Complex64]> = prods.iter().map(|a| a.as_slice().expect("standard layout")).collect();
    let (n, nzh) = (grid.n(), grid.nz_half());
    let mut out = [0, 1, 2].map(|_| Array3::<Complex64>::zeros(grid.spectral_shape()));
    let [o0, o1, o2] = &mut out;
    let dst = [o0, o1, o2].map(|o| o.as_slice_mut().expect("standard layout"));
    let [d0, d1, d2] = dst;
    for ix in 0..n {
        for iy in 0..n {
            let row = (ix * n + iy) * nzh;
            for iz in 0..nzh {
                let f = row + iz;
                if !t.keep[f] {
                    continue;
                }
                let k = [t.kd[ix], t.kd[iy], t.kd[iz]];
                // i k_j (u_i u_j)^, times sign
                let mut v = [0, 1, 2].map(|i| {
                    let s = (p[PAIRS[i][0]][f] * k[0] + p[PAIRS[i][1]][f] * k[1] + p[PAIRS[i][2]][f] * k[2]) * sign;
                    Complex64::new(-s.im, s.re)
                });
                if project {
                    let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
                    if k2 != 0.0 {
                        let kdotv = (v[0] * k[0] + v[1] * k[1] + v[2] * k[2]) / k2;
                        for (vi, ki) in v.iter_mut().zip(k) {
                            *vi -= kdotv * ki;
                        }
                    }
                }
                d0[f] = v[0];
                d1[f] = v[1];
                d2[f] = v[2];
            }
        }
    }
    let [a, b, c] = out.map(|o| SpectralField::from_coeffs(grid, o));
    VectorField::new([a?, b?, c?])
}

/// `[(−Δ)^s, u·∇] g = (−Δ)^s((u·∇)g) − (u·∇)(−Δ)^s g`, both products dealiased.
pub fn advection_commutator(s: f64, u: &VectorField, g: &VectorField) -> Result<VectorField> {
    let first = frac_laplacian_vec(&advection(u, g, true)?, s)?;
    let second = advection(u, &frac_laplacian_vec(g, s)?, true)?;
    Ok(first.sub(&second))
}

/// `[(−Δ)^s, f] g = (−Δ)^s(f g) − f (−Δ)^s g`, both products dealiased.
pub fn scalar_commutator(s: f64, f: &SpectralField, g: &SpectralField) -> Result<SpectralField> {
    let first = frac_laplacian(&product(f, g, true)?, s)?;
    let second = product(f, &frac_laplacian(g, s)?, true)?;
    Ok(first.sub(&second))
}
