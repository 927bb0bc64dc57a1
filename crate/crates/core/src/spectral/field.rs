use ndarray::{Array3, Zip};
use num_complex::Complex64;
use rand::Rng;

use super::{fft, Grid3};
use crate::{Error, Result};

/// Fourier coefficients of a real scalar field on a [`Grid3`], stored in the
/// half-spectrum layout.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: Grid3,
    coeffs: Array3<Complex64>,
}

impl SpectralField {
    pub fn zeros(grid: Grid3) -> Self {
        Self {
            grid,
            coeffs: Array3::zeros(grid.spectral_shape()),
        }
    }

    pub fn from_coeffs(grid: Grid3, coeffs: Array3<Complex64>) -> Result<Self> {
        let expected = grid.spectral_shape();
        if coeffs.dim() != expected {
            return Err(Error::ShapeMismatch {
                expected: format!("{expected:?}"),
                got: format!("{:?}", coeffs.dim()),
            });
        }
        let coeffs = if coeffs.is_standard_layout() {
            coeffs
        } else {
            coeffs.as_standard_layout().into_owned()
        };
        Ok(Self { grid, coeffs })
    }

    /// Transform a physical array sampled at the grid points.
    pub fn to_spectral(values: &Array3<f64>, grid: Grid3) -> Result<Self> {
        let expected = grid.physical_shape();
        if values.dim() != expected {
            return Err(Error::ShapeMismatch {
                expected: format!("{expected:?}"),
                got: format!("{:?}", values.dim()),
            });
        }
        Ok(Self {
            grid,
            coeffs: fft::forward(values),
        })
    }

    /// Sample `f(x, y, z)` on the grid and transform.
    pub fn from_fn(grid: Grid3, f: impl Fn(f64, f64, f64) -> f64) -> Self {
        let values = Array3::from_shape_fn(grid.physical_shape(), |(i, j, k)| {
            f(grid.coord(i), grid.coord(j), grid.coord(k))
        });
        Self {
            grid,
            coeffs: fft::forward(&values),
        }
    }

    pub fn to_physical(&self) -> Array3<f64> {
        fft::inverse(&self.coeffs)
    }

    pub fn grid(&self) -> Grid3 {
        self.grid
    }

    pub fn coeffs(&self) -> &Array3<Complex64> {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut Array3<Complex64> {
        &mut self.coeffs
    }

    /// Coefficient of the integer wavenumber `k`, resolving `k_z < 0` through
    /// Hermitian symmetry.
    pub fn mode(&self, k: [i64; 3]) -> Complex64 {
        let g = &self.grid;
        if k[2] < 0 {
            let idx = [
                g.wavenumber_index(-k[0]),
                g.wavenumber_index(-k[1]),
                (-k[2]) as usize,
            ];
            self.coeffs[idx].conj()
        } else {
            self.coeffs[[g.wavenumber_index(k[0]), g.wavenumber_index(k[1]), k[2] as usize]]
        }
    }

    /// Set the coefficient at `k` and its Hermitian partner at `−k`, so the
    /// physical field gains `c e^{ik·x} + conj(c) e^{−ik·x}`.
    pub fn set_mode(&mut self, k: [i64; 3], c: Complex64) {
        let g = self.grid;
        let (k, c) = if k[2] < 0 {
            ([-k[0], -k[1], -k[2]], c.conj())
        } else {
            (k, c)
        };
        let iz = k[2] as usize;
        self.coeffs[[g.wavenumber_index(k[0]), g.wavenumber_index(k[1]), iz]] = c;
        if iz == 0 || iz == g.n() / 2 {
            self.coeffs[[g.wavenumber_index(-k[0]), g.wavenumber_index(-k[1]), iz]] = c.conj();
        }
    }

    /// Apply a real multiplier `m(ix, iy, iz)` mode by mode.
    pub fn map_modes(&self, m: impl Fn(usize, usize, usize) -> f64 + Sync) -> Self {
        let mut out = self.clone();
        out.coeffs
            .indexed_iter_mut()
            .for_each(|((ix, iy, iz), c)| *c *= m(ix, iy, iz));
        out
    }

    /// Largest coefficient modulus.
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[[0, 0, 0]].re
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    pub fn scale(&self, a: f64) -> Self {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.mapv(|c| c * a),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.coeffs += &other.coeffs;
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        out.coeffs -= &other.coeffs;
        out
    }

    /// Discrete `L²` inner product `∫ f g dx`.
    pub fn inner(&self, other: &Self) -> f64 {
        let g = self.grid;
        let mut acc = 0.0;
        Zip::indexed(&self.coeffs)
            .and(&other.coeffs)
            .for_each(|(_, _, iz), a, b| acc += g.mode_weight(iz) * (a * b.conj()).re);
        acc * g.volume()
    }

    pub(crate) fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::ShapeMismatch {
                expected: format!("{:?}", self.grid),
                got: format!("{:?}", other.grid),
            });
        }
        Ok(())
    }

    /// Random real field supported on `1 ≤ |k| ≤ kmax` (integer units), with
    /// coefficients of modulus at most `amplitude`.
    pub fn random_band_limited<R: Rng>(grid: Grid3, kmax: f64, amplitude: f64, rng: &mut R) -> Self {
        let mut f = Self::zeros(grid);
        let kmax_sq = kmax * kmax;
        f.coeffs.indexed_iter_mut().for_each(|((ix, iy, iz), c)| {
            let r2 = grid.index_radius_sq(ix, iy, iz) as f64;
            if r2 >= 1.0 && r2 <= kmax_sq {
                let re: f64 = rng.random_range(-1.0..1.0);
                let im: f64 = rng.random_range(-1.0..1.0);
                *c = Complex64::new(re, im) * (amplitude / std::f64::consts::SQRT_2);
            }
        });
        // Project onto real fields, then restore the band limit.
        let mut f = Self::to_spectral(&f.to_physical(), grid).expect("shape matches");
        f.coeffs.indexed_iter_mut().for_each(|((ix, iy, iz), c)| {
            let r2 = grid.index_radius_sq(ix, iy, iz) as f64;
            if r2 < 1.0 || r2 > kmax_sq {
                *c = Complex64::new(0.0, 0.0);
            }
        });
        f
    }
}

/// Three spectral components on one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    comps: [SpectralField; 3],
    divergence_free: bool,
}

impl VectorField {
    pub fn new(comps: [SpectralField; 3]) -> Result<Self> {
        comps[0].check_same_grid(&comps[1])?;
        comps[0].check_same_grid(&comps[2])?;
        Ok(Self {
            comps,
            divergence_free: false,
        })
    }

    pub fn zeros(grid: Grid3) -> Self {
        Self {
            comps: [
                SpectralField::zeros(grid),
                SpectralField::zeros(grid),
                SpectralField::zeros(grid),
            ],
            divergence_free: true,
        }
    }

    pub fn from_fn(grid: Grid3, f: impl Fn(f64, f64, f64) -> [f64; 3]) -> Self {
        let comps = [0, 1, 2].map(|c| SpectralField::from_fn(grid, |x, y, z| f(x, y, z)[c]));
        Self {
            comps,
            divergence_free: false,
        }
    }

    pub fn from_physical(values: &[Array3<f64>; 3], grid: Grid3) -> Result<Self> {
        Self::new([
            SpectralField::to_spectral(&values[0], grid)?,
            SpectralField::to_spectral(&values[1], grid)?,
            SpectralField::to_spectral(&values[2], grid)?,
        ])
    }

    pub fn to_physical(&self) -> [Array3<f64>; 3] {
        [
            self.comps[0].to_physical(),
            self.comps[1].to_physical(),
            self.comps[2].to_physical(),
        ]
    }

    pub fn grid(&self) -> Grid3 {
        self.comps[0].grid()
    }

    pub fn comps(&self) -> &[SpectralField; 3] {
        &self.comps
    }

    pub fn component(&self, i: usize) -> &SpectralField {
        &self.comps[i]
    }

    pub fn into_comps(self) -> [SpectralField; 3] {
        self.comps
    }

    /// Whether this field was produced by a Leray projection (or built
    /// divergence-free and verified).
    pub fn is_divergence_free(&self) -> bool {
        self.divergence_free
    }

    /// Set the divergence-free flag after checking
    /// `max_k |k·û(k)| ≤ 1e-10 · max_k |û(k)|`.
    pub fn mark_divergence_free(mut self) -> Result<Self> {
        let ratio = self.divergence_ratio();
        if ratio > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "field is not divergence-free (relative residual {ratio:e})"
            )));
        }
        self.divergence_free = true;
        Ok(self)
    }

    pub(crate) fn with_flag(mut self, divergence_free: bool) -> Self {
        self.divergence_free = divergence_free;
        self
    }

    pub fn map(&self, f: impl Fn(&SpectralField) -> SpectralField) -> Self {
        Self {
            comps: [f(&self.comps[0]), f(&self.comps[1]), f(&self.comps[2])],
            divergence_free: false,
        }
    }

    pub fn scale(&self, a: f64) -> Self {
        self.map(|c| c.scale(a)).with_flag(self.divergence_free)
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            comps: [0, 1, 2].map(|i| self.comps[i].add(&other.comps[i])),
            divergence_free: self.divergence_free && other.divergence_free,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            comps: [0, 1, 2].map(|i| self.comps[i].sub(&other.comps[i])),
            divergence_free: self.divergence_free && other.divergence_free,
        }
    }

    pub fn inner(&self, other: &Self) -> f64 {
        (0..3).map(|i| self.comps[i].inner(&other.comps[i])).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().map(SpectralField::max_abs).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(SpectralField::is_finite)
    }

    /// Spectral divergence `i k·û`.
    pub fn divergence(&self) -> SpectralField {
        let g = self.grid();
        let mut out = SpectralField::zeros(g);
        Zip::indexed(out.coeffs_mut())
            .and(self.comps[0].coeffs())
            .and(self.comps[1].coeffs())
            .and(self.comps[2].coeffs())
            .for_each(|(ix, iy, iz), o, a, b, c| {
                let k = [g.deriv_wavenumber(ix), g.deriv_wavenumber(iy), g.deriv_wavenumber(iz)];
                *o = Complex64::new(0.0, 1.0) * (a * k[0] + b * k[1] + c * k[2]);
            });
        out
    }

    /// `max_k |k·û(k)| / max_k |û(k)|`, zero for the zero field.
    pub fn divergence_ratio(&self) -> f64 {
        let scale = self.max_abs();
        if scale == 0.0 {
            return 0.0;
        }
        self.divergence().max_abs() / scale
    }
}
