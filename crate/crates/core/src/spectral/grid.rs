use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Uniform periodic grid with `n` points per axis on the box `[0, length)³`.
///
/// Spectral arrays use the real-input half layout `(n, n, n/2 + 1)`: the last
/// axis stores only `k_z ≥ 0`, the remaining coefficients being implied by
/// Hermitian symmetry.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid3 {
    n: usize,
    length: f64,
}

impl Grid3 {
    pub fn new(n: usize, length: f64) -> Result<Self> {
        if n < 8 || !n.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "grid size must be even and >= 8, got {n}"
            )));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "box length must be > 0, got {length}"
            )));
        }
        Ok(Self { n, length })
    }

    /// The `(2π)³` box.
    pub fn periodic(n: usize) -> Result<Self> {
        Self::new(n, 2.0 * PI)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn nz_half(&self) -> usize {
        self.n / 2 + 1
    }

    pub fn physical_shape(&self) -> (usize, usize, usize) {
        (self.n, self.n, self.n)
    }

    pub fn spectral_shape(&self) -> (usize, usize, usize) {
        (self.n, self.n, self.nz_half())
    }

    pub fn volume(&self) -> f64 {
        self.length.powi(3)
    }

    pub fn cell_volume(&self) -> f64 {
        (self.length / self.n as f64).powi(3)
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Coordinate of grid index `i` along any axis.
    pub fn coord(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    fn scale(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// Signed integer wavenumber of array index `i` on a full axis, in
    /// `{−n/2+1, …, n/2}`.
    pub fn index_wavenumber(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Array index holding signed wavenumber `k` on a full axis.
    pub fn wavenumber_index(&self, k: i64) -> usize {
        k.rem_euclid(self.n as i64) as usize
    }

    /// Physical wavenumber of index `i` (used for `|k|`).
    pub fn wavenumber(&self, i: usize) -> f64 {
        self.index_wavenumber(i) as f64 * self.scale()
    }

    /// Wavenumber used by odd operators (derivatives, projections). The
    /// Nyquist index has no Hermitian partner of opposite sign, so it is
    /// mapped to zero there.
    pub fn deriv_wavenumber(&self, i: usize) -> f64 {
        if i == self.n / 2 {
            0.0
        } else {
            self.wavenumber(i)
        }
    }

    /// Multiplicity of a half-spectrum entry in the full spectrum.
    pub fn mode_weight(&self, iz: usize) -> f64 {
        if iz == 0 || iz == self.n / 2 {
            1.0
        } else {
            2.0
        }
    }

    /// `|k|²` of half-spectrum entry `(ix, iy, iz)`.
    pub fn k_squared(&self, ix: usize, iy: usize, iz: usize) -> f64 {
        let (kx, ky, kz) = (self.wavenumber(ix), self.wavenumber(iy), self.wavenumber(iz));
        kx * kx + ky * ky + kz * kz
    }

    /// Squared integer radius of entry `(ix, iy, iz)`, independent of `length`.
    pub fn index_radius_sq(&self, ix: usize, iy: usize, iz: usize) -> i64 {
        let (a, b, c) = (
            self.index_wavenumber(ix),
            self.index_wavenumber(iy),
            self.index_wavenumber(iz),
        );
        a * a + b * b + c * c
    }

    /// Whether a mode survives the spherical two-thirds truncation
    /// `|k| < n/3` (integer units).
    pub fn keeps_dealiased(&self, ix: usize, iy: usize, iz: usize) -> bool {
        9 * self.index_radius_sq(ix, iy, iz) < (self.n * self.n) as i64
    }

    pub(crate) fn tables(&self) -> Arc<Tables> {
        type Cache = Mutex<HashMap<(usize, u64), Arc<Tables>>>;
        static CACHE: OnceLock<Cache> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut guard = cache.lock().expect("grid table cache poisoned");
        guard
            .entry((self.n, self.length.to_bits()))
            .or_insert_with(|| Arc::new(Tables::new(self)))
            .clone()
    }
}

/// Per-grid lookup tables for the hot spectral loops.
pub(crate) struct Tables {
    /// `deriv_wavenumber(i)` for every full-axis index.
    pub kd: Vec<f64>,
    /// Dealiasing mask over the half spectrum, row-major.
    pub keep: Vec<bool>,
    /// `|k|²` over the half spectrum, row-major.
    pub k2: Vec<f64>,
    /// Largest `|k_i|` index surviving the mask on any axis.
    pub band: usize,
}

impl Tables {
    fn new(g: &Grid3) -> Self {
        let n = g.n;
        let nzh = n / 2 + 1;
        let mut keep = Vec::with_capacity(n * n * nzh);
        let mut k2 = Vec::with_capacity(n * n * nzh);
        for ix in 0..n {
            for iy in 0..n {
                for iz in 0..nzh {
                    keep.push(g.keeps_dealiased(ix, iy, iz));
                    k2.push(g.k_squared(ix, iy, iz));
                }
            }
        }
        let band = (0..n).take_while(|k| 9 * k * k < n * n).last().unwrap_or(0);
        Self {
            kd: (0..n).map(|i| g.deriv_wavenumber(i)).collect(),
            keep,
            k2,
            band,
        }
    }
}
