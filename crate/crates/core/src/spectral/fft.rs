//! Real-input 3D transforms built from batched 1D complex FFTs.
//!
//! Normalisation: the forward transform divides by `n³`, so the physical
//! field `e^{i k·x}` has unit coefficient at `k`.
//!
//! Each pass gathers its lanes into a contiguous buffer and transforms the
//! whole batch. Real z-lanes go two at a time, packed as the real and
//! imaginary parts of one complex lane. The banded variants skip lanes that
//! are known to vanish under two-thirds truncation.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use ndarray::Array3;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

const LANES_PER_TASK: usize = 64;
const ZERO: Complex64 = Complex64::new(0.0, 0.0);

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

fn plans(n: usize) -> Arc<Plans> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Plans>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Plans {
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            })
        })
        .clone()
}

fn batch(buf: &mut [Complex64], fft: &dyn Fft<f64>) {
    let n = fft.len();
    if rayon::current_num_threads() == 1 {
        let mut scratch = vec![ZERO; fft.get_inplace_scratch_len()];
        fft.process_with_scratch(buf, &mut scratch);
        return;
    }
    buf.par_chunks_mut(n * LANES_PER_TASK).for_each(|chunk| {
        let mut scratch = vec![ZERO; fft.get_inplace_scratch_len()];
        fft.process_with_scratch(chunk, &mut scratch);
    });
}

/// Index sets touched by a banded transform.
struct Band {
    /// Number of leading `k_z` indices kept.
    kz: usize,
    /// Kept `k_y` (and `k_x`) array indices.
    ys: Vec<usize>,
}

impl Band {
    fn new(n: usize, band: Option<usize>) -> Self {
        let nzh = n / 2 + 1;
        match band {
            None => Self { kz: nzh, ys: (0..n).collect() },
            Some(b) => Self {
                kz: (b + 1).min(nzh),
                ys: (0..n).filter(|&i| i <= b || i + b >= n).collect(),
            },
        }
    }
}

pub(crate) fn forward(physical: &Array3<f64>) -> Array3<Complex64> {
    forward_band(physical, None)
}

pub(crate) fn inverse(spectral: &Array3<Complex64>) -> Array3<f64> {
    inverse_band(spectral, None, None)
}

/// Forward transform that is only computed for `|k_i| ≤ band` on every axis;
/// all other coefficients are returned as zero.
pub(crate) fn forward_band(physical: &Array3<f64>, band: Option<usize>) -> Array3<Complex64> {
    let n = physical.shape()[0];
    let nzh = n / 2 + 1;
    let half = n / 2;
    let p = plans(n);
    let Band { kz, ys } = Band::new(n, band);
    let physical = physical.as_standard_layout();
    let data = physical.as_slice().expect("standard layout");

    // z: lanes (x, 2m) and (x, 2m+1) share one complex transform
    let mut packed = vec![ZERO; n * half * n];
    for (l, lane) in packed.chunks_exact_mut(n).enumerate() {
        let a = &data[2 * l * n..(2 * l + 1) * n];
        let b = &data[(2 * l + 1) * n..(2 * l + 2) * n];
        for ((c, &re), &im) in lane.iter_mut().zip(a).zip(b) {
            *c = Complex64::new(re, im);
        }
    }
    batch(&mut packed, p.forward.as_ref());

    // y: lanes indexed (x, kz), laid out [x][kz][y]
    let mut by = vec![ZERO; n * kz * n];
    let minus_half_i = Complex64::new(0.0, -0.5);
    for x in 0..n {
        for m in 0..half {
            let lane = &packed[(x * half + m) * n..(x * half + m + 1) * n];
            for k in 0..kz {
                let z = lane[k];
                let zc = lane[(n - k) % n].conj();
                let at = (x * kz + k) * n + 2 * m;
                by[at] = (z + zc) * 0.5;
                by[at + 1] = (z - zc) * minus_half_i;
            }
        }
    }
    batch(&mut by, p.forward.as_ref());

    // x: lanes indexed (y in band, kz), laid out [y][kz][x]
    let mut bx = vec![ZERO; ys.len() * kz * n];
    for (yi, &y) in ys.iter().enumerate() {
        for k in 0..kz {
            let lane = &mut bx[(yi * kz + k) * n..(yi * kz + k + 1) * n];
            for (x, v) in lane.iter_mut().enumerate() {
                *v = by[(x * kz + k) * n + y];
            }
        }
    }
    batch(&mut bx, p.forward.as_ref());

    let scale = 1.0 / (n * n * n) as f64;
    let mut spec = vec![ZERO; n * n * nzh];
    for (yi, &y) in ys.iter().enumerate() {
        for k in 0..kz {
            let lane = &bx[(yi * kz + k) * n..(yi * kz + k + 1) * n];
            for &x in &ys {
                spec[(x * n + y) * nzh + k] = lane[x] * scale;
            }
        }
    }
    Array3::from_shape_vec((n, n, nzh), spec).expect("shape matches")
}

/// Inverse transform of a spectrum known to vanish outside `|k_i| ≤ band`.
/// Entries where `keep` is false are read as zero.
pub(crate) fn inverse_band(spectral: &Array3<Complex64>, band: Option<usize>, keep: Option<&[bool]>) -> Array3<f64> {
    let n = spectral.shape()[0];
    let nzh = n / 2 + 1;
    let half = n / 2;
    let p = plans(n);
    let Band { kz, ys } = Band::new(n, band);
    let spectral = spectral.as_standard_layout();
    let spec = spectral.as_slice().expect("standard layout");

    // x: lanes indexed (y in band, kz), laid out [y][kz][x]
    let mut bx = vec![ZERO; ys.len() * kz * n];
    for (yi, &y) in ys.iter().enumerate() {
        for k in 0..kz {
            let lane = &mut bx[(yi * kz + k) * n..(yi * kz + k + 1) * n];
            for (x, v) in lane.iter_mut().enumerate() {
                let f = (x * n + y) * nzh + k;
                if keep.is_none_or(|m| m[f]) {
                    *v = spec[f];
                }
            }
        }
    }
    batch(&mut bx, p.inverse.as_ref());

    // y: lanes indexed (x, kz), laid out [x][kz][y]
    let mut by = vec![ZERO; n * kz * n];
    for (yi, &y) in ys.iter().enumerate() {
        for k in 0..kz {
            let lane = &bx[(yi * kz + k) * n..(yi * kz + k + 1) * n];
            for (x, v) in lane.iter().enumerate() {
                by[(x * kz + k) * n + y] = *v;
            }
        }
    }
    batch(&mut by, p.inverse.as_ref());

    // z: rebuild Hermitian lanes A (y = 2m) and B (y = 2m+1), transform A + iB
    let i = Complex64::new(0.0, 1.0);
    let mut packed = vec![ZERO; n * half * n];
    for x in 0..n {
        for m in 0..half {
            let lane = &mut packed[(x * half + m) * n..(x * half + m + 1) * n];
            let at = |k: usize| (x * kz + k) * n + 2 * m;
            lane[0] = Complex64::new(by[at(0)].re, by[at(0) + 1].re);
            for k in 1..kz.min(half) {
                let (a, b) = (by[at(k)], by[at(k) + 1]);
                lane[k] = a + i * b;
                lane[n - k] = a.conj() + i * b.conj();
            }
            if kz == nzh {
                lane[half] = Complex64::new(by[at(half)].re, by[at(half) + 1].re);
            }
        }
    }
    batch(&mut packed, p.inverse.as_ref());
    let mut out = vec![0.0; n * n * n];
    for (l, lane) in packed.chunks_exact(n).enumerate() {
        let (lo, hi) = out[2 * l * n..(2 * l + 2) * n].split_at_mut(n);
        for ((re, im), c) in lo.iter_mut().zip(hi.iter_mut()).zip(lane) {
            *re = c.re;
            *im = c.im;
        }
    }
    Array3::from_shape_vec((n, n, n), out).expect("shape matches")
}
