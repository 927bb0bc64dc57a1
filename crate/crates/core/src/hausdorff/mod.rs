//! Exceptional sets `{|∇u| > λ_ε}`, the analytic dimension bound on them,
//! and an empirical box-counting estimate.

use ndarray::{Array3, Zip};
use serde::Serialize;

use crate::nestedlog::{log_fixed_point, DeltaSequence, NestedLogs, MAX_TERMS};
use crate::spectral::Grid3;
use crate::{Error, Result};

/// Terms always summed before the relative stopping rule may fire.
const MIN_TERMS: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExceptionalSet {
    pub epsilon: f64,
    pub lambda: f64,
    #[serde(skip)]
    pub mask: Array3<bool>,
    /// Number of cells in the mask.
    pub count: usize,
    /// `count × cell volume`, always `< epsilon`.
    pub measure: f64,
}

/// Smallest grid value `λ` of `gradmag` with `|{gradmag > λ}| < ε`.
///
/// With `m` the largest cell count whose measure stays below `ε`, this is the
/// order statistic `N − 1 − m` of the `N` grid values (the minimum when
/// `m ≥ N`). Ties sit on the same order statistic, so the choice is unique.
pub fn lambda_threshold(gradmag: &Array3<f64>, grid: Grid3, epsilon: f64) -> Result<ExceptionalSet> {
    if !(epsilon > 0.0) || epsilon.is_nan() {
        return Err(Error::InvalidArgument(format!("epsilon must be > 0, got {epsilon}")));
    }
    if gradmag.dim() != grid.physical_shape() {
        return Err(Error::ShapeMismatch {
            expected: format!("{:?}", grid.physical_shape()),
            got: format!("{:?}", gradmag.dim()),
        });
    }
    if gradmag.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("gradient magnitude".into()));
    }
    let cell = grid.cell_volume();
    let total = gradmag.len();
    // largest m with m · cell < ε
    let mut m = (epsilon / cell).ceil() as usize;
    while m > 0 && m as f64 * cell >= epsilon {
        m -= 1;
    }
    let mut values: Vec<f64> = gradmag.iter().copied().collect();
    let rank = total.saturating_sub(1 + m);
    let (_, lambda, _) = values.select_nth_unstable_by(rank, f64::total_cmp);
    let lambda = *lambda;
    let mask = gradmag.mapv(|v| v > lambda);
    let count = mask.iter().filter(|&&b| b).count();
    let measure = count as f64 * cell;
    if measure >= epsilon {
        return Err(Error::Invariant(format!("exceptional set measure {measure} >= epsilon {epsilon}")));
    }
    Ok(ExceptionalSet { epsilon, lambda, mask, count, measure })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DimBound {
    pub epsilon: f64,
    /// `3 − Σ_j δ_j/(1+δ_j) · L_{j−1}(1/ε) / (1 + L_j(1/ε))` before clamping.
    pub unclamped: f64,
    /// `unclamped` clamped to `[0, 3]`.
    pub bound: f64,
    /// Explicitly summed terms.
    pub terms: usize,
    /// Half-width of the certified interval for the omitted tail; the tail
    /// estimate is its midpoint.
    pub remainder: f64,
}

/// Analytic upper bound on the dimension of the exceptional set at level `ε`.
///
/// Sequences with infinite support are summed until a term drops below
/// `tol · partial sum` past [`MIN_TERMS`] terms, and the rest is enclosed using
/// that every later `L_{j−1}`, `L_j` lies between `L_{m−1}` and `ℓ*`. With
/// `cap = Some(n)` only `δ_1..δ_n` are used; without it a sequence whose sum
/// is not known to converge is rejected.
pub fn dim_bound(deltas: &DeltaSequence, epsilon: f64, tol: f64, cap: Option<usize>) -> Result<DimBound> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidArgument(format!("epsilon must lie in (0, 1), got {epsilon}")));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidArgument(format!("tolerance must lie in (0, 1), got {tol}")));
    }
    let finite_len = match (deltas.support_len(), cap) {
        (Some(len), Some(c)) => Some(len.min(c)),
        (Some(len), None) => Some(len),
        (None, Some(c)) => Some(c),
        (None, None) if deltas.tail_converges() => None,
        (None, None) => {
            return Err(Error::DivergentTail {
                what: "dimension-bound series",
                start: 1,
            })
        }
    };
    let x = 1.0 / epsilon;
    let mut prev = x;
    let mut logs = NestedLogs::new(x);
    let mut sum = 0.0;
    let mut j = 0;
    let mut remainder = 0.0;
    loop {
        if let Some(len) = finite_len {
            if j == len {
                break;
            }
        }
        j += 1;
        let l = logs.next().expect("infinite iterator");
        let d = deltas.delta(j);
        let term = d / (1.0 + d) * prev / (1.0 + l);
        sum += term;
        prev = l;
        if finite_len.is_none() && j > MIN_TERMS && term < tol * sum {
            let star = log_fixed_point();
            let (lo, hi) = (prev.min(star), prev.max(star));
            let (mass_lo, mass_hi) = deltas.tail_mass(j + 1).expect("convergent tail");
            let sup = deltas.tail_sup(j + 1).unwrap_or(mass_hi);
            let upper = hi / (1.0 + lo) * mass_hi;
            let lower = lo / (1.0 + hi) * mass_lo / (1.0 + sup);
            sum += 0.5 * (lower + upper);
            remainder = 0.5 * (upper - lower);
            break;
        }
        if j >= MAX_TERMS {
            return Err(Error::ToleranceNotReached { tol, terms: j });
        }
    }
    let unclamped = 3.0 - sum;
    Ok(DimBound {
        epsilon,
        unclamped,
        bound: unclamped.clamp(0.0, 3.0),
        terms: j,
        remainder,
    })
}

/// [`dim_bound`] over `eps_grid`, which must be strictly decreasing. Fails with
/// [`Error::Invariant`] if the bound increases anywhere along the grid.
pub fn dim_bound_scan(
    deltas: &DeltaSequence,
    eps_grid: &[f64],
    tol: f64,
    cap: Option<usize>,
) -> Result<Vec<DimBound>> {
    if eps_grid.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::InvalidArgument("epsilon grid must be strictly decreasing".into()));
    }
    let rows = eps_grid
        .iter()
        .map(|&e| dim_bound(deltas, e, tol, cap))
        .collect::<Result<Vec<_>>>()?;
    for w in rows.windows(2) {
        let slack = 4.0 * (w[0].remainder + w[1].remainder) + 1e-12;
        if w[1].unclamped > w[0].unclamped + slack {
            return Err(Error::Invariant(format!(
                "dimension bound increased from {} at ε={} to {} at ε={}",
                w[0].unclamped, w[0].epsilon, w[1].unclamped, w[1].epsilon
            )));
        }
    }
    Ok(rows)
}

/// `n` log-spaced values from `hi` down to `lo`.
pub fn log_eps_grid(hi: f64, lo: f64, n: usize) -> Result<Vec<f64>> {
    if !(hi > lo && lo > 0.0 && n >= 2) {
        return Err(Error::InvalidArgument(format!("need hi > lo > 0 and n >= 2, got {hi}, {lo}, {n}")));
    }
    let ratio = (lo / hi).ln() / (n - 1) as f64;
    Ok((0..n)
        .map(|i| if i + 1 == n { lo } else { hi * (ratio * i as f64).exp() })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoxCount {
    /// Least-squares slope of `log N(r)` against `log(1/r)`; 0 for an empty mask.
    pub dimension: f64,
    /// Root-mean-square residual of the fit.
    pub residual: f64,
    pub empty: bool,
    /// `(box side in cells, occupied boxes)` per scale.
    pub counts: Vec<(usize, usize)>,
}

/// Box-counting dimension of `mask` over boxes of `scales` cells per side.
/// Each scale must divide the grid size; at least three are required.
pub fn box_counting_dim(mask: &Array3<bool>, scales: &[usize]) -> Result<BoxCount> {
    let (nx, ny, nz) = mask.dim();
    if scales.len() < 3 {
        return Err(Error::InvalidArgument(format!("need at least 3 scales, got {}", scales.len())));
    }
    if let Some(s) = scales.iter().find(|&&s| s == 0 || nx % s != 0 || ny % s != 0 || nz % s != 0) {
        return Err(Error::InvalidArgument(format!("box size {s} does not divide the grid {nx}x{ny}x{nz}")));
    }
    let mut sorted = scales.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidArgument("box sizes must be distinct".into()));
    }
    let counts: Vec<(usize, usize)> = scales
        .iter()
        .map(|&s| {
            let mut occupied = Array3::<bool>::from_elem((nx / s, ny / s, nz / s), false);
            Zip::indexed(mask).for_each(|(i, j, k), &b| {
                if b {
                    occupied[[i / s, j / s, k / s]] = true;
                }
            });
            (s, occupied.iter().filter(|&&b| b).count())
        })
        .collect();
    if counts.iter().all(|&(_, c)| c == 0) {
        return Ok(BoxCount { dimension: 0.0, residual: 0.0, empty: true, counts });
    }
    let pts: Vec<(f64, f64)> = counts
        .iter()
        .map(|&(s, c)| (-(s as f64).ln(), (c as f64).ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let residual = (pts
        .iter()
        .map(|p| (p.1 - my - slope * (p.0 - mx)).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(BoxCount { dimension: slope, residual, empty: false, counts })
}
