//! Smallness threshold `Z*` of the limiting equation.

use serde::Serialize;

use super::OdeParams;
use crate::{Error, Result};

/// First point of the search grid.
pub const Z_STAR_GRID_START: f64 = 1e-8;
/// Ratio between consecutive grid points.
pub const Z_STAR_GRID_RATIO: f64 = 1.05;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum ZStar {
    /// `rhs(z) < ε`. `left` is the grid point before the first satisfying
    /// one, where the inequality fails; `None` when the first grid point
    /// already satisfies it.
    Found { z: f64, left: Option<f64> },
    NotFound { cap: f64 },
}

impl ZStar {
    pub fn value(&self) -> Option<f64> {
        match *self {
            Self::Found { z, .. } => Some(z),
            Self::NotFound { .. } => None,
        }
    }
}

/// Smallest `Z` with `C (1 + Z^K) H(Z) < ε`: located on the geometric grid
/// `Z_STAR_GRID_START · 1.05^i` up to `search_cap`, then bisected between the
/// first satisfying grid point and its left neighbour. `params.z0` is unused.
pub fn z_star(params: &OdeParams, eps: f64, search_cap: f64) -> Result<ZStar> {
    params.validate()?;
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::InvalidArgument(format!("eps must be finite and > 0, got {eps}")));
    }
    if !(search_cap >= Z_STAR_GRID_START && search_cap.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "search_cap must be finite and >= {Z_STAR_GRID_START}, got {search_cap}"
        )));
    }
    let holds = |z: f64| -> Result<bool> { Ok(params.rhs(z)? < eps) };
    let mut prev: Option<f64> = None;
    let mut i = 0;
    loop {
        let z = Z_STAR_GRID_START * Z_STAR_GRID_RATIO.powi(i);
        if z > search_cap {
            return Ok(ZStar::NotFound { cap: search_cap });
        }
        if holds(z)? {
            let Some(left) = prev else {
                return Ok(ZStar::Found { z, left: None });
            };
            let (mut lo, mut hi) = (left, z);
            while hi - lo > 1e-13 * hi {
                let mid = 0.5 * (lo + hi);
                if holds(mid)? {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            return Ok(ZStar::Found { z: hi, left: Some(left) });
        }
        prev = Some(z);
        i += 1;
    }
}
