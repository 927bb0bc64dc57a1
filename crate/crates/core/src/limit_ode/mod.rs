//! The scalar limiting equation `dZ/dt = C (1 + Z^K) H(Z)`, its smallness
//! threshold `Z*`, and Osgood-type comparison bounds.

mod osgood;
mod quad;
mod zstar;

use serde::{Deserialize, Serialize};

pub use osgood::{osgood_bound, Modulus, OsgoodSample};
pub use zstar::{z_star, ZStar, Z_STAR_GRID_RATIO, Z_STAR_GRID_START};

use crate::nestedlog::{h_func, DeltaSequence};
use crate::{Error, Result};

/// Values of `Z` beyond this are treated as escape to infinity.
pub const Z_ESCAPE: f64 = 1e100;

/// Which right-hand side to integrate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhsMode {
    /// `C (1 + Z^K) H(Z)`
    #[default]
    Physical,
    /// `dZ/dt = C`. Non-physical; exists so the integrator can be checked
    /// against an exact solution.
    ConstantTestHook,
}

fn default_product_tol() -> f64 {
    1e-12
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeParams {
    pub c: f64,
    pub k: f64,
    pub deltas: DeltaSequence,
    pub z0: f64,
    #[serde(default)]
    pub mode: RhsMode,
    /// Relative tolerance of the infinite products inside `H`.
    #[serde(default = "default_product_tol")]
    pub product_tol: f64,
}

impl OdeParams {
    pub fn new(c: f64, k: f64, deltas: DeltaSequence, z0: f64) -> Self {
        Self {
            c,
            k,
            deltas,
            z0,
            mode: RhsMode::Physical,
            product_tol: default_product_tol(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(self.c > 0.0 && self.c.is_finite()) {
            return bad(format!("C must be > 0, got {}", self.c));
        }
        if !(self.k > 1.0 && self.k.is_finite()) {
            return bad(format!("K must be > 1, got {}", self.k));
        }
        if !(self.z0 > 0.0 && self.z0.is_finite()) {
            return bad(format!("Z0 must be > 0, got {}", self.z0));
        }
        if !(self.product_tol > 0.0) {
            return bad("product_tol must be > 0".into());
        }
        Ok(())
    }

    pub fn rhs(&self, z: f64) -> Result<f64> {
        match self.mode {
            RhsMode::ConstantTestHook => Ok(self.c),
            RhsMode::Physical => Ok(self.c * (1.0 + z.powf(self.k)) * h_func(z, &self.deltas, self.product_tol)?),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OdeSample {
    pub t: f64,
    pub z: f64,
    pub rhs: f64,
    /// Size of the step that produced this sample; 0 for the initial point.
    pub step: f64,
}

/// Numerical escape of `Z` to infinity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EscapeBracket {
    /// Last accepted time, where `Z` was still finite.
    pub lower: f64,
    /// `lower + ∫_{Z(lower)}^∞ dZ / rhs(Z)`, the escape time of the exact
    /// solution through the last accepted point.
    pub upper: f64,
    pub z_last: f64,
    pub reason: &'static str,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OdeTrajectory {
    pub samples: Vec<OdeSample>,
    pub accepted: usize,
    pub rejected: usize,
    /// Largest accepted local error estimate, relative to `tol`.
    pub max_error_ratio: f64,
    /// False when produced by [`RhsMode::ConstantTestHook`].
    pub physical: bool,
    pub escape: Option<EscapeBracket>,
}

impl OdeTrajectory {
    pub fn last(&self) -> &OdeSample {
        self.samples.last().expect("trajectory holds the initial point")
    }
}

// Dormand-Prince 5(4); the equation is autonomous so the nodes are not needed
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B5: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MAX_GROWTH: f64 = 5.0;
const MIN_SHRINK: f64 = 0.2;
/// Finest step is `t_end · 2^{−MAX_LEVEL}`.
const MAX_LEVEL: u32 = 52;

/// Outcome of one attempted step: the 5th-order value and the embedded error
/// estimate, or the first stage at which `Z` left the finite range.
enum Attempt {
    Ok { z: f64, err: f64, k7: f64 },
    Escaped,
}

fn attempt(p: &OdeParams, z: f64, k1: f64, h: f64) -> Result<Attempt> {
    let mut k = [0.0; 7];
    k[0] = k1;
    for s in 1..7 {
        let zs = z + h * (0..s).map(|j| A[s][j] * k[j]).sum::<f64>();
        if !zs.is_finite() || zs > Z_ESCAPE {
            return Ok(Attempt::Escaped);
        }
        k[s] = p.rhs(zs)?;
    }
    let z5 = z + h * (0..7).map(|i| B5[i] * k[i]).sum::<f64>();
    let err = h * (0..7).map(|i| (B5[i] - B4[i]) * k[i]).sum::<f64>();
    if !z5.is_finite() || z5 > Z_ESCAPE {
        return Ok(Attempt::Escaped);
    }
    Ok(Attempt::Ok { z: z5, err, k7: k[6] })
}

/// `∫_z^∞ dζ / rhs(ζ)`, by the substitution `ζ = z e^u` up to `ζ = 10^{300/K}`,
/// plus the power-law remainder beyond.
fn escape_time(p: &OdeParams, z: f64) -> Result<f64> {
    if p.mode == RhsMode::ConstantTestHook {
        return Ok(f64::INFINITY);
    }
    let f = |u: f64| -> Result<f64> {
        let zeta = z * u.exp();
        Ok(zeta / p.rhs(zeta)?)
    };
    let z_max = 10f64.powf(300.0 / p.k);
    if z >= z_max {
        return Ok(0.0);
    }
    let u_max = (z_max / z).ln();
    let mut total = 0.0;
    let mut a = 0.0;
    let mut width = 1.0;
    while a < u_max {
        let b = (a + width).min(u_max);
        // ζ / rhs(ζ) is decreasing, so (b − a) f(a) bounds the piece
        let rough = (b - a) * f(a)?;
        let piece = quad::adaptive_simpson(&f, a, b, 1e-12 * (total + rough))?;
        total += piece;
        if piece <= 1e-15 * total {
            break;
        }
        a = b;
        width *= 2.0;
    }
    let h = h_func(z_max, &p.deltas, p.product_tol)?;
    Ok(total + z_max.powf(1.0 - p.k) / ((p.k - 1.0) * p.c * h))
}

/// Integrate to `t_end` with the Dormand-Prince 5(4) pair, accepting a step
/// when the embedded error is at most `tol · max(|Z_n|, |Z_{n+1}|)`.
///
/// Escape of `Z` past [`Z_ESCAPE`], or the step size reaching `t_end · 2^{−52}`,
/// ends the run early with an [`EscapeBracket`].
pub fn integrate(params: &OdeParams, t_end: f64, tol: f64) -> Result<OdeTrajectory> {
    params.validate()?;
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!("t_end must be >= 0, got {t_end}")));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidArgument(format!("tol must lie in (0, 1), got {tol}")));
    }
    let mut t = 0.0;
    let mut z = params.z0;
    let mut k1 = params.rhs(z)?;
    let mut traj = OdeTrajectory {
        samples: vec![OdeSample { t, z, rhs: k1, step: 0.0 }],
        accepted: 0,
        rejected: 0,
        max_error_ratio: 0.0,
        physical: params.mode == RhsMode::Physical,
        escape: None,
    };
    if t_end == 0.0 {
        return Ok(traj);
    }
    // Steps are dyadic fractions t_end·2^{−m} starting on multiples of their own
    // size, so the last step lands on t_end and a tighter tolerance refines
    // the mesh instead of shifting it.
    let level_of = |h: f64| -> u32 { ((t_end / h).log2().ceil().max(0.0) as u32).min(MAX_LEVEL + 1) };
    let aligned = |pos: u64, level: u32| level <= MAX_LEVEL && pos.is_multiple_of(1u64 << (MAX_LEVEL - level));
    let mut pos: u64 = 0;
    let end: u64 = 1 << MAX_LEVEL;
    let mut level = level_of(0.01 * tol.powf(0.2) * z / k1);
    let escape = |traj: &mut OdeTrajectory, t: f64, z: f64, reason| -> Result<()> {
        traj.escape = Some(EscapeBracket {
            lower: t,
            upper: t + escape_time(params, z)?,
            z_last: z,
            reason,
        });
        Ok(())
    };
    while pos < end {
        while level <= MAX_LEVEL && !aligned(pos, level) {
            level += 1;
        }
        if level > MAX_LEVEL {
            escape(&mut traj, t, z, "step size collapsed")?;
            break;
        }
        let h = t_end * 0.5f64.powi(level as i32);
        match attempt(params, z, k1, h)? {
            Attempt::Escaped => {
                traj.rejected += 1;
                level += 2;
            }
            Attempt::Ok { z: z_new, err, k7 } => {
                let ratio = err.abs() / (tol * z.abs().max(z_new.abs()));
                let factor = if ratio == 0.0 {
                    MAX_GROWTH
                } else {
                    (SAFETY * ratio.powf(-0.2)).clamp(MIN_SHRINK, MAX_GROWTH)
                };
                if ratio <= 1.0 {
                    if !(z_new > z) || !(k7 > 0.0) {
                        return Err(Error::Invariant(format!(
                            "Z must increase with a positive right-hand side: Z {z} -> {z_new}, rhs {k7}"
                        )));
                    }
                    pos += 1u64 << (MAX_LEVEL - level);
                    t = if pos == end { t_end } else { t_end * (pos as f64 / end as f64) };
                    z = z_new;
                    k1 = k7;
                    traj.accepted += 1;
                    traj.max_error_ratio = traj.max_error_ratio.max(ratio);
                    traj.samples.push(OdeSample { t, z, rhs: k1, step: h });
                    level = level_of(h * factor).max(level.saturating_sub(1));
                } else {
                    traj.rejected += 1;
                    level = level_of(h * factor).max(level + 1);
                }
            }
        }
    }
    Ok(traj)
}

/// Classical RK4 with a fixed step, landing exactly on `t_end`.
pub fn integrate_fixed_rk4(params: &OdeParams, t_end: f64, dt: f64) -> Result<f64> {
    params.validate()?;
    let steps = (t_end / dt - 1e-9).ceil().max(0.0) as usize;
    let mut z = params.z0;
    for i in 0..steps {
        let h = if i + 1 == steps { t_end - i as f64 * dt } else { dt };
        let k1 = params.rhs(z)?;
        let k2 = params.rhs(z + 0.5 * h * k1)?;
        let k3 = params.rhs(z + 0.5 * h * k2)?;
        let k4 = params.rhs(z + h * k3)?;
        z += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !z.is_finite() {
            return Err(Error::NonFinite(format!("RK4 state at step {i}")));
        }
    }
    Ok(z)
}
