use super::{DtPolicy, SolverConfig, SolverState};
use crate::spectral::{advection, leray_project, projected_self_advection, Grid3, VectorField};
use crate::{Error, Result};

/// `−P[(u·∇)u]`. The dealiased path uses the conservative form `∇·(u ⊗ u)`,
/// which agrees with the convective form to roundoff for divergence-free `u`.
pub fn nonlinear_term(u: &VectorField, dealias: bool) -> Result<VectorField> {
    if dealias {
        projected_self_advection(u)
    } else {
        Ok(leray_project(&advection(u, u, false)?.scale(-1.0)))
    }
}

/// Integrating factors `exp(−ν|k|²h/2)` and `exp(−ν|k|²h)` for one step size.
pub(crate) struct Lawson {
    nu: f64,
    h: f64,
    e_half: Vec<f64>,
    e_full: Vec<f64>,
}

impl Lawson {
    pub(crate) fn new(grid: Grid3, nu: f64, h: f64) -> Self {
        let t = grid.tables();
        Self {
            nu,
            h,
            e_half: t.k2.iter().map(|k2| (-nu * k2 * (0.5 * h)).exp()).collect(),
            e_full: t.k2.iter().map(|k2| (-nu * k2 * h).exp()).collect(),
        }
    }

    pub(crate) fn matches(&self, nu: f64, h: f64) -> bool {
        self.nu == nu && self.h == h
    }

    /// One Lawson RK4 step from `state`, re-projected at the end.
    pub(crate) fn advance(&self, state: &SolverState, dealias: bool) -> Result<SolverState> {
        let (u, h) = (&state.u, self.h);
        let k1 = nonlinear_term(u, dealias)?;
        let k2 = nonlinear_term(&apply(&self.e_half, &u.add(&k1.scale(0.5 * h))), dealias)?;
        let u_half = apply(&self.e_half, u);
        let k3 = nonlinear_term(&u_half.add(&k2.scale(0.5 * h)), dealias)?;
        let u_full = apply(&self.e_full, u);
        let k4 = nonlinear_term(&u_full.add(&apply(&self.e_half, &k3).scale(h)), dealias)?;

        let incr = apply(&self.e_full, &k1)
            .add(&apply(&self.e_half, &k2.add(&k3)).scale(2.0))
            .add(&k4)
            .scale(h / 6.0);
        let next = leray_project(&u_full.add(&incr));
        if !next.is_finite() {
            return Err(Error::BlowUp {
                t: state.t + h,
                reason: "non-finite velocity coefficients".into(),
            });
        }
        Ok(SolverState { t: state.t + h, u: next })
    }
}

fn apply(factors: &[f64], v: &VectorField) -> VectorField {
    // diagonal multipliers preserve k·û = 0
    let comps = [0, 1, 2].map(|i| {
        let mut c = v.component(i).clone();
        c.coeffs_mut()
            .as_slice_mut()
            .expect("standard layout")
            .iter_mut()
            .zip(factors)
            .for_each(|(c, f)| *c *= *f);
        c
    });
    VectorField::new(comps)
        .expect("same grid")
        .with_flag(v.is_divergence_free())
}

/// Time step chosen by the configured policy, clipped so as not to overshoot
/// `t_end`.
pub fn choose_dt(state: &SolverState, config: &SolverConfig) -> f64 {
    let remaining = (config.t_end - state.t).max(0.0);
    let dt = match config.dt_policy {
        DtPolicy::Fixed { dt } => dt,
        DtPolicy::Cfl { number } => {
            let umax = state
                .u
                .to_physical()
                .iter()
                .flat_map(|c| c.iter())
                .fold(0.0f64, |m, v| m.max(v.abs()));
            if umax == 0.0 {
                remaining
            } else {
                number * state.grid().spacing() / umax
            }
        }
    };
    dt.min(remaining)
}

/// One integrating-factor RK4 step of size `h`.
pub fn step_with_dt(state: &SolverState, config: &SolverConfig, h: f64) -> Result<SolverState> {
    Lawson::new(state.grid(), config.nu, h).advance(state, config.dealias)
}

/// One step with the configured time-step policy.
pub fn step(state: &SolverState, config: &SolverConfig) -> Result<SolverState> {
    let h = choose_dt(state, config);
    if h <= 0.0 {
        return Ok(state.clone());
    }
    step_with_dt(state, config, h)
}
