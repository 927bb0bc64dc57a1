use super::stepper::Lawson;
use super::diagnostics::{diagnostics_with_terms, identity_residual, stencil_window, IdentityTerms};
use super::{
    choose_dt, lagrange_derivative, DiagnosticsRow, DtPolicy, SolverConfig,
    SolverState, IDENTITY_STENCIL_POINTS,
};
use crate::spectral::sobolev_norm_vec;
use crate::Error;

/// `‖∇u‖_{L^∞}` above which a run is treated as blowing up.
pub const BLOWUP_GRAD_SUP: f64 = 1e12;

#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub rows: Vec<DiagnosticsRow>,
    /// States at each row, when `keep_snapshots` is set.
    pub snapshots: Vec<SolverState>,
    pub steps: usize,
}

/// A run that stopped early, with everything computed up to that point.
#[derive(Debug, thiserror::Error)]
#[error("run aborted after {} steps: {error}", partial.steps)]
pub struct RunFailure {
    pub error: Error,
    pub partial: Trajectory,
}

impl RunFailure {
    pub fn last_row(&self) -> Option<&DiagnosticsRow> {
        self.partial.rows.last()
    }
}

struct Recorder {
    ts: Vec<f64>,
    ys: Vec<f64>,
    row_steps: Vec<usize>,
    terms: Vec<IdentityTerms>,
    traj: Trajectory,
}

impl Recorder {
    fn sample(&mut self, state: &SolverState) -> Result<(), Error> {
        self.ts.push(state.t);
        self.ys.push(sobolev_norm_vec(&state.u, 1.0)?.powi(2));
        Ok(())
    }

    fn row(&mut self, state: &SolverState, config: &SolverConfig) -> Result<(), Error> {
        let (row, terms) = diagnostics_with_terms(state, config)?;
        let grad_sup = row.grad_sup;
        let finite = [row.y, row.energy, row.grad_l2_sq, row.lap_l2_sq, row.grad_sup, row.z]
            .iter()
            .all(|v| v.is_finite());
        self.row_steps.push(self.ts.len() - 1);
        self.terms.push(terms);
        self.traj.rows.push(row);
        if config.keep_snapshots {
            self.traj.snapshots.push(state.clone());
        }
        if !finite {
            return Err(Error::BlowUp {
                t: state.t,
                reason: "non-finite diagnostics".into(),
            });
        }
        if grad_sup > BLOWUP_GRAD_SUP {
            return Err(Error::BlowUp {
                t: state.t,
                reason: format!("gradient sup-norm {grad_sup:e} exceeds {BLOWUP_GRAD_SUP:e}"),
            });
        }
        Ok(())
    }

    fn finish(mut self) -> Trajectory {
        if self.ts.len() >= 3 {
            for (r, (&s, terms)) in self.row_steps.iter().zip(&self.terms).enumerate() {
                let win = stencil_window(self.ts.len(), s, IDENTITY_STENCIL_POINTS);
                let dydt = lagrange_derivative(&self.ts[win.clone()], &self.ys[win.clone()], s - win.start);
                let lhs = dydt + terms.dissipation;
                self.traj.rows[r].identity_residual = Some(identity_residual(lhs, terms.rhs));
            }
        }
        self.traj
    }
}

/// Advance `initial` to `config.t_end`, emitting a diagnostics row at the
/// start, every `monitor_stride` steps and at the final time.
///
/// The identity residual of each row differentiates the per-step series of
/// `Y` with a five-point Lagrange stencil (fourth order), shifted one-sided
/// near the ends of the run.
pub fn run(
    config: &SolverConfig,
    initial: SolverState,
) -> Result<(Trajectory, SolverState), Box<RunFailure>> {
    let mut rec = Recorder {
        ts: Vec::new(),
        ys: Vec::new(),
        row_steps: Vec::new(),
        terms: Vec::new(),
        traj: Trajectory::default(),
    };
    macro_rules! bail {
        ($e:expr) => {
            return Err(Box::new(RunFailure {
                error: $e,
                partial: rec.finish(),
            }))
        };
    }
    if let Err(e) = config.validate() {
        bail!(e);
    }
    let t0 = initial.t;
    let mut state = initial;
    if let Err(e) = rec.sample(&state).and_then(|_| rec.row(&state, config)) {
        bail!(e);
    }

    let span = config.t_end - t0;
    let fixed_steps = match config.dt_policy {
        DtPolicy::Fixed { dt } if span > 0.0 => Some((span / dt - 1e-9).ceil().max(1.0) as usize),
        DtPolicy::Fixed { .. } => Some(0),
        DtPolicy::Cfl { .. } => None,
    };

    let mut i = 0usize;
    let mut lawson: Option<Lawson> = None;
    loop {
        let (h, t_next) = match (fixed_steps, config.dt_policy.clone()) {
            (Some(n), DtPolicy::Fixed { dt }) => {
                if i >= n {
                    break;
                }
                let t_next = if i + 1 == n { config.t_end } else { t0 + (i + 1) as f64 * dt };
                (t_next - state.t, t_next)
            }
            _ => {
                if state.t >= config.t_end {
                    break;
                }
                let h = choose_dt(&state, config);
                let t_next = if config.t_end - state.t - h <= 1e-12 * config.t_end.abs().max(1.0) {
                    config.t_end
                } else {
                    state.t + h
                };
                (h, t_next)
            }
        };
        if !lawson.as_ref().is_some_and(|l| l.matches(config.nu, h)) {
            lawson = Some(Lawson::new(state.grid(), config.nu, h));
        }
        state = match lawson.as_ref().expect("set above").advance(&state, config.dealias) {
            Ok(mut s) => {
                s.t = t_next;
                s
            }
            Err(e) => bail!(e),
        };
        i += 1;
        rec.traj.steps = i;
        if let Err(e) = rec.sample(&state) {
            bail!(e);
        }
        let last = state.t >= config.t_end;
        if i.is_multiple_of(config.monitor_stride) || last {
            if let Err(e) = rec.row(&state, config) {
                bail!(e);
            }
        }
        if last {
            break;
        }
    }
    Ok((rec.finish(), state))
}
