//! Command-line front end: configuration, subcommands and report files.
//!
//! Exit codes: 0 on success (an inadmissible verdict is a result, not a
//! failure), 1 on numerical failure such as blow-up or overflow, after the
//! partial report has been written, and 2 on usage or configuration errors.

mod config;
mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use config::{
    AlphaSweepSection, CriterionSection, FieldSource, HausdorffSection, NamedDeltas, NseSection,
    OdeSection, OutputConfig, RunConfig, SnapshotSection, ZStarSection,
};
pub use output::{num, recorded_hash, Provenance, HASH_KEY, TIMESTAMP_KEY};
use output::Written;

use crate::criterion::{admissibility, admissibility_scalar, synth_radial_profile, CriterionVerdict};
use crate::hausdorff::{box_counting_dim, dim_bound_scan, lambda_threshold, log_eps_grid};
use crate::limit_ode::{integrate, z_star, OdeParams, ZStar};
use crate::nestedlog::{alpha, interp_exponents, phi_threshold};
use crate::nse::{random_state, run, shear_mode, taylor_green, DiagnosticsRow, SolverState, IDENTITY_STENCIL_POINTS};
use crate::spectral::container::{read_vector_field, write_mask, write_vector_field};
use crate::spectral::{grad_magnitude, Grid3, SpectralField, VectorField};
use crate::Error;

/// Overrides the output directory when `--out` is not given.
pub const OUT_DIR_ENV: &str = "NESTREG_OUT_DIR";
const DEFAULT_OUT_DIR: &str = "nestreg-out";

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERICAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "nestreg", version, about = "Nested-logarithm regularity toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Admissibility of initial data; writes criterion.json.
    Criterion(Common),
    /// Navier-Stokes run; writes nse_trajectory.csv, nse_summary.json and the final field.
    Nse(Common),
    /// Limiting ODE; writes ode_trajectory.csv and ode_summary.json.
    Ode(Common),
    /// Table of α and Φ over n and δ generators; writes alpha_sweep.csv.
    AlphaSweep(Common),
    /// Dimension-bound scan, optionally with box counting; writes hausdorff_scan.csv.
    Hausdorff(Common),
    /// Check that every report in the output directory carries this config's hash.
    Verify(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// TOML run configuration
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// Output directory; overrides NESTREG_OUT_DIR and the config
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores)
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    /// Overrides the config seed
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
}

/// Failure of a command, already classified by exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidArgument(_)
            | Error::DivergentTail { .. }
            | Error::ShapeMismatch { .. }
            | Error::SingularMean { .. }
            | Error::Container(_)
            | Error::Io(_)
            | Error::Json(_) => EXIT_USAGE,
            Error::ToleranceNotReached { .. }
            | Error::NormInfinite { .. }
            | Error::NonFinite(_)
            | Error::InsufficientHistory { .. }
            | Error::Invariant(_)
            | Error::BlowUp { .. } => EXIT_NUMERICAL,
        };
        Failure { code, message: e.to_string() }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, message: message.into() }
}

type CmdResult = std::result::Result<i32, Failure>;

struct Ctx {
    config: RunConfig,
    hash: String,
    seed: u64,
    out: PathBuf,
}

impl Ctx {
    fn provenance(&self, command: &'static str) -> Provenance {
        Provenance::new(command, self.hash.clone(), self.seed)
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

fn load(common: &Common) -> std::result::Result<Ctx, Failure> {
    let mut config = RunConfig::load(&common.config)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    config.constants.validate()?;
    let hash = config.hash();
    let base = common.config.parent().unwrap_or(Path::new("."));
    config.resolve_paths(base);
    let out = common
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .or_else(|| config.output.dir.as_ref().map(|d| base.join(d)))
        .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR));
    Ok(Ctx { hash, seed: config.seed, config, out })
}

/// Run the command line `args` (including the program name) and return the
/// process exit code.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let (common, verify) = match &cli.command {
        Command::Verify(c) => (c, true),
        Command::Criterion(c) | Command::Nse(c) | Command::Ode(c) | Command::AlphaSweep(c) | Command::Hausdorff(c) => {
            (c, false)
        }
    };
    if let Some(n) = common.threads {
        if n == 0 {
            eprintln!("error: --threads must be >= 1");
            return EXIT_USAGE;
        }
        // fails only if a pool already exists in this process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let result = load(common).and_then(|ctx| {
        if !verify {
            std::fs::create_dir_all(&ctx.out).map_err(|e| usage(format!("{}: {e}", ctx.out.display())))?;
        }
        match &cli.command {
            Command::Criterion(_) => cmd_criterion(&ctx),
            Command::Nse(_) => cmd_nse(&ctx),
            Command::Ode(_) => cmd_ode(&ctx),
            Command::AlphaSweep(_) => cmd_alpha_sweep(&ctx),
            Command::Hausdorff(_) => cmd_hausdorff(&ctx),
            Command::Verify(_) => cmd_verify(&ctx),
        }
    });
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn section<'a, T>(s: &'a Option<T>, name: &str) -> std::result::Result<&'a T, Failure> {
    s.as_ref().ok_or_else(|| usage(format!("config has no [{name}] section")))
}

enum Loaded {
    Vector(VectorField),
    Scalar(SpectralField),
}

fn load_field(src: &FieldSource, ctx: &Ctx) -> std::result::Result<Loaded, Failure> {
    let grid = |n: usize| Grid3::periodic(n);
    Ok(match src {
        FieldSource::File { path } => Loaded::Vector(read_vector_field(path)?),
        FieldSource::TaylorGreen { n, amplitude } => Loaded::Vector(taylor_green(grid(*n)?, *amplitude)?.u),
        FieldSource::Shear { n, amplitude, k } => Loaded::Vector(shear_mode(grid(*n)?, *amplitude, *k)?.u),
        FieldSource::Random { n, kmax, amplitude } => {
            Loaded::Vector(random_state(grid(*n)?, *kmax, *amplitude, &mut ctx.rng())?.u)
        }
        FieldSource::Profile { n, profile, p, s } => Loaded::Scalar(synth_radial_profile(*profile, *p, *s, grid(*n)?)?),
    })
}

#[derive(Serialize)]
struct ScaledVerdict {
    lambda: f64,
    #[serde(flatten)]
    verdict: CriterionVerdict,
}

#[derive(Serialize)]
struct CriterionReport<'a> {
    source: &'a FieldSource,
    q: f64,
    c0: f64,
    deltas: &'a crate::nestedlog::DeltaSequence,
    verdicts: Vec<ScaledVerdict>,
    /// Consecutive factors between which the verdict changes.
    crossings: Vec<[f64; 2]>,
}

fn cmd_criterion(ctx: &Ctx) -> CmdResult {
    let sec: &CriterionSection = section(&ctx.config.criterion, "criterion")?;
    let field = load_field(&sec.source, ctx)?;
    let lambdas = if sec.lambdas.is_empty() { vec![1.0] } else { sec.lambdas.clone() };
    let verdicts = lambdas
        .iter()
        .map(|&lambda| {
            let verdict = match &field {
                Loaded::Vector(u) => admissibility(&u.scale(lambda), sec.q, &sec.deltas, sec.c0, sec.tol),
                Loaded::Scalar(f) => admissibility_scalar(&f.scale(lambda), sec.q, &sec.deltas, sec.c0, sec.tol),
            }?;
            Ok(ScaledVerdict { lambda, verdict })
        })
        .collect::<crate::Result<Vec<_>>>()?;
    let crossings = verdicts
        .windows(2)
        .filter(|w| w[0].verdict.admissible != w[1].verdict.admissible)
        .map(|w| [w[0].lambda, w[1].lambda])
        .collect();
    let report = CriterionReport {
        source: &sec.source,
        q: sec.q,
        c0: sec.c0,
        deltas: &sec.deltas,
        verdicts,
        crossings,
    };
    Written::default().json(ctx.path("criterion.json"), &ctx.provenance("criterion"), report)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct NseReport {
    status: &'static str,
    error: Option<String>,
    steps: usize,
    rows: usize,
    t_final: Option<f64>,
    last_row: Option<DiagnosticsRow>,
    max_identity_residual: Option<f64>,
}

fn cmd_nse(ctx: &Ctx) -> CmdResult {
    let sec: &NseSection = section(&ctx.config.nse, "nse")?;
    let u = match load_field(&sec.initial, ctx)? {
        Loaded::Vector(u) => u,
        Loaded::Scalar(_) => return Err(usage("[nse] initial data must be a velocity field, not a profile")),
    };
    let initial = SolverState::new(0.0, u)?;
    let prov = ctx.provenance("nse").with_note(format!(
        "identity_residual uses a {IDENTITY_STENCIL_POINTS}-point Lagrange derivative of Y (fourth order on uniform steps)"
    ));
    let (traj, final_state, failure) = match run(&sec.solver, initial) {
        Ok((traj, state)) => (traj, Some(state), None),
        Err(f) => {
            let f = *f;
            if matches!(f.error, Error::InvalidArgument(_)) {
                return Err(f.error.into());
            }
            (f.partial, None, Some(f.error))
        }
    };
    let mut out = Written::default();
    let rows: Vec<String> = traj.rows.iter().map(DiagnosticsRow::csv_line).collect();
    out.csv(ctx.path("nse_trajectory.csv"), &prov, DiagnosticsRow::CSV_HEADER, &rows)?;
    if let (Some(state), true) = (&final_state, sec.write_final) {
        write_vector_field(&ctx.path("nse_final.nsef"), &state.u, prov.json())?;
        out.record(ctx.path("nse_final.nsef"));
    }
    let report = NseReport {
        status: if failure.is_some() { "failed" } else { "completed" },
        error: failure.as_ref().map(|e| e.to_string()),
        steps: traj.steps,
        rows: traj.rows.len(),
        t_final: traj.rows.last().map(|r| r.t),
        last_row: traj.rows.last().cloned(),
        max_identity_residual: traj
            .rows
            .iter()
            .filter_map(|r| r.identity_residual)
            .fold(None, |m: Option<f64>, r| Some(m.map_or(r, |m| m.max(r)))),
    };
    out.json(ctx.path("nse_summary.json"), &prov, report)?;
    match failure {
        None => Ok(EXIT_OK),
        Some(e) => Err(e.into()),
    }
}

#[derive(Serialize)]
struct OdeReport<'a> {
    params: &'a OdeParams,
    t_end: f64,
    tol: f64,
    accepted: usize,
    rejected: usize,
    max_error_ratio: f64,
    physical: bool,
    z_final: f64,
    t_final: f64,
    escape: Option<crate::limit_ode::EscapeBracket>,
    z_star: Option<ZStar>,
}

fn cmd_ode(ctx: &Ctx) -> CmdResult {
    let sec: &OdeSection = section(&ctx.config.ode, "ode")?;
    let k = match (sec.k, sec.q) {
        (Some(k), None) => k,
        (None, Some(q)) => interp_exponents(q)?.k,
        _ => return Err(usage("[ode] needs exactly one of k or q")),
    };
    let params = OdeParams {
        c: sec.c,
        k,
        deltas: sec.deltas.clone(),
        z0: sec.z0,
        mode: sec.mode,
        product_tol: sec.product_tol,
    };
    let traj = integrate(&params, sec.t_end, sec.tol)?;
    let zs = match &sec.z_star {
        Some(z) => Some(z_star(&params, z.eps, z.search_cap)?),
        None => None,
    };
    let mut prov = ctx.provenance("ode");
    if !traj.physical {
        prov = prov.with_note("constant right-hand side test hook; not the physical equation");
    }
    let mut out = Written::default();
    let rows: Vec<String> = traj
        .samples
        .iter()
        .map(|s| format!("{},{},{},{}", num(s.t), num(s.z), num(s.rhs), num(s.step)))
        .collect();
    out.csv(ctx.path("ode_trajectory.csv"), &prov, "t,Z,rhs_value,step_size", &rows)?;
    let last = traj.last();
    let report = OdeReport {
        params: &params,
        t_end: sec.t_end,
        tol: sec.tol,
        accepted: traj.accepted,
        rejected: traj.rejected,
        max_error_ratio: traj.max_error_ratio,
        physical: traj.physical,
        z_final: last.z,
        t_final: last.t,
        escape: traj.escape,
        z_star: zs,
    };
    out.json(ctx.path("ode_summary.json"), &prov, report)?;
    match traj.escape {
        None => Ok(EXIT_OK),
        Some(e) => Err(Failure {
            code: EXIT_NUMERICAL,
            message: format!(
                "Z escaped after t = {} (Z = {:e}); exact escape time estimated at {}",
                e.lower, e.z_last, e.upper
            ),
        }),
    }
}

fn cmd_alpha_sweep(ctx: &Ctx) -> CmdResult {
    let sec: &AlphaSweepSection = section(&ctx.config.alpha_sweep, "alpha_sweep")?;
    let consts = &ctx.config.constants;
    let mut rows = Vec::new();
    for g in &sec.generators {
        if g.name.contains([',', '\n', '"']) {
            return Err(usage(format!("generator name {:?} may not contain commas, quotes or newlines", g.name)));
        }
        for &n in &sec.n_values {
            let a = alpha(&g.deltas, n, consts);
            for &s in &sec.s_values {
                let phi = phi_threshold(s, sec.q, &g.deltas, n, consts)?;
                rows.push(format!("{},{},{},{},{}", g.name, n, num(a), num(s), num(phi)));
            }
        }
    }
    Written::default().csv(
        ctx.path("alpha_sweep.csv"),
        &ctx.provenance("alpha-sweep"),
        "generator,n,alpha,s,phi",
        &rows,
    )?;
    Ok(EXIT_OK)
}

fn cmd_hausdorff(ctx: &Ctx) -> CmdResult {
    let sec: &HausdorffSection = section(&ctx.config.hausdorff, "hausdorff")?;
    let eps = log_eps_grid(sec.eps_max, sec.eps_min, sec.points)?;
    let bounds = dim_bound_scan(&sec.deltas, &eps, sec.tol, sec.cap)?;
    let prov = ctx.provenance("hausdorff");
    let mut out = Written::default();
    let mut box_dims = vec![None; eps.len()];
    if let Some(snap) = &sec.snapshot {
        let u = read_vector_field(&snap.path)?;
        let grid = u.grid();
        let gm = grad_magnitude(&u);
        for (i, &e) in eps.iter().enumerate() {
            let set = lambda_threshold(&gm, grid, e)?;
            box_dims[i] = Some(box_counting_dim(&set.mask, &snap.scales)?.dimension);
            if i == 0 {
                let path = ctx.path("hausdorff_mask.nsef");
                let mut p = prov.json();
                p["epsilon"] = e.into();
                p["lambda"] = set.lambda.into();
                write_mask(&path, grid, &set.mask, p)?;
                out.record(path);
            }
        }
    }
    let rows: Vec<String> = bounds
        .iter()
        .zip(&box_dims)
        .map(|(b, d)| {
            let d = d.map(num).unwrap_or_default();
            format!("{},{},{},{}", num(b.epsilon), num(b.unclamped), num(b.bound), d)
        })
        .collect();
    out.csv(
        ctx.path("hausdorff_scan.csv"),
        &prov,
        "epsilon,bound_unclamped,bound,box_dim_if_computed",
        &rows,
    )?;
    Ok(EXIT_OK)
}

fn cmd_verify(ctx: &Ctx) -> CmdResult {
    let entries = std::fs::read_dir(&ctx.out).map_err(|e| usage(format!("{}: {e}", ctx.out.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "csv" || e == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(usage(format!("no reports found in {}", ctx.out.display())));
    }
    let mut bad = 0;
    for f in &files {
        let found = recorded_hash(f).map_err(Failure::from)?;
        let status = match found.as_deref() {
            Some(h) if h == ctx.hash => "ok",
            Some(_) => "MISMATCH",
            None => "NO HASH",
        };
        if status != "ok" {
            bad += 1;
        }
        println!("{status:9} {}", f.display());
    }
    println!("config {}: {} of {} files match", ctx.hash, files.len() - bad, files.len());
    Ok(if bad == 0 { EXIT_OK } else { EXIT_NUMERICAL })
}
