//! The run configuration file. See `docs/config.md` for the schema.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::criterion::ProfileKind;
use crate::limit_ode::RhsMode;
use crate::nestedlog::{CriticalConstants, DeltaSequence};
use crate::nse::SolverConfig;
use crate::{Error, Result};

fn power_law_default() -> DeltaSequence {
    DeltaSequence::power_law(1.0, 2.0).expect("valid generator")
}
fn four() -> f64 {
    4.0
}
fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Seed for randomized test fields; `--seed` overrides it.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub constants: CriticalConstants,
    pub criterion: Option<CriterionSection>,
    pub nse: Option<NseSection>,
    pub ode: Option<OdeSection>,
    pub alpha_sweep: Option<AlphaSweepSection>,
    pub hausdorff: Option<HausdorffSection>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<PathBuf>,
}

/// Where a velocity or scalar field comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSource {
    /// A three-component field container.
    File { path: PathBuf },
    TaylorGreen { n: usize, amplitude: f64 },
    Shear { n: usize, amplitude: f64, k: i64 },
    /// Random divergence-free field with modes `|k| ≤ kmax`, drawn from the run seed.
    Random { n: usize, kmax: f64, amplitude: f64 },
    /// Scalar radial profile; only meaningful for the criterion command.
    Profile { n: usize, profile: ProfileKind, p: f64, s: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CriterionSection {
    pub source: FieldSource,
    #[serde(default = "four")]
    pub q: f64,
    #[serde(default = "one")]
    pub c0: f64,
    #[serde(default = "power_law_default")]
    pub deltas: DeltaSequence,
    #[serde(default = "tol_1e10")]
    pub tol: f64,
    /// Evaluate `λ u₀` for each factor; empty means `λ = 1` only.
    #[serde(default)]
    pub lambdas: Vec<f64>,
}

fn tol_1e10() -> f64 {
    1e-10
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NseSection {
    pub initial: FieldSource,
    pub solver: SolverConfig,
    /// Also write the final velocity as a field container.
    #[serde(default = "yes")]
    pub write_final: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeSection {
    pub c: f64,
    /// Exponent `K`; when absent it is taken from the interpolation exponents at `q`.
    pub k: Option<f64>,
    pub q: Option<f64>,
    pub z0: f64,
    #[serde(default = "power_law_default")]
    pub deltas: DeltaSequence,
    #[serde(default)]
    pub mode: RhsMode,
    #[serde(default = "tol_1e12")]
    pub product_tol: f64,
    pub t_end: f64,
    #[serde(default = "tol_1e10")]
    pub tol: f64,
    pub z_star: Option<ZStarSection>,
}

fn tol_1e12() -> f64 {
    1e-12
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZStarSection {
    pub eps: f64,
    #[serde(default = "cap_default")]
    pub search_cap: f64,
}

fn cap_default() -> f64 {
    1e6
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedDeltas {
    pub name: String,
    pub deltas: DeltaSequence,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaSweepSection {
    pub n_values: Vec<usize>,
    pub generators: Vec<NamedDeltas>,
    #[serde(default = "default_s_values")]
    pub s_values: Vec<f64>,
    #[serde(default = "four")]
    pub q: f64,
}

fn default_s_values() -> Vec<f64> {
    vec![0.5, 0.75, 1.0]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HausdorffSection {
    #[serde(default = "power_law_default")]
    pub deltas: DeltaSequence,
    #[serde(default = "eps_max_default")]
    pub eps_max: f64,
    #[serde(default = "eps_min_default")]
    pub eps_min: f64,
    #[serde(default = "points_default")]
    pub points: usize,
    #[serde(default = "tol_1e12")]
    pub tol: f64,
    /// Number of `δ_j` used for sequences whose sum is not known to converge.
    pub cap: Option<usize>,
    pub snapshot: Option<SnapshotSection>,
}

fn eps_max_default() -> f64 {
    0.1
}
fn eps_min_default() -> f64 {
    1e-8
}
fn points_default() -> usize {
    15
}

/// Box counting on the exceptional sets of a stored velocity field; `ε` is
/// then also the measure bound of the set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnapshotSection {
    pub path: PathBuf,
    #[serde(default = "scales_default")]
    pub scales: Vec<usize>,
}

fn scales_default() -> Vec<usize> {
    vec![1, 2, 4, 8]
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidArgument(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidArgument(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// SHA-256 of the canonical JSON form, ignoring the output directory.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.output = OutputConfig::default();
        let json = serde_json::to_string(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Paths inside the config are relative to the config file.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for src in [
            self.criterion.as_mut().map(|c| &mut c.source),
            self.nse.as_mut().map(|n| &mut n.initial),
        ]
        .into_iter()
        .flatten()
        {
            if let FieldSource::File { path } = src {
                fix(path);
            }
        }
        if let Some(snap) = self.hausdorff.as_mut().and_then(|h| h.snapshot.as_mut()) {
            fix(&mut snap.path);
        }
    }
}
