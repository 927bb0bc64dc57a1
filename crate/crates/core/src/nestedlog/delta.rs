use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Analytic convergence class of a series of positive terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeriesClass {
    Convergent,
    Divergent,
    Unknown,
}

/// Symbolic description of an exponent sequence `δ_1, δ_2, ...`.
///
/// In configuration files a generator is written as a tagged record, e.g.
/// `{ kind = "power_law", a = 1.0, p = 2.0 }`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DeltaGenerator {
    /// `δ_j = delta` for every `j`.
    Constant { delta: f64 },
    /// `δ_j = a · j^(−p)`.
    PowerLaw { a: f64, p: f64 },
    /// `δ_j = c · j! / Σ_{k ≤ n} k!` for `j ≤ n`, zero afterwards.
    FactorialWeighted { c: f64, n: usize },
    /// A finite list; `δ_j = 0` past its end.
    Explicit { values: Vec<f64> },
}

/// A validated exponent sequence together with the analytic classification of
/// `Σ δ_j` and `Σ δ_j / j!`.
///
/// Classification is derived from the generator alone. Partial sums are never
/// consulted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DeltaGenerator", into = "DeltaGenerator")]
pub struct DeltaSequence {
    generator: DeltaGenerator,
    /// Precomputed values for finitely supported generators.
    finite: Option<Vec<f64>>,
    sum_class: SeriesClass,
    factorial_sum_class: SeriesClass,
}

impl TryFrom<DeltaGenerator> for DeltaSequence {
    type Error = Error;

    fn try_from(generator: DeltaGenerator) -> Result<Self> {
        Self::new(generator)
    }
}

impl From<DeltaSequence> for DeltaGenerator {
    fn from(seq: DeltaSequence) -> Self {
        seq.generator
    }
}

fn positive_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} must be finite and > 0, got {v}"
        )))
    }
}

impl DeltaSequence {
    pub fn new(generator: DeltaGenerator) -> Result<Self> {
        use SeriesClass::*;
        let (finite, sum_class, factorial_sum_class) = match &generator {
            DeltaGenerator::Constant { delta } => {
                positive_finite("constant delta", *delta)?;
                (None, Divergent, Convergent)
            }
            DeltaGenerator::PowerLaw { a, p } => {
                positive_finite("power-law amplitude a", *a)?;
                if !p.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "power-law exponent p must be finite, got {p}"
                    )));
                }
                // a·j^(−p)/j! is summable for every real p.
                let sum = if *p > 1.0 { Convergent } else { Divergent };
                (None, sum, Convergent)
            }
            DeltaGenerator::FactorialWeighted { c, n } => {
                positive_finite("factorial-weighted total c", *c)?;
                if *n == 0 {
                    return Err(Error::InvalidArgument(
                        "factorial-weighted sequence needs n >= 1".into(),
                    ));
                }
                (Some(factorial_weights(*c, *n)), Convergent, Convergent)
            }
            DeltaGenerator::Explicit { values } => {
                if let Some(bad) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
                    return Err(Error::InvalidArgument(format!(
                        "explicit deltas must be finite and >= 0, got {bad}"
                    )));
                }
                (Some(values.clone()), Unknown, Unknown)
            }
        };
        Ok(Self {
            generator,
            finite,
            sum_class,
            factorial_sum_class,
        })
    }

    pub fn constant(delta: f64) -> Result<Self> {
        Self::new(DeltaGenerator::Constant { delta })
    }

    pub fn power_law(a: f64, p: f64) -> Result<Self> {
        Self::new(DeltaGenerator::PowerLaw { a, p })
    }

    pub fn factorial_weighted(c: f64, n: usize) -> Result<Self> {
        Self::new(DeltaGenerator::FactorialWeighted { c, n })
    }

    pub fn explicit(values: impl Into<Vec<f64>>) -> Result<Self> {
        Self::new(DeltaGenerator::Explicit {
            values: values.into(),
        })
    }

    /// The empty sequence: every product over it is 1.
    pub fn empty() -> Self {
        Self::explicit(Vec::new()).expect("empty list is valid")
    }

    pub fn generator(&self) -> &DeltaGenerator {
        &self.generator
    }

    pub fn sum_class(&self) -> SeriesClass {
        self.sum_class
    }

    pub fn factorial_sum_class(&self) -> SeriesClass {
        self.factorial_sum_class
    }

    /// `δ_j` for `j ≥ 1`. Index 0 is not part of the sequence and yields 0.
    pub fn delta(&self, j: usize) -> f64 {
        if j == 0 {
            return 0.0;
        }
        if let Some(values) = &self.finite {
            return values.get(j - 1).copied().unwrap_or(0.0);
        }
        match self.generator {
            DeltaGenerator::Constant { delta } => delta,
            DeltaGenerator::PowerLaw { a, p } => a * (j as f64).powf(-p),
            _ => unreachable!("finite generators are precomputed"),
        }
    }

    /// Number of (possibly) nonzero terms, when finite.
    pub fn support_len(&self) -> Option<usize> {
        self.finite.as_ref().map(Vec::len)
    }

    /// Certified bounds on `Σ_{j ≥ m} δ_j`, available only when that tail is
    /// known to converge. For finitely supported sequences the bounds coincide.
    pub fn tail_mass(&self, m: usize) -> Option<(f64, f64)> {
        let m = m.max(1);
        if let Some(values) = &self.finite {
            let s: f64 = values.iter().skip(m - 1).sum();
            return Some((s, s));
        }
        match self.generator {
            DeltaGenerator::PowerLaw { a, p } if p > 1.0 => {
                // f(x) = a x^(−p) is convex and decreasing, so
                //   ∫_m^∞ f + f(m)/2 ≤ Σ_{j≥m} f(j) ≤ ∫_{m−½}^∞ f.
                let mf = m as f64;
                let lower = a * mf.powf(1.0 - p) / (p - 1.0) + 0.5 * a * mf.powf(-p);
                let upper = a * (mf - 0.5).powf(1.0 - p) / (p - 1.0);
                Some((lower, upper.max(lower)))
            }
            _ => None,
        }
    }

    /// Whether `Σ_{j ≥ m} δ_j` is known to be finite.
    pub fn tail_converges(&self) -> bool {
        self.finite.is_some() || self.sum_class == SeriesClass::Convergent
    }

    /// Largest `δ_j` over `j ≥ m`, when known in closed form.
    pub(crate) fn tail_sup(&self, m: usize) -> Option<f64> {
        let m = m.max(1);
        if let Some(values) = &self.finite {
            return Some(values.iter().skip(m - 1).copied().fold(0.0, f64::max));
        }
        match self.generator {
            DeltaGenerator::Constant { delta } => Some(delta),
            DeltaGenerator::PowerLaw { a, p } if p >= 0.0 => Some(a * (m as f64).powf(-p)),
            _ => None,
        }
    }
}

/// `c · j! / Σ_{k=1}^n k!` for `j = 1..=n`, evaluated through the ratios
/// `j!/n!` so that no factorial is ever formed.
pub(crate) fn factorial_weights(c: f64, n: usize) -> Vec<f64> {
    let mut w = vec![0.0; n];
    let mut r = 1.0;
    for j in (1..=n).rev() {
        w[j - 1] = r;
        r /= j as f64;
    }
    let total: f64 = w.iter().sum();
    w.iter().map(|x| c * x / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_is_symbolic() {
        let c = DeltaSequence::constant(0.3).unwrap();
        assert_eq!(c.sum_class(), SeriesClass::Divergent);
        assert_eq!(c.factorial_sum_class(), SeriesClass::Convergent);

        let p = DeltaSequence::power_law(1.0, 2.0).unwrap();
        assert_eq!(p.sum_class(), SeriesClass::Convergent);
        assert_eq!(p.factorial_sum_class(), SeriesClass::Convergent);

        let slow = DeltaSequence::power_law(1.0, 1.0).unwrap();
        assert_eq!(slow.sum_class(), SeriesClass::Divergent);

        let e = DeltaSequence::explicit(vec![1.0, 2.0]).unwrap();
        assert_eq!(e.sum_class(), SeriesClass::Unknown);
        assert_eq!(e.factorial_sum_class(), SeriesClass::Unknown);
    }

    #[test]
    fn rejects_bad_generators() {
        assert!(DeltaSequence::constant(0.0).is_err());
        assert!(DeltaSequence::power_law(-1.0, 2.0).is_err());
        assert!(DeltaSequence::explicit(vec![1.0, -0.5]).is_err());
        assert!(DeltaSequence::factorial_weighted(1.0, 0).is_err());
    }

    #[test]
    fn generated_values_positive() {
        for seq in [
            DeltaSequence::constant(0.7).unwrap(),
            DeltaSequence::power_law(2.0, 1.5).unwrap(),
            DeltaSequence::factorial_weighted(3.0, 6).unwrap(),
        ] {
            let support = seq.support_len().unwrap_or(200);
            for j in 1..=support {
                assert!(seq.delta(j) > 0.0, "{seq:?} at j={j}");
            }
        }
    }

    #[test]
    fn factorial_weights_sum_to_total() {
        let w = factorial_weights(1.0, 3);
        assert!((w[0] - 1.0 / 9.0).abs() < 1e-15);
        assert!((w[1] - 2.0 / 9.0).abs() < 1e-15);
        assert!((w[2] - 6.0 / 9.0).abs() < 1e-15);
        let big = factorial_weights(2.5, 300);
        let s: f64 = big.iter().sum();
        assert!((s - 2.5).abs() <= 2.5 * 1e-12);
    }

    #[test]
    fn power_law_tail_mass_brackets_partial_sums() {
        let seq = DeltaSequence::power_law(1.0, 2.0).unwrap();
        // Σ_{j≥m} 1/j² = π²/6 − Σ_{j<m} 1/j²
        for m in [1usize, 2, 5, 40, 1000] {
            let head: f64 = (1..m).map(|j| 1.0 / (j * j) as f64).sum();
            let exact = std::f64::consts::PI.powi(2) / 6.0 - head;
            let (lo, hi) = seq.tail_mass(m).unwrap();
            assert!(lo <= exact + 1e-15 && exact <= hi + 1e-15, "m={m}: {lo} {exact} {hi}");
        }
    }

    #[test]
    fn serde_roundtrip_through_generator() {
        let toml_src = r#"kind = "power_law"
a = 1.0
p = 2.0
"#;
        let seq: DeltaSequence = toml::from_str(toml_src).unwrap();
        assert_eq!(seq.sum_class(), SeriesClass::Convergent);
        let json = serde_json::to_string(&seq).unwrap();
        assert_eq!(json, r#"{"kind":"power_law","a":1.0,"p":2.0}"#);
        let bad: std::result::Result<DeltaSequence, _> =
            toml::from_str("kind = \"power_law\"\na = 1.0\np = 2.0\nextra = 1\n");
        assert!(bad.is_err());
    }
}
