use serde::Serialize;

use super::{log_fixed_point, DeltaSequence, NestedLogs, MAX_TERMS};
use crate::{Error, Result};

/// A truncated infinite product `∏_{j ≥ start} (1 + L_j(x))^{δ_j}` with an
/// enclosing interval for the exact value.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProductValue {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub terms_used: usize,
    /// False when the tail could not be bounded (capped divergent product);
    /// the interval then collapses to the partial product.
    pub certified: bool,
}

impl ProductValue {
    fn exact(log_sum: f64, terms_used: usize) -> Self {
        let v = log_sum.exp();
        Self {
            value: v,
            lower: v,
            upper: v,
            terms_used,
            certified: true,
        }
    }

    pub fn relative_width(&self) -> f64 {
        self.upper / self.lower - 1.0
    }
}

/// Bounds on `log(1 + L_j(x))` valid for every `j ≥ m`, given `L_m(x)`.
fn tail_factor_bounds(l_m: f64) -> (f64, f64) {
    let at_fixed = (1.0 + log_fixed_point()).ln();
    let at_m = (1.0 + l_m).ln();
    let (lo, hi) = if at_m < at_fixed {
        (at_m, at_fixed)
    } else {
        (at_fixed, at_m)
    };
    // a few ulps of slack for the rounding in ℓ* and in the iterates
    (lo * (1.0 - 8.0 * f64::EPSILON), hi * (1.0 + 8.0 * f64::EPSILON))
}

struct PartialProduct<'a> {
    deltas: &'a DeltaSequence,
    logs: NestedLogs,
    /// Index of the next factor to be absorbed.
    next_j: usize,
    /// `L_{next_j}(x)`.
    next_l: f64,
    log_sum: f64,
    terms: usize,
}

impl<'a> PartialProduct<'a> {
    fn new(x: f64, deltas: &'a DeltaSequence, start: usize) -> Self {
        let start = start.max(1);
        let mut logs = NestedLogs::new(x);
        let next_l = logs.nth(start - 1).expect("infinite iterator");
        Self {
            deltas,
            logs,
            next_j: start,
            next_l,
            log_sum: 0.0,
            terms: 0,
        }
    }

    fn absorb(&mut self) {
        let d = self.deltas.delta(self.next_j);
        if d != 0.0 {
            self.log_sum += d * (1.0 + self.next_l).ln();
        }
        self.next_j += 1;
        self.next_l = self.logs.next().expect("infinite iterator");
        self.terms += 1;
    }

    /// Certified interval for the log of the full tail past the absorbed terms.
    fn log_tail_bounds(&self) -> Option<(f64, f64)> {
        let (mass_lo, mass_hi) = self.deltas.tail_mass(self.next_j)?;
        if mass_hi == 0.0 {
            return Some((0.0, 0.0));
        }
        let (f_lo, f_hi) = tail_factor_bounds(self.next_l);
        Some((mass_lo * f_lo, mass_hi * f_hi))
    }

    fn enclosure(&self) -> Option<ProductValue> {
        let (t_lo, t_hi) = self.log_tail_bounds()?;
        Some(ProductValue {
            value: (self.log_sum + 0.5 * (t_lo + t_hi)).exp(),
            lower: (self.log_sum + t_lo).exp(),
            upper: (self.log_sum + t_hi).exp(),
            terms_used: self.terms,
            certified: true,
        })
    }
}

fn validate_x(x: f64) -> Result<()> {
    if x.is_nan() || x < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "product argument must be >= 0, got {x}"
        )));
    }
    Ok(())
}

fn finite_product(x: f64, deltas: &DeltaSequence, start: usize, support: usize) -> ProductValue {
    let start = start.max(1);
    let n = (support + 1).saturating_sub(start);
    let mut p = PartialProduct::new(x, deltas, start);
    for _ in 0..n {
        p.absorb();
    }
    ProductValue::exact(p.log_sum, p.terms)
}

/// `∏_{j ≥ start} (1 + L_j(x))^{δ_j}` truncated once the certified interval
/// satisfies `upper / lower − 1 ≤ tol`.
///
/// Finitely supported sequences are multiplied out exactly. Tails that are not
/// known to converge are refused; use [`truncated_product_capped`] for those.
pub fn truncated_product(
    x: f64,
    deltas: &DeltaSequence,
    start: usize,
    tol: f64,
) -> Result<ProductValue> {
    validate_x(x)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance must be > 0, got {tol}"
        )));
    }
    if let Some(support) = deltas.support_len() {
        return Ok(finite_product(x, deltas, start, support));
    }
    if !deltas.tail_converges() {
        return Err(Error::DivergentTail {
            what: "product",
            start: start.max(1),
        });
    }
    let target = tol.ln_1p();
    let mut p = PartialProduct::new(x, deltas, start);
    loop {
        let (t_lo, t_hi) = p
            .log_tail_bounds()
            .expect("convergent tail has mass bounds");
        if t_hi - t_lo <= target {
            return Ok(p.enclosure().expect("bounds exist"));
        }
        if p.terms >= MAX_TERMS {
            return Err(Error::ToleranceNotReached {
                tol,
                terms: p.terms,
            });
        }
        p.absorb();
    }
}

/// The certified enclosure after exactly `n_terms` factors. Intervals for
/// increasing `n_terms` are nested.
pub fn product_with_terms(
    x: f64,
    deltas: &DeltaSequence,
    start: usize,
    n_terms: usize,
) -> Result<ProductValue> {
    validate_x(x)?;
    if !deltas.tail_converges() {
        return Err(Error::DivergentTail {
            what: "product",
            start: start.max(1),
        });
    }
    let mut p = PartialProduct::new(x, deltas, start);
    for _ in 0..n_terms {
        p.absorb();
    }
    Ok(p.enclosure().expect("convergent tail has mass bounds"))
}

/// Product over at most `cap` factors. Divergent tails are accepted here; the
/// result is then the plain partial product and is flagged as uncertified.
pub fn truncated_product_capped(
    x: f64,
    deltas: &DeltaSequence,
    start: usize,
    cap: usize,
) -> Result<ProductValue> {
    validate_x(x)?;
    if let Some(support) = deltas.support_len() {
        let n = support.min(start.max(1) + cap - 1);
        return Ok(finite_product(x, deltas, start, n));
    }
    let mut p = PartialProduct::new(x, deltas, start);
    for _ in 0..cap {
        p.absorb();
    }
    match p.enclosure() {
        Some(v) => Ok(v),
        None => {
            let mut v = ProductValue::exact(p.log_sum, p.terms);
            v.certified = false;
            Ok(v)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nestedlog::nested_log;
    use std::f64::consts::{E, PI};

    /// 200-term partial product of PowerLaw(1, 2) plus its closed-form tail:
    /// past j = 200 every L_j(x) equals ℓ* to double precision, and
    /// Σ_{j>200} 1/j² = π²/6 − Σ_{j≤200} 1/j².
    fn zeta2_oracle(x: f64, start: usize) -> f64 {
        let mut l = x;
        let mut log_sum = 0.0;
        let mut head = 0.0;
        for j in 1..=200usize {
            l = (E + l).ln();
            let d = 1.0 / (j * j) as f64;
            if j >= start {
                log_sum += d * (1.0 + l).ln();
            }
            head += d;
        }
        let tail_mass = PI * PI / 6.0 - head;
        (log_sum + tail_mass * (1.0 + l).ln()).exp()
    }

    #[test]
    fn trivial_products() {
        let one = DeltaSequence::explicit(vec![1.0]).unwrap();
        let p = truncated_product(0.0, &one, 1, 1e-12).unwrap();
        assert_eq!(p.value, 2.0);
        let empty = DeltaSequence::empty();
        let p = truncated_product(123.0, &empty, 1, 1e-12).unwrap();
        assert_eq!(p.value, 1.0);
        assert_eq!(p.terms_used, 0);
    }

    #[test]
    fn power_law_interval_contains_oracle() {
        let seq = DeltaSequence::power_law(1.0, 2.0).unwrap();
        let p = truncated_product(10.0, &seq, 1, 1e-8).unwrap();
        let oracle = zeta2_oracle(10.0, 1);
        assert!(p.lower <= oracle && oracle <= p.upper, "{p:?} vs {oracle}");
        assert!(p.relative_width() <= 1e-8);
        assert!(p.lower <= p.value && p.value <= p.upper);
    }

    #[test]
    fn divergent_tail_refused_unless_capped() {
        let seq = DeltaSequence::constant(1.0).unwrap();
        assert!(matches!(
            truncated_product(1.0, &seq, 1, 1e-8),
            Err(Error::DivergentTail { .. })
        ));
        let capped = truncated_product_capped(0.0, &seq, 1, 3).unwrap();
        let expected: f64 = (1..=3).map(|j| 1.0 + nested_log(j, 0.0).unwrap()).product();
        assert!((capped.value - expected).abs() < 1e-13);
        assert!(!capped.certified);
    }

    #[test]
    fn intervals_nest() {
        let seq = DeltaSequence::power_law(0.5, 1.5).unwrap();
        for x in [0.0, 0.5, 3.0, 1e6] {
            let mut prev = product_with_terms(x, &seq, 2, 0).unwrap();
            for n in 1..60 {
                let cur = product_with_terms(x, &seq, 2, n).unwrap();
                let slack = 1e-14 * cur.value;
                assert!(cur.lower >= prev.lower - slack, "x={x} n={n}");
                assert!(cur.upper <= prev.upper + slack, "x={x} n={n}");
                prev = cur;
            }
        }
    }
}
