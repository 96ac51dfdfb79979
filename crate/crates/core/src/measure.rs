//! Distribution functions and Lebesgue, weak-Lebesgue and Lorentz
//! quasi-norms.
//!
//! For a piecewise-constant function the distribution function
//! `λ(t) = μ{|u|^q > t}` is a step function with one breakpoint per distinct
//! value of `|u|^q`, so every quasi-norm below is evaluated in closed form on
//! the pieces rather than by quadrature in `t`.

use serde_json::json;

use crate::error::{arg, Result};
use crate::grid::{CellMask, GridFunction};
use crate::report::Report;
use crate::sum::pairwise_sum;

/// The step function `t ↦ μ{|u|^q > t}`.
///
/// On `[breakpoints[k-1], breakpoints[k])` (with an implicit leading 0) the
/// function equals `measures[k]`; beyond the last breakpoint it is 0.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionCurve {
    pub breakpoints: Vec<f64>,
    pub measures: Vec<f64>,
    pub q: f64,
}

impl DistributionCurve {
    /// Builds the curve from (value, mass) samples; values are raised to
    /// `q` after taking absolute values. Equal levels are merged.
    pub fn from_weighted(values: &[f64], weights: &[f64], q: f64) -> DistributionCurve {
        let mut pairs: Vec<(f64, f64)> = values
            .iter()
            .zip(weights)
            .map(|(v, w)| (v.abs().powf(q), *w))
            .filter(|(t, _)| *t > 0.0)
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut levels = Vec::new();
        let mut masses: Vec<Vec<f64>> = Vec::new();
        for (t, w) in pairs {
            if levels.last() == Some(&t) {
                masses.last_mut().unwrap().push(w);
            } else {
                levels.push(t);
                masses.push(vec![w]);
            }
        }
        // measures[k] = total mass at levels >= breakpoints[k]
        let level_mass: Vec<f64> = masses.iter().map(|m| pairwise_sum(m)).collect();
        let mut measures = vec![0.0; levels.len()];
        let mut acc = 0.0;
        for k in (0..levels.len()).rev() {
            acc += level_mass[k];
            measures[k] = acc;
        }
        DistributionCurve { breakpoints: levels, measures, q }
    }

    /// `λ(t)`.
    pub fn at(&self, t: f64) -> f64 {
        let k = self.breakpoints.partition_point(|&b| b <= t);
        if k < self.measures.len() {
            self.measures[k]
        } else {
            0.0
        }
    }

    pub fn is_zero(&self) -> bool {
        self.breakpoints.is_empty()
    }
}

fn selected(u: &GridFunction, region: Option<&CellMask>) -> Result<Vec<f64>> {
    match region {
        None => Ok(u.values.clone()),
        Some(mask) => {
            mask.check(&u.domain)?;
            let vals: Vec<f64> =
                u.values.iter().zip(&mask.bits).filter(|(_, &b)| b).map(|(v, _)| *v).collect();
            if vals.is_empty() {
                return arg("region selects no cells");
            }
            Ok(vals)
        }
    }
}

/// Exact distribution curve of `|u|^q` over the box or a cell region.
pub fn distribution(u: &GridFunction, q: f64, region: Option<&CellMask>) -> Result<DistributionCurve> {
    if !(q > 0.0) {
        return arg(format!("q must be positive, got {q}"));
    }
    let vals = selected(u, region)?;
    Ok(curve_from_cells(&vals, u.domain.cell_volume(), q))
}

/// Curve for equal-volume cells: measures are integer counts times the
/// cell volume.
pub(crate) fn curve_from_cells(vals: &[f64], cell_volume: f64, q: f64) -> DistributionCurve {
    let mut levels: Vec<f64> = vals.iter().map(|v| v.abs().powf(q)).filter(|&t| t > 0.0).collect();
    levels.sort_by(|a, b| a.total_cmp(b));
    let mut breakpoints = Vec::new();
    let mut counts = Vec::new();
    for t in levels {
        if breakpoints.last() == Some(&t) {
            *counts.last_mut().unwrap() += 1usize;
        } else {
            breakpoints.push(t);
            counts.push(1usize);
        }
    }
    let mut measures = vec![0.0; breakpoints.len()];
    let mut acc = 0usize;
    for k in (0..breakpoints.len()).rev() {
        acc += counts[k];
        measures[k] = acc as f64 * cell_volume;
    }
    DistributionCurve { breakpoints, measures, q }
}

/// `‖u‖_{L^{q,γ}}` from the distribution curve of `|u|^q`. Pass
/// `f64::INFINITY` for the weak space.
pub fn lorentz_norm(curve: &DistributionCurve, gamma: f64) -> f64 {
    if curve.is_zero() {
        return 0.0;
    }
    let q = curve.q;
    if gamma.is_infinite() {
        return weak_power(curve).powf(1.0 / q);
    }
    let e = gamma / q;
    let mut prev = 0.0f64;
    let terms: Vec<f64> = curve
        .breakpoints
        .iter()
        .zip(&curve.measures)
        .map(|(&t, &m)| {
            let piece = m.powf(e) * (t.powf(e) - prev.powf(e)) / e;
            prev = t;
            piece
        })
        .collect();
    pairwise_sum(&terms).powf(1.0 / gamma)
}

/// `sup_t t·λ(t)`, attained at the left limits of the breakpoints.
fn weak_power(curve: &DistributionCurve) -> f64 {
    curve.breakpoints.iter().zip(&curve.measures).fold(0.0, |s, (t, m)| s.max(t * m))
}

/// `(Σ |v|^p · cellvol)^{1/p}`.
pub fn lebesgue_norm(u: &GridFunction, p: f64, region: Option<&CellMask>) -> Result<f64> {
    if !(p > 0.0) {
        return arg(format!("p must be positive, got {p}"));
    }
    let vals = selected(u, region)?;
    let pw: Vec<f64> = vals.iter().map(|v| v.abs().powf(p)).collect();
    Ok((pairwise_sum(&pw) * u.domain.cell_volume()).powf(1.0 / p))
}

/// `[u]_{L^q_w}`.
pub fn weak_norm(u: &GridFunction, q: f64, region: Option<&CellMask>) -> Result<f64> {
    Ok(lorentz_norm(&distribution(u, q, region)?, f64::INFINITY))
}

/// `sup_{0 < s ≤ upper} s·λ(s)` for the curve's own exponent.
pub fn truncated_sup(curve: &DistributionCurve, upper: f64) -> f64 {
    let mut best = 0.0f64;
    for (&t, &m) in curve.breakpoints.iter().zip(&curve.measures) {
        if t <= upper {
            best = best.max(t * m);
        } else {
            // `upper` falls inside this piece
            best = best.max(upper * m);
            break;
        }
    }
    best
}

/// Checks `‖|u|^r‖_{L^{p,q}} = ‖u‖^r_{L^{rp,rq}}`.
pub fn power_identity_check(u: &GridFunction, r: f64, p: f64, q: f64, tolerance: f64) -> Result<Report> {
    if !(r > 0.0 && p > 0.0 && q > 0.0) {
        return arg("power identity needs r, p, q > 0");
    }
    let lhs = lorentz_norm(&distribution(&u.abs_pow(r), p, None)?, q);
    let rhs = lorentz_norm(&distribution(u, r * p, None)?, r * q).powf(r);
    Ok(Report::equality(
        "power_identity",
        json!({"r": r, "p": p, "q": crate::report::num(q)}),
        lhs,
        rhs,
        tolerance,
    ))
}

/// (value, mass) samples of a function on a product space.
#[derive(Clone, Debug, Default)]
pub struct WeightedSampleSet {
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
}

impl WeightedSampleSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, value: f64, weight: f64) {
        debug_assert!(weight > 0.0);
        self.values.push(value);
        self.weights.push(weight);
    }

    pub fn extend(&mut self, other: WeightedSampleSet) {
        self.values.extend(other.values);
        self.weights.extend(other.weights);
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `sup_t t · W{|value|^q > t}`, i.e. the q-th power of the weak norm with
/// respect to the sample weights.
pub fn weighted_weak_norm(samples: &WeightedSampleSet, q: f64) -> Result<f64> {
    if samples.is_empty() {
        return arg("empty sample set");
    }
    if samples.weights.iter().any(|w| !(*w > 0.0)) {
        return arg("sample weights must be positive");
    }
    Ok(weak_power(&DistributionCurve::from_weighted(&samples.values, &samples.weights, q)))
}
