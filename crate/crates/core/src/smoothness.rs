//! Moduli of continuity and the difference-quotient seminorms: Besov (sup and
//! integral forms, strong and weak), Gagliardo, BV, plus the Sobolev
//! difference characterization and Marchaud diagnostics.
//!
//! Every shift norm here is global: `u` is extended by zero, so
//! `‖u(·+h) − u‖` counts the cells the shift moves outside the box.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::error::{arg, Result};
use crate::grid::{k_difference, GridFunction};
use crate::kernel::sphere_area;
use crate::measure::{curve_from_cells, lebesgue_norm, lorentz_norm, weighted_weak_norm, WeightedSampleSet};
use crate::report::Report;
use crate::sum::pairwise_sum;

/// Nonzero integer shift vectors, closed under negation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShiftLattice {
    pub dim: usize,
    pub offsets: Vec<Vec<i64>>,
}

fn norm2(d: &[i64]) -> f64 {
    (d.iter().map(|x| (x * x) as f64).sum::<f64>()).sqrt()
}

/// First nonzero coordinate positive.
fn is_positive(d: &[i64]) -> bool {
    d.iter().find(|&&x| x != 0).map_or(false, |&x| x > 0)
}

impl ShiftLattice {
    pub fn new(dim: usize, offsets: Vec<Vec<i64>>) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return arg(format!("dimension {dim} unsupported"));
        }
        if offsets.is_empty() {
            return arg("lattice needs at least one offset");
        }
        for d in &offsets {
            if d.len() != dim {
                return arg(format!("offset {d:?} has wrong dimension"));
            }
            if d.iter().all(|&x| x == 0) {
                return arg("lattice contains the zero offset");
            }
            let neg: Vec<i64> = d.iter().map(|x| -x).collect();
            if !offsets.contains(&neg) {
                return arg(format!("lattice is not closed under negation: {d:?}"));
            }
        }
        Ok(ShiftLattice { dim, offsets })
    }

    /// All nonzero offsets with Euclidean length at most `radius` cells.
    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        Self::shell(dim, 0.0, radius)
    }

    /// Offsets with length in `[inner, outer]` cells.
    pub fn shell(dim: usize, inner: f64, outer: f64) -> Result<Self> {
        let m = outer.floor() as i64;
        let mut offsets = Vec::new();
        let rows = if dim == 2 { -m..=m } else { 0..=0 };
        for a in rows {
            for b in -m..=m {
                let d = if dim == 2 { vec![a, b] } else { vec![b] };
                let len = norm2(&d);
                if len > 0.0 && len >= inner && len <= outer {
                    offsets.push(d);
                }
            }
        }
        Self::new(dim, offsets)
    }

    /// Multiples of the axis and diagonal directions up to `radius` steps.
    pub fn star(dim: usize, radius: usize) -> Result<Self> {
        let dirs: Vec<Vec<i64>> = if dim == 1 {
            vec![vec![1], vec![-1]]
        } else {
            let mut v = Vec::new();
            for a in -1..=1i64 {
                for b in -1..=1i64 {
                    if a != 0 || b != 0 {
                        v.push(vec![a, b]);
                    }
                }
            }
            v
        };
        let mut offsets = Vec::new();
        for m in 1..=radius as i64 {
            for d in &dirs {
                offsets.push(d.iter().map(|x| x * m).collect());
            }
        }
        Self::new(dim, offsets)
    }

    /// Ball covering every shift shorter than the box diameter in 1D, or a
    /// ball of `radius_2d` cells in 2D.
    pub fn for_grid(u: &GridFunction, radius_2d: f64) -> Result<Self> {
        if u.domain.dim == 1 {
            Self::ball(1, u.domain.cells[0] as f64)
        } else {
            Self::ball(2, radius_2d)
        }
    }

    /// One representative of each `±d` pair. Global shift norms are even in
    /// `d`, so this halves the work.
    pub fn half(&self) -> Vec<Vec<i64>> {
        self.offsets.iter().filter(|d| is_positive(d)).cloned().collect()
    }

    pub fn length(d: &[i64], spacing: f64) -> f64 {
        norm2(d) * spacing
    }
}

fn rc(u: &GridFunction, d: &[i64]) -> (i64, i64) {
    if u.domain.dim == 1 {
        (0, d[0])
    } else {
        (d[0], d[1])
    }
}

/// Every value of `u(x+d) − u(x)` over the cells where it can be nonzero.
pub(crate) fn difference_values(u: &GridFunction, d: &[i64]) -> Vec<f64> {
    let (dr, dc) = rc(u, d);
    let (rows, cols) = (u.domain.rows() as i64, u.domain.cols() as i64);
    let r_lo = -dr.max(0);
    let r_hi = rows - 1 + (-dr).max(0);
    let c_lo = -dc.max(0);
    let c_hi = cols - 1 + (-dc).max(0);
    let mut out = Vec::with_capacity(((r_hi - r_lo + 1) * (c_hi - c_lo + 1)) as usize);
    for r in r_lo..=r_hi {
        for c in c_lo..=c_hi {
            out.push(u.at(r + dr, c + dc) - u.at(r, c));
        }
    }
    out
}

/// `Σ_x |u(x+d) − u(x)|^q` over ℝ^N (no cell volume), using the overlap of
/// the box with its shift and the closed form `Σ_box |u|^q` for the rest.
pub(crate) fn difference_power_sum(u: &GridFunction, d: &[i64], q: f64, box_power: f64) -> f64 {
    let (dr, dc) = rc(u, d);
    let (rows, cols) = (u.domain.rows() as i64, u.domain.cols() as i64);
    if dr.abs() >= rows || dc.abs() >= cols {
        return 2.0 * box_power;
    }
    let r0 = 0.max(-dr);
    let r1 = rows.min(rows - dr);
    let c0 = 0.max(-dc);
    let c1 = cols.min(cols - dc);
    let w = cols as usize;
    let row_sums: Vec<f64> = (r0..r1)
        .map(|r| {
            let a = &u.values[r as usize * w + c0 as usize..r as usize * w + c1 as usize];
            let sr = (r + dr) as usize * w;
            let b = &u.values[sr + (c0 + dc) as usize..sr + (c1 + dc) as usize];
            let terms: Vec<f64> = a
                .iter()
                .zip(b)
                .map(|(x, y)| (y - x).abs().powf(q) - x.abs().powf(q) - y.abs().powf(q))
                .collect();
            pairwise_sum(&terms)
        })
        .collect();
    (pairwise_sum(&row_sums) + 2.0 * box_power).max(0.0)
}

fn box_power(u: &GridFunction, q: f64) -> f64 {
    pairwise_sum(&u.values.iter().map(|v| v.abs().powf(q)).collect::<Vec<_>>())
}

/// `Δ^k_d u` on the grid padded far enough to hold its whole support.
pub fn global_difference(u: &GridFunction, offset: &[i64], k: usize) -> Result<GridFunction> {
    if offset.len() != u.domain.dim {
        return arg("offset dimension differs from grid");
    }
    let reach = offset.iter().map(|x| x.unsigned_abs() as usize).max().unwrap_or(0);
    k_difference(&u.padded(k * reach), offset, k)
}

/// `‖·‖_{L^p}` or `[·]_{L^p_w}` of shift differences.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerNorm {
    Strong,
    Weak,
}

fn shift_norm(u: &GridFunction, d: &[i64], p: f64, inner: InnerNorm, bp: f64) -> f64 {
    let vol = u.domain.cell_volume();
    match inner {
        InnerNorm::Strong => (difference_power_sum(u, d, p, bp) * vol).powf(1.0 / p),
        InnerNorm::Weak => lorentz_norm(&curve_from_cells(&difference_values(u, d), vol, p), f64::INFINITY),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModulusCurve {
    pub t_values: Vec<f64>,
    pub omega: Vec<f64>,
    pub k: usize,
    pub p: f64,
    /// `t` shorter than one spacing: no lattice shift fits.
    pub unresolved: Vec<bool>,
}

/// (length, norm) per half-lattice offset, sorted by length then index.
fn lengths_and_norms(u: &GridFunction, k: usize, p: f64, lattice: &ShiftLattice) -> Result<Vec<(f64, f64)>> {
    let h = u.domain.spacing;
    let half = lattice.half();
    let per: Vec<Result<(f64, f64)>> = half
        .par_iter()
        .map(|d| {
            let v = global_difference(u, d, k)?;
            Ok((ShiftLattice::length(d, h), lebesgue_norm(&v, p, None)?))
        })
        .collect();
    let mut out = per.into_iter().collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(out)
}

fn check_lattice(u: &GridFunction, lattice: &ShiftLattice) -> Result<()> {
    if lattice.dim != u.domain.dim {
        return arg("lattice dimension differs from grid");
    }
    Ok(())
}

/// Running maximum of the norms over lengths `≤ t`.
fn running_max(pairs: &[(f64, f64)], t: f64) -> f64 {
    let n = pairs.partition_point(|(l, _)| *l <= t * (1.0 + 1e-12));
    pairs[..n].iter().fold(0.0f64, |m, (_, v)| m.max(*v))
}

/// `Ω_k(u; t)_{L^p} = sup_{|h| ≤ t} ‖Δ^k_h u‖_{L^p}` over the lattice.
pub fn modulus_of_continuity(
    u: &GridFunction,
    k: usize,
    p: f64,
    lattice: &ShiftLattice,
    t_values: &[f64],
) -> Result<ModulusCurve> {
    if k == 0 || !(p > 0.0) {
        return arg("modulus needs k ≥ 1 and p > 0");
    }
    if t_values.iter().any(|t| !(*t > 0.0)) || t_values.windows(2).any(|w| w[1] <= w[0]) {
        return arg("t values must be positive and increasing");
    }
    check_lattice(u, lattice)?;
    let pairs = lengths_and_norms(u, k, p, lattice)?;
    let h = u.domain.spacing;
    Ok(ModulusCurve {
        t_values: t_values.to_vec(),
        omega: t_values.iter().map(|&t| running_max(&pairs, t)).collect(),
        k,
        p,
        unresolved: t_values.iter().map(|&t| t < h * (1.0 - 1e-12)).collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShiftSup {
    pub value: f64,
    pub argmax: Option<Vec<i64>>,
}

/// `sup_h ‖u(·+h) − u‖ / |h|^s` over the lattice with the given inner norm.
pub fn shift_quotient_sup(u: &GridFunction, s: f64, q: f64, inner: InnerNorm, lattice: &ShiftLattice) -> Result<ShiftSup> {
    if !(q > 0.0) {
        return arg("q must be positive");
    }
    check_lattice(u, lattice)?;
    let h = u.domain.spacing;
    let bp = box_power(u, q);
    let half = lattice.half();
    let vals: Vec<f64> = half
        .par_iter()
        .map(|d| shift_norm(u, d, q, inner, bp) / ShiftLattice::length(d, h).powf(s))
        .collect();
    let mut best = ShiftSup { value: 0.0, argmax: None };
    for (d, v) in half.iter().zip(&vals) {
        if *v > best.value {
            best = ShiftSup { value: *v, argmax: Some(d.clone()) };
        }
    }
    Ok(best)
}

/// `sup_h ‖u(·+h) − u‖_{L^q} / |h|^s`.
pub fn besov_sup_norm(u: &GridFunction, s: f64, q: f64, lattice: &ShiftLattice) -> Result<ShiftSup> {
    if !(s > 0.0 && s <= 1.0) {
        return arg(format!("s must lie in (0, 1], got {s}"));
    }
    shift_quotient_sup(u, s, q, InnerNorm::Strong, lattice)
}

/// `sup_h [u(·+h) − u]_{L^q_w} / |h|^s`.
pub fn besov_sup_norm_weak(u: &GridFunction, s: f64, q: f64, lattice: &ShiftLattice) -> Result<ShiftSup> {
    if !(s > 0.0 && s <= 1.0) {
        return arg(format!("s must lie in (0, 1], got {s}"));
    }
    shift_quotient_sup(u, s, q, InnerNorm::Weak, lattice)
}

/// `sup_h ‖u(·+h) − u‖_{L^1} / |h|`.
pub fn bv_variation(u: &GridFunction, lattice: &ShiftLattice) -> Result<ShiftSup> {
    besov_sup_norm(u, 1.0, 1.0, lattice)
}

/// `sup_h [u(·+h) − u]_{L^1_w} / |h|`.
pub fn bv_variation_weak(u: &GridFunction, lattice: &ShiftLattice) -> Result<ShiftSup> {
    besov_sup_norm_weak(u, 1.0, 1.0, lattice)
}

/// Perimeter-type total variation: the mean of `‖Δ_d u‖_{L^1}/|d h|` over
/// the lattice shell `radius ≤ |d| < radius + 1` (cells), divided by
/// `⨍_{S^{N-1}} |z_1|`.
pub fn bv_perimeter_estimate(u: &GridFunction, radius: f64) -> Result<f64> {
    let shell = ShiftLattice::shell(u.domain.dim, radius, radius + 1.0 - 1e-9)?;
    let h = u.domain.spacing;
    let bp = box_power(u, 1.0);
    let half = shell.half();
    let vals: Vec<f64> = half
        .par_iter()
        .map(|d| shift_norm(u, d, 1.0, InnerNorm::Strong, bp) / ShiftLattice::length(d, h))
        .collect();
    Ok(pairwise_sum(&vals) / vals.len() as f64 / sphere_mean_abs_first(u.domain.dim))
}

/// `⨍_{S^{N-1}} |z_1| dH^{N-1}`.
pub fn sphere_mean_abs_first(dim: usize) -> f64 {
    match dim {
        1 => 1.0,
        2 => 2.0 / std::f64::consts::PI,
        _ => panic!("dimension {dim} unsupported"),
    }
}

/// `n` log-spaced points from `a` to `b` inclusive.
pub fn log_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    (0..n)
        .map(|i| {
            if i == 0 {
                a
            } else if i == n - 1 {
                b
            } else {
                (la + (lb - la) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

/// Default integral-form grid: 64 log-spaced points from one spacing to the
/// box diameter.
pub fn default_t_grid(u: &GridFunction) -> Vec<f64> {
    log_grid(u.domain.spacing, u.domain.diameter(), 64)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BesovIntegral {
    pub value: f64,
    pub k: usize,
    pub window: (f64, f64),
    /// Contribution beyond the window with `Ω` held flat (q-th power units).
    pub tail: f64,
}

/// Integral-form Besov seminorm with `k` the least integer above `s`.
pub fn besov_integral_norm(
    u: &GridFunction,
    s: f64,
    p: f64,
    q: f64,
    lattice: &ShiftLattice,
    t_grid: &[f64],
) -> Result<BesovIntegral> {
    besov_integral_norm_order(u, s, p, q, s.floor() as usize + 1, lattice, t_grid)
}

/// Integral-form Besov seminorm with an explicit difference order `k > s`:
/// `(∫ (Ω_k(t)/t^s)^q dt/t)^{1/q}` by log-trapezoid on `t_grid` plus the flat
/// tail, or `sup_t Ω_k(t)/t^s` for `q = ∞`.
pub fn besov_integral_norm_order(
    u: &GridFunction,
    s: f64,
    p: f64,
    q: f64,
    k: usize,
    lattice: &ShiftLattice,
    t_grid: &[f64],
) -> Result<BesovIntegral> {
    if t_grid.is_empty() {
        return arg("empty t grid");
    }
    if !(s > 0.0) || (k as f64) <= s {
        return arg(format!("need 0 < s < k, got s = {s}, k = {k}"));
    }
    if !(q > 0.0) {
        return arg("q must be positive or inf");
    }
    if t_grid.iter().any(|t| !(*t > 0.0)) || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return arg("t grid must be positive and increasing");
    }
    check_lattice(u, lattice)?;
    let pairs = lengths_and_norms(u, k, p, lattice)?;
    let (t0, t1) = (t_grid[0], *t_grid.last().unwrap());
    if q.is_infinite() {
        // Ω is a right-continuous step function, so the sup over the window
        // sits at a grid end or a lattice length.
        let mut best = 0.0f64;
        let lens = pairs.iter().map(|(l, _)| *l).filter(|l| *l >= t0 && *l <= t1);
        for t in t_grid.iter().copied().chain(lens) {
            best = best.max(running_max(&pairs, t) / t.powf(s));
        }
        return Ok(BesovIntegral { value: best, k, window: (t0, t1), tail: 0.0 });
    }
    let g: Vec<f64> = t_grid.iter().map(|&t| (running_max(&pairs, t) / t.powf(s)).powf(q)).collect();
    let terms: Vec<f64> = (1..t_grid.len())
        .map(|i| 0.5 * (g[i] + g[i - 1]) * (t_grid[i] / t_grid[i - 1]).ln())
        .collect();
    let tail = g[g.len() - 1] / (s * q);
    Ok(BesovIntegral { value: (pairwise_sum(&terms) + tail).powf(1.0 / q), k, window: (t0, t1), tail })
}

/// `‖u‖_{L^p} + |u|_{B^s_{p,q}}`.
pub fn besov_quasi_norm(
    u: &GridFunction,
    s: f64,
    p: f64,
    q: f64,
    k: usize,
    lattice: &ShiftLattice,
    t_grid: &[f64],
) -> Result<f64> {
    Ok(lebesgue_norm(u, p, None)? + besov_integral_norm_order(u, s, p, q, k, lattice, t_grid)?.value)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GagliardoResult {
    pub value: f64,
    /// Upper bound on the q-th power contributed by `|x − z| > cutoff`.
    pub tail_bound: f64,
    pub cutoff: f64,
}

/// Offsets of one half-space within `m` cells, split into those whose
/// shifted box still overlaps the box and the weight sum of the rest.
struct CutoffOffsets {
    near: Vec<(Vec<i64>, f64)>,
    far_weight: f64,
}

fn cutoff_offsets(u: &GridFunction, s: f64, q: f64, cutoff: f64) -> CutoffOffsets {
    let h = u.domain.spacing;
    let n = u.domain.dim as f64;
    let m = (cutoff / h).floor() as i64;
    let (rows, cols) = (u.domain.rows() as i64, u.domain.cols() as i64);
    let row_range = if u.domain.dim == 2 { 0..=m } else { 0..=0 };
    let mut near = Vec::new();
    let mut far = Vec::new();
    for a in row_range {
        for b in -m..=m {
            if a == 0 && b <= 0 {
                continue;
            }
            let d = if u.domain.dim == 2 { vec![a, b] } else { vec![b] };
            let len = ShiftLattice::length(&d, h);
            if len > cutoff {
                continue;
            }
            let w = len.powf(-(s * q) - n) * h.powf(n);
            if a >= rows || b.abs() >= cols {
                far.push(w);
            } else {
                near.push((d, w));
            }
        }
    }
    CutoffOffsets { near, far_weight: pairwise_sum(&far) }
}

fn check_gagliardo(u: &GridFunction, s: f64, q: f64, cutoff: f64) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return arg(format!("s must lie in (0, 1), got {s}"));
    }
    if !(q > 0.0) {
        return arg("q must be positive");
    }
    if !(cutoff >= u.domain.spacing) {
        return arg(format!("cutoff {cutoff} is below one spacing"));
    }
    Ok(())
}

/// `(∬_{|x−z| ≤ R} |u(x) − u(z)|^q / |x − z|^{sq+N})^{1/q}` over cell centers.
pub fn gagliardo_seminorm(u: &GridFunction, s: f64, q: f64, cutoff: f64) -> Result<GagliardoResult> {
    check_gagliardo(u, s, q, cutoff)?;
    let vol = u.domain.cell_volume();
    let bp = box_power(u, q);
    let offs = cutoff_offsets(u, s, q, cutoff);
    let near: Vec<f64> = offs.near.par_iter().map(|(d, w)| w * difference_power_sum(u, d, q, bp)).collect();
    let total = 2.0 * vol * (pairwise_sum(&near) + offs.far_weight * 2.0 * bp);
    let lq = (bp * vol).powf(1.0 / q);
    let tail_bound = (2.0 * lq).powf(q) * sphere_area(u.domain.dim) * cutoff.powf(-s * q) / (s * q);
    Ok(GagliardoResult { value: total.powf(1.0 / q), tail_bound, cutoff })
}

/// Weak Gagliardo seminorm on the same offsets as [`gagliardo_seminorm`]:
/// the weak `L^q` norm of `(x, y) ↦ u(x+y) − u(x)` under
/// `dx × |y|^{−sq−N} dy`, with `t` scanned over every breakpoint.
pub fn gagliardo_weak_seminorm(u: &GridFunction, s: f64, q: f64, cutoff: f64) -> Result<f64> {
    gagliardo_weak_samples(u, s, q, cutoff).and_then(|set| {
        if set.is_empty() {
            Ok(0.0)
        } else {
            Ok(weighted_weak_norm(&set, q)?.powf(1.0 / q))
        }
    })
}

/// The weighted samples behind [`gagliardo_weak_seminorm`].
pub fn gagliardo_weak_samples(u: &GridFunction, s: f64, q: f64, cutoff: f64) -> Result<WeightedSampleSet> {
    check_gagliardo(u, s, q, cutoff)?;
    let vol = u.domain.cell_volume();
    let offs = cutoff_offsets(u, s, q, cutoff);
    let parts: Vec<WeightedSampleSet> = offs
        .near
        .par_iter()
        .map(|(d, w)| {
            let mut set = WeightedSampleSet::new();
            for v in difference_values(u, d) {
                if v != 0.0 {
                    set.push(v.abs(), 2.0 * w * vol);
                }
            }
            set
        })
        .collect();
    let mut set = WeightedSampleSet::new();
    for p in parts {
        set.extend(p);
    }
    if offs.far_weight > 0.0 {
        for v in &u.values {
            if *v != 0.0 {
                set.push(v.abs(), 4.0 * offs.far_weight * vol);
            }
        }
    }
    Ok(set)
}

/// Central-difference gradient components, zero outside the box.
pub fn central_gradient(u: &GridFunction) -> Vec<GridFunction> {
    let h = u.domain.spacing;
    let (rows, cols) = (u.domain.rows(), u.domain.cols());
    let axes: Vec<(i64, i64)> = if u.domain.dim == 1 { vec![(0, 1)] } else { vec![(1, 0), (0, 1)] };
    axes.iter()
        .map(|&(dr, dc)| {
            let values = (0..rows * cols)
                .map(|i| {
                    let (r, c) = ((i / cols) as i64, (i % cols) as i64);
                    (u.at(r + dr, c + dc) - u.at(r - dr, c - dc)) / (2.0 * h)
                })
                .collect();
            GridFunction { domain: u.domain.clone(), values }
        })
        .collect()
}

/// `sup_h ‖u(·+h) − u‖^q_{L^q}/|h|^q` against `‖∇u‖^q_{L^q}` from above and
/// `(1/N) Σ_i ‖∂_i u‖^q_{L^q}` from below, each with relative `slack`.
pub fn sobolev_difference_check(u: &GridFunction, q: f64, lattice: &ShiftLattice, slack: f64) -> Result<Report> {
    if !(q > 1.0) {
        return arg("q must exceed 1");
    }
    let sup = shift_quotient_sup(u, 1.0, q, InnerNorm::Strong, lattice)?.value.powf(q);
    let grad = central_gradient(u);
    let vol = u.domain.cell_volume();
    let n = grad.len();
    let mag: Vec<f64> = (0..u.len())
        .map(|i| grad.iter().map(|g| g.values[i] * g.values[i]).sum::<f64>().sqrt().powf(q))
        .collect();
    let upper = pairwise_sum(&mag) * vol;
    let partial: Vec<f64> = grad.iter().map(|g| lebesgue_norm(g, q, None).map(|v| v.powf(q))).collect::<Result<_>>()?;
    let lower = pairwise_sum(&partial) / n as f64;
    let ok_upper = sup <= upper * (1.0 + slack);
    let ok_lower = sup >= lower * (1.0 - slack);
    Ok(Report::inequality("sobolev_difference", json!({"q": q, "slack": slack}), sup, upper, slack)
        .with_detail("lower", json!(lower))
        .with_detail("upper_ok", json!(ok_upper))
        .with_detail("lower_ok", json!(ok_lower))
        .with_pass(ok_upper && ok_lower))
}

/// Both sides of the Marchaud inequality
/// `Ω_n(t) ≤ C t^n [‖f‖_p + (∫_t^∞ (s^{−n} Ω_k(s))^μ ds/s)^{1/μ}]` on
/// `t_values`; the report's ratio is the largest `lhs/rhs` seen.
pub fn marchaud_probe(
    u: &GridFunction,
    p: f64,
    n: usize,
    k: usize,
    mu: f64,
    lattice: &ShiftLattice,
    t_values: &[f64],
) -> Result<Report> {
    if !(mu > 0.0 && mu <= 1.0f64.min(p)) {
        return arg("need 0 < μ ≤ min(1, p)");
    }
    if n == 0 || k <= n {
        return arg("need 1 ≤ n < k");
    }
    if t_values.is_empty() {
        return arg("empty t values");
    }
    let top = t_values.last().copied().unwrap().max(u.domain.diameter());
    let mut grid = log_grid(u.domain.spacing.min(t_values[0]), top, 128);
    grid.extend_from_slice(t_values);
    grid.sort_by(|a, b| a.total_cmp(b));
    grid.dedup();
    let om_n = modulus_of_continuity(u, n, p, lattice, t_values)?;
    let om_k = modulus_of_continuity(u, k, p, lattice, &grid)?;
    let lp = lebesgue_norm(u, p, None)?;
    let nf = n as f64;
    let g: Vec<f64> = grid.iter().zip(&om_k.omega).map(|(s, w)| (s.powf(-nf) * w).powf(mu)).collect();
    let tail = g[g.len() - 1] / (nf * mu);
    let mut lhs_all = Vec::new();
    let mut rhs_all = Vec::new();
    for (i, &t) in t_values.iter().enumerate() {
        let start = grid.partition_point(|x| *x < t);
        let terms: Vec<f64> =
            (start + 1..grid.len()).map(|j| 0.5 * (g[j] + g[j - 1]) * (grid[j] / grid[j - 1]).ln()).collect();
        let integral = (pairwise_sum(&terms) + tail).powf(1.0 / mu);
        lhs_all.push(om_n.omega[i]);
        rhs_all.push(t.powf(nf) * (lp + integral));
    }
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for (l, r) in lhs_all.iter().zip(&rhs_all) {
        let ratio = if *r > 0.0 { l / r } else { 0.0 };
        if ratio > worst.0 || worst.2 == 0.0 {
            worst = (ratio, *l, *r);
        }
    }
    let finite = lhs_all.iter().chain(&rhs_all).all(|v| v.is_finite())
        && lhs_all.iter().zip(&rhs_all).all(|(l, r)| *r > 0.0 || *l == 0.0);
    Ok(Report::record("marchaud", json!({"p": p, "n": n, "k": k, "mu": mu}), worst.1, worst.2)
        .with_detail("t_values", json!(t_values))
        .with_detail("lhs", json!(lhs_all))
        .with_detail("rhs", json!(rhs_all))
        .with_detail("max_ratio", json!(worst.0))
        .with_pass(finite))
}
