//! BMO seminorms, the VMO modulus and John–Nirenberg level-set probes.
//!
//! A cube is an axis-aligned block of `edge` cells per axis. The sweep slides
//! a sorted copy of the cube's values across the grid, so moving one step
//! costs a merge instead of a fresh sort.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{arg, Result};
use crate::grid::{GridFunction, SummedAreaTable};
use crate::sum::pairwise_sum;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OscillationForm {
    /// `⨍_C |u − u_C|`
    MeanOsc,
    /// `⨍_C ⨍_C |u(x) − u(z)|`
    DoubleAvg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepMode {
    Exhaustive,
    Strided,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeSweepConfig {
    pub mode: SweepMode,
    pub sizes: Vec<usize>,
    pub stride: usize,
}

impl CubeSweepConfig {
    /// Every cube of every edge length.
    pub fn exhaustive(u: &GridFunction) -> Self {
        CubeSweepConfig { mode: SweepMode::Exhaustive, sizes: (1..=u.domain.min_cells()).collect(), stride: 1 }
    }

    pub fn with_sizes(sizes: Vec<usize>) -> Self {
        CubeSweepConfig { mode: SweepMode::Exhaustive, sizes, stride: 1 }
    }

    pub fn strided(sizes: Vec<usize>, stride: usize) -> Self {
        CubeSweepConfig { mode: SweepMode::Strided, sizes, stride }
    }

    /// Power-of-two edges up to the grid size, offsets stepped by `stride`.
    pub fn dyadic(u: &GridFunction, stride: usize) -> Self {
        let n = u.domain.min_cells();
        let mut sizes = Vec::new();
        let mut s = 1;
        while s <= n {
            sizes.push(s);
            s *= 2;
        }
        CubeSweepConfig::strided(sizes, stride)
    }

    pub fn validate(&self, u: &GridFunction) -> Result<()> {
        let n = u.domain.min_cells();
        if self.sizes.is_empty() {
            return arg("cube sweep needs at least one size");
        }
        if let Some(s) = self.sizes.iter().find(|&&s| s == 0 || s > n) {
            return arg(format!("cube edge {s} outside 1..={n}"));
        }
        if self.stride == 0 {
            return arg("stride must be at least 1");
        }
        Ok(())
    }

    fn step(&self) -> usize {
        match self.mode {
            SweepMode::Exhaustive => 1,
            SweepMode::Strided => self.stride,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cube {
    pub offset: Vec<usize>,
    pub edge: usize,
}

impl Cube {
    pub fn new(offset: Vec<usize>, edge: usize) -> Self {
        Cube { offset, edge }
    }

    /// The cube covering the whole grid, which must be square.
    pub fn full(u: &GridFunction) -> Result<Cube> {
        let n = u.domain.cells[0];
        if u.domain.cells.iter().any(|&m| m != n) {
            return arg("full-domain cube needs equal cell counts on every axis");
        }
        Ok(Cube { offset: vec![0; u.domain.dim], edge: n })
    }

    fn check(&self, u: &GridFunction) -> Result<()> {
        if self.offset.len() != u.domain.dim {
            return arg("cube offset dimension differs from grid");
        }
        if self.edge == 0 || self.offset.iter().zip(&u.domain.cells).any(|(o, n)| o + self.edge > *n) {
            return arg(format!("cube {:?} + {} leaves the grid", self.offset, self.edge));
        }
        Ok(())
    }

    /// (row range, column range) in the internal row-major layout.
    fn ranges(&self, dim: usize) -> (std::ops::Range<usize>, std::ops::Range<usize>) {
        if dim == 1 {
            (0..1, self.offset[0]..self.offset[0] + self.edge)
        } else {
            (self.offset[0]..self.offset[0] + self.edge, self.offset[1]..self.offset[1] + self.edge)
        }
    }

    pub fn cell_count(&self, dim: usize) -> usize {
        self.edge.pow(dim as u32)
    }

    pub fn values(&self, u: &GridFunction) -> Vec<f64> {
        let cols = u.domain.cols();
        let (rr, cr) = self.ranges(u.domain.dim);
        let mut out = Vec::with_capacity(self.cell_count(u.domain.dim));
        for r in rr {
            out.extend_from_slice(&u.values[r * cols + cr.start..r * cols + cr.end]);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillationResult {
    pub seminorm: f64,
    pub argmax: Option<Cube>,
    pub form: OscillationForm,
    /// Largest oscillation per cube edge, in sweep order.
    pub per_size: Vec<(usize, f64)>,
}

fn cube_sum(sat: &SummedAreaTable, cube: &Cube) -> f64 {
    let (rr, cr) = cube.ranges(sat.domain.dim);
    sat.box_sum(rr.start, cr.start, rr.end, cr.end)
}

/// `u_C` via a summed-area table.
pub fn cube_mean(u: &GridFunction, cube: &Cube) -> Result<f64> {
    cube.check(u)?;
    let sat = SummedAreaTable::new(u);
    Ok(cube_sum(&sat, cube) / cube.cell_count(u.domain.dim) as f64)
}

/// `⨍_C |u − u_C|`.
pub fn mean_oscillation(u: &GridFunction, cube: &Cube) -> Result<f64> {
    let mean = cube_mean(u, cube)?;
    let mut v = cube.values(u);
    v.sort_by(|a, b| a.total_cmp(b));
    Ok(mean_osc_sorted(&v, mean))
}

/// `⨍_C ⨍_C |u(x) − u(z)|`.
pub fn double_average_oscillation(u: &GridFunction, cube: &Cube) -> Result<f64> {
    cube.check(u)?;
    let mut v = cube.values(u);
    v.sort_by(|a, b| a.total_cmp(b));
    Ok(double_avg_sorted(&v))
}

pub(crate) fn mean_osc_sorted(sorted: &[f64], mean: f64) -> f64 {
    if sorted.first() == sorted.last() {
        return 0.0;
    }
    let dev: Vec<f64> = sorted.iter().map(|v| (v - mean).abs()).collect();
    pairwise_sum(&dev) / sorted.len() as f64
}

/// Mean absolute pairwise difference from sorted values:
/// `(2/m²) Σ_i (2i − 1 − m) v_(i)`, with the minimum subtracted first
/// (the weights sum to zero).
pub(crate) fn double_avg_sorted(sorted: &[f64]) -> f64 {
    let m = sorted.len();
    if m < 2 || sorted[0] == sorted[m - 1] {
        return 0.0;
    }
    let lo = sorted[0];
    let terms: Vec<f64> =
        sorted.iter().enumerate().map(|(i, v)| (2.0 * i as f64 + 1.0 - m as f64) * (v - lo)).collect();
    2.0 * pairwise_sum(&terms) / (m as f64 * m as f64)
}

fn evaluate(sorted: &[f64], sum: f64, form: OscillationForm) -> f64 {
    match form {
        OscillationForm::MeanOsc => mean_osc_sorted(sorted, sum / sorted.len() as f64),
        OscillationForm::DoubleAvg => double_avg_sorted(sorted),
    }
}

/// Removes the sorted multiset `out` from `window` and merges in the sorted
/// `inc`.
fn slide(window: &[f64], out: &[f64], inc: &[f64], buf: &mut Vec<f64>) {
    buf.clear();
    let mut j = 0;
    let mut k = 0;
    for &v in window {
        if j < out.len() && out[j] == v {
            j += 1;
            continue;
        }
        while k < inc.len() && inc[k] < v {
            buf.push(inc[k]);
            k += 1;
        }
        buf.push(v);
    }
    buf.extend_from_slice(&inc[k..]);
    debug_assert_eq!(j, out.len());
}

fn column_values(u: &GridFunction, rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> Vec<f64> {
    let w = u.domain.cols();
    let mut v = Vec::with_capacity(rows.len() * cols.len());
    for r in rows {
        v.extend_from_slice(&u.values[r * w + cols.start..r * w + cols.end]);
    }
    v.sort_by(|a, b| a.total_cmp(b));
    v
}

/// Best cube of one edge length; ties go to the first cube in row-major
/// offset order.
fn sweep_size(u: &GridFunction, sat: &SummedAreaTable, s: usize, step: usize, form: OscillationForm) -> (f64, Cube) {
    let dim = u.domain.dim;
    let (rows, cols) = (u.domain.rows(), u.domain.cols());
    let row_starts: Vec<usize> = if dim == 1 { vec![0] } else { (0..=rows - s).step_by(step).collect() };
    let row_len = if dim == 1 { 1 } else { s };
    let mut best = (-1.0f64, Cube::new(vec![0; dim], s));
    let mut buf = Vec::new();
    for r0 in row_starts {
        let rr = r0..r0 + row_len;
        let mut c0 = 0;
        let mut window = column_values(u, rr.clone(), 0..s);
        loop {
            let sum = sat.box_sum(rr.start, c0, rr.end, c0 + s);
            let val = evaluate(&window, sum, form);
            if val > best.0 {
                let offset = if dim == 1 { vec![c0] } else { vec![r0, c0] };
                best = (val, Cube::new(offset, s));
            }
            let next = c0 + step;
            if next + s > cols {
                break;
            }
            if step >= s {
                window = column_values(u, rr.clone(), next..next + s);
            } else {
                let out = column_values(u, rr.clone(), c0..next);
                let inc = column_values(u, rr.clone(), c0 + s..next + s);
                slide(&window, &out, &inc, &mut buf);
                std::mem::swap(&mut window, &mut buf);
            }
            c0 = next;
        }
    }
    (best.0.max(0.0), best.1)
}

/// Sup of the chosen oscillation over the cubes of the sweep.
pub fn bmo_seminorm(u: &GridFunction, cfg: &CubeSweepConfig, form: OscillationForm) -> Result<OscillationResult> {
    cfg.validate(u)?;
    let sat = SummedAreaTable::new(u);
    let step = cfg.step();
    let per: Vec<(f64, Cube)> = cfg.sizes.par_iter().map(|&s| sweep_size(u, &sat, s, step, form)).collect();
    let mut best: Option<(f64, Cube)> = None;
    for (v, c) in &per {
        if best.as_ref().map_or(true, |b| *v > b.0) {
            best = Some((*v, c.clone()));
        }
    }
    let (seminorm, argmax) = best.map(|(v, c)| (v, Some(c))).unwrap_or((0.0, None));
    Ok(OscillationResult {
        seminorm,
        argmax,
        form,
        per_size: cfg.sizes.iter().zip(&per).map(|(s, (v, _))| (*s, *v)).collect(),
    })
}

/// Double-average BMO seminorm over every cube of the grid.
pub fn bmo(u: &GridFunction) -> f64 {
    bmo_seminorm(u, &CubeSweepConfig::exhaustive(u), OscillationForm::DoubleAvg)
        .expect("exhaustive sweep is always valid")
        .seminorm
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VmoCurve {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    /// Radius smaller than the diameter of one cell.
    pub unresolved: Vec<bool>,
}

/// `R ↦ sup{osc(C) : diam C ≤ R}` over the cubes of the sweep.
pub fn vmo_modulus(u: &GridFunction, cfg: &CubeSweepConfig, form: OscillationForm, radii: &[f64]) -> Result<VmoCurve> {
    if radii.windows(2).any(|w| w[1] < w[0]) {
        return arg("radii must be sorted increasing");
    }
    let res = bmo_seminorm(u, cfg, form)?;
    let diam_of = |s: usize| s as f64 * u.domain.spacing * (u.domain.dim as f64).sqrt();
    let mut values = Vec::with_capacity(radii.len());
    let mut unresolved = Vec::with_capacity(radii.len());
    for &r in radii {
        let v = res.per_size.iter().filter(|(s, _)| diam_of(*s) <= r * (1.0 + 1e-12)).fold(0.0f64, |m, (_, v)| m.max(*v));
        values.push(v);
        unresolved.push(r < diam_of(1) * (1.0 - 1e-12));
    }
    Ok(VmoCurve { radii: radii.to_vec(), values, unresolved })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

/// Ordinary least squares `y ≈ slope·x + intercept`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 2 || n != y.len() {
        return None;
    }
    let mx = pairwise_sum(x) / n as f64;
    let my = pairwise_sum(y) / n as f64;
    let sxx = pairwise_sum(&x.iter().map(|a| (a - mx) * (a - mx)).collect::<Vec<_>>());
    let sxy = pairwise_sum(&x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).collect::<Vec<_>>());
    let syy = pairwise_sum(&y.iter().map(|b| (b - my) * (b - my)).collect::<Vec<_>>());
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LinearFit { slope, intercept: my - slope * mx, r2, points: n })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JnProbe {
    pub sigmas: Vec<f64>,
    pub measures: Vec<f64>,
    pub tail_start: f64,
    /// Fit of `ln(measure)` against σ over the tail points with positive
    /// measure; `None` with fewer than three such points.
    pub fit: Option<LinearFit>,
}

/// `σ ↦ |{x ∈ C : |u − u_C| > σ}|`, with an exponential fit on `σ ≥ tail_start`.
pub fn jn_decay_probe(u: &GridFunction, cube: &Cube, sigmas: &[f64], tail_start: f64) -> Result<JnProbe> {
    if sigmas.iter().any(|s| !(*s > 0.0)) || sigmas.windows(2).any(|w| w[1] <= w[0]) {
        return arg("sigma values must be positive and increasing");
    }
    let mean = cube_mean(u, cube)?;
    let mut dev: Vec<f64> = cube.values(u).iter().map(|v| (v - mean).abs()).collect();
    dev.sort_by(|a, b| a.total_cmp(b));
    let vol = u.domain.cell_volume();
    let measures: Vec<f64> =
        sigmas.iter().map(|&s| (dev.len() - dev.partition_point(|&d| d <= s)) as f64 * vol).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = sigmas
        .iter()
        .zip(&measures)
        .filter(|(s, m)| **s >= tail_start && **m > 0.0)
        .map(|(s, m)| (*s, m.ln()))
        .unzip();
    let fit = if xs.len() >= 3 { fit_line(&xs, &ys) } else { None };
    Ok(JnProbe { sigmas: sigmas.to_vec(), measures, tail_start, fit })
}
