//! Directional and kernel-averaged jump-detection energies, ε sweeps with
//! Richardson extrapolation, and symbolic ground truth for synthetic
//! piecewise-constant shapes.
//!
//! Both energies reduce to the masked shift sums
//! `S_B(d) = Σ_x χ_B(x) χ_B(x+d) |u(x+d) − u(x)|^q h^N` over integer cell
//! offsets `d`. Rows are run-length encoded, so piecewise-constant inputs cost
//! a few run merges per row instead of a pass over every cell.

use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{arg, Result};
use crate::grid::{kernel_stencil, CellMask, GridDomain, GridFunction};
use crate::kernel::KernelFamily;
use crate::smoothness::sphere_mean_abs_first;
use crate::sum::pairwise_sum;

#[derive(Clone, Copy, Debug, PartialEq)]
struct Run {
    start: i64,
    end: i64,
    value: f64,
    inside: bool,
}

/// Run-length rows of `(u, χ_B)`.
pub struct MaskedRows {
    rows: Vec<Vec<Run>>,
    cols: i64,
    cell_volume: f64,
    q: f64,
}

impl MaskedRows {
    pub fn new(u: &GridFunction, region: &CellMask, q: f64) -> Result<Self> {
        region.check(&u.domain)?;
        let (nr, nc) = (u.domain.rows(), u.domain.cols());
        let rows = (0..nr)
            .map(|r| {
                let mut runs: Vec<Run> = Vec::new();
                for c in 0..nc {
                    let (v, b) = (u.values[r * nc + c], region.bits[r * nc + c]);
                    match runs.last_mut() {
                        Some(last) if last.value == v && last.inside == b => last.end += 1,
                        _ => runs.push(Run { start: c as i64, end: c as i64 + 1, value: v, inside: b }),
                    }
                }
                runs
            })
            .collect();
        Ok(MaskedRows { rows, cols: nc as i64, cell_volume: u.domain.cell_volume(), q })
    }

    /// `Σ_c χ_B(r,c) χ_B(r+dr, c+dc) |u(r+dr,c+dc) − u(r,c)|^q` for one row.
    fn row_pair(&self, a: &[Run], b: &[Run], dc: i64) -> f64 {
        let (mut i, mut j) = (0, 0);
        let mut total = 0.0;
        while i < a.len() && j < b.len() {
            let (bs, be) = (b[j].start - dc, b[j].end - dc);
            let lo = a[i].start.max(bs).max(0);
            let hi = a[i].end.min(be).min(self.cols);
            if hi > lo && a[i].inside && b[j].inside && a[i].value != b[j].value {
                total += (hi - lo) as f64 * (b[j].value - a[i].value).abs().powf(self.q);
            }
            if a[i].end <= be {
                i += 1;
            } else {
                j += 1;
            }
        }
        total
    }

    /// `S_B(d)` for the cell offset `(dr, dc)`.
    pub fn shift_sum(&self, dr: i64, dc: i64) -> f64 {
        let nr = self.rows.len() as i64;
        if dr.abs() >= nr || dc.abs() >= self.cols {
            return 0.0;
        }
        let per_row: Vec<f64> = (0.max(-dr)..nr.min(nr - dr))
            .map(|r| self.row_pair(&self.rows[r as usize], &self.rows[(r + dr) as usize], dc))
            .collect();
        pairwise_sum(&per_row) * self.cell_volume
    }
}

fn check_common(u: &GridFunction, q: f64, eps: f64) -> Result<()> {
    if !(q > 1.0) {
        return arg(format!("jump energies need q > 1, got {q}"));
    }
    if !(eps > 0.0) {
        return arg("eps must be positive");
    }
    if eps > u.domain.diameter() {
        return arg(format!("eps {eps} exceeds the box diameter {}", u.domain.diameter()));
    }
    Ok(())
}

/// `(dr, dc)` cell coordinates of a physical vector.
fn cell_vector(domain: &GridDomain, v: &[f64]) -> (f64, f64) {
    let h = domain.spacing;
    if domain.dim == 1 {
        (0.0, v[0] / h)
    } else {
        (v[0] / h, v[1] / h)
    }
}

fn directional_from_rows(rows: &MaskedRows, domain: &GridDomain, n: &[f64], eps: f64) -> f64 {
    let scaled: Vec<f64> = n.iter().map(|x| x * eps).collect();
    let (yr, yc) = cell_vector(domain, &scaled);
    let (mr, mc) = (yr.floor(), yc.floor());
    let (fr, fc) = (yr - mr, yc - mc);
    let mut terms = Vec::with_capacity(4);
    for (a, wa) in [(0i64, 1.0 - fr), (1, fr)] {
        for (b, wb) in [(0i64, 1.0 - fc), (1, fc)] {
            let w = wa * wb;
            if w > 0.0 {
                terms.push(w * rows.shift_sum(mr as i64 + a, mc as i64 + b));
            }
        }
    }
    pairwise_sum(&terms) / eps
}

/// `∫_B χ_B(x+εn) |u(x+εn) − u(x)|^q / ε dx` for the piecewise-constant `u`.
///
/// The shift is split as `εn/h = m + f` per axis; the set of points of a cell
/// that land in each of the `2^N` neighbouring target cells has volume given by
/// the bilinear weights of `f`, so the sum below is the exact integral.
pub fn directional_energy(u: &GridFunction, region: &CellMask, n: &[f64], q: f64, eps: f64) -> Result<f64> {
    check_common(u, q, eps)?;
    check_direction(u, n)?;
    let rows = MaskedRows::new(u, region, q)?;
    Ok(directional_from_rows(&rows, &u.domain, n, eps))
}

fn check_direction(u: &GridFunction, n: &[f64]) -> Result<()> {
    if n.len() != u.domain.dim {
        return arg("direction dimension differs from grid");
    }
    let len = n.iter().map(|x| x * x).sum::<f64>().sqrt();
    if (len - 1.0).abs() > 1e-9 {
        return arg(format!("direction must be a unit vector, |n| = {len}"));
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct KernelEnergy {
    pub value: f64,
    /// The kernel's effective radius is below one spacing.
    pub under_resolved: bool,
}

fn kernel_from_rows(rows: &MaskedRows, domain: &GridDomain, kernel: &KernelFamily, eps: f64) -> KernelEnergy {
    let h = domain.spacing;
    let under_resolved = kernel.effective_radius(eps) < h;
    let stencil = kernel_stencil(kernel, eps, h, domain.dim, false);
    if stencil.is_empty() {
        return KernelEnergy { value: 0.0, under_resolved: true };
    }
    let mass = pairwise_sum(&stencil.iter().map(|s| s.2).collect::<Vec<_>>());
    let half: Vec<(i64, i64, f64)> =
        stencil.into_iter().filter(|&(dr, dc, _)| dr > 0 || (dr == 0 && dc > 0)).collect();
    let terms: Vec<f64> = half
        .par_iter()
        .map(|&(dr, dc, w)| {
            let len = h * ((dr * dr + dc * dc) as f64).sqrt();
            2.0 * (w / mass) * rows.shift_sum(dr, dc) / len
        })
        .collect();
    KernelEnergy { value: pairwise_sum(&terms), under_resolved }
}

/// `∬_{B×B} ρ_ε(|x−y|) |u(x) − u(y)|^q / |x−y| dy dx` over cell pairs. The
/// sampled profile is renormalized to unit mass over the nonzero offsets.
pub fn kernel_energy(u: &GridFunction, region: &CellMask, kernel: &KernelFamily, q: f64, eps: f64) -> Result<KernelEnergy> {
    check_common(u, q, eps)?;
    if kernel.dim != u.domain.dim {
        return arg("kernel dimension differs from grid");
    }
    let rows = MaskedRows::new(u, region, q)?;
    Ok(kernel_from_rows(&rows, &u.domain, kernel, eps))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum EnergyMode {
    Directional { n: Vec<f64> },
    Kernel { kernel: KernelFamily },
}

impl EnergyMode {
    pub fn label(&self) -> String {
        match self {
            EnergyMode::Directional { n } => {
                format!("directional({})", n.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(","))
            }
            EnergyMode::Kernel { kernel } => format!("kernel({:?})", kernel.kind).to_lowercase(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnergyCurve {
    pub eps_values: Vec<f64>,
    pub energies: Vec<f64>,
    pub mode: String,
    pub q: f64,
    pub extrapolated_limit: f64,
    pub uncertainty: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub under_resolved: Vec<bool>,
}

/// First-order Richardson estimate from the last two points, with their
/// difference as the uncertainty.
pub fn richardson(eps: &[f64], energies: &[f64]) -> (f64, f64) {
    let n = eps.len();
    let (e1, e2) = (energies[n - 2], energies[n - 1]);
    let (a, b) = (eps[n - 2], eps[n - 1]);
    (e2 + (e2 - e1) * b / (a - b), (e2 - e1).abs())
}

/// Energies along a strictly decreasing ε schedule and their extrapolated
/// ε → 0 limit.
pub fn energy_sweep(u: &GridFunction, region: &CellMask, mode: &EnergyMode, q: f64, eps: &[f64]) -> Result<EnergyCurve> {
    if eps.len() < 3 {
        return arg("eps schedule needs at least 3 points");
    }
    if eps.windows(2).any(|w| w[1] >= w[0]) {
        return arg("eps schedule must be strictly decreasing");
    }
    let h = u.domain.spacing;
    if let Some(e) = eps.iter().find(|&&e| e < 2.0 * h * (1.0 - 1e-12)) {
        return arg(format!("eps {e} is below two spacings ({})", 2.0 * h));
    }
    for &e in eps {
        check_common(u, q, e)?;
    }
    let rows = MaskedRows::new(u, region, q)?;
    let (energies, under_resolved): (Vec<f64>, Vec<bool>) = match mode {
        EnergyMode::Directional { n } => {
            check_direction(u, n)?;
            (eps.par_iter().map(|&e| directional_from_rows(&rows, &u.domain, n, e)).collect(), Vec::new())
        }
        EnergyMode::Kernel { kernel } => {
            if kernel.dim != u.domain.dim {
                return arg("kernel dimension differs from grid");
            }
            let r: Vec<KernelEnergy> = eps.iter().map(|&e| kernel_from_rows(&rows, &u.domain, kernel, e)).collect();
            (r.iter().map(|k| k.value).collect(), r.iter().map(|k| k.under_resolved).collect())
        }
    };
    let (extrapolated_limit, uncertainty) = richardson(eps, &energies);
    Ok(EnergyCurve {
        eps_values: eps.to_vec(),
        energies,
        mode: mode.label(),
        q,
        extrapolated_limit,
        uncertainty,
        under_resolved,
    })
}

/// Synthetic piecewise-constant functions with known jump sets.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "shape")]
pub enum Shape {
    /// `a·χ_{x > x0}`.
    Step1d { a: f64, x0: f64 },
    /// Jumps of size `a_i` at increasing `x_i`, zero on the far left.
    Staircase1d { xs: Vec<f64>, jumps: Vec<f64> },
    /// `a·χ` of the open disk of radius `r` about `center`.
    Disk2d { a: f64, r: f64, center: [f64; 2] },
    /// `a·χ` of the open axis-aligned square of side `side` about `center`.
    Square2d { a: f64, side: f64, center: [f64; 2] },
}

fn parse_list(v: &str) -> Result<Vec<f64>> {
    v.split('/').map(|x| x.trim().parse::<f64>().map_err(|_| crate::Error::Argument(format!("bad number '{x}'")))).collect()
}

/// `name:key=value,key=value` into its name and key/value pairs.
pub(crate) fn split_descriptor(s: &str) -> (String, Vec<(String, String)>) {
    let (name, rest) = s.split_once(':').unwrap_or((s, ""));
    let pairs = rest
        .split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let (k, v) = p.split_once('=').unwrap_or((p, ""));
            (k.trim().to_string(), v.trim().to_string())
        })
        .collect();
    (name.trim().to_string(), pairs)
}

pub(crate) fn lookup(pairs: &[(String, String)], key: &str, default: Option<f64>) -> Result<f64> {
    match pairs.iter().find(|(k, _)| k == key) {
        Some((_, v)) => v.parse::<f64>().map_err(|_| crate::Error::Argument(format!("bad value for {key}: '{v}'"))),
        None => default.ok_or_else(|| crate::Error::Argument(format!("missing parameter '{key}'"))),
    }
}

impl Shape {
    /// Parses descriptors such as `step1d:a=1.5`, `staircase1d:x=-0.3/0.3,a=1/-2`,
    /// `disk2d:a=1,r=0.3` or `square2d:a=1,side=0.5`.
    pub fn parse(s: &str) -> Result<Shape> {
        let (name, pairs) = split_descriptor(s);
        let center = |p: &[(String, String)]| -> Result<[f64; 2]> {
            Ok([lookup(p, "cx", Some(0.0))?, lookup(p, "cy", Some(0.0))?])
        };
        let shape = match name.as_str() {
            "step1d" => Shape::Step1d { a: lookup(&pairs, "a", Some(1.0))?, x0: lookup(&pairs, "x0", Some(0.0))? },
            "staircase1d" => {
                let get = |k: &str| pairs.iter().find(|(key, _)| key == k).map(|(_, v)| v.clone());
                let xs = parse_list(&get("x").ok_or_else(|| crate::Error::Argument("staircase needs x".into()))?)?;
                let jumps = parse_list(&get("a").ok_or_else(|| crate::Error::Argument("staircase needs a".into()))?)?;
                if xs.len() != jumps.len() || xs.is_empty() || xs.windows(2).any(|w| w[1] <= w[0]) {
                    return arg("staircase needs matching, increasing x and a lists");
                }
                Shape::Staircase1d { xs, jumps }
            }
            "disk2d" => Shape::Disk2d {
                a: lookup(&pairs, "a", Some(1.0))?,
                r: lookup(&pairs, "r", Some(0.3))?,
                center: center(&pairs)?,
            },
            "square2d" => Shape::Square2d {
                a: lookup(&pairs, "a", Some(1.0))?,
                side: lookup(&pairs, "side", Some(0.5))?,
                center: center(&pairs)?,
            },
            _ => return arg(format!("unsupported shape '{name}'")),
        };
        if let Shape::Disk2d { r, .. } = shape {
            if !(r > 0.0) {
                return arg("disk radius must be positive");
            }
        }
        if let Shape::Square2d { side, .. } = shape {
            if !(side > 0.0) {
                return arg("square side must be positive");
            }
        }
        Ok(shape)
    }

    pub fn dim(&self) -> usize {
        match self {
            Shape::Step1d { .. } | Shape::Staircase1d { .. } => 1,
            _ => 2,
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Shape::Step1d { a, x0 } => {
                if x[0] > *x0 {
                    *a
                } else {
                    0.0
                }
            }
            Shape::Staircase1d { xs, jumps } => xs.iter().zip(jumps).filter(|(p, _)| x[0] > **p).map(|(_, a)| a).sum(),
            Shape::Disk2d { a, r, center } => {
                let (dx, dy) = (x[0] - center[0], x[1] - center[1]);
                if dx * dx + dy * dy < r * r {
                    *a
                } else {
                    0.0
                }
            }
            Shape::Square2d { a, side, center } => {
                if (x[0] - center[0]).abs() < side / 2.0 && (x[1] - center[1]).abs() < side / 2.0 {
                    *a
                } else {
                    0.0
                }
            }
        }
    }

    /// Cell-center samples.
    pub fn to_grid(&self, domain: &GridDomain) -> Result<GridFunction> {
        if domain.dim != self.dim() {
            return arg("shape dimension differs from grid");
        }
        GridFunction::from_fn(domain.clone(), |x| self.value(x))
    }

    /// Jump points (1D) as `(position, size)`.
    fn points(&self) -> Vec<(f64, f64)> {
        match self {
            Shape::Step1d { a, x0 } => vec![(*x0, *a)],
            Shape::Staircase1d { xs, jumps } => xs.iter().copied().zip(jumps.iter().copied()).collect(),
            _ => Vec::new(),
        }
    }

    fn amplitude(&self) -> f64 {
        match self {
            Shape::Disk2d { a, .. } | Shape::Square2d { a, .. } => *a,
            _ => 0.0,
        }
    }
}

/// Axis-aligned closed box `B = Π [lo_i, hi_i]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Region {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Region {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Region> {
        if lo.len() != hi.len() || lo.is_empty() || lo.len() > 2 || lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return arg("region needs lo < hi on every axis");
        }
        Ok(Region { lo, hi })
    }

    pub fn whole(domain: &GridDomain) -> Region {
        let h = domain.spacing;
        Region {
            lo: domain.origin.clone(),
            hi: domain.origin.iter().zip(&domain.cells).map(|(o, n)| o + *n as f64 * h).collect(),
        }
    }

    /// `"lo:hi"` per axis, axes separated by commas.
    pub fn parse(s: &str) -> Result<Region> {
        let mut lo = Vec::new();
        let mut hi = Vec::new();
        for part in s.split(',') {
            let (a, b) = part.split_once(':').ok_or_else(|| crate::Error::Argument(format!("bad region axis '{part}'")))?;
            lo.push(a.trim().parse::<f64>().map_err(|_| crate::Error::Argument(format!("bad number '{a}'")))?);
            hi.push(b.trim().parse::<f64>().map_err(|_| crate::Error::Argument(format!("bad number '{b}'")))?);
        }
        Region::new(lo, hi)
    }

    /// Cells whose centers lie in the box.
    pub fn to_mask(&self, domain: &GridDomain) -> Result<CellMask> {
        if domain.dim != self.lo.len() {
            return arg("region dimension differs from grid");
        }
        Ok(CellMask::from_centers(domain, |x| x.iter().enumerate().all(|(i, v)| *v >= self.lo[i] && *v <= self.hi[i])))
    }

    fn contains_closed(&self, x: &[f64]) -> bool {
        x.iter().enumerate().all(|(i, v)| *v >= self.lo[i] - 1e-12 && *v <= self.hi[i] + 1e-12)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct JumpGroundTruth {
    /// `∫_{J∩B} |u⁺ − u⁻|^q |ν·n| dH^{N−1}` for the requested direction.
    pub jump_integral: Option<f64>,
    pub direction: Option<Vec<f64>>,
    /// `∫_{J∩B} |u⁺ − u⁻|^q dH^{N−1}`.
    pub isotropic_integral: f64,
    pub sphere_mean_abs_first: f64,
    /// Expected kernel-energy limit: sphere mean times the isotropic integral.
    pub kernel_limit: f64,
}

fn directional_integral(shape: &Shape, q: f64, n: &[f64], region: &Region) -> f64 {
    match shape {
        Shape::Step1d { .. } | Shape::Staircase1d { .. } => shape
            .points()
            .iter()
            .filter(|(x, _)| *x > region.lo[0] && *x < region.hi[0])
            .map(|(_, a)| a.abs().powf(q) * n[0].abs())
            .sum(),
        Shape::Disk2d { r, .. } => shape.amplitude().abs().powf(q) * 4.0 * r * (n[0] * n[0] + n[1] * n[1]).sqrt(),
        Shape::Square2d { side, .. } => shape.amplitude().abs().powf(q) * side * 2.0 * (n[0].abs() + n[1].abs()),
    }
}

fn isotropic_integral(shape: &Shape, q: f64, region: &Region) -> f64 {
    match shape {
        Shape::Step1d { .. } | Shape::Staircase1d { .. } => directional_integral(shape, q, &[1.0], region),
        Shape::Disk2d { r, .. } => shape.amplitude().abs().powf(q) * 2.0 * PI * r,
        Shape::Square2d { side, .. } => shape.amplitude().abs().powf(q) * 4.0 * side,
    }
}

/// Closed-form jump integrals over `J_u ∩ B`; 2D shapes must lie inside `B`.
pub fn ground_truth(shape: &Shape, q: f64, direction: Option<&[f64]>, region: &Region) -> Result<JumpGroundTruth> {
    if region.lo.len() != shape.dim() {
        return arg("region dimension differs from shape");
    }
    match shape {
        Shape::Disk2d { r, center, .. } => {
            let corners = [[center[0] - r, center[1] - r], [center[0] + r, center[1] + r]];
            if !corners.iter().all(|c| region.contains_closed(c)) {
                return arg("disk must lie inside the region");
            }
        }
        Shape::Square2d { side, center, .. } => {
            let s = side / 2.0;
            let corners = [[center[0] - s, center[1] - s], [center[0] + s, center[1] + s]];
            if !corners.iter().all(|c| region.contains_closed(c)) {
                return arg("square must lie inside the region");
            }
        }
        _ => {}
    }
    if let Some(n) = direction {
        if n.len() != shape.dim() {
            return arg("direction dimension differs from shape");
        }
    }
    let dim = shape.dim();
    let iso = isotropic_integral(shape, q, region);
    let sm = sphere_mean_abs_first(dim);
    Ok(JumpGroundTruth {
        jump_integral: direction.map(|n| directional_integral(shape, q, n, region)),
        direction: direction.map(|n| n.to_vec()),
        isotropic_integral: iso,
        sphere_mean_abs_first: sm,
        kernel_limit: sm * iso,
    })
}

/// Axis-aligned segment: fixed coordinate `at` on axis `axis`, spanning
/// `[from, to]` along the other axis.
#[derive(Clone, Copy, Debug)]
struct Segment {
    axis: usize,
    at: f64,
    from: f64,
    to: f64,
}

fn overlaps(a: &Segment, b: &Segment) -> bool {
    a.axis == b.axis && (a.at - b.at).abs() <= 1e-12 && a.from.max(b.from) < a.to.min(b.to) - 1e-12
}

fn edges(lo: &[f64], hi: &[f64]) -> Vec<Segment> {
    vec![
        Segment { axis: 0, at: lo[0], from: lo[1], to: hi[1] },
        Segment { axis: 0, at: hi[0], from: lo[1], to: hi[1] },
        Segment { axis: 1, at: lo[1], from: lo[0], to: hi[0] },
        Segment { axis: 1, at: hi[1], from: lo[0], to: hi[0] },
    ]
}

/// Whether the jump set of `shape` sampled on `domain` (zero outside the box)
/// meets `∂B` in an `H^{N−1}`-null set. Decided from the descriptors alone.
pub fn boundary_condition_check(region: &Region, shape: &Shape, domain: &GridDomain) -> bool {
    let whole = Region::whole(domain);
    match shape {
        Shape::Step1d { .. } | Shape::Staircase1d { .. } => {
            let mut pts: Vec<f64> = shape.points().iter().map(|p| p.0).collect();
            if shape.value(&[whole.lo[0]]) != 0.0 || shape.value(&[whole.lo[0] - 1e-300]) != 0.0 {
                pts.push(whole.lo[0]);
            }
            if shape.value(&[whole.hi[0]]) != 0.0 {
                pts.push(whole.hi[0]);
            }
            !pts.iter().any(|p| (p - region.lo[0]).abs() <= 1e-12 || (p - region.hi[0]).abs() <= 1e-12)
        }
        Shape::Disk2d { .. } | Shape::Square2d { .. } => {
            let mut jumps = Vec::new();
            if let Shape::Square2d { side, center, .. } = shape {
                let s = side / 2.0;
                jumps.extend(edges(&[center[0] - s, center[1] - s], &[center[0] + s, center[1] + s]));
            }
            // box edges carry a jump wherever the shape is nonzero there
            for e in edges(&whole.lo, &whole.hi) {
                let other = 1 - e.axis;
                let probe = 64;
                let mut inside = false;
                for i in 0..=probe {
                    let t = e.from + (e.to - e.from) * i as f64 / probe as f64;
                    let mut x = [0.0; 2];
                    x[e.axis] = e.at;
                    x[other] = t;
                    // step a hair inward so the open shape is sampled
                    x[e.axis] += if e.at == whole.lo[e.axis] { 1e-9 } else { -1e-9 };
                    if shape.value(&x) != 0.0 {
                        inside = true;
                        break;
                    }
                }
                if inside {
                    jumps.push(e);
                }
            }
            let b = edges(&region.lo, &region.hi);
            !jumps.iter().any(|j| b.iter().any(|e| overlaps(j, e)))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelKind;
    use crate::schedule::geometric;

    fn step_setup(n: usize, a: f64) -> (GridFunction, CellMask, Region) {
        let d = GridDomain::centered(1, n, 1.0).unwrap();
        let shape = Shape::Step1d { a, x0: 0.0 };
        let region = Region::new(vec![-0.75], vec![0.75]).unwrap();
        let u = shape.to_grid(&d).unwrap();
        let mask = region.to_mask(&d).unwrap();
        (u, mask, region)
    }

    /// Direct cell loop for `S_B(d)`.
    fn brute_shift_sum(u: &GridFunction, mask: &CellMask, dr: i64, dc: i64, q: f64) -> f64 {
        let (nr, nc) = (u.domain.rows() as i64, u.domain.cols() as i64);
        let mut s = 0.0;
        for r in 0..nr {
            for c in 0..nc {
                let (r2, c2) = (r + dr, c + dc);
                if r2 < 0 || r2 >= nr || c2 < 0 || c2 >= nc {
                    continue;
                }
                if mask.bits[(r * nc + c) as usize] && mask.bits[(r2 * nc + c2) as usize] {
                    s += (u.at(r2, c2) - u.at(r, c)).abs().powf(q);
                }
            }
        }
        s * u.domain.cell_volume()
    }

    #[test]
    fn run_length_sums_match_cell_loop() {
        let d = GridDomain::centered(2, 24, 1.0).unwrap();
        let u = Shape::Disk2d { a: 1.3, r: 0.55, center: [0.1, -0.05] }.to_grid(&d).unwrap();
        let mut vals = u.values.clone();
        for (i, v) in vals.iter_mut().enumerate() {
            if i % 7 == 0 {
                *v += 0.25;
            }
        }
        let u = GridFunction::new(d.clone(), vals).unwrap();
        let mask = Region::new(vec![-0.8, -0.9], vec![0.7, 0.85]).unwrap().to_mask(&d).unwrap();
        let rows = MaskedRows::new(&u, &mask, 1.7).unwrap();
        for (dr, dc) in [(0, 1), (1, 0), (3, -2), (-5, 7), (0, -23), (23, 23), (24, 0)] {
            let a = rows.shift_sum(dr, dc);
            let b = brute_shift_sum(&u, &mask, dr, dc, 1.7);
            assert!((a - b).abs() <= 1e-12 * b.max(1e-300), "{dr},{dc}: {a} {b}");
        }
    }

    #[test]
    fn step_directional_energy_is_exact() {
        let a = 1.5;
        let (u, mask, _) = step_setup(4096, a);
        for eps in [0.2, 0.0371, 0.01] {
            for n in [1.0, -1.0] {
                let e = directional_energy(&u, &mask, &[n], 2.0, eps).unwrap();
                assert!((e - a * a).abs() < 1e-12, "{eps} {n}: {e}");
            }
        }
    }

    #[test]
    fn constant_and_homogeneity() {
        let d = GridDomain::centered(2, 32, 1.0).unwrap();
        let u = GridFunction::from_fn(d.clone(), |_| 2.0).unwrap();
        let mask = CellMask::all(&d);
        assert_eq!(directional_energy(&u, &mask, &[0.6, 0.8], 2.0, 0.2).unwrap(), 0.0);
        let k = KernelFamily::new(KernelKind::Box, 2);
        assert_eq!(kernel_energy(&u, &mask, &k, 2.0, 0.2).unwrap().value, 0.0);
        let v = Shape::Disk2d { a: 1.0, r: 0.4, center: [0.0, 0.0] }.to_grid(&d).unwrap();
        let c = -3.0f64;
        let q = 1.5;
        let e1 = kernel_energy(&v, &mask, &k, q, 0.3).unwrap().value;
        let e2 = kernel_energy(&v.scaled(c), &mask, &k, q, 0.3).unwrap().value;
        assert!((e2 - c.abs().powf(q) * e1).abs() < 1e-12 * e2);
        let e1 = directional_energy(&v, &mask, &[0.6, 0.8], q, 0.3).unwrap();
        let e2 = directional_energy(&v.scaled(c), &mask, &[0.6, 0.8], q, 0.3).unwrap();
        assert!((e2 - c.abs().powf(q) * e1).abs() < 1e-12 * e2);
    }

    #[test]
    fn argument_errors() {
        let (u, mask, _) = step_setup(64, 1.0);
        assert!(directional_energy(&u, &mask, &[1.0], 1.0, 0.1).is_err());
        assert!(directional_energy(&u, &mask, &[0.5], 2.0, 0.1).is_err());
        assert!(directional_energy(&u, &mask, &[1.0], 2.0, 5.0).is_err());
        let m = EnergyMode::Directional { n: vec![1.0] };
        assert!(energy_sweep(&u, &mask, &m, 2.0, &[0.2, 0.1]).is_err());
        assert!(energy_sweep(&u, &mask, &m, 2.0, &[0.2, 0.3, 0.1]).is_err());
        assert!(energy_sweep(&u, &mask, &m, 2.0, &[0.2, 0.1, 0.01]).is_err());
    }

    #[test]
    fn staircase_limit() {
        let d = GridDomain::centered(1, 4096, 1.0).unwrap();
        let shape = Shape::parse("staircase1d:x=-0.3/0.3,a=1/-2").unwrap();
        let region = Region::new(vec![-0.75], vec![0.75]).unwrap();
        let u = shape.to_grid(&d).unwrap();
        let mask = region.to_mask(&d).unwrap();
        let eps = geometric(0.2, 0.01, None).unwrap();
        let c = energy_sweep(&u, &mask, &EnergyMode::Directional { n: vec![1.0] }, 2.0, &eps).unwrap();
        let gt = ground_truth(&shape, 2.0, Some(&[1.0]), &region).unwrap();
        assert_eq!(gt.jump_integral, Some(5.0));
        assert!((c.extrapolated_limit - 5.0).abs() < 1e-9);
        assert!(boundary_condition_check(&region, &shape, &d));
    }

    #[test]
    fn square_directional_is_exact_for_axis_direction() {
        let d = GridDomain::centered(2, 128, 0.5).unwrap();
        let shape = Shape::Square2d { a: 2.0, side: 0.5, center: [0.0, 0.0] };
        let u = shape.to_grid(&d).unwrap();
        let mask = CellMask::all(&d);
        let region = Region::whole(&d);
        let gt = ground_truth(&shape, 2.0, Some(&[1.0, 0.0]), &region).unwrap().jump_integral.unwrap();
        assert_eq!(gt, 4.0 * 2.0 * 0.5);
        for eps in [0.1, 0.0333, 0.02] {
            let e = directional_energy(&u, &mask, &[1.0, 0.0], 2.0, eps).unwrap();
            assert!((e - gt).abs() < 1e-12, "{eps}: {e}");
        }
    }

    #[test]
    fn disk_kernel_and_fan_agree() {
        let d = GridDomain::centered(2, 256, 0.5).unwrap();
        let shape = Shape::Disk2d { a: 1.0, r: 0.3, center: [0.0, 0.0] };
        let u = shape.to_grid(&d).unwrap();
        let mask = CellMask::all(&d);
        let region = Region::whole(&d);
        let eps = geometric(0.12, 0.03, None).unwrap();
        let k = KernelFamily::new(KernelKind::Box, 2);
        let kc = energy_sweep(&u, &mask, &EnergyMode::Kernel { kernel: k }, 2.0, &eps).unwrap();
        let gt = ground_truth(&shape, 2.0, None, &region).unwrap();
        assert!((kc.extrapolated_limit - gt.kernel_limit).abs() < 0.05 * gt.kernel_limit, "{kc:?}");
        let fan: Vec<f64> = (0..8)
            .map(|i| {
                let th = PI * i as f64 / 8.0;
                let c = energy_sweep(&u, &mask, &EnergyMode::Directional { n: vec![th.cos(), th.sin()] }, 2.0, &eps)
                    .unwrap();
                c.extrapolated_limit
            })
            .collect();
        let mean = fan.iter().sum::<f64>() / fan.len() as f64;
        assert!((mean - kc.extrapolated_limit).abs() < 0.05 * mean, "{mean} vs {}", kc.extrapolated_limit);
    }

    #[test]
    fn gaussian_kernel_matches_too() {
        let d = GridDomain::centered(2, 256, 0.5).unwrap();
        let shape = Shape::Disk2d { a: 1.0, r: 0.3, center: [0.0, 0.0] };
        let u = shape.to_grid(&d).unwrap();
        let mask = CellMask::all(&d);
        let k = KernelFamily::new(KernelKind::GaussianRadial, 2);
        let c = energy_sweep(&u, &mask, &EnergyMode::Kernel { kernel: k }, 2.0, &[0.016, 0.012, 0.009]).unwrap();
        assert!((c.extrapolated_limit - 1.2).abs() < 0.06 * 1.2, "{c:?}");
    }

    #[test]
    fn ground_truth_shapes() {
        let r1 = Region::new(vec![-1.0], vec![1.0]).unwrap();
        let g = ground_truth(&Shape::Step1d { a: -2.0, x0: 0.0 }, 3.0, Some(&[-1.0]), &r1).unwrap();
        assert_eq!(g.jump_integral, Some(8.0));
        assert_eq!(g.sphere_mean_abs_first, 1.0);
        let r2 = Region::new(vec![-1.0, -1.0], vec![1.0, 1.0]).unwrap();
        let g = ground_truth(&Shape::Disk2d { a: 1.0, r: 0.3, center: [0.0, 0.0] }, 2.0, Some(&[0.0, -1.0]), &r2).unwrap();
        assert!((g.isotropic_integral - 2.0 * PI * 0.3).abs() < 1e-15);
        assert!((g.kernel_limit - 1.2).abs() < 1e-12);
        assert!((g.jump_integral.unwrap() - 1.2).abs() < 1e-12);
        let sq = Shape::Square2d { a: 1.0, side: 0.5, center: [0.0, 0.0] };
        let g1 = ground_truth(&sq, 2.0, Some(&[0.6, 0.8]), &r2).unwrap().jump_integral.unwrap();
        let g2 = ground_truth(&sq, 2.0, Some(&[-0.6, -0.8]), &r2).unwrap().jump_integral.unwrap();
        assert_eq!(g1, g2);
        assert!(ground_truth(&Shape::Disk2d { a: 1.0, r: 1.5, center: [0.0, 0.0] }, 2.0, None, &r2).is_err());
        assert!(Shape::parse("ellipse:a=1").is_err());
    }

    #[test]
    fn boundary_checks() {
        let d1 = GridDomain::centered(1, 64, 1.0).unwrap();
        let step = Shape::Step1d { a: 1.0, x0: 0.0 };
        // the step is nonzero at the right box edge, so the whole box fails
        assert!(!boundary_condition_check(&Region::whole(&d1), &step, &d1));
        assert!(boundary_condition_check(&Region::new(vec![-0.75], vec![0.75]).unwrap(), &step, &d1));
        assert!(!boundary_condition_check(&Region::new(vec![0.0], vec![0.75]).unwrap(), &step, &d1));
        let d2 = GridDomain::centered(2, 64, 1.0).unwrap();
        let disk = Shape::Disk2d { a: 1.0, r: 0.3, center: [0.0, 0.0] };
        assert!(boundary_condition_check(&Region::whole(&d2), &disk, &d2));
        assert!(boundary_condition_check(&Region::new(vec![-0.3, -0.5], vec![0.5, 0.5]).unwrap(), &disk, &d2));
        let sq = Shape::Square2d { a: 1.0, side: 0.5, center: [0.0, 0.0] };
        assert!(boundary_condition_check(&Region::whole(&d2), &sq, &d2));
        assert!(!boundary_condition_check(&Region::new(vec![-0.25, -0.6], vec![0.6, 0.6]).unwrap(), &sq, &d2));
        let big = Shape::Disk2d { a: 1.0, r: 1.2, center: [0.0, 0.0] };
        assert!(!boundary_condition_check(&Region::whole(&d2), &big, &d2));
    }
}
