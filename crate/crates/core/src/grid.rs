//! Uniform grids and piecewise-constant grid functions.
//!
//! Values are stored row-major. In 2D the first axis indexes rows and the
//! second indexes columns, so cell `(r, c)` has center
//! `(origin[0] + (r + 0.5) h, origin[1] + (c + 0.5) h)`. A 1D grid is treated
//! internally as a single row. Reads outside the box return zero.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{arg, Result};
use crate::kernel::KernelFamily;
use crate::sum::{pairwise_sum, DoubleDouble};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridDomain {
    pub dim: usize,
    pub origin: Vec<f64>,
    pub cells: Vec<usize>,
    pub spacing: f64,
}

impl GridDomain {
    pub fn new(origin: Vec<f64>, cells: Vec<usize>, spacing: f64) -> Result<Self> {
        let dim = cells.len();
        if dim != 1 && dim != 2 {
            return arg(format!("dimension must be 1 or 2, got {dim}"));
        }
        if origin.len() != dim {
            return arg(format!("origin has {} entries, expected {dim}", origin.len()));
        }
        if cells.iter().any(|&n| n == 0) {
            return arg("every axis needs at least one cell");
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return arg(format!("spacing must be positive and finite, got {spacing}"));
        }
        if origin.iter().any(|x| !x.is_finite()) {
            return arg("origin must be finite");
        }
        Ok(GridDomain { dim, origin, cells, spacing })
    }

    /// The box `[-half_width, half_width]^dim` split into `n` cells per axis.
    pub fn centered(dim: usize, n: usize, half_width: f64) -> Result<Self> {
        if n == 0 || !(half_width > 0.0) {
            return arg("centered grid needs n >= 1 and a positive half width");
        }
        GridDomain::new(vec![-half_width; dim], vec![n; dim], 2.0 * half_width / n as f64)
    }

    pub fn len(&self) -> usize {
        self.cells.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn rows(&self) -> usize {
        if self.dim == 2 {
            self.cells[0]
        } else {
            1
        }
    }

    pub fn cols(&self) -> usize {
        if self.dim == 2 {
            self.cells[1]
        } else {
            self.cells[0]
        }
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    pub fn measure(&self) -> f64 {
        self.cell_volume() * self.len() as f64
    }

    /// Length of the box diagonal.
    pub fn diameter(&self) -> f64 {
        let s: f64 = self.cells.iter().map(|&n| (n * n) as f64).sum();
        self.spacing * s.sqrt()
    }

    pub fn min_cells(&self) -> usize {
        *self.cells.iter().min().unwrap()
    }

    /// Center of the cell with flat index `flat`.
    pub fn center(&self, flat: usize) -> Vec<f64> {
        let h = self.spacing;
        if self.dim == 1 {
            vec![self.origin[0] + (flat as f64 + 0.5) * h]
        } else {
            let (r, c) = (flat / self.cols(), flat % self.cols());
            vec![self.origin[0] + (r as f64 + 0.5) * h, self.origin[1] + (c as f64 + 0.5) * h]
        }
    }

    /// Maps an offset vector to (row, column) steps.
    pub fn offset_rc(&self, offset: &[i64]) -> Result<(i64, i64)> {
        if offset.len() != self.dim {
            return arg(format!("offset has {} entries, grid dimension is {}", offset.len(), self.dim));
        }
        Ok(if self.dim == 1 { (0, offset[0]) } else { (offset[0], offset[1]) })
    }

    /// Same grid with `margin` extra cells on each side of every axis.
    pub fn padded(&self, margin: usize) -> GridDomain {
        let h = self.spacing;
        GridDomain {
            dim: self.dim,
            origin: self.origin.iter().map(|o| o - margin as f64 * h).collect(),
            cells: self.cells.iter().map(|n| n + 2 * margin).collect(),
            spacing: h,
        }
    }

    /// Box and spacing scaled by `lambda`; cell counts unchanged.
    pub fn dilated(&self, lambda: f64) -> GridDomain {
        GridDomain {
            dim: self.dim,
            origin: self.origin.iter().map(|o| o * lambda).collect(),
            cells: self.cells.clone(),
            spacing: self.spacing * lambda,
        }
    }
}

/// Samples on a grid, read as a piecewise-constant function that vanishes
/// outside the box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    pub domain: GridDomain,
    pub values: Vec<f64>,
}

impl GridFunction {
    pub fn new(domain: GridDomain, values: Vec<f64>) -> Result<Self> {
        if values.len() != domain.len() {
            return arg(format!("expected {} values, got {}", domain.len(), values.len()));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return arg(format!("value at cell {i} is not finite"));
        }
        Ok(GridFunction { domain, values })
    }

    pub fn zeros(domain: GridDomain) -> Self {
        let n = domain.len();
        GridFunction { domain, values: vec![0.0; n] }
    }

    /// Samples `f` at cell centers.
    pub fn from_fn(domain: GridDomain, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let values = (0..domain.len()).map(|i| f(&domain.center(i))).collect();
        GridFunction::new(domain, values)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Value at (row, column), zero outside the box.
    #[inline]
    pub fn at(&self, r: i64, c: i64) -> f64 {
        let (rows, cols) = (self.domain.rows() as i64, self.domain.cols() as i64);
        if r < 0 || c < 0 || r >= rows || c >= cols {
            0.0
        } else {
            self.values[(r * cols + c) as usize]
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GridFunction {
        GridFunction { domain: self.domain.clone(), values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn scaled(&self, c: f64) -> GridFunction {
        self.map(|v| c * v)
    }

    /// `|u|^r`.
    pub fn abs_pow(&self, r: f64) -> GridFunction {
        self.map(|v| v.abs().powf(r))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn integral(&self) -> f64 {
        pairwise_sum(&self.values) * self.domain.cell_volume()
    }

    /// Average over the whole box.
    pub fn mean(&self) -> f64 {
        pairwise_sum(&self.values) / self.len() as f64
    }

    /// Zero-padded copy with `margin` extra cells around the box.
    pub fn padded(&self, margin: usize) -> GridFunction {
        let domain = self.domain.padded(margin);
        let mut out = GridFunction::zeros(domain);
        let (rows, cols) = (self.domain.rows(), self.domain.cols());
        let (r_off, out_cols) = if self.domain.dim == 2 { (margin, cols + 2 * margin) } else { (0, cols + 2 * margin) };
        for r in 0..rows {
            let dst = (r + r_off) * out_cols + margin;
            out.values[dst..dst + cols].copy_from_slice(&self.values[r * cols..(r + 1) * cols]);
        }
        out
    }

    /// Same values on the dilated grid.
    pub fn dilated(&self, lambda: f64) -> GridFunction {
        GridFunction { domain: self.domain.dilated(lambda), values: self.values.clone() }
    }

    pub fn is_constant(&self) -> bool {
        self.values.windows(2).all(|w| w[0] == w[1])
    }
}

/// Selection of cells of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct CellMask {
    pub bits: Vec<bool>,
}

impl CellMask {
    pub fn all(domain: &GridDomain) -> Self {
        CellMask { bits: vec![true; domain.len()] }
    }

    /// Cells whose center satisfies `pred`.
    pub fn from_centers(domain: &GridDomain, pred: impl Fn(&[f64]) -> bool) -> Self {
        CellMask { bits: (0..domain.len()).map(|i| pred(&domain.center(i))).collect() }
    }

    /// Cells where `u` is nonzero.
    pub fn from_grid(u: &GridFunction) -> Self {
        CellMask { bits: u.values.iter().map(|&v| v != 0.0).collect() }
    }

    pub fn check(&self, domain: &GridDomain) -> Result<()> {
        if self.bits.len() != domain.len() {
            return arg(format!("mask has {} cells, grid has {}", self.bits.len(), domain.len()));
        }
        Ok(())
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

/// Prefix sums of cell values, kept as double-double so box sums do not
/// lose precision to cancellation between large prefixes.
#[derive(Clone, Debug)]
pub struct SummedAreaTable {
    pub domain: GridDomain,
    prefix: Vec<DoubleDouble>,
}

impl SummedAreaTable {
    pub fn new(u: &GridFunction) -> Self {
        let (rows, cols) = (u.domain.rows(), u.domain.cols());
        let w = cols + 1;
        let mut prefix = vec![DoubleDouble::default(); (rows + 1) * w];
        for r in 0..rows {
            let mut run = DoubleDouble::default();
            for c in 0..cols {
                run = run.add(DoubleDouble::from_f64(u.values[r * cols + c]));
                prefix[(r + 1) * w + c + 1] = prefix[r * w + c + 1].add(run);
            }
        }
        SummedAreaTable { domain: u.domain.clone(), prefix }
    }

    /// Sum over rows `r0..r1` and columns `c0..c1` (half-open).
    pub fn box_sum(&self, r0: usize, c0: usize, r1: usize, c1: usize) -> f64 {
        let w = self.domain.cols() + 1;
        let p = |r: usize, c: usize| self.prefix[r * w + c];
        p(r1, c1).sub(p(r0, c1)).sub(p(r1, c0)).add(p(r0, c0)).to_f64()
    }
}

/// `v(x) = u(x + spacing * offset)`, zero where the read leaves the box.
pub fn shift(u: &GridFunction, offset: &[i64]) -> Result<GridFunction> {
    let (dr, dc) = u.domain.offset_rc(offset)?;
    let (rows, cols) = (u.domain.rows(), u.domain.cols());
    let mut values = vec![0.0; u.len()];
    for r in 0..rows {
        for c in 0..cols {
            values[r * cols + c] = u.at(r as i64 + dr, c as i64 + dc);
        }
    }
    Ok(GridFunction { domain: u.domain.clone(), values })
}

/// k-th forward difference with step `spacing * offset`, built by the
/// recursion `Δ^{n+1} = Δ^n(· + h) − Δ^n`.
pub fn k_difference(u: &GridFunction, offset: &[i64], k: usize) -> Result<GridFunction> {
    if k == 0 {
        return arg("difference order must be at least 1");
    }
    let mut d = u.clone();
    for _ in 0..k {
        let s = shift(&d, offset)?;
        for (a, b) in d.values.iter_mut().zip(&s.values) {
            *a = b - *a;
        }
    }
    Ok(d)
}

/// Clamps every value to `[-level, level]`.
pub fn truncate(u: &GridFunction, level: f64) -> Result<GridFunction> {
    if !(level > 0.0) {
        return arg(format!("truncation level must be positive, got {level}"));
    }
    Ok(u.map(|v| v.clamp(-level, level)))
}

#[derive(Clone, Debug)]
pub struct Mollified {
    pub function: GridFunction,
    /// The kernel support is narrower than one cell.
    pub under_resolved: bool,
}

/// Convolution with the cell-sampled kernel, renormalized to unit discrete
/// mass.
pub fn mollify(u: &GridFunction, kernel: &KernelFamily, eps: f64) -> Result<Mollified> {
    if !(eps > 0.0) {
        return arg(format!("eps must be positive, got {eps}"));
    }
    if kernel.dim != u.domain.dim {
        return arg("kernel dimension differs from grid dimension");
    }
    let h = u.domain.spacing;
    let reach = kernel.effective_radius(eps);
    let under_resolved = reach < h;
    let stencil = kernel_stencil(kernel, eps, h, u.domain.dim, true);
    let total = pairwise_sum(&stencil.iter().map(|s| s.2).collect::<Vec<_>>());
    let (rows, cols) = (u.domain.rows(), u.domain.cols());
    let values: Vec<f64> = (0..rows * cols)
        .into_par_iter()
        .map(|i| {
            let (r, c) = ((i / cols) as i64, (i % cols) as i64);
            let mut acc = 0.0;
            for &(dr, dc, w) in &stencil {
                acc += w * u.at(r + dr, c + dc);
            }
            acc / total
        })
        .collect();
    Ok(Mollified { function: GridFunction { domain: u.domain.clone(), values }, under_resolved })
}

/// Integer offsets within the kernel's effective radius with their sampled
/// profile values, in a fixed order. The zero offset is kept only when
/// `include_origin` is set.
pub(crate) fn kernel_stencil(
    kernel: &KernelFamily,
    eps: f64,
    h: f64,
    dim: usize,
    include_origin: bool,
) -> Vec<(i64, i64, f64)> {
    let reach = kernel.effective_radius(eps);
    let m = (reach / h).floor() as i64;
    let mut out = Vec::new();
    let row_range = if dim == 2 { -m..=m } else { 0..=0 };
    for dr in row_range {
        for dc in -m..=m {
            if dr == 0 && dc == 0 && !include_origin {
                continue;
            }
            let r = h * ((dr * dr + dc * dc) as f64).sqrt();
            if r <= reach {
                let w = kernel.profile(r, eps);
                if w > 0.0 {
                    out.push((dr, dc, w));
                }
            }
        }
    }
    if out.is_empty() && include_origin {
        out.push((0, 0, 1.0));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::KernelKind;

    fn line(vals: &[f64]) -> GridFunction {
        let d = GridDomain::new(vec![0.0], vec![vals.len()], 1.0).unwrap();
        GridFunction::new(d, vals.to_vec()).unwrap()
    }

    #[test]
    fn domain_rejects_bad_input() {
        assert!(GridDomain::new(vec![0.0; 3], vec![2; 3], 1.0).is_err());
        assert!(GridDomain::new(vec![0.0], vec![0], 1.0).is_err());
        assert!(GridDomain::new(vec![0.0], vec![4], 0.0).is_err());
        assert!(GridDomain::new(vec![0.0, 0.0], vec![4], 1.0).is_err());
        let d = GridDomain::new(vec![0.0], vec![3], 0.5).unwrap();
        assert!(GridFunction::new(d.clone(), vec![1.0, f64::NAN, 0.0]).is_err());
        assert!(GridFunction::new(d, vec![1.0]).is_err());
    }

    #[test]
    fn shift_reads_ahead_and_zero_fills() {
        let u = line(&[1.0, 0.0]);
        assert_eq!(shift(&u, &[1]).unwrap().values, vec![0.0, 0.0]);
        let u = line(&[1.0, 2.0, 3.0]);
        assert_eq!(shift(&u, &[1]).unwrap().values, vec![2.0, 3.0, 0.0]);
        assert_eq!(shift(&u, &[-2]).unwrap().values, vec![0.0, 0.0, 1.0]);
        assert_eq!(shift(&u, &[0]).unwrap(), u);
        assert!(shift(&u, &[1, 0]).is_err());
    }

    #[test]
    fn shift_matches_direct_reindexing_in_2d() {
        let d = GridDomain::new(vec![0.0, 0.0], vec![3, 4], 1.0).unwrap();
        let u = GridFunction::new(d, (0..12).map(|i| i as f64 + 1.0).collect()).unwrap();
        let v = shift(&u, &[1, -1]).unwrap();
        for r in 0..3i64 {
            for c in 0..4i64 {
                let (sr, sc) = (r + 1, c - 1);
                let want = if (0..3).contains(&sr) && (0..4).contains(&sc) { (sr * 4 + sc + 1) as f64 } else { 0.0 };
                assert_eq!(v.values[(r * 4 + c) as usize], want);
            }
        }
    }

    #[test]
    fn shift_round_trip_on_interior() {
        let u = line(&[3.0, 1.0, 4.0, 1.0, 5.0, 9.0]);
        let back = shift(&shift(&u, &[2]).unwrap(), &[-2]).unwrap();
        assert_eq!(&back.values[2..], &u.values[2..]);
    }

    #[test]
    fn k_difference_matches_binomial_sum() {
        let vals: Vec<f64> = (0..20).map(|i| ((i * 7919) % 13) as f64 - 6.0).collect();
        let u = line(&vals);
        for k in 1..=4usize {
            for off in [-3i64, 1, 2] {
                let d = k_difference(&u, &[off], k).unwrap();
                for x in 0..20i64 {
                    let mut want = 0.0;
                    let mut binom = 1.0;
                    for j in 0..=k {
                        let sign = if (k - j) % 2 == 0 { 1.0 } else { -1.0 };
                        want += sign * binom * u.at(0, x + j as i64 * off);
                        binom = binom * (k - j) as f64 / (j + 1) as f64;
                    }
                    assert!((d.values[x as usize] - want).abs() < 1e-12, "k={k} off={off} x={x}");
                }
            }
        }
    }

    #[test]
    fn second_difference_of_affine_vanishes_inside() {
        let d = GridDomain::new(vec![0.0], vec![50], 0.1).unwrap();
        let u = GridFunction::from_fn(d, |x| 3.0 * x[0] - 1.0).unwrap();
        let dd = k_difference(&u, &[2], 2).unwrap();
        for x in 0..46 {
            assert!(dd.values[x].abs() < 1e-12);
        }
        assert!(k_difference(&u, &[1], 0).is_err());
    }

    #[test]
    fn truncate_clamps() {
        let u = line(&[-3.0, 0.5, 2.0]);
        assert_eq!(truncate(&u, 1.0).unwrap().values, vec![-1.0, 0.5, 1.0]);
        assert_eq!(truncate(&u, 5.0).unwrap(), u);
        assert!(truncate(&u, 0.0).is_err());
    }

    #[test]
    fn summed_area_matches_direct_sums() {
        let d = GridDomain::new(vec![0.0, 0.0], vec![7, 5], 1.0).unwrap();
        let vals: Vec<f64> = (0..35).map(|i| ((i * 37) % 11) as f64 * 1e8 - 3.3e8 + 0.125 * i as f64).collect();
        let u = GridFunction::new(d, vals.clone()).unwrap();
        let sat = SummedAreaTable::new(&u);
        for r0 in 0..7 {
            for r1 in r0 + 1..=7 {
                for c0 in 0..5 {
                    for c1 in c0 + 1..=5 {
                        let mut direct = 0.0;
                        for r in r0..r1 {
                            for c in c0..c1 {
                                direct += vals[r * 5 + c];
                            }
                        }
                        let got = sat.box_sum(r0, c0, r1, c1);
                        assert!((got - direct).abs() <= 1e-12 * direct.abs().max(1.0));
                    }
                }
            }
        }
    }

    #[test]
    fn padding_preserves_values() {
        let d = GridDomain::new(vec![0.0, 0.0], vec![2, 3], 1.0).unwrap();
        let u = GridFunction::new(d, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let p = u.padded(2);
        assert_eq!(p.domain.cells, vec![6, 7]);
        assert_eq!(p.domain.origin, vec![-2.0, -2.0]);
        assert_eq!(p.at(2, 2), 1.0);
        assert_eq!(p.at(3, 4), 6.0);
        assert_eq!(p.values.iter().sum::<f64>(), 21.0);
        let l = line(&[1.0, 2.0]).padded(1);
        assert_eq!(l.values, vec![0.0, 1.0, 2.0, 0.0]);
    }

    #[test]
    fn mollify_constant_interior() {
        let d = GridDomain::centered(2, 40, 1.0).unwrap();
        let u = GridFunction::from_fn(d, |_| 2.5).unwrap();
        let k = KernelFamily::new(KernelKind::Box, 2);
        let m = mollify(&u, &k, 0.2).unwrap();
        assert!(!m.under_resolved);
        let r = (0.2 / u.domain.spacing).ceil() as usize;
        for row in r..40 - r {
            for col in r..40 - r {
                assert!((m.function.values[row * 40 + col] - 2.5).abs() < 1e-9);
            }
        }
        assert!(mollify(&u, &k, 0.01).unwrap().under_resolved);
    }

    #[test]
    fn mollified_step_is_a_linear_ramp() {
        // Box kernel of radius eps: the convolution of a unit step is the ramp
        // (x + eps) / (2 eps) on [-eps, eps]. With eps a half-integer number of
        // cells the cell-center samples hit the ramp exactly.
        let n = 64;
        let d = GridDomain::centered(1, n, 1.0).unwrap();
        let h = d.spacing;
        let u = GridFunction::from_fn(d, |x| if x[0] > 0.0 { 1.0 } else { 0.0 }).unwrap();
        let eps = 4.5 * h;
        let k = KernelFamily::new(KernelKind::Box, 1);
        let m = mollify(&u, &k, eps).unwrap().function;
        for i in 10..n - 10 {
            let x = u.domain.center(i)[0];
            let ramp = ((x + eps) / (2.0 * eps)).clamp(0.0, 1.0);
            assert!((m.values[i] - ramp).abs() < 1e-12, "cell {i}");
        }
    }

    #[test]
    fn mollification_error_shrinks_with_eps() {
        let d = GridDomain::centered(1, 512, 1.0).unwrap();
        let u = GridFunction::from_fn(d, |x| (-(x[0] * x[0]) / 0.02).exp()).unwrap();
        let k = KernelFamily::new(KernelKind::GaussianRadial, 1);
        let mut last = f64::INFINITY;
        for eps in [0.2, 0.1, 0.05] {
            let m = mollify(&u, &k, eps).unwrap().function;
            let err: f64 = m.values.iter().zip(&u.values).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            assert!(err < last);
            last = err;
        }
    }
}
