//! Deterministic synthetic functions on centered boxes `[−L, L]^N`.
//!
//! Descriptors look like `log_singular:n=1024`, `gaussian_bump:dim=2,n=128,w=0.1`
//! or `random_piecewise:dim=2,n=64,seed=7`. The jump shapes `step1d`,
//! `staircase1d`, `disk2d` and `square2d` are accepted too.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{arg, Result};
use crate::grid::{GridDomain, GridFunction};
use crate::jump::{lookup, split_descriptor, Shape};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FixtureFamily {
    Step,
    MultiStep,
    LogSingular,
    HoelderBump,
    GaussianBump,
    DiskIndicator,
    SquareIndicator,
    RandomPiecewise,
    Constant,
}

impl FixtureFamily {
    pub const ALL: [FixtureFamily; 9] = [
        FixtureFamily::Step,
        FixtureFamily::MultiStep,
        FixtureFamily::LogSingular,
        FixtureFamily::HoelderBump,
        FixtureFamily::GaussianBump,
        FixtureFamily::DiskIndicator,
        FixtureFamily::SquareIndicator,
        FixtureFamily::RandomPiecewise,
        FixtureFamily::Constant,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FixtureFamily::Step => "step",
            FixtureFamily::MultiStep => "multi_step",
            FixtureFamily::LogSingular => "log_singular",
            FixtureFamily::HoelderBump => "hoelder_bump",
            FixtureFamily::GaussianBump => "gaussian_bump",
            FixtureFamily::DiskIndicator => "disk_indicator",
            FixtureFamily::SquareIndicator => "square_indicator",
            FixtureFamily::RandomPiecewise => "random_piecewise",
            FixtureFamily::Constant => "constant",
        }
    }

    pub fn from_name(s: &str) -> Option<FixtureFamily> {
        FixtureFamily::ALL.into_iter().find(|f| f.name() == s)
    }

    /// Indicator-type families only exist in 2D.
    pub fn planar_only(self) -> bool {
        matches!(self, FixtureFamily::DiskIndicator | FixtureFamily::SquareIndicator)
    }

    /// Continuous (VMO-type) families.
    pub fn is_continuous(self) -> bool {
        matches!(self, FixtureFamily::HoelderBump | FixtureFamily::GaussianBump | FixtureFamily::Constant)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FixtureSpec {
    pub family: FixtureFamily,
    pub dim: usize,
    /// Cells per axis.
    pub cells: usize,
    pub half_width: f64,
    pub amplitude: f64,
    pub seed: u64,
    /// Width parameter: Gaussian standard deviation, disk radius, square side,
    /// bump support radius (all as fractions of `half_width`).
    pub width: f64,
    /// Number of pieces per axis for `random_piecewise`.
    pub pieces: usize,
}

impl FixtureSpec {
    pub fn new(family: FixtureFamily, dim: usize, cells: usize) -> FixtureSpec {
        let (half_width, width) = match family {
            FixtureFamily::DiskIndicator => (0.5, 0.6),
            FixtureFamily::SquareIndicator => (0.5, 1.0),
            FixtureFamily::GaussianBump => (1.0, 0.1),
            FixtureFamily::HoelderBump => (1.0, 0.8),
            _ => (1.0, 0.0),
        };
        FixtureSpec { family, dim, cells, half_width, amplitude: 1.0, seed: 0, width, pieces: 8 }
    }

    pub fn with_amplitude(mut self, a: f64) -> Self {
        self.amplitude = a;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Same function on a grid with twice as many cells per axis.
    pub fn refined(&self) -> FixtureSpec {
        FixtureSpec { cells: self.cells * 2, ..self.clone() }
    }

    pub fn descriptor(&self) -> String {
        format!(
            "{}:dim={},n={},L={},a={},seed={},w={},pieces={}",
            self.family.name(),
            self.dim,
            self.cells,
            self.half_width,
            self.amplitude,
            self.seed,
            self.width,
            self.pieces
        )
    }

    pub fn to_json(&self) -> Value {
        json!({"descriptor": self.descriptor(), "family": self.family.name(), "dim": self.dim, "cells": self.cells, "seed": self.seed})
    }

    pub fn domain(&self) -> Result<GridDomain> {
        GridDomain::centered(self.dim, self.cells, self.half_width)
    }

    pub fn generate(&self) -> Result<Fixture> {
        if self.family.planar_only() && self.dim != 2 {
            return arg(format!("{} is two-dimensional only", self.family.name()));
        }
        let mut domain = self.domain()?;
        let mut notes = Vec::new();
        let (a, l) = (self.amplitude, self.half_width);
        let radius = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let function = match self.family {
            FixtureFamily::Step => GridFunction::from_fn(domain, |x| if x[0] > 0.0 { a } else { 0.0 })?,
            FixtureFamily::MultiStep => GridFunction::from_fn(domain, |x| {
                let t = x[0] / l;
                a * [(-0.5, 1.0), (0.0, -2.0), (0.4, 1.5)].iter().filter(|(p, _)| t > *p).map(|(_, j)| j).sum::<f64>()
            })?,
            FixtureFamily::LogSingular => {
                if self.cells % 2 == 1 {
                    let h = domain.spacing;
                    domain.origin.iter_mut().for_each(|o| *o += h / 2.0);
                    notes.push("odd cell count puts a center at the origin; box shifted by half a cell".into());
                }
                GridFunction::from_fn(domain, |x| -a * radius(x).ln())?
            }
            FixtureFamily::HoelderBump => {
                let r_sup = self.width * l;
                GridFunction::from_fn(domain, |x| {
                    let r = radius(x);
                    let c = (1.0 - r * r / (r_sup * r_sup)).max(0.0);
                    a * r.sqrt() * c * c
                })?
            }
            FixtureFamily::GaussianBump => {
                let w = self.width * l;
                GridFunction::from_fn(domain, |x| {
                    let r = radius(x);
                    a * (-r * r / (2.0 * w * w)).exp()
                })?
            }
            FixtureFamily::DiskIndicator => {
                Shape::Disk2d { a, r: self.width * l, center: [0.0, 0.0] }.to_grid(&domain)?
            }
            FixtureFamily::SquareIndicator => {
                Shape::Square2d { a, side: self.width * l, center: [0.0, 0.0] }.to_grid(&domain)?
            }
            FixtureFamily::RandomPiecewise => random_piecewise(&domain, self.pieces, a, self.seed)?,
            FixtureFamily::Constant => GridFunction::from_fn(domain, |_| a)?,
        };
        Ok(Fixture { descriptor: self.descriptor(), spec: Some(self.clone()), function, notes })
    }
}

/// Piecewise constant on a random product partition with random values in
/// `[−a, a]`; some pieces share values so level sets have ties.
fn random_piecewise(domain: &GridDomain, pieces: usize, a: f64, seed: u64) -> Result<GridFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cuts = |n: usize, rng: &mut ChaCha8Rng| -> Vec<usize> {
        let k = pieces.clamp(1, n);
        let mut c: Vec<usize> = (0..k - 1).map(|_| rng.gen_range(1..n)).collect();
        c.sort_unstable();
        c.dedup();
        c
    };
    let row_cuts = if domain.dim == 2 { cuts(domain.rows(), &mut rng) } else { Vec::new() };
    let col_cuts = cuts(domain.cols(), &mut rng);
    let levels: Vec<f64> = (0..4).map(|_| a * rng.gen_range(-1.0..1.0)).collect();
    let nb = (row_cuts.len() + 1) * (col_cuts.len() + 1);
    let block: Vec<f64> = (0..nb)
        .map(|_| if rng.gen_bool(0.3) { levels[rng.gen_range(0..levels.len())] } else { a * rng.gen_range(-1.0..1.0) })
        .collect();
    let (nr, nc) = (domain.rows(), domain.cols());
    let values = (0..nr * nc)
        .map(|i| {
            let (r, c) = (i / nc, i % nc);
            let br = row_cuts.partition_point(|&x| x <= r);
            let bc = col_cuts.partition_point(|&x| x <= c);
            block[br * (col_cuts.len() + 1) + bc]
        })
        .collect();
    GridFunction::new(domain.clone(), values)
}

#[derive(Clone, Debug)]
pub struct Fixture {
    pub descriptor: String,
    pub spec: Option<FixtureSpec>,
    pub function: GridFunction,
    pub notes: Vec<String>,
}

/// Builds a fixture from a descriptor string.
pub fn generate(descriptor: &str) -> Result<Fixture> {
    let (name, pairs) = split_descriptor(descriptor);
    let known = ["dim", "n", "L", "a", "seed", "w", "pieces"];
    if let Some(family) = FixtureFamily::from_name(&name) {
        if let Some((k, _)) = pairs.iter().find(|(k, _)| !known.contains(&k.as_str())) {
            return arg(format!("unknown fixture parameter '{k}'"));
        }
        let dim_default = if family.planar_only() { 2.0 } else { 1.0 };
        let dim = lookup(&pairs, "dim", Some(dim_default))? as usize;
        let n = lookup(&pairs, "n", Some(256.0))?;
        if n < 1.0 || n.fract() != 0.0 {
            return arg("cell count must be a positive integer");
        }
        let mut spec = FixtureSpec::new(family, dim, n as usize);
        spec.half_width = lookup(&pairs, "L", Some(spec.half_width))?;
        spec.amplitude = lookup(&pairs, "a", Some(1.0))?;
        spec.seed = lookup(&pairs, "seed", Some(0.0))? as u64;
        spec.width = lookup(&pairs, "w", Some(spec.width))?;
        spec.pieces = lookup(&pairs, "pieces", Some(8.0))? as usize;
        let mut f = spec.generate()?;
        f.descriptor = descriptor.to_string();
        return Ok(f);
    }
    let shape = Shape::parse(descriptor)?;
    let n = lookup(&pairs, "n", Some(if shape.dim() == 1 { 4096.0 } else { 512.0 }))? as usize;
    let l = lookup(&pairs, "L", Some(if shape.dim() == 1 { 1.0 } else { 0.5 }))?;
    let domain = GridDomain::centered(shape.dim(), n, l)?;
    Ok(Fixture { descriptor: descriptor.to_string(), spec: None, function: shape.to_grid(&domain)?, notes: Vec::new() })
}
