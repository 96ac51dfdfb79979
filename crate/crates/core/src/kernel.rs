//! Radial unit-mass kernel families `ρ_ε(|z|)`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{arg, Result};

/// Profiles below this fraction of the peak are treated as zero.
pub const PROFILE_CUTOFF: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    Box,
    GaussianRadial,
    ExponentialRadial,
}

impl std::str::FromStr for KernelKind {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "box" => Ok(KernelKind::Box),
            "gaussian" | "gaussian_radial" => Ok(KernelKind::GaussianRadial),
            "exponential" | "exponential_radial" => Ok(KernelKind::ExponentialRadial),
            _ => arg(format!("unknown kernel '{s}'")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelFamily {
    pub kind: KernelKind,
    pub dim: usize,
}

/// Surface measure of the unit sphere `S^{N-1}` (counting measure for N = 1).
pub fn sphere_area(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => panic!("dimension {dim} unsupported"),
    }
}

impl KernelFamily {
    pub fn new(kind: KernelKind, dim: usize) -> Self {
        KernelFamily { kind, dim }
    }

    /// `ρ_ε(r)`, normalized so that `∫ ρ_ε(|z|) dz = 1` over `ℝ^N`.
    pub fn profile(&self, r: f64, eps: f64) -> f64 {
        let n = self.dim as i32;
        match self.kind {
            KernelKind::Box => {
                if r < eps {
                    let ball = if self.dim == 1 { 2.0 * eps } else { PI * eps * eps };
                    1.0 / ball
                } else {
                    0.0
                }
            }
            KernelKind::GaussianRadial => {
                (2.0 * PI * eps * eps).powf(-(n as f64) / 2.0) * (-(r * r) / (2.0 * eps * eps)).exp()
            }
            KernelKind::ExponentialRadial => {
                let c = if self.dim == 1 { 2.0 * eps } else { 2.0 * PI * eps * eps };
                (-r / eps).exp() / c
            }
        }
    }

    /// Radius beyond which the profile is below [`PROFILE_CUTOFF`] times its
    /// peak.
    pub fn effective_radius(&self, eps: f64) -> f64 {
        match self.kind {
            KernelKind::Box => eps,
            KernelKind::GaussianRadial => eps * (2.0 * (1.0 / PROFILE_CUTOFF).ln()).sqrt(),
            KernelKind::ExponentialRadial => eps * (1.0 / PROFILE_CUTOFF).ln(),
        }
    }

    /// `∫_ℝ^N ρ_ε(|z|) dz` by radial Gauss-Legendre quadrature up to the
    /// effective radius.
    pub fn mass(&self, eps: f64) -> f64 {
        sphere_area(self.dim) * self.radial_moment(0.0, self.effective_radius(eps), eps)
    }

    /// `∫_δ^∞ ρ_ε(r) r^{N-1} dr`.
    pub fn tail(&self, delta: f64, eps: f64) -> f64 {
        let reach = self.effective_radius(eps);
        if delta >= reach {
            return 0.0;
        }
        self.radial_moment(delta, reach, eps)
    }

    fn radial_moment(&self, a: f64, b: f64, eps: f64) -> f64 {
        let n = self.dim as i32;
        let f = |r: f64| self.profile(r, eps) * r.powi(n - 1);
        // The box profile jumps at eps; split there so each panel is smooth.
        let mut cuts = vec![a];
        if self.kind == KernelKind::Box && eps > a && eps < b {
            cuts.push(eps);
        }
        cuts.push(b);
        let mut total = 0.0;
        for w in cuts.windows(2) {
            total += gauss_legendre(&f, w[0], w[1], 400);
        }
        total
    }
}

/// Unit mass and tail check over an ε schedule.
pub fn check_kernel(kernel: &KernelFamily, eps: &[f64], delta: f64) -> Result<KernelCheck> {
    if eps.is_empty() {
        return arg("empty eps schedule");
    }
    let masses: Vec<f64> = eps.iter().map(|&e| kernel.mass(e)).collect();
    let tails: Vec<f64> = eps.iter().map(|&e| kernel.tail(delta, e)).collect();
    Ok(KernelCheck { eps: eps.to_vec(), masses, tails, delta })
}

#[derive(Clone, Debug, Serialize)]
pub struct KernelCheck {
    pub eps: Vec<f64>,
    pub masses: Vec<f64>,
    pub tails: Vec<f64>,
    pub delta: f64,
}

impl KernelCheck {
    pub fn mass_ok(&self, tol: f64) -> bool {
        self.masses.iter().all(|m| (m - 1.0).abs() <= tol)
    }

    /// Tails are nonincreasing along the (decreasing) ε schedule.
    pub fn tail_decreasing(&self) -> bool {
        self.tails.windows(2).all(|w| w[1] <= w[0] + 1e-15)
    }
}

/// Composite 8-point Gauss-Legendre rule on `panels` equal panels.
pub(crate) fn gauss_legendre(f: &impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    const X: [f64; 4] = [0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363];
    const W: [f64; 4] = [0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763];
    let h = (b - a) / panels as f64;
    let mut total = 0.0;
    for i in 0..panels {
        let lo = a + i as f64 * h;
        let mid = lo + 0.5 * h;
        let half = 0.5 * h;
        let mut s = 0.0;
        for k in 0..4 {
            s += W[k] * (f(mid - half * X[k]) + f(mid + half * X[k]));
        }
        total += s * half;
    }
    total
}
