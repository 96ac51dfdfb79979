//! Interpolation inequalities with BMO as numerical statements.
//!
//! Inequalities with explicit constants are asserted directly. Inequalities
//! with an unknown constant `C` are turned into ratio scans: the ratio of the
//! left side to the product of the right-side factors must be finite,
//! invariant under `u → c·u` and under dilation of the box, and stable under
//! grid refinement.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Map, Value};

use crate::error::{arg, Result};
use crate::fixtures::{FixtureFamily, FixtureSpec};
use crate::grid::{CellMask, GridFunction};
use crate::jump::MaskedRows;
use crate::measure::{distribution, lebesgue_norm, lorentz_norm, power_identity_check, truncated_sup, weak_norm};
use crate::oscillation::{bmo_seminorm, double_avg_sorted, mean_osc_sorted, Cube, CubeSweepConfig, OscillationForm};
use crate::report::{num, Report};
use crate::smoothness::{
    besov_integral_norm, besov_sup_norm, besov_sup_norm_weak, bv_variation_weak, central_gradient, default_t_grid,
    gagliardo_seminorm, gagliardo_weak_seminorm, global_difference, ShiftLattice,
};
use crate::sum::pairwise_sum;

/// Relative slack for inequalities that are pure breakpoint arithmetic.
pub const EXACT_SLACK: f64 = 1e-9;

/// Double-average BMO over power-of-two cubes at unit stride.
pub fn scan_bmo(u: &GridFunction) -> f64 {
    let cfg = CubeSweepConfig::dyadic(u, 1);
    bmo_seminorm(u, &cfg, OscillationForm::DoubleAvg).expect("dyadic sweep is valid").seminorm
}

/// BMO of the zero extension: the same sweep on the grid padded by one box
/// width on every side. 2D grids use a coarser stride.
pub fn global_bmo(u: &GridFunction) -> f64 {
    let n = u.domain.cells.iter().copied().max().unwrap_or(1);
    let padded = u.padded(n);
    let stride = if u.domain.dim == 1 { 1 } else { (n / 32).max(1) };
    let cfg = CubeSweepConfig::dyadic(&padded, stride);
    bmo_seminorm(&padded, &cfg, OscillationForm::DoubleAvg).expect("dyadic sweep is valid").seminorm
}

#[derive(Clone, Debug)]
pub struct ExactParams {
    /// Exponents for the Chebyshev bound and `L^{q,q} = L^q`.
    pub qs: Vec<f64>,
    /// `γ` values for the weak-vs-Lorentz bound.
    pub gammas: Vec<f64>,
    /// `(r, p, q)` for the power identity.
    pub power_triples: Vec<(f64, f64, f64)>,
    /// Exponents for `‖|u|^γ‖_BMO ≤ ‖u‖_BMO^γ`.
    pub bmo_gammas: Vec<f64>,
    /// `(p, q, γ)` for the truncation chain and the lower sandwich.
    pub chain: Vec<(f64, f64, f64)>,
    pub tolerance: f64,
}

impl Default for ExactParams {
    fn default() -> Self {
        ExactParams {
            qs: vec![0.5, 1.0, 2.0, 3.5],
            gammas: vec![0.5, 1.0, 2.0, 4.0],
            power_triples: vec![(2.0, 1.0, 1.0), (0.5, 2.0, f64::INFINITY), (3.0, 0.7, 1.5)],
            bmo_gammas: vec![0.25, 0.5, 1.0],
            chain: vec![(1.0, 2.0, 1.0), (0.5, 2.0, 0.5), (1.0, 3.0, f64::INFINITY), (2.0, 2.5, 4.0)],
            tolerance: EXACT_SLACK,
        }
    }
}

/// Cubes of power-of-two edge at half-edge stride.
fn check_cubes(u: &GridFunction) -> Vec<Cube> {
    let dim = u.domain.dim;
    let cfg = CubeSweepConfig::dyadic(u, 1);
    let mut out = Vec::new();
    for &s in &cfg.sizes {
        let step = (s / 2).max(1);
        let starts = |n: usize| (0..=n - s).step_by(step).collect::<Vec<_>>();
        if dim == 1 {
            out.extend(starts(u.domain.cells[0]).into_iter().map(|c| Cube::new(vec![c], s)));
        } else {
            for r in starts(u.domain.cells[0]) {
                out.extend(starts(u.domain.cells[1]).into_iter().map(|c| Cube::new(vec![r, c], s)));
            }
        }
    }
    out
}

/// `⨍|u − u_C| ≤ ⨍⨍|u(x) − u(z)| ≤ 2⨍|u − u_C|` on every cube of
/// [`check_cubes`]; the report carries the worst relative violation.
pub fn oscillation_sandwich_check(u: &GridFunction, tolerance: f64) -> Report {
    let cubes = check_cubes(u);
    let worst: Vec<(f64, f64, f64)> = cubes
        .par_iter()
        .map(|c| {
            let mut v = c.values(u);
            let mean = pairwise_sum(&v) / v.len() as f64;
            v.sort_by(|a, b| a.total_cmp(b));
            (mean_osc_sorted(&v, mean), double_avg_sorted(&v), 0.0)
        })
        .collect();
    let mut pass = true;
    let mut max_lower = 0.0f64;
    let mut max_upper = 0.0f64;
    for (mo, da, _) in &worst {
        let scale = mo.max(*da);
        if scale == 0.0 {
            continue;
        }
        max_lower = max_lower.max((mo - da) / scale);
        max_upper = max_upper.max((da - 2.0 * mo) / scale);
        pass &= *mo <= da + tolerance * scale && *da <= 2.0 * mo + tolerance * scale;
    }
    let bmo_mo = worst.iter().fold(0.0f64, |m, w| m.max(w.0));
    let bmo_da = worst.iter().fold(0.0f64, |m, w| m.max(w.1));
    Report::inequality("oscillation_sandwich", json!({"cubes": cubes.len()}), bmo_da, 2.0 * bmo_mo, tolerance)
        .with_detail("mean_osc_sup", json!(bmo_mo))
        .with_detail("worst_lower_violation", json!(max_lower))
        .with_detail("worst_upper_violation", json!(max_upper))
        .with_pass(pass && bmo_mo <= bmo_da + tolerance * bmo_da.max(bmo_mo))
}

/// `‖|u|^γ‖_BMO ≤ ‖u‖^γ_BMO` for `γ ∈ (0, 1]` with both sides on the same
/// dyadic sweep.
pub fn bmo_power_check(u: &GridFunction, gamma: f64, tolerance: f64) -> Result<Report> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return arg(format!("γ must lie in (0, 1], got {gamma}"));
    }
    let lhs = scan_bmo(&u.abs_pow(gamma));
    let rhs = scan_bmo(u).powf(gamma);
    Ok(Report::inequality("bmo_power", json!({"gamma": gamma}), lhs, rhs, tolerance))
}

/// `ab ≤ ε a^p/p + ε^{−q/p} b^q/q` with `1/p + 1/q = 1`.
pub fn young_check(a: f64, b: f64, p: f64, eps: f64, tolerance: f64) -> Result<Report> {
    if !(a > 0.0 && b > 0.0 && p > 1.0 && eps > 0.0) {
        return arg("Young's inequality needs a, b, ε > 0 and p > 1");
    }
    let q = p / (p - 1.0);
    let rhs = eps * a.powf(p) / p + eps.powf(-q / p) * b.powf(q) / q;
    Ok(Report::inequality("young", json!({"a": a, "b": b, "p": p, "eps": eps}), a * b, rhs, tolerance))
}

/// `count` seeded scalar triples for [`young_check`].
pub fn young_suite(seed: u64, count: usize, tolerance: f64) -> Vec<Report> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let a = 10f64.powf(rng.gen_range(-3.0..3.0));
            let b = 10f64.powf(rng.gen_range(-3.0..3.0));
            let p = rng.gen_range(1.05..6.0);
            let eps = 10f64.powf(rng.gen_range(-2.0..2.0));
            young_check(a, b, p, eps, tolerance).expect("parameters in range")
        })
        .collect()
}

fn chain_constant(p: f64, q: f64, gamma: f64) -> f64 {
    if gamma.is_infinite() {
        1.0
    } else {
        (gamma / q * (1.0 - p / q)).powf(-1.0 / gamma)
    }
}

/// `(q/γ)^{1/γ}` with its limit 1 at `γ = ∞`.
fn lower_constant(q: f64, gamma: f64) -> f64 {
    if gamma.is_infinite() {
        1.0
    } else {
        (q / gamma).powf(1.0 / gamma)
    }
}

/// `‖min{|u|, k}‖_{L^{q,γ}} ≤ C sup_{0<s≤k^p}[s ℒ{|u|^p > s}]^{1/q} k^{1−p/q}
/// ≤ C [u]^{p/q}_{L^p_w} k^{1−p/q}` with `C = [γ/q (1 − p/q)]^{−1/γ}`.
pub fn truncation_chain_check(u: &GridFunction, k: f64, p: f64, q: f64, gamma: f64, tolerance: f64) -> Result<Vec<Report>> {
    if !(p > 0.0 && p < q && gamma > 0.0 && k >= 0.0) {
        return arg("truncation chain needs 0 < p < q, γ > 0, k ≥ 0");
    }
    let c = chain_constant(p, q, gamma);
    let trunc = u.map(|v| v.abs().min(k));
    let lhs = lorentz_norm(&distribution(&trunc, q, None)?, gamma);
    let curve_p = distribution(u, p, None)?;
    let kf = k.powf(1.0 - p / q);
    let mid = c * truncated_sup(&curve_p, k.powf(p)).powf(1.0 / q) * kf;
    let right = c * lorentz_norm(&curve_p, f64::INFINITY).powf(p / q) * kf;
    let params = json!({"k": k, "p": p, "q": q, "gamma": num(gamma), "C": c});
    Ok(vec![
        Report::inequality("truncation_chain_left", params.clone(), lhs, mid, tolerance),
        Report::inequality("truncation_chain_right", params, mid, right, tolerance),
    ])
}

/// The three terms of the level-set sandwich at level `k`:
/// `(q/γ)^{1/γ} k ℒ{|u|>k}^{1/q}`, `(q/γ)^{1/γ}[χ_{|u|>k} u]_{L^q_w}` and
/// `‖χ_{|u|>k} u‖_{L^{q,γ}}`.
pub fn sandwich_terms(u: &GridFunction, k: f64, q: f64, gamma: f64) -> Result<[f64; 3]> {
    if !(k >= 0.0 && q > 0.0 && gamma > 0.0) {
        return arg("sandwich needs k ≥ 0, q > 0, γ > 0");
    }
    let cut = u.map(|v| if v.abs() > k { v } else { 0.0 });
    let level = u.values.iter().filter(|v| v.abs() > k).count() as f64 * u.domain.cell_volume();
    let c = lower_constant(q, gamma);
    let curve = distribution(&cut, q, None)?;
    Ok([
        c * k * level.powf(1.0 / q),
        c * lorentz_norm(&curve, f64::INFINITY),
        lorentz_norm(&curve, gamma),
    ])
}

/// Lower half of the level-set sandwich, asserted with its explicit
/// constant.
pub fn lower_sandwich_check(u: &GridFunction, k: f64, q: f64, gamma: f64, tolerance: f64) -> Result<Vec<Report>> {
    let [t1, t2, t3] = sandwich_terms(u, k, q, gamma)?;
    let params = json!({"k": k, "q": q, "gamma": num(gamma)});
    Ok(vec![
        Report::inequality("lower_sandwich_left", params.clone(), t1, t2, tolerance),
        Report::inequality("lower_sandwich_right", params, t2, t3, tolerance),
    ])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BmoScope {
    /// Cubes inside the box.
    Cube,
    /// Cubes of the whole space, for the zero extension.
    Global,
}

/// Level-set sandwich with the empirical constant
/// `‖χ_{|u|>k}u‖_{L^{q,γ}} / (k ℒ{|u|>k}^{1/q})` recorded as the ratio.
/// Levels below the BMO seminorm are flagged rather than failed.
pub fn char_sandwich_check(u: &GridFunction, k: f64, q: f64, gamma: f64, scope: BmoScope, tolerance: f64) -> Result<Report> {
    let [t1, t2, t3] = sandwich_terms(u, k, q, gamma)?;
    let b = match scope {
        BmoScope::Cube => scan_bmo(u),
        BmoScope::Global => global_bmo(u),
    };
    let scale = t1.max(t2).max(t3);
    let ordered = t1 <= t2 + tolerance * scale && t2 <= t3 + tolerance * scale;
    let base = if t1 > 0.0 { t1 / lower_constant(q, gamma) } else { 0.0 };
    let params = json!({"k": k, "q": q, "gamma": num(gamma), "scope": scope});
    let mut r = Report::record("char_sandwich", params, t3, base)
        .with_detail("terms", json!([t1, t2, t3]))
        .with_detail("bmo", json!(b))
        .with_pass(ordered && t3.is_finite());
    if k < b {
        r = r.with_flag("level_below_bmo");
    }
    if t3 == 0.0 {
        r = r.with_flag("empty_level_set");
    }
    Ok(r)
}

/// Runs every explicit-constant inequality on one function.
pub fn exact_inequality_suite(u: &GridFunction, params: &ExactParams) -> Result<Vec<Report>> {
    let tol = params.tolerance;
    let mut out = Vec::new();
    for &q in &params.qs {
        let weak = weak_norm(u, q, None)?;
        let strong = lebesgue_norm(u, q, None)?;
        out.push(Report::inequality("chebyshev", json!({"q": q}), weak, strong, tol));
        let curve = distribution(u, q, None)?;
        out.push(Report::equality("lorentz_diagonal", json!({"q": q}), lorentz_norm(&curve, q), strong, tol));
        for &g in &params.gammas {
            let rhs = (g / q).powf(1.0 / g) * lorentz_norm(&curve, g);
            out.push(Report::inequality("weak_lorentz_bound", json!({"q": q, "gamma": g}), weak, rhs, tol));
        }
    }
    for &(r, p, q) in &params.power_triples {
        out.push(power_identity_check(u, r, p, q, tol)?);
    }
    out.push(oscillation_sandwich_check(u, tol));
    for &g in &params.bmo_gammas {
        out.push(bmo_power_check(u, g, tol)?);
    }
    let m = u.max_abs();
    let b = scan_bmo(u);
    let levels = [0.0, b, 0.5 * m, m, 1.5 * m];
    for &(p, q, g) in &params.chain {
        for &k in &levels {
            out.extend(truncation_chain_check(u, k, p, q, g, tol)?);
            out.extend(lower_sandwich_check(u, k, q, g, tol)?);
        }
    }
    Ok(out)
}

/// Interpolation theorems with unknown constants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    /// `‖u − u_C‖_{L^{q,γ}(C)} ≤ C [u − u_C]^{p/q}_{L^p_w(C)} ‖u‖^{1−p/q}_{BMO(C)}`
    LocalLorentz,
    /// `‖u‖_{L^{q,γ}} ≤ C [u]^{p/q}_{L^p_w} ‖u‖^{1−p/q}_{BMO}`
    GlobalLorentz,
    /// `‖u‖_{L^q} ≤ C ‖u‖^{p/q}_{L^p} ‖u‖^{1−p/q}_{BMO}`
    LebesgueBmo,
    /// `[u]_{W^{ps/q,q}} ≤ C [u]^{p/q}_{W^{s,p}_w} ‖u‖^{1−p/q}_{BMO}`
    FractionalSobolev,
    /// `[u]_{B^{sp/q}_{q,∞}} ≤ C [u]^{p/q}_{(B^s_{p,∞})_w} ‖u‖^{1−p/q}_{BMO}`
    WeakBesov,
    /// `[u]_{B^{1/q}_{q,∞}} ≤ C [u]^{1/q}_{BV_w} ‖u‖^{1−1/q}_{BMO}`
    WeakBv,
    /// `[u]_{B^{sw/p}_{p,q}} ≤ C [u]^{w/p}_{B^s_{w,qw/p}} ‖u‖^{1−w/p}_{BMO}`
    GeneralBesov,
    /// `[u]_{W^{s,p}} ≤ C ‖∇u‖^s_{L^{sp}} ‖u‖^{1−s}_{BMO}`
    GradientSobolev,
}

impl Theorem {
    pub const ALL: [Theorem; 8] = [
        Theorem::LocalLorentz,
        Theorem::GlobalLorentz,
        Theorem::LebesgueBmo,
        Theorem::FractionalSobolev,
        Theorem::WeakBesov,
        Theorem::WeakBv,
        Theorem::GeneralBesov,
        Theorem::GradientSobolev,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Theorem::LocalLorentz => "local_lorentz",
            Theorem::GlobalLorentz => "global_lorentz",
            Theorem::LebesgueBmo => "lebesgue_bmo",
            Theorem::FractionalSobolev => "fractional_sobolev",
            Theorem::WeakBesov => "weak_besov",
            Theorem::WeakBv => "weak_bv",
            Theorem::GeneralBesov => "general_besov",
            Theorem::GradientSobolev => "gradient_sobolev",
        }
    }

    pub fn from_name(s: &str) -> Option<Theorem> {
        Theorem::ALL.into_iter().find(|t| t.name() == s)
    }

    /// Parameter points used when none are given.
    pub fn default_grid(self) -> Vec<ScanPoint> {
        let pt = |p, q, gamma, s, w| ScanPoint { p, q, gamma, s, w };
        let inf = f64::INFINITY;
        match self {
            Theorem::LocalLorentz | Theorem::GlobalLorentz => vec![
                pt(1.0, 2.0, 1.0, 0.0, 0.0),
                pt(1.0, 2.0, 2.0, 0.0, 0.0),
                pt(1.0, 2.0, inf, 0.0, 0.0),
                pt(0.5, 2.0, 1.0, 0.0, 0.0),
                pt(1.0, 3.0, 0.5, 0.0, 0.0),
                pt(2.0, 4.0, 4.0, 0.0, 0.0),
            ],
            Theorem::LebesgueBmo => {
                vec![pt(1.0, 2.0, 0.0, 0.0, 0.0), pt(1.0, 4.0, 0.0, 0.0, 0.0), pt(0.5, 1.0, 0.0, 0.0, 0.0), pt(2.0, 3.0, 0.0, 0.0, 0.0)]
            }
            Theorem::FractionalSobolev => vec![
                pt(1.0, 2.0, 0.0, 0.5, 0.0),
                pt(1.0, 3.0, 0.0, 0.6, 0.0),
                pt(1.5, 3.0, 0.0, 0.4, 0.0),
                pt(0.8, 2.0, 0.0, 0.5, 0.0),
            ],
            Theorem::WeakBesov => vec![
                pt(1.0, 2.0, 0.0, 0.5, 0.0),
                pt(1.0, 2.0, 0.0, 1.0, 0.0),
                pt(2.0, 4.0, 0.0, 0.5, 0.0),
                pt(0.5, 1.0, 0.0, 1.0, 0.0),
            ],
            Theorem::WeakBv => {
                [1.5, 2.0, 3.0, 4.0].iter().map(|&q| pt(1.0, q, 0.0, 1.0, 0.0)).collect()
            }
            Theorem::GeneralBesov => {
                let mut v = Vec::new();
                for &(p, w) in &[(1.0, 0.5), (1.0, 1.0), (2.0, 1.0), (2.0, 2.0)] {
                    for &q in &[1.0, 2.0, inf] {
                        let s = if p * w > 1.0 { 0.3 } else { 0.5 };
                        v.push(pt(p, q, 0.0, s, w));
                    }
                }
                v
            }
            Theorem::GradientSobolev => vec![
                pt(1.5, 0.0, 0.0, 0.5, 0.0),
                pt(2.0, 0.0, 0.0, 0.3, 0.0),
                pt(1.0, 0.0, 0.0, 0.5, 0.0),
                pt(3.0, 0.0, 0.0, 0.25, 0.0),
            ],
        }
    }

    fn validate(self, pt: &ScanPoint) -> Result<()> {
        let ok = match self {
            Theorem::LocalLorentz | Theorem::GlobalLorentz => pt.p > 0.0 && pt.p < pt.q && pt.gamma > 0.0,
            Theorem::LebesgueBmo => pt.p > 0.0 && pt.p < pt.q && pt.q.is_finite(),
            Theorem::FractionalSobolev => pt.p > 0.0 && pt.p < pt.q && pt.q.is_finite() && pt.s > 0.0 && pt.s < 1.0,
            Theorem::WeakBesov => pt.p > 0.0 && pt.p < pt.q && pt.q.is_finite() && pt.s > 0.0 && pt.s <= 1.0,
            Theorem::WeakBv => pt.q > 1.0 && pt.q.is_finite(),
            Theorem::GeneralBesov => {
                pt.p > 0.0 && pt.p.is_finite() && pt.w > 0.0 && pt.w <= pt.p && pt.s > 0.0 && pt.s < 1.0 && pt.q > 0.0
            }
            Theorem::GradientSobolev => pt.p > 0.0 && pt.p.is_finite() && pt.s > 0.0 && pt.s < 1.0,
        };
        if ok {
            Ok(())
        } else {
            arg(format!("parameters {pt:?} outside the range of {}", self.name()))
        }
    }

    fn params_json(self, pt: &ScanPoint) -> Map<String, Value> {
        let mut m = Map::new();
        let mut put = |k: &str, v: f64| {
            m.insert(k.into(), num(v));
        };
        match self {
            Theorem::LocalLorentz | Theorem::GlobalLorentz => {
                put("p", pt.p);
                put("q", pt.q);
                put("gamma", pt.gamma);
            }
            Theorem::LebesgueBmo => {
                put("p", pt.p);
                put("q", pt.q);
            }
            Theorem::FractionalSobolev | Theorem::WeakBesov => {
                put("p", pt.p);
                put("q", pt.q);
                put("s", pt.s);
            }
            Theorem::WeakBv => put("q", pt.q),
            Theorem::GeneralBesov => {
                put("p", pt.p);
                put("q", pt.q);
                put("w", pt.w);
                put("s", pt.s);
            }
            Theorem::GradientSobolev => {
                put("p", pt.p);
                put("s", pt.s);
            }
        }
        m
    }

    /// Families whose distributional gradient is not a function.
    fn excludes(self, family: FixtureFamily) -> Option<&'static str> {
        let jumps = matches!(
            family,
            FixtureFamily::Step
                | FixtureFamily::MultiStep
                | FixtureFamily::DiskIndicator
                | FixtureFamily::SquareIndicator
                | FixtureFamily::RandomPiecewise
        );
        if self == Theorem::GradientSobolev && jumps {
            Some("gradient_not_integrable")
        } else {
            None
        }
    }
}

/// One parameter point; each theorem reads the fields it needs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ScanPoint {
    pub p: f64,
    pub q: f64,
    pub gamma: f64,
    pub s: f64,
    pub w: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InequalityCase {
    pub name: String,
    pub fixture: String,
    pub params: Map<String, Value>,
    pub lhs: f64,
    pub rhs_factors: Vec<(String, f64)>,
    pub ratio: Option<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub flags: Vec<String>,
}

impl InequalityCase {
    fn excluded(&self) -> bool {
        !self.flags.is_empty()
    }
}

/// Quantities shared by all parameter points of one function.
struct Prepared {
    bmo_local: f64,
    bmo_global: f64,
    lattice: ShiftLattice,
    t_grid: Vec<f64>,
    cutoff: f64,
}

impl Prepared {
    fn new(u: &GridFunction) -> Result<Prepared> {
        Ok(Prepared {
            bmo_local: scan_bmo(u),
            bmo_global: global_bmo(u),
            lattice: ShiftLattice::for_grid(u, 16.0)?,
            t_grid: default_t_grid(u),
            cutoff: u.domain.diameter(),
        })
    }
}

fn gradient_norm(u: &GridFunction, r: f64) -> Result<f64> {
    let g = central_gradient(u);
    let mag = GridFunction {
        domain: u.domain.clone(),
        values: (0..u.len()).map(|i| g.iter().map(|c| c.values[i] * c.values[i]).sum::<f64>().sqrt()).collect(),
    };
    lebesgue_norm(&mag, r, None)
}

/// Left side and named right-side factors of one theorem at one point.
fn sides(theorem: Theorem, u: &GridFunction, prep: &Prepared, pt: &ScanPoint) -> Result<(f64, Vec<(String, f64)>)> {
    let ScanPoint { p, q, gamma, s, w } = *pt;
    let bmo_factor = |b: f64, e: f64| ("bmo".to_string(), b.powf(e));
    Ok(match theorem {
        Theorem::LocalLorentz => {
            let mean = u.mean();
            let v = u.map(|x| x - mean);
            let lhs = lorentz_norm(&distribution(&v, q, None)?, gamma);
            (lhs, vec![("weak_lp".into(), weak_norm(&v, p, None)?.powf(p / q)), bmo_factor(prep.bmo_local, 1.0 - p / q)])
        }
        Theorem::GlobalLorentz => {
            let lhs = lorentz_norm(&distribution(u, q, None)?, gamma);
            (lhs, vec![("weak_lp".into(), weak_norm(u, p, None)?.powf(p / q)), bmo_factor(prep.bmo_global, 1.0 - p / q)])
        }
        Theorem::LebesgueBmo => {
            let lhs = lebesgue_norm(u, q, None)?;
            (lhs, vec![("lp".into(), lebesgue_norm(u, p, None)?.powf(p / q)), bmo_factor(prep.bmo_global, 1.0 - p / q)])
        }
        Theorem::FractionalSobolev => {
            let lhs = gagliardo_seminorm(u, p * s / q, q, prep.cutoff)?.value;
            let weak = gagliardo_weak_seminorm(u, s, p, prep.cutoff)?;
            (lhs, vec![("weak_gagliardo".into(), weak.powf(p / q)), bmo_factor(prep.bmo_global, 1.0 - p / q)])
        }
        Theorem::WeakBesov => {
            let lhs = besov_sup_norm(u, s * p / q, q, &prep.lattice)?.value;
            let weak = besov_sup_norm_weak(u, s, p, &prep.lattice)?.value;
            (lhs, vec![("weak_besov".into(), weak.powf(p / q)), bmo_factor(prep.bmo_global, 1.0 - p / q)])
        }
        Theorem::WeakBv => {
            let lhs = besov_sup_norm(u, 1.0 / q, q, &prep.lattice)?.value;
            let weak = bv_variation_weak(u, &prep.lattice)?.value;
            (lhs, vec![("weak_bv".into(), weak.powf(1.0 / q)), bmo_factor(prep.bmo_global, 1.0 - 1.0 / q)])
        }
        Theorem::GeneralBesov => {
            let lhs = besov_integral_norm(u, s * w / p, p, q, &prep.lattice, &prep.t_grid)?.value;
            let inner = besov_integral_norm(u, s, w, q * w / p, &prep.lattice, &prep.t_grid)?.value;
            (lhs, vec![("besov".into(), inner.powf(w / p)), bmo_factor(prep.bmo_global, 1.0 - w / p)])
        }
        Theorem::GradientSobolev => {
            let lhs = gagliardo_seminorm(u, s, p, prep.cutoff)?.value;
            (lhs, vec![("gradient".into(), gradient_norm(u, s * p)?.powf(s)), bmo_factor(prep.bmo_global, 1.0 - s)])
        }
    })
}

fn make_case(theorem: Theorem, fixture: &str, pt: &ScanPoint, lhs: f64, factors: Vec<(String, f64)>) -> InequalityCase {
    let prod: f64 = factors.iter().map(|f| f.1).product();
    let mut flags = Vec::new();
    let ratio = if prod > 0.0 && prod.is_finite() {
        Some(lhs / prod)
    } else {
        flags.push(if lhs > 0.0 { "zero_factor_positive_lhs" } else { "degenerate_zero" }.to_string());
        None
    };
    InequalityCase {
        name: theorem.name().into(),
        fixture: fixture.into(),
        params: theorem.params_json(pt),
        lhs,
        rhs_factors: factors,
        ratio,
        flags,
    }
}

fn rel_dev(a: Option<f64>, b: Option<f64>) -> f64 {
    match (a, b) {
        (Some(a), Some(b)) => {
            let scale = a.abs().max(b.abs());
            if scale == 0.0 {
                0.0
            } else {
                (a - b).abs() / scale
            }
        }
        (None, None) => 0.0,
        _ => f64::INFINITY,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanOptions {
    /// Amplitude factor for the scaling check.
    pub amplitude: f64,
    /// Dilation factor for the dilation check.
    pub dilation: f64,
    pub scaling_tolerance: f64,
    pub dilation_tolerance: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        ScanOptions { amplitude: -2.5, dilation: 3.0, scaling_tolerance: 1e-12, dilation_tolerance: 1e-9 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScanOutcome {
    pub theorem: Theorem,
    pub cases: Vec<InequalityCase>,
    /// Largest ratio over cases without hypothesis flags.
    pub max_ratio: f64,
    pub all_finite: bool,
    pub scaling_max_dev: f64,
    pub dilation_max_dev: f64,
    pub report: Report,
}

impl ScanOutcome {
    /// Largest unflagged ratio for one fixture descriptor.
    pub fn max_ratio_for(&self, fixture: &str) -> f64 {
        self.cases
            .iter()
            .filter(|c| c.fixture == fixture && !c.excluded())
            .filter_map(|c| c.ratio)
            .fold(0.0, f64::max)
    }
}

/// Ratio scan of one theorem over fixtures and parameter points, with the
/// amplitude and dilation invariance checks.
pub fn bmo_ratio_scan(fixtures: &[FixtureSpec], theorem: Theorem, grid: &[ScanPoint], opts: &ScanOptions) -> Result<ScanOutcome> {
    if fixtures.is_empty() {
        return arg("fixture family is empty");
    }
    if grid.is_empty() {
        return arg("parameter grid is empty");
    }
    for pt in grid {
        theorem.validate(pt)?;
    }
    let mut cases = Vec::new();
    let mut scaling_max_dev = 0.0f64;
    let mut dilation_max_dev = 0.0f64;
    for spec in fixtures {
        let u = spec.generate()?.function;
        let label = spec.descriptor();
        let variants = [u.clone(), u.scaled(opts.amplitude), u.dilated(opts.dilation)];
        let preps: Vec<Prepared> = variants.par_iter().map(Prepared::new).collect::<Result<_>>()?;
        let per: Vec<Result<[InequalityCase; 3]>> = grid
            .par_iter()
            .map(|pt| {
                let mut out = Vec::with_capacity(3);
                for (v, prep) in variants.iter().zip(&preps) {
                    let (lhs, f) = sides(theorem, v, prep, pt)?;
                    out.push(make_case(theorem, &label, pt, lhs, f));
                }
                Ok(out.try_into().expect("three variants"))
            })
            .collect();
        for r in per {
            let [mut base, scaled, dilated] = r?;
            let ds = rel_dev(base.ratio, scaled.ratio);
            let dd = rel_dev(base.ratio, dilated.ratio);
            if spec.family == FixtureFamily::Constant || u.is_constant() {
                base.flags.push("constant_on_box".into());
            }
            if let Some(f) = theorem.excludes(spec.family) {
                base.flags.push(f.into());
            }
            scaling_max_dev = scaling_max_dev.max(ds);
            dilation_max_dev = dilation_max_dev.max(dd);
            cases.push(base);
        }
    }
    let all_finite = cases.iter().all(|c| c.lhs.is_finite() && c.rhs_factors.iter().all(|f| f.1.is_finite()))
        && cases.iter().filter(|c| !c.excluded()).all(|c| c.ratio.is_some_and(f64::is_finite));
    let max_ratio = cases.iter().filter(|c| !c.excluded()).filter_map(|c| c.ratio).fold(0.0, f64::max);
    let flagged: Vec<Value> = cases
        .iter()
        .filter(|c| c.excluded())
        .map(|c| json!({"fixture": c.fixture, "params": c.params, "flags": c.flags}))
        .collect();
    let pass = all_finite && scaling_max_dev <= opts.scaling_tolerance && dilation_max_dev <= opts.dilation_tolerance;
    let report = Report::record(
        &format!("ratio_scan:{}", theorem.name()),
        json!({"points": grid.len(), "fixtures": fixtures.iter().map(|f| f.descriptor()).collect::<Vec<_>>()}),
        max_ratio,
        1.0,
    )
    .with_detail("scaling_max_dev", json!(scaling_max_dev))
    .with_detail("dilation_max_dev", json!(dilation_max_dev))
    .with_detail("scaling_tolerance", json!(opts.scaling_tolerance))
    .with_detail("dilation_tolerance", json!(opts.dilation_tolerance))
    .with_detail("flagged", Value::Array(flagged))
    .with_pass(pass);
    Ok(ScanOutcome { theorem, cases, max_ratio, all_finite, scaling_max_dev, dilation_max_dev, report })
}

/// Max-ratio drift between a scan and the same scan at doubled resolution.
pub fn refinement_check(coarse: &ScanOutcome, fine: &ScanOutcome, threshold: f64) -> Report {
    let drift = if coarse.max_ratio > 0.0 { (fine.max_ratio - coarse.max_ratio).abs() / coarse.max_ratio } else { 0.0 };
    let mut per_fixture = Map::new();
    let fixtures: Vec<String> = {
        let mut v: Vec<String> = coarse.cases.iter().map(|c| c.fixture.clone()).collect();
        v.dedup();
        v
    };
    let fine_fixtures: Vec<String> = {
        let mut v: Vec<String> = fine.cases.iter().map(|c| c.fixture.clone()).collect();
        v.dedup();
        v
    };
    for (c, f) in fixtures.iter().zip(&fine_fixtures) {
        let (a, b) = (coarse.max_ratio_for(c), fine.max_ratio_for(f));
        per_fixture.insert(c.clone(), json!({"coarse": a, "fine": b}));
    }
    Report::inequality(
        &format!("refinement_drift:{}", coarse.theorem.name()),
        json!({"threshold": threshold}),
        drift,
        threshold,
        0.0,
    )
    .with_detail("coarse_max_ratio", json!(coarse.max_ratio))
    .with_detail("fine_max_ratio", json!(fine.max_ratio))
    .with_detail("per_fixture", Value::Object(per_fixture))
}

/// What the shift energy should do as the shift shrinks.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum VmoExpectation {
    /// Monotone decrease with the last value at most `fraction` of the first.
    Vanishing { fraction: f64 },
    /// Every value within `[1 − band, 1 + band]·reference`.
    Persistent { reference: f64, band: f64 },
}

/// `E(h) = ∫ |u(x+h) − u(x)|^q / |h|^{sp} dx` over the pairs inside the box,
/// for shifts of `shifts` cells along the last axis.
pub fn shift_energies(u: &GridFunction, p: f64, q: f64, s: f64, shifts: &[usize]) -> Result<Vec<f64>> {
    if !(q > 0.0 && p > 0.0 && s > 0.0) {
        return arg("shift energy needs p, q, s > 0");
    }
    let rows = MaskedRows::new(u, &CellMask::all(&u.domain), q)?;
    let h = u.domain.spacing;
    Ok(shifts.iter().map(|&m| rows.shift_sum(0, m as i64) / (m as f64 * h).powf(s * p)).collect())
}

/// Vanishing of the shift energies for VMO-type functions, or their
/// persistence for the sharpness witness.
pub fn vmo_vanishing_check(u: &GridFunction, p: f64, q: f64, s: f64, shifts: &[usize], expect: VmoExpectation) -> Result<Report> {
    if shifts.len() < 2 || shifts.windows(2).any(|w| w[1] >= w[0]) || shifts.contains(&0) {
        return arg("shift schedule must be strictly decreasing positive cell counts");
    }
    let e = shift_energies(u, p, q, s, shifts)?;
    let h = u.domain.spacing;
    let params = json!({"p": p, "q": q, "s": s, "expect": expect});
    let (first, last) = (e[0], e[e.len() - 1]);
    let report = match expect {
        VmoExpectation::Vanishing { fraction } => {
            if !(p < q) {
                return arg("vanishing needs p < q");
            }
            let monotone = e.windows(2).all(|w| w[1] < w[0]) || e.iter().all(|&x| x == 0.0);
            Report::inequality("vmo_vanishing", params, last, fraction * first, 0.0)
                .with_detail("monotone", json!(monotone))
                .with_pass(monotone && last <= fraction * first)
        }
        VmoExpectation::Persistent { reference, band } => {
            let lo = e.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = e.iter().copied().fold(0.0, f64::max);
            let ok = lo >= (1.0 - band) * reference && hi <= (1.0 + band) * reference;
            Report::record("vmo_persistence", params, lo, reference)
                .with_detail("max", json!(hi))
                .with_detail("band", json!(band))
                .with_pass(ok)
        }
    };
    Ok(report
        .with_detail("shifts", json!(shifts.iter().map(|&m| m as f64 * h).collect::<Vec<_>>()))
        .with_detail("energies", json!(e)))
}

/// `∫|Δ_h u|^q ≤ C ∫min(|Δ_h u|, k)^q`, then
/// `∫min(|Δ_h u|, k)^q ≤ q/(q−p) · k^{q−p} sup_{s≤k^p} s ℒ{|Δ_h u|^p > s}`
/// and `sup_{s≤k^p} s ℒ{…} ≤ [Δ_h u]^p_{L^p_w}`. The last two are asserted;
/// the first ratio is recorded.
pub fn translation_interp_check(u: &GridFunction, offset: &[i64], p: f64, q: f64, k: Option<f64>, tolerance: f64) -> Result<Report> {
    if !(p > 0.0 && p < q && q.is_finite()) {
        return arg("translation check needs 0 < p < q < ∞");
    }
    let b = global_bmo(u);
    let k = k.unwrap_or(b);
    let d = global_difference(u, offset, 1)?;
    let full = lebesgue_norm(&d, q, None)?.powf(q);
    let trunc = lebesgue_norm(&d.map(|v| v.abs().min(k)), q, None)?.powf(q);
    let curve_p = distribution(&d, p, None)?;
    let kq = k.powf(q - p);
    let mid = kq * truncated_sup(&curve_p, k.powf(p));
    let weak = kq * lorentz_norm(&curve_p, f64::INFINITY).powf(p);
    let c = q / (q - p);
    let scale = trunc.max(c * mid).max(weak);
    let ok1 = trunc <= c * mid + tolerance * scale;
    let ok2 = mid <= weak + tolerance * scale;
    let mut r = Report::record(
        "translation_interp",
        json!({"offset": offset, "p": p, "q": q, "k": k}),
        full,
        trunc,
    )
    .with_detail("truncated", json!(trunc))
    .with_detail("truncated_sup_term", json!(mid))
    .with_detail("weak_term", json!(weak))
    .with_detail("layer_constant", json!(c))
    .with_pass(ok1 && ok2 && full.is_finite());
    if k < b {
        r = r.with_flag("level_below_bmo");
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridDomain;

    fn indicator(n: usize, lo: usize, hi: usize) -> GridFunction {
        let d = GridDomain::new(vec![0.0], vec![n], 1.0 / n as f64).unwrap();
        GridFunction::new(d, (0..n).map(|i| if i >= lo && i < hi { 1.0 } else { 0.0 }).collect()).unwrap()
    }

    #[test]
    fn truncation_chain_on_indicator_is_analytic() {
        // |A| = 1/4: LHS = 2|A|^{1/2}, middle = 4 |A|^{1/2}
        let u = indicator(16, 4, 8);
        let r = truncation_chain_check(&u, 1.0, 1.0, 2.0, 1.0, 1e-12).unwrap();
        assert!((r[0].lhs - 1.0).abs() < 1e-14);
        assert!((r[0].rhs - 2.0).abs() < 1e-14);
        assert!(r.iter().all(|x| x.pass));
    }

    #[test]
    fn sandwich_on_indicator() {
        let u = indicator(16, 4, 8);
        let [t1, t2, t3] = sandwich_terms(&u, 0.5, 1.0, 1.0).unwrap();
        assert!((t1 - 0.125).abs() < 1e-15);
        assert!((t2 - 0.25).abs() < 1e-15);
        assert!((t3 - 0.25).abs() < 1e-15);
        assert_eq!(sandwich_terms(&u, 2.0, 2.0, 1.0).unwrap(), [0.0, 0.0, 0.0]);
    }

    #[test]
    fn sandwich_terms_nonincreasing_in_k() {
        let u = FixtureSpec::new(FixtureFamily::LogSingular, 1, 256).generate().unwrap().function;
        let mut prev = [f64::INFINITY; 3];
        for k in [0.5, 1.0, 2.0, 3.0, 4.0] {
            let t = sandwich_terms(&u, k, 2.0, 1.5).unwrap();
            for i in 1..3 {
                assert!(t[i] <= prev[i] * (1.0 + 1e-12));
            }
            prev = t;
        }
        let r = char_sandwich_check(&u, 0.01, 2.0, 1.0, BmoScope::Cube, 1e-9).unwrap();
        assert!(r.flags.contains(&"level_below_bmo".to_string()));
    }

    #[test]
    fn exact_suite_on_fixtures() {
        for spec in [
            FixtureSpec::new(FixtureFamily::RandomPiecewise, 1, 256).with_seed(3),
            FixtureSpec::new(FixtureFamily::RandomPiecewise, 2, 32).with_seed(4),
            FixtureSpec::new(FixtureFamily::LogSingular, 1, 128),
            FixtureSpec::new(FixtureFamily::Constant, 1, 64),
        ] {
            let u = spec.generate().unwrap().function;
            let reps = exact_inequality_suite(&u, &ExactParams::default()).unwrap();
            for r in &reps {
                assert!(r.pass, "{}: {r:?}", spec.descriptor());
            }
        }
        assert!(young_suite(1, 100, 1e-9).iter().all(|r| r.pass));
    }

    #[test]
    fn young_equality_case() {
        // equality when ε a^p = ε^{-q/p} b^q, e.g. a = b = ε = 1
        let r = young_check(1.0, 1.0, 2.0, 1.0, 1e-12).unwrap();
        assert!((r.lhs - r.rhs).abs() < 1e-15);
        assert!(young_check(1.0, 1.0, 1.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn lebesgue_ratio_on_step() {
        // ‖u‖_2 = |a|, ‖u‖_1 = |a|, BMO of the zero extension ≥ |a|/2
        let spec = FixtureSpec::new(FixtureFamily::Step, 1, 64).with_amplitude(2.0);
        let pt = ScanPoint { p: 1.0, q: 2.0, gamma: 0.0, s: 0.0, w: 0.0 };
        let out = bmo_ratio_scan(&[spec], Theorem::LebesgueBmo, &[pt], &ScanOptions::default()).unwrap();
        let c = &out.cases[0];
        assert!((c.lhs - 2.0).abs() < 1e-12);
        assert!((c.rhs_factors[0].1 - 2f64.sqrt()).abs() < 1e-12);
        assert!(out.report.pass);
    }

    #[test]
    fn constant_is_flagged() {
        let spec = FixtureSpec::new(FixtureFamily::Constant, 1, 64);
        let out = bmo_ratio_scan(&[spec], Theorem::LocalLorentz, &Theorem::LocalLorentz.default_grid(), &ScanOptions::default())
            .unwrap();
        assert!(out.cases.iter().all(|c| !c.flags.is_empty()));
        assert!(out.report.pass);
        assert_eq!(out.max_ratio, 0.0);
    }

    #[test]
    fn step_shift_energy_is_the_jump() {
        let u = FixtureSpec::new(FixtureFamily::Step, 1, 1024).with_amplitude(1.5).generate().unwrap().function;
        let shifts = [64, 32, 16, 8, 4, 2, 1];
        let e = shift_energies(&u, 1.0, 1.0, 1.0, &shifts).unwrap();
        assert!(e.iter().all(|x| (x - 1.5).abs() < 1e-12), "{e:?}");
        let c = FixtureSpec::new(FixtureFamily::Constant, 1, 64).generate().unwrap().function;
        assert!(shift_energies(&c, 1.0, 2.0, 0.5, &[4, 2, 1]).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn translation_chain() {
        let u = FixtureSpec::new(FixtureFamily::HoelderBump, 1, 256).generate().unwrap().function;
        for d in [1i64, 5, 40] {
            let r = translation_interp_check(&u, &[d], 1.0, 2.0, None, 1e-9).unwrap();
            assert!(r.pass, "{r:?}");
        }
        let r = translation_interp_check(&u, &[0], 1.0, 2.0, None, 1e-9).unwrap();
        assert_eq!((r.lhs, r.rhs), (0.0, 0.0));
    }
}
