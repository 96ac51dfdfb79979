use std::fmt;
use std::path::Path;

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use oscillab::fixtures::{self, Fixture, FixtureFamily, FixtureSpec};
use oscillab::interp::{
    bmo_ratio_scan, char_sandwich_check, exact_inequality_suite, oscillation_sandwich_check, refinement_check, scan_bmo,
    translation_interp_check, vmo_vanishing_check, young_suite, BmoScope, ExactParams, ScanOptions, ScanPoint, Theorem,
    VmoExpectation, EXACT_SLACK,
};
use oscillab::io::{read_grid, read_mask, write_grid};
use oscillab::jump::{boundary_condition_check, energy_sweep, ground_truth, EnergyMode, Region, Shape};
use oscillab::kernel::check_kernel;
use oscillab::measure::{distribution, lebesgue_norm, lorentz_norm};
use oscillab::oscillation::{bmo_seminorm, CubeSweepConfig, OscillationForm};
use oscillab::report::{num, RunRecord};
use oscillab::schedule;
use oscillab::smoothness::{
    besov_integral_norm, besov_sup_norm, besov_sup_norm_weak, bv_perimeter_estimate, bv_variation, bv_variation_weak,
    gagliardo_seminorm, gagliardo_weak_seminorm, log_grid, modulus_of_continuity, sobolev_difference_check, ShiftLattice,
};
use oscillab::{CellMask, GridDomain, GridFunction, KernelFamily, KernelKind, Report, VERSION};

use crate::args::*;
use crate::output::{summary_line, write_csv, write_record};

const THREADS_ENV: &str = "OSCILLAB_THREADS";

/// Reports beyond this count are summarized instead of listed.
const LIST_LIMIT: usize = 40;

/// Input, output or argument problem; maps to exit status 2.
#[derive(Debug)]
pub struct Failure(String);

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<oscillab::Error> for Failure {
    fn from(e: oscillab::Error) -> Self {
        Failure(e.to_string())
    }
}

type CliResult<T> = Result<T, Failure>;

fn bad<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(Failure(msg.into()))
}

fn at_path<T>(path: &Path, r: oscillab::Result<T>) -> CliResult<T> {
    r.map_err(|e| Failure(format!("{}: {e}", path.display())))
}

#[derive(Default)]
struct Outcome {
    fixtures: Vec<Value>,
    tolerances: Map<String, Value>,
    reports: Vec<Report>,
    /// Parameter-file contents, part of the config hash.
    params: Value,
}

impl Outcome {
    fn single(fixture: Value, report: Report) -> Outcome {
        Outcome { fixtures: vec![fixture], reports: vec![report], ..Outcome::default() }
    }

    fn tolerance(mut self, key: &str, value: f64) -> Outcome {
        self.tolerances.insert(key.into(), num(value));
        self
    }
}

fn thread_count(cli: &Cli) -> CliResult<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => parse_threads(v.trim()).map_err(|e| Failure(format!("{THREADS_ENV}: {e}"))),
        Err(_) => Ok(cli.threads.unwrap_or(0)),
    }
}

fn config_hash(cli: &Cli, params: &Value) -> String {
    let config = json!({"args": cli, "params": params});
    Sha256::digest(serde_json::to_vec(&config).expect("config serializes")).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn run(cli: &Cli) -> CliResult<bool> {
    let threads = thread_count(cli)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().map_err(|e| Failure(e.to_string()))?;
    let outcome = pool.install(|| execute(cli))?;
    let record = RunRecord {
        toolkit_version: VERSION.to_string(),
        config_hash: config_hash(cli, &outcome.params),
        seed: cli.seed,
        fixtures: outcome.fixtures,
        tolerances: outcome.tolerances,
        reports: outcome.reports,
    };
    let report_out = match &cli.command {
        Command::InterpCheck(a) => a.out.as_deref(),
        _ => None,
    };
    let stdout_taken = cli.json.as_deref() == Some("-") || report_out == Some("-");
    let say = |line: String| if stdout_taken { eprintln!("{line}") } else { println!("{line}") };
    let failed = record.reports.iter().filter(|r| !r.pass).count();
    for r in &record.reports {
        if record.reports.len() <= LIST_LIMIT || !r.pass {
            say(summary_line(r));
        }
    }
    if record.reports.len() > LIST_LIMIT {
        say(format!("{} reports, {failed} failed", record.reports.len()));
    }
    if let Some(dest) = &cli.json {
        write_record(dest, &record).map_err(|e| Failure(format!("{dest}: {e}")))?;
    }
    if let Some(dest) = report_out.filter(|d| cli.json.as_deref() != Some(*d)) {
        write_record(dest, &record).map_err(|e| Failure(format!("{dest}: {e}")))?;
    }
    Ok(failed == 0)
}

fn execute(cli: &Cli) -> CliResult<Outcome> {
    match &cli.command {
        Command::Norm(a) => norm(a),
        Command::Bmo(a) => bmo(a),
        Command::Besov(a) => besov(a),
        Command::Sobolev(a) => sobolev(a),
        Command::Bv(a) => bv(a),
        Command::InterpCheck(a) => interp_check(a, cli.seed),
        Command::JumpDetect(a) => jump_detect(a),
        Command::KernelCheck(a) => kernel_check(a),
        Command::Fixture(a) => fixture(a),
    }
}

fn fixture_json(f: &Fixture) -> Value {
    json!({"descriptor": f.descriptor, "notes": f.notes})
}

fn generate(descriptor: &str) -> CliResult<Fixture> {
    let f = fixtures::generate(descriptor)?;
    for note in &f.notes {
        eprintln!("note: {note}");
    }
    Ok(f)
}

fn read_input(path: &Path) -> CliResult<(GridFunction, Value)> {
    let u = at_path(path, read_grid(path))?;
    Ok((u, json!({"path": path.display().to_string()})))
}

fn load(input: &Input) -> CliResult<(GridFunction, Value)> {
    match (&input.input, &input.fixture) {
        (Some(path), _) => read_input(path),
        (None, Some(d)) => {
            let f = generate(d)?;
            let fx = fixture_json(&f);
            Ok((f.function, fx))
        }
        (None, None) => bad("one of --input or --fixture is required"),
    }
}

fn load_mask(path: &Path, domain: &GridDomain) -> CliResult<CellMask> {
    let m = at_path(path, read_mask(path))?;
    at_path(path, m.check(domain))?;
    Ok(m)
}

/// A computed quantity with no bound: the value sits in `lhs` and under
/// `details.value`, `rhs` is zero and the ratio is absent.
fn value_report(op: &str, params: Value, value: f64) -> Report {
    Report::record(op, params, value, 0.0).with_detail("value", num(value))
}

fn lattice(u: &GridFunction, radius: Option<f64>) -> CliResult<ShiftLattice> {
    Ok(match radius {
        Some(r) => ShiftLattice::ball(u.domain.dim, r)?,
        None => ShiftLattice::for_grid(u, 8.0)?,
    })
}

fn curve_csv(path: &Path, header: &[&str], rows: Vec<Vec<f64>>) -> CliResult<()> {
    at_path(path, write_csv(path, header, &rows))
}

fn norm(a: &NormArgs) -> CliResult<Outcome> {
    let (u, fx) = load(&a.input)?;
    let region = match &a.region {
        Some(p) => Some(load_mask(p, &u.domain)?),
        None => None,
    };
    let gamma = if a.weak { Some(f64::INFINITY) } else { a.gamma };
    let mut params = json!({"p": a.p, "region": region.is_some()});
    let (op, value) = match gamma {
        None => ("lebesgue_norm", lebesgue_norm(&u, a.p, region.as_ref())?),
        Some(g) => {
            params["gamma"] = num(g);
            ("lorentz_norm", lorentz_norm(&distribution(&u, a.p, region.as_ref())?, g))
        }
    };
    Ok(Outcome::single(fx, value_report(op, params, value)))
}

fn parse_sizes(s: &str) -> CliResult<Vec<usize>> {
    let err = || Failure(format!("cannot parse cube sizes '{s}'"));
    let int = |x: &str| x.trim().parse::<usize>().map_err(|_| err());
    let sizes: Vec<usize> = match s.split_once("..") {
        Some((lo, hi)) => (int(lo)?..=int(hi)?).collect(),
        None => s.split(',').map(int).collect::<CliResult<_>>()?,
    };
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(err());
    }
    Ok(sizes)
}

fn bmo(a: &BmoArgs) -> CliResult<Outcome> {
    let (u, fx) = load(&a.input)?;
    let sizes = match &a.sizes {
        Some(s) => parse_sizes(s)?,
        None => (1..=u.domain.min_cells()).collect(),
    };
    let cfg = match a.mode {
        Sweep::Exhaustive => CubeSweepConfig::with_sizes(sizes),
        Sweep::Strided => CubeSweepConfig::strided(sizes, a.stride),
        Sweep::Dyadic => CubeSweepConfig::dyadic(&u, a.stride),
    };
    let form = match a.form {
        Form::DoubleAvg => OscillationForm::DoubleAvg,
        Form::MeanOsc => OscillationForm::MeanOsc,
    };
    let res = bmo_seminorm(&u, &cfg, form)?;
    if let Some(out) = &a.out {
        curve_csv(out, &["size", "oscillation"], res.per_size.iter().map(|&(s, v)| vec![s as f64, v]).collect())?;
    }
    let (lo, hi) = (cfg.sizes.iter().min(), cfg.sizes.iter().max());
    let params = json!({"form": form, "mode": cfg.mode, "stride": cfg.stride, "size_range": [lo, hi], "size_count": cfg.sizes.len()});
    let r = value_report("bmo_seminorm", params, res.seminorm).with_detail("argmax", json!(res.argmax));
    Ok(Outcome::single(fx, r))
}

fn besov(a: &BesovArgs) -> CliResult<Outcome> {
    let (u, fx) = load(&a.input)?;
    if a.t_points < 2 {
        return bad("--t-points must be at least 2");
    }
    let lat = lattice(&u, a.lattice_radius)?;
    let t = log_grid(u.domain.spacing, u.domain.diameter(), a.t_points);
    let params = json!({"s": a.s, "p": a.p, "q": num(a.q), "form": a.form, "lattice_offsets": lat.offsets.len()});
    let (report, k) = match a.form {
        BesovForm::Integral => {
            let b = besov_integral_norm(&u, a.s, a.p, a.q, &lat, &t)?;
            let lp = lebesgue_norm(&u, a.p, None)?;
            let r = value_report("besov_integral", params, b.value)
                .with_detail("k", json!(b.k))
                .with_detail("window", json!(b.window))
                .with_detail("tail", json!(b.tail))
                .with_detail("quasi_norm", json!(lp + b.value));
            (r, b.k)
        }
        BesovForm::Sup | BesovForm::WeakSup => {
            if a.q.is_finite() {
                return bad("the sup forms take q = inf");
            }
            let (op, sup) = if a.form == BesovForm::Sup {
                ("besov_sup", besov_sup_norm(&u, a.s, a.p, &lat)?)
            } else {
                ("besov_sup_weak", besov_sup_norm_weak(&u, a.s, a.p, &lat)?)
            };
            (value_report(op, params, sup.value).with_detail("argmax", json!(sup.argmax)), 1)
        }
    };
    if let Some(out) = &a.out {
        let m = modulus_of_continuity(&u, k, a.p, &lat, &t)?;
        let rows = (0..t.len()).map(|i| vec![m.t_values[i], m.omega[i], f64::from(u8::from(m.unresolved[i]))]).collect();
        curve_csv(out, &["t", "omega", "unresolved"], rows)?;
    }
    Ok(Outcome::single(fx, report))
}

fn sobolev(a: &SobolevArgs) -> CliResult<Outcome> {
    let (u, fx) = load(&a.input)?;
    if a.s > 0.0 && a.s < 1.0 {
        let cutoff = a.cutoff.unwrap_or_else(|| u.domain.diameter());
        let params = json!({"s": a.s, "p": a.p, "cutoff": cutoff});
        let g = gagliardo_seminorm(&u, a.s, a.p, cutoff)?;
        let mut out = Outcome::single(fx, value_report("gagliardo", params.clone(), g.value).with_detail("tail_bound", json!(g.tail_bound)));
        if a.weak {
            out.reports.push(value_report("gagliardo_weak", params, gagliardo_weak_seminorm(&u, a.s, a.p, cutoff)?));
        }
        Ok(out)
    } else if a.s == 1.0 {
        let lat = lattice(&u, a.lattice_radius)?;
        Ok(Outcome::single(fx, sobolev_difference_check(&u, a.p, &lat, a.slack)?).tolerance("slack", a.slack))
    } else {
        bad(format!("s must lie in (0, 1], got {}", a.s))
    }
}

fn bv(a: &BvArgs) -> CliResult<Outcome> {
    let (u, fx) = load(&a.input)?;
    let lat = lattice(&u, a.lattice_radius)?;
    let params = json!({"lattice_offsets": lat.offsets.len()});
    let v = bv_variation(&u, &lat)?;
    let mut out = Outcome::single(fx, value_report("bv_variation", params.clone(), v.value).with_detail("argmax", json!(v.argmax)));
    if a.weak {
        let w = bv_variation_weak(&u, &lat)?;
        out.reports.push(value_report("bv_variation_weak", params, w.value).with_detail("argmax", json!(w.argmax)));
    }
    if let Some(r) = a.perimeter_radius {
        out.reports.push(value_report("bv_perimeter", json!({"radius": r}), bv_perimeter_estimate(&u, r)?));
    }
    Ok(out)
}

fn kernel_check(a: &KernelArgs) -> CliResult<Outcome> {
    let kind: KernelKind = a.kernel.parse()?;
    if !(a.dim == 1 || a.dim == 2) {
        return bad(format!("dimension must be 1 or 2, got {}", a.dim));
    }
    let eps = schedule::parse(&a.eps)?;
    let c = check_kernel(&KernelFamily::new(kind, a.dim), &eps, a.delta)?;
    if let Some(out) = &a.out {
        curve_csv(out, &["eps", "mass", "tail"], (0..eps.len()).map(|i| vec![c.eps[i], c.masses[i], c.tails[i]]).collect())?;
    }
    let dev = c.masses.iter().map(|m| (m - 1.0).abs()).fold(0.0, f64::max);
    let r = Report::inequality("kernel_mass", json!({"kernel": kind, "dim": a.dim, "delta": a.delta}), dev, a.tolerance, 0.0)
        .with_detail("eps", json!(c.eps))
        .with_detail("masses", json!(c.masses))
        .with_detail("tails", json!(c.tails))
        .with_detail("tail_decreasing", json!(c.tail_decreasing()))
        .with_pass(c.mass_ok(a.tolerance) && c.tail_decreasing());
    Ok(Outcome { reports: vec![r], ..Outcome::default() }.tolerance("mass", a.tolerance))
}

fn fixture(a: &FixtureArgs) -> CliResult<Outcome> {
    let f = generate(&a.descriptor)?;
    at_path(&a.out, write_grid(&a.out, &f.function))?;
    Ok(Outcome { fixtures: vec![fixture_json(&f)], ..Outcome::default() })
}

/// The box whose cells are exactly the mask, if there is one.
fn box_of_mask(mask: &CellMask, domain: &GridDomain) -> Option<Region> {
    let cols = domain.cols();
    let cells: Vec<(usize, usize)> =
        mask.bits.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| (i / cols, i % cols)).collect();
    let r0 = cells.iter().map(|c| c.0).min()?;
    let r1 = cells.iter().map(|c| c.0).max()?;
    let c0 = cells.iter().map(|c| c.1).min()?;
    let c1 = cells.iter().map(|c| c.1).max()?;
    let h = domain.spacing;
    let o = &domain.origin;
    let region = if domain.dim == 1 {
        Region::new(vec![o[0] + c0 as f64 * h], vec![o[0] + (c1 + 1) as f64 * h])
    } else {
        Region::new(vec![o[0] + r0 as f64 * h, o[1] + c0 as f64 * h], vec![o[0] + (r1 + 1) as f64 * h, o[1] + (c1 + 1) as f64 * h])
    }
    .ok()?;
    (region.to_mask(domain).ok()? == *mask).then_some(region)
}

fn parse_list(s: &str) -> CliResult<Vec<f64>> {
    s.split(',').map(|x| x.trim().parse::<f64>().map_err(|_| Failure(format!("cannot parse '{x}' as a number")))).collect()
}

fn jump_detect(a: &JumpArgs) -> CliResult<Outcome> {
    let shape = a.shape.as_deref().map(Shape::parse).transpose()?;
    let (u, fx) = match (&a.input, &a.shape) {
        (Some(path), _) => read_input(path)?,
        (None, Some(d)) => {
            let f = generate(d)?;
            let fx = fixture_json(&f);
            (f.function, fx)
        }
        (None, None) => return bad("one of --input or --shape is required"),
    };
    let domain = &u.domain;
    let (mask, region) = match (&a.bounds, &a.region) {
        (Some(b), _) => {
            let r = Region::parse(b)?;
            (r.to_mask(domain)?, Some(r))
        }
        (None, Some(p)) => {
            let m = load_mask(p, domain)?;
            let r = box_of_mask(&m, domain);
            (m, r)
        }
        (None, None) => (CellMask::all(domain), Some(Region::whole(domain))),
    };
    let mode = match a.mode {
        JumpMode::Directional => {
            let n = match &a.n {
                Some(s) => parse_list(s)?,
                None => {
                    let mut n = vec![0.0; domain.dim];
                    n[0] = 1.0;
                    n
                }
            };
            EnergyMode::Directional { n }
        }
        JumpMode::Kernel => EnergyMode::Kernel { kernel: KernelFamily::new(a.kernel.parse()?, domain.dim) },
    };
    let eps = schedule::parse(&a.eps)?;
    let curve = energy_sweep(&u, &mask, &mode, a.q, &eps)?;
    if let Some(out) = &a.out {
        curve_csv(out, &["eps", "energy"], curve.eps_values.iter().zip(&curve.energies).map(|(&e, &v)| vec![e, v]).collect())?;
    }
    let params = json!({"mode": curve.mode, "q": a.q, "region_cells": mask.count()});
    let report = match &shape {
        Some(shape) => {
            let Some(region) = &region else {
                return bad("ground truth needs a box-shaped region");
            };
            let direction = match &mode {
                EnergyMode::Directional { n } => Some(n.as_slice()),
                EnergyMode::Kernel { .. } => None,
            };
            let gt = ground_truth(shape, a.q, direction, region)?;
            let truth = gt.jump_integral.unwrap_or(gt.kernel_limit);
            let hypothesis = boundary_condition_check(region, shape, domain);
            let r = Report::equality("jump_limit", params, curve.extrapolated_limit, truth, a.tolerance)
                .with_detail("ground_truth", json!(gt))
                .with_detail("boundary_condition", json!(hypothesis));
            if hypothesis {
                r
            } else {
                r.with_flag("boundary_condition_violated")
            }
        }
        None => value_report("jump_limit", params, curve.extrapolated_limit),
    };
    let report = report
        .with_detail("eps", json!(curve.eps_values))
        .with_detail("energies", json!(curve.energies))
        .with_detail("uncertainty", json!(curve.uncertainty))
        .with_detail("under_resolved", json!(curve.under_resolved));
    Ok(Outcome::single(fx, report).tolerance("ground_truth", a.tolerance))
}

/// Optional overrides read from `--params`.
struct Params(Value);

fn number(key: &str, v: &Value) -> CliResult<f64> {
    match v {
        Value::Number(n) => Ok(n.as_f64().unwrap_or(f64::NAN)),
        Value::String(s) if s == "inf" => Ok(f64::INFINITY),
        _ => bad(format!("params: '{key}' expects numbers or \"inf\", found {v}")),
    }
}

impl Params {
    fn load(path: Option<&Path>) -> CliResult<Params> {
        let Some(path) = path else {
            return Ok(Params(Value::Null));
        };
        let text = at_path(path, std::fs::read_to_string(path).map_err(oscillab::Error::from))?;
        let v: Value = serde_json::from_str(&text)
            .map_err(|e| Failure(format!("{}: line {}: {e}", path.display(), e.line())))?;
        if !v.is_object() {
            return bad(format!("{}: parameters must be a JSON object", path.display()));
        }
        Ok(Params(v))
    }

    fn get(&self, key: &str) -> Option<&Value> {
        self.0.get(key)
    }

    fn num(&self, key: &str, default: f64) -> CliResult<f64> {
        self.get(key).map_or(Ok(default), |v| number(key, v))
    }

    fn nums(&self, key: &str, default: Vec<f64>) -> CliResult<Vec<f64>> {
        match self.get(key) {
            None => Ok(default),
            Some(Value::Array(xs)) => xs.iter().map(|x| number(key, x)).collect(),
            Some(v) => bad(format!("params: '{key}' expects an array, found {v}")),
        }
    }

    fn tuples<const W: usize>(&self, key: &str, default: Vec<[f64; W]>) -> CliResult<Vec<[f64; W]>> {
        match self.get(key) {
            None => Ok(default),
            Some(Value::Array(rows)) => rows
                .iter()
                .map(|row| match row {
                    Value::Array(xs) if xs.len() == W => {
                        let mut out = [0.0; W];
                        for (o, x) in out.iter_mut().zip(xs) {
                            *o = number(key, x)?;
                        }
                        Ok(out)
                    }
                    _ => bad(format!("params: '{key}' expects arrays of {W} numbers, found {row}")),
                })
                .collect(),
            Some(v) => bad(format!("params: '{key}' expects an array, found {v}")),
        }
    }

    fn strings(&self, key: &str) -> CliResult<Option<Vec<String>>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Array(xs)) => xs
                .iter()
                .map(|x| x.as_str().map(str::to_string).ok_or_else(|| Failure(format!("params: '{key}' expects strings"))))
                .collect::<CliResult<Vec<_>>>()
                .map(Some),
            Some(v) => bad(format!("params: '{key}' expects an array of strings, found {v}")),
        }
    }

    fn flag(&self, key: &str, default: bool) -> CliResult<bool> {
        match self.get(key) {
            None => Ok(default),
            Some(Value::Bool(b)) => Ok(*b),
            Some(v) => bad(format!("params: '{key}' expects true or false, found {v}")),
        }
    }
}

fn suite_fixtures(a: &InterpArgs, p: &Params, seed: u64, defaults: &[FixtureFamily]) -> CliResult<Vec<FixtureSpec>> {
    if let Some(descriptors) = p.strings("fixtures")? {
        return descriptors
            .iter()
            .map(|d| {
                generate(d)?.spec.ok_or_else(|| Failure(format!("'{d}' is a shape, not a fixture family descriptor")))
            })
            .collect();
    }
    if !(a.dim == 1 || a.dim == 2) {
        return bad(format!("dimension must be 1 or 2, got {}", a.dim));
    }
    let families = match &a.family {
        Some(list) => list
            .split(',')
            .map(|n| FixtureFamily::from_name(n.trim()).ok_or_else(|| Failure(format!("unknown fixture family '{n}'"))))
            .collect::<CliResult<Vec<_>>>()?,
        None => defaults.to_vec(),
    };
    let random_count = p.num("random_count", 1.0)? as u64;
    let mut specs = Vec::new();
    for f in families {
        let dim = if f.planar_only() { 2 } else { a.dim };
        let cells = a.cells.unwrap_or(if dim == 1 { 256 } else { 64 });
        let copies = if f == FixtureFamily::RandomPiecewise { random_count.max(1) } else { 1 };
        for i in 0..copies {
            specs.push(FixtureSpec::new(f, dim, cells).with_seed(seed + i));
        }
    }
    Ok(specs)
}

fn interp_check(a: &InterpArgs, seed: u64) -> CliResult<Outcome> {
    let p = Params::load(a.params.as_deref())?;
    let mut out = match a.suite {
        Suite::Exact => exact_suite(a, &p, seed)?,
        Suite::Ratio => ratio_suite(a, &p, seed)?,
        Suite::Sandwich => sandwich_suite(a, &p, seed)?,
        Suite::Vmo => vmo_suite(a, &p, seed)?,
    };
    out.params = p.0;
    Ok(out)
}

fn tag_fixture(r: Report, spec: &FixtureSpec) -> Report {
    r.with_detail("fixture", json!(spec.descriptor()))
}

fn exact_suite(a: &InterpArgs, p: &Params, seed: u64) -> CliResult<Outcome> {
    let specs = suite_fixtures(a, p, seed, &FixtureFamily::ALL)?;
    let d = ExactParams::default();
    let triple = |v: Vec<(f64, f64, f64)>| v.into_iter().map(|(x, y, z)| [x, y, z]).collect::<Vec<_>>();
    let untriple = |v: Vec<[f64; 3]>| v.into_iter().map(|[x, y, z]| (x, y, z)).collect::<Vec<_>>();
    let params = ExactParams {
        qs: p.nums("qs", d.qs)?,
        gammas: p.nums("gammas", d.gammas)?,
        power_triples: untriple(p.tuples("power_triples", triple(d.power_triples))?),
        bmo_gammas: p.nums("bmo_gammas", d.bmo_gammas)?,
        chain: untriple(p.tuples("chain", triple(d.chain))?),
        tolerance: p.num("tolerance", d.tolerance)?,
    };
    let young_count = p.num("young_count", 100.0)? as usize;
    let mut out = Outcome::default();
    for spec in &specs {
        let u = spec.generate()?.function;
        out.reports.extend(exact_inequality_suite(&u, &params)?.into_iter().map(|r| tag_fixture(r, spec)));
        out.fixtures.push(spec.to_json());
    }
    out.reports.extend(young_suite(seed, young_count, params.tolerance));
    Ok(out.tolerance("exact", params.tolerance))
}

fn ratio_suite(a: &InterpArgs, p: &Params, seed: u64) -> CliResult<Outcome> {
    use FixtureFamily::*;
    let specs = suite_fixtures(a, p, seed, &[Step, LogSingular, HoelderBump, GaussianBump, Constant])?;
    let theorems = match p.strings("theorems")? {
        Some(names) => names
            .iter()
            .map(|n| Theorem::from_name(n).ok_or_else(|| Failure(format!("unknown theorem '{n}'"))))
            .collect::<CliResult<Vec<_>>>()?,
        None => Theorem::ALL.to_vec(),
    };
    let grid = match p.get("grid") {
        None => None,
        Some(Value::Array(points)) => Some(
            points
                .iter()
                .map(|pt| {
                    let field = |k: &str| pt.get(k).map_or(Ok(0.0), |v| number("grid", v));
                    Ok(ScanPoint { p: field("p")?, q: field("q")?, gamma: field("gamma")?, s: field("s")?, w: field("w")? })
                })
                .collect::<CliResult<Vec<_>>>()?,
        ),
        Some(v) => return bad(format!("params: 'grid' expects an array of points, found {v}")),
    };
    let d = ScanOptions::default();
    let opts = ScanOptions {
        amplitude: p.num("amplitude", d.amplitude)?,
        dilation: p.num("dilation", d.dilation)?,
        scaling_tolerance: p.num("scaling_tolerance", d.scaling_tolerance)?,
        dilation_tolerance: p.num("dilation_tolerance", d.dilation_tolerance)?,
    };
    let refine = p.flag("refine", true)?;
    let drift = p.num("drift", 0.15)?;
    let fine: Vec<FixtureSpec> = specs.iter().map(FixtureSpec::refined).collect();
    let mut out = Outcome::default();
    for th in theorems {
        let grid = grid.clone().unwrap_or_else(|| th.default_grid());
        let coarse = bmo_ratio_scan(&specs, th, &grid, &opts)?;
        out.reports.push(coarse.report.clone());
        if refine {
            let refined = bmo_ratio_scan(&fine, th, &grid, &opts)?;
            out.reports.push(refinement_check(&coarse, &refined, drift));
            out.reports.push(refined.report);
        }
    }
    out.fixtures = specs.iter().map(FixtureSpec::to_json).collect();
    Ok(out
        .tolerance("scaling", opts.scaling_tolerance)
        .tolerance("dilation", opts.dilation_tolerance)
        .tolerance("drift", drift))
}

fn sandwich_suite(a: &InterpArgs, p: &Params, seed: u64) -> CliResult<Outcome> {
    use FixtureFamily::*;
    let specs = suite_fixtures(a, p, seed, &[Step, LogSingular, HoelderBump, GaussianBump, RandomPiecewise])?;
    let tol = p.num("tolerance", EXACT_SLACK)?;
    let pairs = p.tuples("pairs", vec![[2.0, 1.0], [2.0, f64::INFINITY], [3.0, 2.0]])?;
    let bmo_multiples = p.nums("bmo_multiples", vec![1.0, 2.0])?;
    let max_fractions = p.nums("max_fractions", vec![0.5])?;
    let shifts = p.nums("shifts", vec![1.0, 4.0])?;
    let translation = p.tuples("translation", vec![[1.0, 2.0]])?;
    let mut out = Outcome::default();
    for spec in &specs {
        let u = spec.generate()?.function;
        let b = scan_bmo(&u);
        let m = u.max_abs();
        out.reports.push(tag_fixture(oscillation_sandwich_check(&u, tol), spec));
        let levels = bmo_multiples.iter().map(|f| f * b).chain(max_fractions.iter().map(|f| f * m)).filter(|&k| k > 0.0);
        for k in levels {
            for &[q, gamma] in &pairs {
                for scope in [BmoScope::Cube, BmoScope::Global] {
                    out.reports.push(tag_fixture(char_sandwich_check(&u, k, q, gamma, scope, tol)?, spec));
                }
            }
        }
        if !u.is_constant() {
            for &d in &shifts {
                let offset = if u.domain.dim == 1 { vec![d as i64] } else { vec![0, d as i64] };
                for &[pp, qq] in &translation {
                    out.reports.push(tag_fixture(translation_interp_check(&u, &offset, pp, qq, None, tol)?, spec));
                }
            }
        }
        out.fixtures.push(spec.to_json());
    }
    Ok(out.tolerance("sandwich", tol))
}

fn vmo_suite(a: &InterpArgs, p: &Params, seed: u64) -> CliResult<Outcome> {
    use FixtureFamily::*;
    let specs = suite_fixtures(a, p, seed, &[GaussianBump, Step])?;
    let fraction = p.num("fraction", 0.1)?;
    let band = p.num("band", 0.1)?;
    let (pp, qq, s) = (p.num("p", 1.0)?, p.num("q", 2.0)?, p.num("s", 0.5)?);
    let mut out = Outcome::default();
    for spec in &specs {
        let u = spec.generate()?.function;
        let last = *u.domain.cells.last().unwrap();
        let shifts: Vec<usize> = match p.get("shifts") {
            Some(_) => p.nums("shifts", Vec::new())?.into_iter().map(|x| x as usize).collect(),
            None => schedule::integer_geometric((last / 16).max(2), 1, 7),
        };
        let r = if spec.family.is_continuous() {
            vmo_vanishing_check(&u, pp, qq, s, &shifts, VmoExpectation::Vanishing { fraction })?
        } else if spec.family == Step && spec.dim == 1 {
            let expect = VmoExpectation::Persistent { reference: spec.amplitude.abs(), band };
            vmo_vanishing_check(&u, 1.0, 1.0, 1.0, &shifts, expect)?
        } else {
            return bad(format!("no VMO expectation for {} in {}D", spec.family.name(), spec.dim));
        };
        out.reports.push(tag_fixture(r, spec));
        out.fixtures.push(spec.to_json());
    }
    Ok(out.tolerance("fraction", fraction).tolerance("band", band))
}
