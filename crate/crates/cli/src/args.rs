use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser, Debug, Serialize)]
#[command(name = "oscillab", version, about = "Oscillation, Lorentz and Besov-type quantities of grid functions")]
pub struct Cli {
    /// Worker threads: a positive integer or `auto`. OSCILLAB_THREADS takes precedence when set.
    #[arg(long, global = true, value_parser = parse_threads)]
    #[serde(skip)]
    pub threads: Option<usize>,

    /// Seed for random fixtures and sampled checks.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Write the JSON run record to this path, `-` for stdout.
    #[arg(long, global = true)]
    #[serde(skip)]
    pub json: Option<String>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case", tag = "subcommand")]
pub enum Command {
    /// Lebesgue, Lorentz or weak norm.
    Norm(NormArgs),
    /// BMO seminorm by a cube sweep.
    Bmo(BmoArgs),
    /// Besov seminorm, integral or sup form.
    Besov(BesovArgs),
    /// Fractional Gagliardo seminorm, or the difference-quotient check for s = 1.
    Sobolev(SobolevArgs),
    /// Total variation through shift differences.
    Bv(BvArgs),
    /// Inequality suites on fixture families.
    InterpCheck(InterpArgs),
    /// Nonlocal jump energies over an ε schedule.
    JumpDetect(JumpArgs),
    /// Unit mass and tail decay of a kernel family.
    KernelCheck(KernelArgs),
    /// Write a fixture grid.
    Fixture(FixtureArgs),
}

#[derive(Args, Debug, Serialize)]
#[group(required = true, multiple = false)]
pub struct Input {
    /// Grid file (CSV or JSON).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Fixture or shape descriptor, e.g. `gaussian_bump:n=1024`.
    #[arg(long)]
    pub fixture: Option<String>,
}

#[derive(Args, Debug, Serialize)]
pub struct NormArgs {
    #[command(flatten)]
    pub input: Input,
    #[arg(long)]
    pub p: f64,
    /// Second Lorentz index; `inf` gives the weak norm.
    #[arg(long, value_parser = parse_exponent)]
    pub gamma: Option<f64>,
    /// Weak norm, same as `--gamma inf`.
    #[arg(long, conflicts_with = "gamma")]
    pub weak: bool,
    /// 0/1 mask grid restricting the integral.
    #[arg(long)]
    pub region: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Form {
    #[value(name = "double_avg")]
    DoubleAvg,
    #[value(name = "mean_osc")]
    MeanOsc,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Sweep {
    Exhaustive,
    Strided,
    Dyadic,
}

#[derive(Args, Debug, Serialize)]
pub struct BmoArgs {
    #[command(flatten)]
    pub input: Input,
    #[arg(long, value_enum, default_value = "double_avg")]
    pub form: Form,
    /// Cube edges in cells: `1..64` or `1,2,4`. Defaults to every edge.
    #[arg(long)]
    pub sizes: Option<String>,
    #[arg(long, value_enum, default_value = "exhaustive")]
    pub mode: Sweep,
    #[arg(long, default_value_t = 1)]
    pub stride: usize,
    /// CSV of the largest oscillation per cube edge.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum BesovForm {
    Integral,
    Sup,
    #[value(name = "weak_sup")]
    WeakSup,
}

#[derive(Args, Debug, Serialize)]
pub struct BesovArgs {
    #[command(flatten)]
    pub input: Input,
    #[arg(long)]
    pub s: f64,
    #[arg(long)]
    pub p: f64,
    #[arg(long, value_parser = parse_exponent, default_value = "inf")]
    pub q: f64,
    /// Shift lattice radius in cells. Defaults to the whole box in 1D and 8 in 2D.
    #[arg(long)]
    pub lattice_radius: Option<f64>,
    #[arg(long, value_enum, default_value = "integral")]
    pub form: BesovForm,
    #[arg(long, default_value_t = 64)]
    pub t_points: usize,
    /// CSV of the modulus of continuity.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct SobolevArgs {
    #[command(flatten)]
    pub input: Input,
    #[arg(long)]
    pub s: f64,
    #[arg(long)]
    pub p: f64,
    /// Interaction radius; defaults to the box diameter.
    #[arg(long)]
    pub cutoff: Option<f64>,
    /// Also compute the weak seminorm.
    #[arg(long)]
    pub weak: bool,
    #[arg(long)]
    pub lattice_radius: Option<f64>,
    /// Relative slack of the difference-quotient check at s = 1.
    #[arg(long, default_value_t = 0.05)]
    pub slack: f64,
}

#[derive(Args, Debug, Serialize)]
pub struct BvArgs {
    #[command(flatten)]
    pub input: Input,
    #[arg(long)]
    pub lattice_radius: Option<f64>,
    #[arg(long)]
    pub weak: bool,
    /// Also estimate the perimeter-type variation on the shell of this radius (cells).
    #[arg(long)]
    pub perimeter_radius: Option<f64>,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Exact,
    Ratio,
    Sandwich,
    Vmo,
}

#[derive(Args, Debug, Serialize)]
pub struct InterpArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    /// Comma-separated fixture families. Each suite has its own default list.
    #[arg(long)]
    pub family: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    /// Cells per axis; 256 in 1D and 64 in 2D when omitted.
    #[arg(long)]
    pub cells: Option<usize>,
    /// JSON file overriding suite parameters.
    #[arg(long)]
    #[serde(skip)]
    pub params: Option<PathBuf>,
    /// Report file, written like `--json`.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<String>,
}

#[derive(ValueEnum, Clone, Copy, Debug, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum JumpMode {
    Directional,
    Kernel,
}

#[derive(Args, Debug, Serialize)]
pub struct JumpArgs {
    /// Grid file. When omitted the grid is sampled from `--shape`.
    #[arg(long, required_unless_present = "shape")]
    pub input: Option<PathBuf>,
    /// Shape descriptor giving the ground truth, e.g. `disk2d:a=1,r=0.3`.
    #[arg(long)]
    pub shape: Option<String>,
    /// 0/1 mask grid of the region.
    #[arg(long, conflicts_with = "bounds")]
    pub region: Option<PathBuf>,
    /// Box region `lo:hi` per axis, comma-separated.
    #[arg(long = "box")]
    #[serde(rename = "box")]
    pub bounds: Option<String>,
    #[arg(long, value_enum, default_value = "directional")]
    pub mode: JumpMode,
    /// Unit direction, comma-separated.
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long, default_value = "box")]
    pub kernel: String,
    #[arg(long, default_value_t = 2.0)]
    pub q: f64,
    #[arg(long, default_value = "0.2:0.01:geometric")]
    pub eps: String,
    /// Relative tolerance of the ground-truth comparison.
    #[arg(long, default_value_t = 0.05)]
    pub tolerance: f64,
    /// CSV of (eps, energy) rows.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct KernelArgs {
    #[arg(long, default_value = "box")]
    pub kernel: String,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value = "0.2:0.01:geometric")]
    pub eps: String,
    /// Radius of the tail integral.
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub tolerance: f64,
    /// CSV of (eps, mass, tail) rows.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Serialize)]
pub struct FixtureArgs {
    /// Fixture or shape descriptor, e.g. `step:n=256,a=1`.
    #[arg(long)]
    pub descriptor: String,
    /// Grid file to write; `.json` selects JSON.
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}

/// `auto` maps to 0.
pub fn parse_threads(s: &str) -> Result<usize, String> {
    if s == "auto" {
        return Ok(0);
    }
    match s.parse::<usize>() {
        Ok(n) if n > 0 => Ok(n),
        _ => Err(format!("expected a positive integer or 'auto', got '{s}'")),
    }
}

/// Positive real or `inf`.
pub fn parse_exponent(s: &str) -> Result<f64, String> {
    let v = match s {
        "inf" | "infinity" => f64::INFINITY,
        _ => s.parse::<f64>().map_err(|_| format!("cannot parse '{s}' as a number"))?,
    };
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("exponent must be positive, got {s}"))
    }
}
