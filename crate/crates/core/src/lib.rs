//! Function-space quasi-norms on sampled grid functions.
//!
//! A [`GridFunction`] is a piecewise-constant function on a uniform 1D or 2D
//! grid, extended by zero outside its box. On top of that representation the
//! crate evaluates Lebesgue, weak-Lebesgue and Lorentz quasi-norms exactly,
//! BMO seminorms over cube sweeps, Besov, Gagliardo and BV seminorms over
//! shift lattices, and the directional and kernel jump-detection energies.
//! The [`interp`] module turns the interpolation inequalities between these
//! quantities into checks that produce [`Report`]s.

pub mod error;
pub mod fixtures;
pub mod grid;
pub mod interp;
pub mod io;
pub mod jump;
pub mod kernel;
pub mod measure;
pub mod oscillation;
pub mod report;
pub mod schedule;
pub mod smoothness;
pub mod sum;

pub use error::{Error, Result};
pub use grid::{CellMask, GridDomain, GridFunction, SummedAreaTable};
pub use kernel::{KernelFamily, KernelKind};
pub use report::Report;

/// Crate version, embedded in every run record.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
