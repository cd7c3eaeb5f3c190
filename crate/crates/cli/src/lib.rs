//! Configuration, sweeps, recipes and the secular-validity protocol behind the
//! `holstein` command.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod plotdata;
pub mod recipes;
pub mod solve;
pub mod spectrum;
pub mod sweep;
pub mod validate;

pub use config::{parse_config, parse_config_str, Axis, Grid, Output, Solver, SweepSpec};
pub use error::{CliError, CliResult};
pub use plotdata::{emit_plotdata, sweep_plotdata, PlotData};
pub use recipes::{recipe_spec, RECIPES};
pub use spectrum::{run_spectrum, SpectrumRun};
pub use sweep::{run_sweep, SweepTable};
pub use validate::{validate_secular, ValidationReport};
