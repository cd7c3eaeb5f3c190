use std::fs;
use std::path::Path;

use holstein_core::fockspace::enumerate_basis;
use holstein_core::holstein::ChainParams;
use holstein_core::kinetics::{KineticNess, KineticParams, KINETIC_CSV_HEADER};
use holstein_core::lindblad::{fmt17, ness_csv_rows, BathRates, NessSolution, NESS_CSV_HEADER};
use holstein_core::Error as CoreError;
use rayon::prelude::*;

use crate::config::{Axis, Solver, SweepSpec};
use crate::error::{status_of, CliError, CliResult};
use crate::solve::{kinetic_params, kinetic_point, solve_point};

/// One grid point with the parameters it resolves to.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub axis1: f64,
    pub axis2: Option<f64>,
    pub chain: ChainParams,
    pub rates: BathRates,
}

fn apply(axis: Axis, x: f64, chain: &mut ChainParams, rates: &mut BathRates) {
    match axis {
        Axis::Delta => chain.delta = x,
        Axis::Lambda => chain.lambda = x,
        Axis::JHop => chain.j_hop = x,
        Axis::Ratio => rates.r_b = x * rates.r_r,
    }
}

/// Grid points in output order: `axis2` outermost, then `axis1`.
pub fn points(spec: &SweepSpec) -> Vec<Point> {
    let outer: Vec<Option<f64>> = match &spec.axis2 {
        Some(a) => a.grid.values().into_iter().map(Some).collect(),
        None => vec![None],
    };
    let inner = spec.axis1.grid.values();
    let mut out = Vec::with_capacity(outer.len() * inner.len());
    for y in &outer {
        for &x in &inner {
            let (mut chain, mut rates) = (spec.chain, spec.rates);
            if let (Some(a), Some(y)) = (&spec.axis2, y) {
                apply(a.axis, *y, &mut chain, &mut rates);
            }
            apply(spec.axis1.axis, x, &mut chain, &mut rates);
            out.push(Point {
                axis1: x,
                axis2: *y,
                chain,
                rates,
            });
        }
    }
    out
}

#[derive(Clone, Debug)]
pub enum Outcome {
    Ness(std::result::Result<NessSolution, CoreError>),
    Kinetic(std::result::Result<(KineticParams, KineticNess), CoreError>),
}

impl Outcome {
    pub fn error(&self) -> Option<&CoreError> {
        match self {
            Self::Ness(Err(e)) | Self::Kinetic(Err(e)) => Some(e),
            _ => None,
        }
    }

    pub fn ness(&self) -> Option<&NessSolution> {
        match self {
            Self::Ness(Ok(s)) => Some(s),
            _ => None,
        }
    }

    pub fn kinetic(&self) -> Option<&KineticNess> {
        match self {
            Self::Kinetic(Ok((_, k))) => Some(k),
            _ => None,
        }
    }

    /// Normalised site populations, `None` when the point failed or holds no exciton.
    pub fn rho(&self) -> Option<&[f64]> {
        match self {
            Self::Ness(Ok(s)) => s.rho.as_deref(),
            Self::Kinetic(Ok((_, k))) => Some(&k.rho),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SweepTable {
    pub spec: SweepSpec,
    pub points: Vec<Point>,
    pub outcomes: Vec<Outcome>,
}

/// Solves every grid point in parallel; a failed point is kept as its error.
pub fn run_sweep(spec: &SweepSpec) -> CliResult<SweepTable> {
    let pts = points(spec);
    let outcomes = if spec.solver == Solver::Kinetic {
        pts.par_iter()
            .map(|p| Outcome::Kinetic(kinetic_point(spec, &p.rates)))
            .collect()
    } else {
        let basis = enumerate_basis(spec.chain.n_sites, spec.truncation).map_err(CliError::from)?;
        pts.par_iter()
            .map(|p| {
                Outcome::Ness(solve_point(
                    &p.chain,
                    &p.rates,
                    &basis,
                    spec.solver,
                    spec.miniband_threshold,
                ))
            })
            .collect()
    };
    Ok(SweepTable {
        spec: spec.clone(),
        points: pts,
        outcomes,
    })
}

impl SweepTable {
    pub fn n_failed(&self) -> usize {
        self.outcomes.iter().filter(|o| o.error().is_some()).count()
    }

    pub fn csv_header(&self) -> String {
        let base = if self.spec.solver == Solver::Kinetic {
            KINETIC_CSV_HEADER
        } else {
            NESS_CSV_HEADER
        };
        format!("{base},status")
    }

    /// One row per (point, site) in grid order.
    pub fn csv(&self) -> String {
        let mut out = self.csv_header();
        out.push('\n');
        let n = self.spec.chain.n_sites;
        for (p, o) in self.points.iter().zip(&self.outcomes) {
            let rows: Vec<String> = match o {
                Outcome::Ness(Ok(s)) => ness_csv_rows(s, &p.chain, &p.rates)
                    .into_iter()
                    .map(|r| r + ",ok")
                    .collect(),
                Outcome::Kinetic(Ok((kp, k))) => {
                    kp.csv_rows(&k.rho).into_iter().map(|r| r + ",ok").collect()
                }
                Outcome::Ness(Err(e)) => {
                    let ratio = p.rates.ratio().unwrap_or(f64::INFINITY);
                    let nan = fmt17(f64::NAN);
                    (1..=n)
                        .map(|site| {
                            [
                                fmt17(p.chain.delta),
                                fmt17(p.chain.lambda),
                                fmt17(p.chain.j_hop),
                                fmt17(p.rates.r_b),
                                fmt17(p.rates.r_r),
                                fmt17(p.rates.r_p),
                                fmt17(ratio),
                                nan.clone(),
                                nan.clone(),
                                site.to_string(),
                                nan.clone(),
                                nan.clone(),
                                status_of(e).to_string(),
                            ]
                            .join(",")
                        })
                        .collect()
                }
                Outcome::Kinetic(Err(e)) => {
                    let nan = vec![f64::NAN; n];
                    match kinetic_params(&self.spec, &p.rates) {
                        Ok(kp) => kp.csv_rows(&nan),
                        Err(_) => KineticParams {
                            n_sites: n,
                            jump_length: self.spec.jump_length,
                            k_nn: f64::NAN,
                            k_j: f64::NAN,
                            k_r: p.rates.r_r,
                            k_p: p.rates.r_p,
                        }
                        .csv_rows(&nan),
                    }
                    .into_iter()
                    .map(|r| format!("{r},{}", status_of(e)))
                    .collect()
                }
            };
            for r in rows {
                out.push_str(&r);
                out.push('\n');
            }
        }
        out
    }

    /// `sweep.csv` and `manifest.cfg`; the manifest alone reproduces the CSV.
    pub fn write(&self, dir: &Path) -> CliResult<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("sweep.csv"), self.csv())?;
        write_manifest(&self.spec, dir)?;
        Ok(())
    }
}

pub fn write_manifest(spec: &SweepSpec, dir: &Path) -> CliResult<()> {
    let text = format!(
        "# holstein-cli {} manifest; rerun with --config manifest.cfg\n{}",
        env!("CARGO_PKG_VERSION"),
        spec.to_config_string()
    );
    fs::write(dir.join("manifest.cfg"), text)?;
    Ok(())
}
