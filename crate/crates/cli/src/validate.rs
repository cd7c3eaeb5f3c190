use std::fs;
use std::path::Path;

use holstein_core::fockspace::enumerate_basis;
use holstein_core::holstein::ChainParams;
use holstein_core::lindblad::{fmt17, BathRates, DEFAULT_DENSE_CAP};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Solver, SweepSpec};
use crate::error::{CliError, CliResult};
use crate::solve::solve_point;
use crate::sweep::write_manifest;

/// Relative site-population difference counted as agreement.
pub const AGREEMENT: f64 = 0.01;

#[derive(Clone, Debug, Serialize)]
pub struct ValidationRow {
    pub r: f64,
    pub rates: BathRates,
    /// `max_n |ρ_n(secular) − ρ_n(full)| / ρ_n(full)`
    pub discrepancy: f64,
    pub secular_rho: Vec<f64>,
    pub full_rho: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ValidationReport {
    pub chain: ChainParams,
    pub dim: usize,
    pub tolerance: f64,
    pub rows: Vec<ValidationRow>,
    /// largest `r` such that every grid value up to it agrees within `tolerance`
    pub threshold: Option<f64>,
    /// where the discrepancy first reaches `tolerance`, interpolated linearly in
    /// `log r` and `log discrepancy` between the bracketing grid values
    pub breakdown: Option<f64>,
}

/// Secular against full steady states along the `r_grid` of the spec.
pub fn validate_secular(spec: &SweepSpec) -> CliResult<ValidationReport> {
    let grid = spec
        .r_grid
        .as_ref()
        .ok_or_else(|| CliError::config("validate-secular needs `r_grid`"))?
        .values();
    let basis = enumerate_basis(spec.chain.n_sites, spec.truncation)?;
    let d = basis.dim();
    if (d as f64).powi(4) > DEFAULT_DENSE_CAP as f64 {
        return Err(CliError::Infeasible(format!(
            "full solver at basis dimension {d} exceeds the dimension cap of {DEFAULT_DENSE_CAP} superoperator entries"
        )));
    }
    let t = spec.rates;
    let rows = grid
        .par_iter()
        .map(|&r| -> CliResult<ValidationRow> {
            let rates = BathRates::new(r, r * t.r_r / t.r_b, r * t.r_p / t.r_b);
            let rho = |s: Solver| -> CliResult<Vec<f64>> {
                solve_point(&spec.chain, &rates, &basis, s, spec.miniband_threshold)?
                    .rho
                    .ok_or_else(|| CliError::Numerical(format!("no exciton population at r = {r}")))
            };
            let (secular_rho, full_rho) = (rho(Solver::Secular)?, rho(Solver::Full)?);
            let discrepancy = secular_rho
                .iter()
                .zip(&full_rho)
                .map(|(s, f)| (s - f).abs() / f.abs())
                .fold(0.0, f64::max);
            Ok(ValidationRow {
                r,
                rates,
                discrepancy,
                secular_rho,
                full_rho,
            })
        })
        .collect::<CliResult<Vec<_>>>()?;
    let threshold = rows
        .iter()
        .take_while(|x| x.discrepancy < AGREEMENT)
        .last()
        .map(|x| x.r);
    let breakdown = rows
        .windows(2)
        .find(|w| w[0].discrepancy < AGREEMENT && w[1].discrepancy >= AGREEMENT)
        .map(|w| {
            let (a, b) = (&w[0], &w[1]);
            let (la, lb) = (
                a.discrepancy.max(f64::MIN_POSITIVE).ln(),
                b.discrepancy.ln(),
            );
            let t = (AGREEMENT.ln() - la) / (lb - la);
            (a.r.ln() + t * (b.r.ln() - a.r.ln())).exp()
        });
    Ok(ValidationReport {
        chain: spec.chain,
        dim: d,
        tolerance: AGREEMENT,
        rows,
        threshold,
        breakdown,
    })
}

impl ValidationReport {
    pub fn csv(&self) -> String {
        let n = self.chain.n_sites;
        let mut out = String::from("r,r_b,r_r,r_p,discrepancy,agrees");
        for k in 1..=n {
            out.push_str(&format!(",rho{k}_secular"));
        }
        for k in 1..=n {
            out.push_str(&format!(",rho{k}_full"));
        }
        out.push('\n');
        for row in &self.rows {
            let mut cells = vec![
                fmt17(row.r),
                fmt17(row.rates.r_b),
                fmt17(row.rates.r_r),
                fmt17(row.rates.r_p),
                fmt17(row.discrepancy),
                (row.discrepancy < self.tolerance).to_string(),
            ];
            cells.extend(
                row.secular_rho
                    .iter()
                    .chain(&row.full_rho)
                    .map(|x| fmt17(*x)),
            );
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, spec: &SweepSpec, dir: &Path) -> CliResult<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("validate.csv"), self.csv())?;
        let json =
            serde_json::to_string_pretty(self).map_err(|e| CliError::Numerical(e.to_string()))?;
        fs::write(dir.join("validate.json"), json)?;
        write_manifest(spec, dir)
    }
}
