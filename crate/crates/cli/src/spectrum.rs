use std::fs;
use std::path::Path;

use holstein_core::fockspace::enumerate_basis;
use holstein_core::holstein::{
    build_hamiltonian, chain_eigensystem, detect_avoided_crossings, eigenstate_site_populations,
    refine_crossing, spectrum_sweep, CrossingOptions, CrossingReport, SpectrumTable,
};
use holstein_core::lindblad::fmt17;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Axis, Output, SweepSpec};
use crate::error::{CliError, CliResult};
use crate::sweep::write_manifest;

#[derive(Clone, Debug, Serialize)]
pub struct Crossing {
    pub detected: CrossingReport,
    pub refined: CrossingReport,
}

#[derive(Clone, Debug, Serialize)]
pub struct EigenstateProfile {
    pub delta: f64,
    pub energies: Vec<f64>,
    /// `weights[k][n]`: weight of state `k` on site `n + 1`
    pub weights: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct SpectrumRun {
    pub spec: SweepSpec,
    pub table: Option<SpectrumTable>,
    pub crossings: Vec<Crossing>,
    pub eigenstates: Vec<EigenstateProfile>,
}

/// Spectrum, avoided crossings (refined within one grid step) and eigenstate
/// site profiles along the Δ axis, as requested by the outputs.
pub fn run_spectrum(spec: &SweepSpec) -> CliResult<SpectrumRun> {
    if spec.axis1.axis != Axis::Delta || spec.axis2.is_some() {
        return Err(CliError::config(
            "spectra sweep delta alone: set axis1 = delta and no axis2",
        ));
    }
    let grid = spec.axis1.grid.values();
    let want_table = spec.has_output(Output::Spectrum) || spec.has_output(Output::Crossings);
    let table = if want_table {
        Some(spectrum_sweep(
            &spec.chain,
            spec.truncation,
            &grid,
            spec.n_levels,
        )?)
    } else {
        None
    };
    let mut crossings = Vec::new();
    if let (Some(t), true) = (&table, spec.has_output(Output::Crossings)) {
        let step = grid
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        let step = if step.is_finite() { step } else { 0.005 };
        let found = detect_avoided_crossings(
            t,
            &CrossingOptions::new(spec.chain.lambda, spec.chain.j_hop),
        );
        crossings = found
            .par_iter()
            .map(|r| {
                Ok(Crossing {
                    detected: *r,
                    refined: refine_crossing(&spec.chain, spec.truncation, r, step)?,
                })
            })
            .collect::<holstein_core::Result<Vec<_>>>()?;
    }
    let mut eigenstates = Vec::new();
    if spec.has_output(Output::Eigenstates) {
        let basis = enumerate_basis(spec.chain.n_sites, spec.truncation)?;
        eigenstates = grid
            .par_iter()
            .map(|&d| {
                let es = chain_eigensystem(
                    &build_hamiltonian(&spec.chain.with_delta(d), &basis)?,
                    &basis,
                )?;
                let w = eigenstate_site_populations(&es, &basis)?;
                let n = spec.n_levels.min(w.nrows());
                let r = es.one_exciton_range();
                Ok(EigenstateProfile {
                    delta: d,
                    energies: es.energies.as_slice()[r.start..r.start + n].to_vec(),
                    weights: (0..n).map(|k| w.row(k).iter().copied().collect()).collect(),
                })
            })
            .collect::<holstein_core::Result<Vec<_>>>()?;
    }
    Ok(SpectrumRun {
        spec: spec.clone(),
        table,
        crossings,
        eigenstates,
    })
}

impl SpectrumRun {
    pub fn spectrum_csv(&self) -> Option<String> {
        let t = self.table.as_ref()?;
        let mut out = String::from("delta,level,energy\n");
        for (i, d) in t.deltas.iter().enumerate() {
            for k in 0..t.n_levels() {
                out.push_str(&format!(
                    "{},{k},{}\n",
                    fmt17(*d),
                    fmt17(t.tracked_energy(i, k))
                ));
            }
        }
        Some(out)
    }

    pub fn crossings_csv(&self) -> String {
        let mut out = String::from(
            "delta,gap,refined_delta,refined_gap,jump_length,numerator,level_index,upper_index\n",
        );
        for c in &self.crossings {
            let (a, b) = (&c.detected, &c.refined);
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                fmt17(a.delta_star),
                fmt17(a.gap),
                fmt17(b.delta_star),
                fmt17(b.gap),
                a.jump_length,
                a.numerator,
                a.level_index,
                a.upper_index
            ));
        }
        out
    }

    pub fn eigenstates_csv(&self) -> String {
        let mut out = String::from("delta,state,energy,site,weight\n");
        for p in &self.eigenstates {
            for (k, (e, w)) in p.energies.iter().zip(&p.weights).enumerate() {
                for (n, x) in w.iter().enumerate() {
                    out.push_str(&format!(
                        "{},{k},{},{},{}\n",
                        fmt17(p.delta),
                        fmt17(*e),
                        n + 1,
                        fmt17(*x)
                    ));
                }
            }
        }
        out
    }

    pub fn write(&self, dir: &Path) -> CliResult<()> {
        fs::create_dir_all(dir)?;
        if let Some(csv) = self
            .spectrum_csv()
            .filter(|_| self.spec.has_output(Output::Spectrum))
        {
            fs::write(dir.join("spectrum.csv"), csv)?;
        }
        if self.spec.has_output(Output::Crossings) {
            fs::write(dir.join("crossings.csv"), self.crossings_csv())?;
            let json = serde_json::to_string_pretty(&self.crossings)
                .map_err(|e| CliError::Numerical(e.to_string()))?;
            fs::write(dir.join("crossings.json"), json)?;
        }
        if self.spec.has_output(Output::Eigenstates) {
            fs::write(dir.join("eigenstates.csv"), self.eigenstates_csv())?;
        }
        write_manifest(&self.spec, dir)
    }
}
