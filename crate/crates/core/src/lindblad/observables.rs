use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{fmt17, BathRates, C64};
use crate::error::{invalid, Error, Result};
use crate::fockspace::Basis;
use crate::holstein::{site_weight_matrix, ChainParams, EigenSystem};

pub const NESS_CSV_HEADER: &str = "delta,lambda,j_hop,r_b,r_r,r_p,R,p_ex,msd,site,P,rho";

/// Below this exciton population the normalised profile is undefined.
const MIN_P_EX: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NessSolution {
    pub eigen_populations: Option<Vec<f64>>,
    /// `P_n`, n = 1..N
    pub site_populations: Vec<f64>,
    pub ground_population: f64,
    pub p_ex: f64,
    /// `ρ_n = P_n / P_ex`
    pub rho: Option<Vec<f64>>,
    /// `Σ (N − n)² P_n`
    pub msd: f64,
}

impl NessSolution {
    fn from_sites(
        site_populations: Vec<f64>,
        ground_population: f64,
        eigen_populations: Option<Vec<f64>>,
    ) -> Result<Self> {
        let p_ex: f64 = site_populations.iter().sum();
        let total = p_ex + ground_population;
        if (total - 1.0).abs() > 1e-8 {
            return Err(Error::Numerical(format!(
                "steady state has total population {total}"
            )));
        }
        let n = site_populations.len();
        let msd = site_populations
            .iter()
            .enumerate()
            .map(|(k, p)| ((n - 1 - k) as f64).powi(2) * p)
            .sum();
        let rho = (p_ex >= MIN_P_EX).then(|| site_populations.iter().map(|p| p / p_ex).collect());
        Ok(Self {
            eigen_populations,
            site_populations,
            ground_population,
            p_ex,
            rho,
            msd,
        })
    }
}

/// Observables from eigenbasis populations.
pub fn ness_observables(p: &DVector<f64>, es: &EigenSystem, basis: &Basis) -> Result<NessSolution> {
    if p.len() != es.dim() {
        return Err(Error::DimensionMismatch(format!(
            "{} populations for {} eigenstates",
            p.len(),
            es.dim()
        )));
    }
    if p.iter().any(|&x| x < 0.0 || !x.is_finite()) {
        return invalid("populations must be non-negative");
    }
    let w = site_weight_matrix(es, basis)?;
    let sites: Vec<f64> = (0..basis.n_sites()).map(|n| w.column(n).dot(p)).collect();
    let ground: f64 = (0..es.dim())
        .map(|k| es.vectors[(0, k)].powi(2) * p[k])
        .sum();
    NessSolution::from_sites(sites, ground, Some(p.as_slice().to_vec()))
}

/// Observables from a density matrix in the Fock basis, by tracing out the bosons.
pub fn ness_observables_density(rho: &DMatrix<C64>, basis: &Basis) -> Result<NessSolution> {
    let d = basis.dim();
    if rho.nrows() != d || rho.ncols() != d {
        return Err(Error::DimensionMismatch(format!(
            "density matrix is {}x{}, basis {d}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    let mut sites = vec![0.0; basis.n_sites()];
    for i in 1..d {
        sites[basis.site_and_occ(i).0 - 1] += rho[(i, i)].re;
    }
    NessSolution::from_sites(sites, rho[(0, 0)].re, None)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoherenceAudit {
    /// between eigenstates localised on different sites
    pub max_intersite: f64,
    pub max_intrasite: f64,
    pub max_population: f64,
}

/// Splits eigenbasis coherences by the dominant site of each eigenstate
/// (`sites[k]`, zero for the ground state).
pub fn coherence_audit(rho_e: &DMatrix<C64>, sites: &[usize]) -> Result<CoherenceAudit> {
    let d = rho_e.nrows();
    if sites.len() != d || rho_e.ncols() != d {
        return Err(Error::DimensionMismatch(
            "site labels do not match the density matrix".into(),
        ));
    }
    let mut a = CoherenceAudit {
        max_intersite: 0.0,
        max_intrasite: 0.0,
        max_population: 0.0,
    };
    for j in 0..d {
        a.max_population = a.max_population.max(rho_e[(j, j)].re);
        for i in 0..j {
            let c = rho_e[(i, j)].norm();
            if sites[i] == sites[j] {
                a.max_intrasite = a.max_intrasite.max(c);
            } else {
                a.max_intersite = a.max_intersite.max(c);
            }
        }
    }
    Ok(a)
}

/// Site with the largest exciton weight for every eigenstate; zero for the ground state.
pub fn dominant_sites(es: &EigenSystem, basis: &Basis) -> Result<Vec<usize>> {
    let w = site_weight_matrix(es, basis)?;
    Ok((0..es.dim())
        .map(|k| {
            let row = w.row(k);
            if row.sum() < 0.5 {
                0
            } else {
                row.iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .map_or(0, |(n, _)| n + 1)
            }
        })
        .collect())
}

/// One CSV row per site, matching [`NESS_CSV_HEADER`]. Undefined values are written as `nan`.
pub fn ness_csv_rows(sol: &NessSolution, params: &ChainParams, rates: &BathRates) -> Vec<String> {
    let ratio = rates.ratio().unwrap_or(f64::INFINITY);
    sol.site_populations
        .iter()
        .enumerate()
        .map(|(k, p)| {
            let rho = sol.rho.as_ref().map_or(f64::NAN, |r| r[k]);
            [
                fmt17(params.delta),
                fmt17(params.lambda),
                fmt17(params.j_hop),
                fmt17(rates.r_b),
                fmt17(rates.r_r),
                fmt17(rates.r_p),
                fmt17(ratio),
                fmt17(sol.p_ex),
                fmt17(sol.msd),
                (k + 1).to_string(),
                fmt17(*p),
                fmt17(rho),
            ]
            .join(",")
        })
        .collect()
}
