//! Biased Holstein chain: Hamiltonian, Wannier–Stark analysis, spectra.

mod bessel;
mod eigen;
mod spectrum;
mod wannier_stark;

pub use bessel::bessel_first_kind;
pub use eigen::{chain_eigensystem, eigensystem, EigenSystem, MAX_DENSE_DIM};
pub use spectrum::{
    crossing_near, detect_avoided_crossings, eigenstate_site_populations, ipr, level_slopes,
    min_pump_splitting, nearest_rational, pump_state_splitting, refine_crossing,
    site_weight_matrix, spectrum_sweep, CrossingOptions, CrossingReport, SpectrumTable,
};
pub use wannier_stark::{ws_coefficients, ws_coupling_scale};

use nalgebra_sparse::{CooMatrix, CsrMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fockspace::{Basis, SparseOp};

/// Closed-system parameters in units of the boson frequency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    pub n_sites: usize,
    pub delta: f64,
    pub lambda: f64,
    pub j_hop: f64,
    pub eps10: f64,
}

impl ChainParams {
    pub fn new(n_sites: usize, delta: f64, lambda: f64, j_hop: f64) -> Self {
        Self {
            n_sites,
            delta,
            lambda,
            j_hop,
            eps10: 0.0,
        }
    }

    pub fn with_delta(&self, delta: f64) -> Self {
        Self { delta, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites == 0 {
            return Err(Error::InvalidArgument("n_sites must be at least 1".into()));
        }
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "delta must be >= 0, got {}",
                self.delta
            )));
        }
        if !self.lambda.is_finite() || !self.j_hop.is_finite() || !self.eps10.is_finite() {
            return Err(Error::InvalidArgument("non-finite chain parameter".into()));
        }
        Ok(())
    }
}

/// Hamiltonian over the zero/one-exciton basis. The ground state sits at energy 0
/// and is decoupled from the one-exciton sector.
pub fn build_hamiltonian(params: &ChainParams, basis: &Basis) -> Result<SparseOp> {
    params.validate()?;
    if basis.n_sites() != params.n_sites {
        return Err(Error::DimensionMismatch(format!(
            "basis has {} sites, params have {}",
            basis.n_sites(),
            params.n_sites
        )));
    }
    let d = basis.dim();
    let n = params.n_sites;
    let n_occ = basis.n_occupations();
    let mut coo = CooMatrix::new(d, d);
    let mut raised = vec![0u8; n];
    for (k, occ) in basis.occupation_vectors().iter().enumerate() {
        let nb: usize = occ.iter().map(|&m| m as usize).sum();
        for site in 1..=n {
            let i = 1 + (site - 1) * n_occ + k;
            coo.push(i, i, params.eps10 + site as f64 * params.delta + nb as f64);
            if params.lambda != 0.0 {
                raised.copy_from_slice(occ);
                raised[site - 1] += 1;
                if let Some(j) = basis.one_exciton_index(site, &raised) {
                    let v = params.lambda * (raised[site - 1] as f64).sqrt();
                    coo.push(i, j, v);
                    coo.push(j, i, v);
                }
            }
            if site < n && params.j_hop != 0.0 {
                let j = i + n_occ;
                coo.push(i, j, params.j_hop);
                coo.push(j, i, params.j_hop);
            }
        }
    }
    Ok(CsrMatrix::from(&coo))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{enumerate_basis, to_dense, BosonTruncation};

    #[test]
    fn symmetric_and_decoupled_ground() {
        let b = enumerate_basis(3, BosonTruncation::with_total(3, 3)).unwrap();
        let p = ChainParams {
            eps10: 0.7,
            ..ChainParams::new(3, 0.45, 0.4, 0.01)
        };
        let h = to_dense(&build_hamiltonian(&p, &b).unwrap());
        assert_eq!(h, h.transpose());
        assert_eq!(h[(0, 0)], 0.0);
        assert_eq!(h.row(0).norm() + h.column(0).norm(), 0.0);
    }

    #[test]
    fn rejects_mismatch() {
        let b = enumerate_basis(2, BosonTruncation::per_mode(1)).unwrap();
        assert!(build_hamiltonian(&ChainParams::new(3, 0.5, 0.1, 0.1), &b).is_err());
        assert!(build_hamiltonian(&ChainParams::new(2, -0.5, 0.1, 0.1), &b).is_err());
    }
}
