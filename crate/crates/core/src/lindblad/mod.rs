//! Open-system generators of the chain: secular rate matrices, the partial-secular
//! band generator and the full Liouvillian, with steady-state solvers and propagation.

mod bands;
mod full;
mod observables;
mod propagate;
mod secular;
mod validity;

pub use bands::{
    minibands, partial_secular_generator, BandGenerator, BandSteadyState, MinibandPartition,
};
pub use full::{
    full_liouvillian, full_liouvillian_with_cap, ness_full, FullLiouvillian, DEFAULT_DENSE_CAP,
};
pub use observables::{
    coherence_audit, dominant_sites, ness_csv_rows, ness_observables, ness_observables_density,
    CoherenceAudit, NessSolution, NESS_CSV_HEADER,
};
pub use propagate::{propagate, propagate_sampled, Generator, PropagateOptions, Trajectory};
pub use secular::{ness_secular, null_vector, secular_rate_matrix, RateMatrix};
pub use validity::{secular_validity, SecularRegime, SecularValidity};

use nalgebra::Complex;
use nalgebra_sparse::CooMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fockspace::{boson_annihilator, exciton_creator, Basis, SparseOp};

pub type C64 = Complex<f64>;

/// Bath rates in units of the boson frequency.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BathRates {
    pub r_b: f64,
    pub r_r: f64,
    pub r_p: f64,
}

impl BathRates {
    pub fn new(r_b: f64, r_r: f64, r_p: f64) -> Self {
        Self { r_b, r_r, r_p }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("r_b", self.r_b), ("r_r", self.r_r), ("r_p", self.r_p)] {
            if !(v >= 0.0) || !v.is_finite() {
                return invalid(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        Ok(())
    }

    /// `R = r_b / r_r`, defined only for `r_r > 0`.
    pub fn ratio(&self) -> Option<f64> {
        (self.r_r > 0.0).then(|| self.r_b / self.r_r)
    }

    pub fn max_rate(&self) -> f64 {
        self.r_b.max(self.r_r).max(self.r_p)
    }

    /// Soft warnings about the single-exciton regime.
    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.r_r > 0.0 && self.r_p / self.r_r > 0.1 {
            w.push(format!(
                "r_p/r_r = {:.3} exceeds 0.1; single-exciton picture is doubtful",
                self.r_p / self.r_r
            ));
        }
        w
    }
}

/// Jump operators of one channel, without the rate prefactor.
#[derive(Clone, Debug)]
pub enum JumpSet {
    Single(SparseOp),
    /// One rank-one jump `|target⟩⟨s|` for every `s` in `sources`.
    Collapse {
        target: usize,
        sources: Vec<usize>,
    },
}

/// A dissipation channel `√rate · J` for each jump `J` in `jumps`.
#[derive(Clone, Debug)]
pub struct LindbladOp {
    pub label: String,
    pub rate: f64,
    pub jumps: JumpSet,
    dim: usize,
}

impl LindbladOp {
    pub fn single(label: impl Into<String>, rate: f64, op: SparseOp) -> Self {
        let dim = op.nrows();
        Self {
            label: label.into(),
            rate,
            jumps: JumpSet::Single(op),
            dim,
        }
    }

    pub fn collapse(
        label: impl Into<String>,
        rate: f64,
        dim: usize,
        target: usize,
        sources: Vec<usize>,
    ) -> Self {
        Self {
            label: label.into(),
            rate,
            jumps: JumpSet::Collapse { target, sources },
            dim,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.rate == 0.0
            || match &self.jumps {
                JumpSet::Single(op) => op.values().iter().all(|&v| v == 0.0),
                JumpSet::Collapse { sources, .. } => sources.is_empty(),
            }
    }

    /// The channel as one matrix, `√rate` times the summed jumps.
    pub fn matrix(&self) -> SparseOp {
        let s = self.rate.sqrt();
        let mut coo = CooMatrix::new(self.dim, self.dim);
        match &self.jumps {
            JumpSet::Single(op) => {
                for (i, j, &v) in op.triplet_iter() {
                    coo.push(i, j, s * v);
                }
            }
            JumpSet::Collapse { target, sources } => {
                for &src in sources {
                    coo.push(*target, src, s);
                }
            }
        }
        SparseOp::from(&coo)
    }

    /// Individual jump operators including `√rate`.
    pub fn jump_matrices(&self) -> Vec<SparseOp> {
        let s = self.rate.sqrt();
        match &self.jumps {
            JumpSet::Single(_) => vec![self.matrix()],
            JumpSet::Collapse { target, sources } => sources
                .iter()
                .map(|&src| {
                    let mut coo = CooMatrix::new(self.dim, self.dim);
                    coo.push(*target, src, s);
                    SparseOp::from(&coo)
                })
                .collect(),
        }
    }

    /// Σ J†J over the channel's jumps, including the rate.
    pub fn gram(&self) -> SparseOp {
        match &self.jumps {
            JumpSet::Single(_) => {
                let m = self.matrix();
                let t = m.transpose();
                &t * &m
            }
            JumpSet::Collapse { sources, .. } => {
                let mut coo = CooMatrix::new(self.dim, self.dim);
                for &src in sources {
                    coo.push(src, src, self.rate);
                }
                SparseOp::from(&coo)
            }
        }
    }

    /// Largest matrix element magnitude of any single jump.
    pub fn max_element(&self) -> f64 {
        let s = self.rate.sqrt();
        match &self.jumps {
            JumpSet::Single(op) => s * op.values().iter().fold(0.0f64, |a, v| a.max(v.abs())),
            JumpSet::Collapse { sources, .. } => {
                if sources.is_empty() {
                    0.0
                } else {
                    s
                }
            }
        }
    }
}

/// Channels of the model: boson damping on each mode, recombination from each site
/// and the pump into `|N; 0⃗⟩`, labelled `b<n>`, `r<n>` and `p` (2N+1 in total).
///
/// Recombination from site `n` is a family of jumps `|g⟩⟨n; m⃗|`, one per boson
/// configuration, so that its `L†L` is `r_r` times the site projector.
pub fn build_lindblad_ops(basis: &Basis, rates: &BathRates) -> Result<Vec<LindbladOp>> {
    rates.validate()?;
    let n = basis.n_sites();
    let d = basis.dim();
    let n_occ = basis.n_occupations();
    let mut ops = Vec::with_capacity(2 * n + 1);
    for mode in 1..=n {
        ops.push(LindbladOp::single(
            format!("b{mode}"),
            rates.r_b,
            boson_annihilator(basis, mode)?,
        ));
    }
    for site in 1..=n {
        let start = 1 + (site - 1) * n_occ;
        ops.push(LindbladOp::collapse(
            format!("r{site}"),
            rates.r_r,
            d,
            0,
            (start..start + n_occ).collect(),
        ));
    }
    ops.push(LindbladOp::single(
        "p",
        rates.r_p,
        exciton_creator(basis, n)?,
    ));
    Ok(ops)
}

/// Formats with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{enumerate_basis, site_projector, to_dense, BosonTruncation};

    #[test]
    fn channel_count_and_labels() {
        let b = enumerate_basis(3, BosonTruncation::with_total(2, 2)).unwrap();
        let ops = build_lindblad_ops(&b, &BathRates::new(1e-3, 1e-5, 1e-6)).unwrap();
        assert_eq!(ops.len(), 7);
        let labels: Vec<_> = ops.iter().map(|o| o.label.as_str()).collect();
        assert_eq!(labels, ["b1", "b2", "b3", "r1", "r2", "r3", "p"]);
    }

    #[test]
    fn zero_boson_rate() {
        let b = enumerate_basis(2, BosonTruncation::per_mode(2)).unwrap();
        let ops = build_lindblad_ops(&b, &BathRates::new(0.0, 1.0, 1.0)).unwrap();
        for op in &ops[..2] {
            assert!(op.is_zero());
            assert_eq!(to_dense(&op.matrix()).amax(), 0.0);
        }
        assert!(build_lindblad_ops(&b, &BathRates::new(-1.0, 1.0, 1.0)).is_err());
    }

    #[test]
    fn pump_into_top_vacuum() {
        let b = enumerate_basis(1, BosonTruncation::per_mode(0)).unwrap();
        let ops = build_lindblad_ops(&b, &BathRates::new(0.0, 0.0, 0.04)).unwrap();
        let p = to_dense(&ops[2].matrix());
        assert!((p[(1, 0)] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn recombination_gram_is_projector() {
        let b = enumerate_basis(2, BosonTruncation::per_mode(2)).unwrap();
        let ops = build_lindblad_ops(&b, &BathRates::new(0.5, 0.25, 0.1)).unwrap();
        let g = to_dense(&ops[2].gram());
        let proj = to_dense(&site_projector(&b, 1).unwrap()) * 0.25;
        assert!((g - proj).amax() < 1e-15);
        // boson gram is r_b times the number operator
        let gb = to_dense(&ops[0].gram());
        for i in 1..b.dim() {
            assert!((gb[(i, i)] - 0.5 * b.state(i).occupations[0] as f64).abs() < 1e-14);
        }
    }

    #[test]
    fn max_element_scale() {
        let b = enumerate_basis(2, BosonTruncation::per_mode(3)).unwrap();
        let rates = BathRates::new(1e-4, 1e-6, 1e-7);
        let ops = build_lindblad_ops(&b, &rates).unwrap();
        let m2 = ops
            .iter()
            .map(|o| o.max_element().powi(2))
            .fold(0.0, f64::max);
        let scale = (rates.r_b * 3.0).max(rates.r_r).max(rates.r_p);
        assert!((m2 - scale).abs() < 1e-12 * scale);
    }
}
