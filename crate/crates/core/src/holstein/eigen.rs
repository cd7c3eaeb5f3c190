use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fockspace::{to_dense, Basis, SparseOp};

/// Largest matrix handed to the dense symmetric eigensolver.
pub const MAX_DENSE_DIM: usize = 6000;

/// Eigenpairs of a real symmetric matrix. When built by [`chain_eigensystem`]
/// column 0 is the ground state and the one-exciton columns follow in ascending order.
#[derive(Clone, Debug)]
pub struct EigenSystem {
    pub energies: DVector<f64>,
    pub vectors: DMatrix<f64>,
    pub has_ground: bool,
}

impl EigenSystem {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    pub fn one_exciton_range(&self) -> std::ops::Range<usize> {
        if self.has_ground {
            1..self.dim()
        } else {
            0..self.dim()
        }
    }

    /// max over pairs of ‖H v − E v‖, and max deviation of VᵀV from identity.
    pub fn residuals(&self, h: &DMatrix<f64>) -> (f64, f64) {
        let hv = h * &self.vectors;
        let mut res: f64 = 0.0;
        for (k, e) in self.energies.iter().enumerate() {
            res = res.max((hv.column(k) - self.vectors.column(k) * *e).norm());
        }
        let g = self.vectors.transpose() * &self.vectors;
        let ortho = (g - DMatrix::identity(self.dim(), self.dim())).amax();
        (res, ortho)
    }
}

fn dense_symmetric_eigen(h: &DMatrix<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n = h.nrows();
    if n != h.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix is not square",
            n,
            h.ncols()
        )));
    }
    if n > MAX_DENSE_DIM {
        return Err(Error::Infeasible(format!(
            "dimension {n} exceeds the dense eigensolver limit {MAX_DENSE_DIM}"
        )));
    }
    let scale = h.amax().max(1.0);
    let asym = (h - h.transpose()).amax();
    if asym > 1e-12 * scale {
        return Err(Error::InvalidArgument(format!(
            "matrix is not symmetric (|H - Hᵀ| = {asym:e})"
        )));
    }
    if n == 0 {
        return Ok((DVector::zeros(0), DMatrix::zeros(0, 0)));
    }
    let m = faer::Mat::<f64>::from_fn(n, n, |i, j| h[(i, j)]);
    let evd = m
        .self_adjoint_eigen(faer::Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigensolver failed: {e:?}")))?;
    let s = evd.S().column_vector();
    let u = evd.U();
    let energies = DVector::from_fn(n, |i, _| s[i]);
    let vectors = DMatrix::from_fn(n, n, |i, j| u[(i, j)]);
    Ok((energies, vectors))
}

/// Full decomposition of a symmetric matrix, energies ascending.
pub fn eigensystem(h: &DMatrix<f64>) -> Result<EigenSystem> {
    let (energies, vectors) = dense_symmetric_eigen(h)?;
    Ok(EigenSystem {
        energies,
        vectors,
        has_ground: false,
    })
}

/// Decomposition of a chain Hamiltonian sector by sector. One-exciton energies
/// can lie below the ground energy (polaron shift), so a global sort would not
/// keep the ground state in place.
pub fn chain_eigensystem(h: &SparseOp, basis: &Basis) -> Result<EigenSystem> {
    let d = basis.dim();
    if h.nrows() != d || h.ncols() != d {
        return Err(Error::DimensionMismatch(format!(
            "Hamiltonian is {}x{}, basis has dimension {d}",
            h.nrows(),
            h.ncols()
        )));
    }
    let dense = to_dense(h);
    if dense.row(0).iter().skip(1).any(|&x| x != 0.0) {
        return Err(Error::InvalidArgument(
            "Hamiltonian couples ground and one-exciton sectors".into(),
        ));
    }
    let block = dense.view((1, 1), (d - 1, d - 1)).into_owned();
    let (e1, v1) = dense_symmetric_eigen(&block)?;
    let mut energies = DVector::zeros(d);
    energies[0] = dense[(0, 0)];
    energies.rows_mut(1, d - 1).copy_from(&e1);
    let mut vectors = DMatrix::zeros(d, d);
    vectors[(0, 0)] = 1.0;
    vectors.view_mut((1, 1), (d - 1, d - 1)).copy_from(&v1);
    Ok(EigenSystem {
        energies,
        vectors,
        has_ground: true,
    })
}
