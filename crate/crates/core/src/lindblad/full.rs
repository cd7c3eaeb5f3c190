use nalgebra::DMatrix;

use super::{JumpSet, LindbladOp, C64};
use crate::error::{Error, Result};
use crate::fockspace::SparseOp;

/// Default cap on superoperator entries, `d⁴`.
pub const DEFAULT_DENSE_CAP: usize = 4_000_000;

// A singular value below this fraction of the largest counts as zero.
const KERNEL_TOL: f64 = 1e-13;

/// Dense Lindblad superoperator in the column-stacking convention,
/// `vec(ρ)[i + j d] = ρ_ij`.
#[derive(Clone, Debug)]
pub struct FullLiouvillian {
    pub d: usize,
    pub matrix: DMatrix<C64>,
}

impl FullLiouvillian {
    pub fn vec_index(&self, i: usize, j: usize) -> usize {
        i + j * self.d
    }

    pub fn apply(&self, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let v = nalgebra::DVector::from_column_slice(rho.as_slice());
        let out = &self.matrix * v;
        DMatrix::from_column_slice(self.d, self.d, out.as_slice())
    }
}

/// `vec(ρ̇) = [-i(I⊗H − Hᵀ⊗I) + Σ (L̄⊗L − ½ I⊗L†L − ½ (L†L)ᵀ⊗I)] vec(ρ)`.
pub fn full_liouvillian(h: &SparseOp, ops: &[LindbladOp]) -> Result<FullLiouvillian> {
    full_liouvillian_with_cap(h, ops, DEFAULT_DENSE_CAP)
}

pub fn full_liouvillian_with_cap(
    h: &SparseOp,
    ops: &[LindbladOp],
    cap: usize,
) -> Result<FullLiouvillian> {
    let d = h.nrows();
    if h.ncols() != d {
        return Err(Error::DimensionMismatch(
            "Hamiltonian must be square".into(),
        ));
    }
    if let Some(op) = ops.iter().find(|o| o.dim() != d) {
        return Err(Error::DimensionMismatch(format!(
            "operator {} does not match dimension {d}",
            op.label
        )));
    }
    let d2 = d * d;
    if d2.checked_mul(d2).is_none_or(|n| n > cap) {
        return Err(Error::Infeasible(format!(
            "full Liouvillian for dimension {d} needs {} entries, above the cap {cap}; use the secular or partial solver",
            (d2 as f64).powi(2)
        )));
    }
    let idx = |i: usize, j: usize| i + j * d;
    let mut m = DMatrix::<C64>::zeros(d2, d2);
    let mi = C64::new(0.0, -1.0);
    for (i, k, &hv) in h.triplet_iter() {
        // -i H ρ : row (i,j) <- col (k,j);   +i ρ H : row (j,k) <- col (j,i)
        for j in 0..d {
            m[(idx(i, j), idx(k, j))] += mi * hv;
            m[(idx(j, k), idx(j, i))] -= mi * hv;
        }
    }
    let mut gram = DMatrix::<f64>::zeros(d, d);
    for op in ops.iter().filter(|o| !o.is_zero()) {
        match &op.jumps {
            JumpSet::Single(_) => {
                let l = op.matrix();
                let trip: Vec<(usize, usize, f64)> =
                    l.triplet_iter().map(|(i, k, &v)| (i, k, v)).collect();
                // L ρ L† : row (i,j) <- col (k,l) with L_ik conj(L_jl)
                for &(i, k, a) in &trip {
                    for &(j, l, b) in &trip {
                        m[(idx(i, j), idx(k, l))] += C64::new(a * b, 0.0);
                    }
                }
            }
            JumpSet::Collapse { target, sources } => {
                for &s in sources {
                    m[(idx(*target, *target), idx(s, s))] += C64::new(op.rate, 0.0);
                }
            }
        }
        for (i, k, &v) in op.gram().triplet_iter() {
            gram[(i, k)] += v;
        }
    }
    for i in 0..d {
        for k in 0..d {
            let g = gram[(i, k)];
            if g == 0.0 {
                continue;
            }
            for j in 0..d {
                m[(idx(i, j), idx(k, j))] -= C64::new(0.5 * g, 0.0);
                m[(idx(j, k), idx(j, i))] -= C64::new(0.5 * g, 0.0);
            }
        }
    }
    Ok(FullLiouvillian { d, matrix: m })
}

fn complex_singular_values(m: &DMatrix<C64>) -> Result<Vec<f64>> {
    let fm = faer::Mat::<faer::c64>::from_fn(m.nrows(), m.ncols(), |i, j| {
        let z = m[(i, j)];
        faer::c64::new(z.re, z.im)
    });
    fm.singular_values()
        .map_err(|e| Error::Numerical(format!("SVD failed: {e:?}")))
}

/// Hermitian, unit-trace, positive semidefinite kernel of the superoperator.
/// Uniqueness is checked from the singular values: those below `1e-13 σ_max`
/// are counted as kernel directions.
pub fn ness_full(l: &FullLiouvillian) -> Result<DMatrix<C64>> {
    let d = l.d;
    let sv = complex_singular_values(&l.matrix)?;
    let dim = crate::linalg::numerical_kernel_dim(&sv, KERNEL_TOL);
    if dim != 1 {
        if dim == 0 {
            return Err(Error::Numerical("generator has no numerical kernel".into()));
        }
        return Err(Error::NonUniqueSteadyState { dim });
    }
    let mut a = l.matrix.clone();
    a.row_mut(0).fill(C64::new(0.0, 0.0));
    for i in 0..d {
        a[(0, l.vec_index(i, i))] = C64::new(1.0, 0.0);
    }
    let mut rhs = nalgebra::DVector::<C64>::zeros(d * d);
    rhs[0] = C64::new(1.0, 0.0);
    let x = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("bordered Liouvillian system is singular".into()))?;
    let rho = DMatrix::from_column_slice(d, d, x.as_slice());
    clean_density(rho)
}

/// Hermitian part, eigenvalues at or above −1e-8 clamped to zero, trace renormalised.
pub(crate) fn clean_density(rho: DMatrix<C64>) -> Result<DMatrix<C64>> {
    let h = (&rho + rho.adjoint()) * C64::new(0.5, 0.0);
    let eig = h.clone().symmetric_eigen();
    let min = eig.eigenvalues.min();
    if min < -1e-8 {
        return Err(Error::Numerical(format!(
            "steady state has eigenvalue {min:e}, not positive semidefinite"
        )));
    }
    if min >= 0.0 {
        let tr: C64 = h.trace();
        return Ok(h / tr);
    }
    let clamped = eig.eigenvalues.map(|x| x.max(0.0));
    let vecs = &eig.eigenvectors;
    let diag = DMatrix::from_diagonal(&clamped.map(|x| C64::new(x, 0.0)));
    let out = vecs * diag * vecs.adjoint();
    let tr: C64 = out.trace();
    Ok(out / tr)
}
