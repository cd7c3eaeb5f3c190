use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

use super::{JumpSet, LindbladOp};
use crate::error::{Error, Result};
use crate::holstein::EigenSystem;
use crate::linalg::gemm_tn;

/// Classical generator over eigenstates, `dP/dt = W P`.
#[derive(Clone, Debug)]
pub struct RateMatrix {
    pub w: DMatrix<f64>,
}

impl RateMatrix {
    /// Wraps `w` after checking the generator invariants.
    pub fn new(w: DMatrix<f64>) -> Result<Self> {
        let r = Self { w };
        r.validate()?;
        Ok(r)
    }

    pub fn dim(&self) -> usize {
        self.w.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.w.nrows();
        if n != self.w.ncols() {
            return Err(Error::DimensionMismatch(
                "rate matrix must be square".into(),
            ));
        }
        let scale = self.w.amax();
        for j in 0..n {
            let col = self.w.column(j);
            if col.sum().abs() > 1e-12 * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::InvalidArgument(format!(
                    "column {j} of the rate matrix does not sum to 0"
                )));
            }
            if col.iter().enumerate().any(|(i, &v)| i != j && v < 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "negative off-diagonal rate in column {j}"
                )));
            }
        }
        Ok(())
    }

    /// Sets each diagonal entry so its column sums to zero.
    pub fn from_offdiagonal(mut w: DMatrix<f64>) -> Self {
        for j in 0..w.ncols() {
            w[(j, j)] = 0.0;
            let s = w.column(j).sum();
            w[(j, j)] = -s;
        }
        Self { w }
    }

    /// ‖W p‖∞ relative to max|W|.
    pub fn relative_residual(&self, p: &DVector<f64>) -> f64 {
        let scale = self.w.amax();
        if scale == 0.0 {
            return 0.0;
        }
        (&self.w * p).amax() / scale
    }
}

/// A channel transformed into the eigenbasis.
pub(crate) enum EigenJump {
    /// `Vᵀ L V` including `√rate`.
    Dense(DMatrix<f64>),
    /// Rank-one family `√rate |target⟩⟨s|`: `row` is row `target` of `V`.
    Collapse {
        rate: f64,
        row: DVector<f64>,
        sources: Vec<usize>,
    },
}

pub(crate) fn check_dims(es: &EigenSystem, ops: &[LindbladOp]) -> Result<()> {
    let d = es.dim();
    if let Some(op) = ops.iter().find(|o| o.dim() != d) {
        return Err(Error::DimensionMismatch(format!(
            "operator {} has dimension {}, eigensystem has {d}",
            op.label,
            op.dim()
        )));
    }
    Ok(())
}

pub(crate) fn eigen_jumps(es: &EigenSystem, ops: &[LindbladOp]) -> Result<Vec<EigenJump>> {
    check_dims(es, ops)?;
    let v = &es.vectors;
    let mut out = Vec::new();
    for op in ops.iter().filter(|o| !o.is_zero()) {
        match &op.jumps {
            JumpSet::Single(_) => {
                let l = op.matrix();
                let lv: DMatrix<f64> = &l * v;
                out.push(EigenJump::Dense(gemm_tn(v, &lv)));
            }
            JumpSet::Collapse { target, sources } => out.push(EigenJump::Collapse {
                rate: op.rate,
                row: v.row(*target).transpose(),
                sources: sources.clone(),
            }),
        }
    }
    Ok(out)
}

/// `W_mn = Σ_y |L^(e)_{y,mn}|²` off the diagonal, diagonal fixed by column sums.
pub fn secular_rate_matrix(es: &EigenSystem, ops: &[LindbladOp]) -> Result<RateMatrix> {
    let d = es.dim();
    let mut w = DMatrix::<f64>::zeros(d, d);
    for jump in eigen_jumps(es, ops)? {
        match jump {
            EigenJump::Dense(le) => w.zip_apply(&le, |a, b| *a += b * b),
            EigenJump::Collapse { rate, row, sources } => {
                // W_ab += r V_ta² Σ_s V_sb²
                let mut src_weight = DVector::<f64>::zeros(d);
                for &s in &sources {
                    for b in 0..d {
                        src_weight[b] += es.vectors[(s, b)].powi(2);
                    }
                }
                for b in 0..d {
                    let f = rate * src_weight[b];
                    if f == 0.0 {
                        continue;
                    }
                    for a in 0..d {
                        w[(a, b)] += f * row[a] * row[a];
                    }
                }
            }
        }
    }
    Ok(RateMatrix::from_offdiagonal(w))
}

/// Closed communicating classes of the jump graph, edges kept above
/// `rel_cut * max|W_offdiag|`.
pub(crate) fn closed_classes(w: &DMatrix<f64>, rel_cut: f64) -> Vec<Vec<usize>> {
    let n = w.nrows();
    let mut maxoff: f64 = 0.0;
    for j in 0..n {
        for i in 0..n {
            if i != j {
                maxoff = maxoff.max(w[(i, j)]);
            }
        }
    }
    let cut = rel_cut * maxoff;
    let mut g = DiGraph::<(), ()>::with_capacity(n, 0);
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    let mut edges = Vec::new();
    for j in 0..n {
        for i in 0..n {
            if i != j && w[(i, j)] > cut && maxoff > 0.0 {
                g.add_edge(nodes[j], nodes[i], ());
                edges.push((j, i));
            }
        }
    }
    let sccs = tarjan_scc(&g);
    let mut comp = vec![0usize; n];
    for (c, scc) in sccs.iter().enumerate() {
        for nd in scc {
            comp[nd.index()] = c;
        }
    }
    let mut leaks = vec![false; sccs.len()];
    for (from, to) in edges {
        if comp[from] != comp[to] {
            leaks[comp[from]] = true;
        }
    }
    sccs.iter()
        .enumerate()
        .filter(|(c, _)| !leaks[*c])
        .map(|(_, scc)| {
            let mut v: Vec<usize> = scc.iter().map(|nd| nd.index()).collect();
            v.sort_unstable();
            v
        })
        .collect()
}

// Grassmann–Taksar–Heyman state reduction; `order[0]` must be recurrent and
// reachable from every state.
fn gth(w: &DMatrix<f64>, order: &[usize]) -> Result<DVector<f64>> {
    let n = order.len();
    let mut q = vec![0.0f64; n * n];
    for a in 0..n {
        for b in 0..n {
            if a != b {
                q[a * n + b] = w[(order[b], order[a])].max(0.0);
            }
        }
    }
    for k in (1..n).rev() {
        let s: f64 = q[k * n..k * n + k].iter().sum();
        if !(s > 0.0) {
            return Err(Error::Numerical(format!(
                "state reduction stalled at state {}",
                order[k]
            )));
        }
        for i in 0..k {
            q[i * n + k] /= s;
        }
        let (head, tail) = q.split_at_mut(k * n);
        let row_k = &tail[..k];
        for i in 0..k {
            let f = head[i * n + k];
            if f == 0.0 {
                continue;
            }
            let row_i = &mut head[i * n..i * n + k];
            for (j, x) in row_i.iter_mut().enumerate() {
                *x += f * row_k[j];
            }
            row_i[i] = 0.0;
        }
    }
    let mut pi = vec![0.0f64; n];
    pi[0] = 1.0;
    for k in 1..n {
        pi[k] = (0..k).map(|i| pi[i] * q[i * n + k]).sum();
    }
    let total: f64 = pi.iter().sum();
    let mut p = DVector::zeros(n);
    for (a, &idx) in order.iter().enumerate() {
        p[idx] = pi[a] / total;
    }
    Ok(p)
}

/// Stationary distribution of a rate matrix. Uniqueness is checked by counting
/// closed communicating classes; the distribution itself comes from GTH state
/// reduction, which involves no subtractions and so stays accurate for rates
/// spread over many decades.
pub fn ness_secular(w: &RateMatrix) -> Result<DVector<f64>> {
    let n = w.dim();
    if n == 0 {
        return Err(Error::InvalidArgument("empty rate matrix".into()));
    }
    let classes = closed_classes(&w.w, 1e-24);
    if classes.len() != 1 {
        return Err(Error::NonUniqueSteadyState { dim: classes.len() });
    }
    let root = classes[0][0];
    let order: Vec<usize> = std::iter::once(root)
        .chain((0..n).filter(|&i| i != root))
        .collect();
    let p = gth(&w.w, &order)?;
    let res = w.relative_residual(&p);
    if res > 1e-10 {
        return Err(Error::Numerical(format!(
            "steady-state residual {res:e} too large"
        )));
    }
    Ok(p)
}

/// Kernel vector of a singular `a` normalised so its entries sum to one: the
/// first equation is replaced by the normalisation and the system solved by LU.
pub fn null_vector(a: &DMatrix<f64>) -> Result<DVector<f64>> {
    let n = a.nrows();
    if n == 0 || n != a.ncols() {
        return Err(Error::DimensionMismatch(
            "null_vector needs a non-empty square matrix".into(),
        ));
    }
    let mut m = a.clone();
    m.row_mut(0).fill(1.0);
    let mut rhs = DVector::zeros(n);
    rhs[0] = 1.0;
    m.lu()
        .solve(&rhs)
        .filter(|x| x.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Numerical("bordered kernel system is singular".into()))
}
