use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::{CooMatrix, CsrMatrix};
use serde::{Deserialize, Serialize};

use super::secular::{eigen_jumps, ness_secular, null_vector, EigenJump, RateMatrix};
use super::{LindbladOp, C64};
use crate::error::{Error, Result};
use crate::holstein::EigenSystem;
use crate::linalg::{gemm, numerical_kernel_dim, singular_values};

/// Coherence parameters above this count make the Schur-complement solve too costly.
const MAX_COHERENCE_PARAMS: usize = 4000;

/// Groups of nearly degenerate eigenstates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinibandPartition {
    pub groups: Vec<Vec<usize>>,
    pub threshold: f64,
}

impl MinibandPartition {
    pub fn singletons(d: usize) -> Self {
        Self {
            groups: (0..d).map(|i| vec![i]).collect(),
            threshold: 0.0,
        }
    }

    pub fn single_band(d: usize) -> Self {
        Self {
            groups: vec![(0..d).collect()],
            threshold: f64::INFINITY,
        }
    }

    /// Band index of each state; errors on overlap or missing states.
    pub fn band_of(&self, d: usize) -> Result<Vec<usize>> {
        let mut of = vec![usize::MAX; d];
        for (g, group) in self.groups.iter().enumerate() {
            for &i in group {
                if i >= d {
                    return Err(Error::InvalidArgument(format!(
                        "band state {i} outside dimension {d}"
                    )));
                }
                if of[i] != usize::MAX {
                    return Err(Error::InvalidArgument(format!(
                        "state {i} appears in two bands"
                    )));
                }
                of[i] = g;
            }
        }
        if let Some(i) = of.iter().position(|&g| g == usize::MAX) {
            return Err(Error::InvalidArgument(format!("state {i} is in no band")));
        }
        Ok(of)
    }
}

/// Single-linkage clustering of the energy ladder: neighbouring levels closer
/// than `threshold` share a band. The ground state of a chain eigensystem is
/// always its own band.
pub fn minibands(es: &EigenSystem, threshold: f64) -> MinibandPartition {
    let r = es.one_exciton_range();
    let mut groups: Vec<Vec<usize>> = (0..r.start).map(|i| vec![i]).collect();
    let mut idx: Vec<usize> = r.collect();
    idx.sort_by(|&a, &b| es.energies[a].total_cmp(&es.energies[b]));
    for (n, &i) in idx.iter().enumerate() {
        if n > 0 && es.energies[i] - es.energies[idx[n - 1]] < threshold {
            groups.last_mut().unwrap().push(i);
        } else {
            groups.push(vec![i]);
        }
    }
    MinibandPartition { groups, threshold }
}

/// Generator on eigenbasis populations plus the real and imaginary parts of
/// coherences inside each band; every other coherence is dropped.
///
/// Parameters: `p_0..p_{d-1}`, then `Re ρ_ij, Im ρ_ij` for each `pairs[q] = (i, j)`, `i < j`.
#[derive(Clone, Debug)]
pub struct BandGenerator {
    pub d: usize,
    pub pairs: Vec<(usize, usize)>,
    pub matrix: CsrMatrix<f64>,
    /// largest `|K_ik| / √(K_ii K_kk)` over intra-band pairs, `K = Σ L†L`
    pub intraband_gram_ratio: f64,
}

impl BandGenerator {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }
}

#[derive(Clone, Debug)]
pub struct BandSteadyState {
    pub populations: DVector<f64>,
    /// steady state in the eigenbasis
    pub rho_eigen: DMatrix<C64>,
}

impl BandSteadyState {
    pub fn rho_fock(&self, es: &EigenSystem) -> DMatrix<C64> {
        let v = es.vectors.map(|x| C64::new(x, 0.0));
        &v * &self.rho_eigen * v.transpose()
    }
}

struct FamilyData {
    rate: f64,
    row: DVector<f64>,
    sources: Vec<usize>,
}

pub fn partial_secular_generator(
    es: &EigenSystem,
    ops: &[LindbladOp],
    bands: &MinibandPartition,
) -> Result<BandGenerator> {
    let d = es.dim();
    let band_of = bands.band_of(d)?;
    let jumps = eigen_jumps(es, ops)?;
    let mut dense = Vec::new();
    let mut fams = Vec::new();
    for j in jumps {
        match j {
            EigenJump::Dense(m) => dense.push(m),
            EigenJump::Collapse { rate, row, sources } => {
                fams.push(FamilyData { rate, row, sources })
            }
        }
    }
    let v = &es.vectors;
    // projector of each family's sources, needed on retained pairs only
    let fam_proj = |f: &FamilyData, c: usize, e: usize| -> f64 {
        f.sources.iter().map(|&s| v[(s, c)] * v[(s, e)]).sum()
    };

    let mut pairs = Vec::new();
    for g in &bands.groups {
        let mut s = g.clone();
        s.sort_unstable();
        for a in 0..s.len() {
            for b in a + 1..s.len() {
                pairs.push((s[a], s[b]));
            }
        }
    }
    let n_c = 2 * pairs.len();
    let pair_index: HashMap<(usize, usize), usize> =
        pairs.iter().enumerate().map(|(q, &p)| (p, q)).collect();

    // family projector entries on all retained (c, e), c <= e
    let mut proj: Vec<HashMap<(usize, usize), f64>> = vec![HashMap::new(); fams.len()];
    for (fi, f) in fams.iter().enumerate() {
        for c in 0..d {
            proj[fi].insert((c, c), fam_proj(f, c, c));
        }
        for &(c, e) in &pairs {
            proj[fi].insert((c, e), fam_proj(f, c, e));
        }
    }
    let p_of = |fi: usize, c: usize, e: usize| -> f64 {
        let key = if c <= e { (c, e) } else { (e, c) };
        proj[fi][&key]
    };
    // K = Σ L†L on retained pairs
    let mut gram: HashMap<(usize, usize), f64> = HashMap::new();
    let keys: Vec<(usize, usize)> = (0..d)
        .map(|i| (i, i))
        .chain(pairs.iter().copied())
        .collect();
    for &(a, c) in &keys {
        let mut k: f64 = dense.iter().map(|le| le.column(a).dot(&le.column(c))).sum();
        for (fi, f) in fams.iter().enumerate() {
            k += f.rate * p_of(fi, a, c);
        }
        gram.insert((a, c), k);
    }
    let k_of = |a: usize, c: usize| -> f64 {
        let key = if a <= c { (a, c) } else { (c, a) };
        gram.get(&key).copied().unwrap_or(0.0)
    };
    let mut ratio: f64 = 0.0;
    for &(a, c) in &pairs {
        let den = (k_of(a, a) * k_of(c, c)).sqrt();
        if den > 0.0 {
            ratio = ratio.max(k_of(a, c).abs() / den);
        }
    }

    // sandwich coefficient Σ_α L_ac L_be over jumps
    let sandwich = |a: usize, b: usize, c: usize, e: usize| -> f64 {
        let mut s: f64 = dense.iter().map(|le| le[(a, c)] * le[(b, e)]).sum();
        for (fi, f) in fams.iter().enumerate() {
            let t = f.row[a] * f.row[b];
            if t != 0.0 {
                s += f.rate * t * p_of(fi, c, e);
            }
        }
        s
    };

    // complex coefficient of ρ_ce in ρ̇_ab (real here), without the Hamiltonian part
    let coeff = |a: usize, b: usize, c: usize, e: usize| -> f64 {
        let mut g = sandwich(a, b, c, e);
        if e == b && band_of[a] == band_of[c] {
            g -= 0.5 * k_of(a, c);
        }
        if c == a && band_of[e] == band_of[b] {
            g -= 0.5 * k_of(e, b);
        }
        g
    };

    // sources: every retained ordered element
    let mut sources: Vec<(usize, usize)> = (0..d).map(|i| (i, i)).collect();
    for &(i, j) in &pairs {
        sources.push((i, j));
        sources.push((j, i));
    }
    let dim = d + n_c;
    let mut coo = CooMatrix::new(dim, dim);
    let col_of = |c: usize, e: usize| -> (usize, f64) {
        // parameter column and sign of the imaginary part
        if c == e {
            (c, 0.0)
        } else if c < e {
            (d + 2 * pair_index[&(c, e)], 1.0)
        } else {
            (d + 2 * pair_index[&(e, c)], -1.0)
        }
    };
    // population rows
    for a in 0..d {
        for &(c, e) in &sources {
            let g = coeff(a, a, c, e);
            if g == 0.0 {
                continue;
            }
            let (col, _) = col_of(c, e);
            coo.push(a, col, g);
        }
    }
    // coherence rows
    for (q, &(a, b)) in pairs.iter().enumerate() {
        let rx = d + 2 * q;
        let ry = rx + 1;
        for &(c, e) in &sources {
            let g = coeff(a, b, c, e);
            if g == 0.0 {
                continue;
            }
            let (col, sign) = col_of(c, e);
            coo.push(rx, col, g);
            if sign != 0.0 {
                coo.push(ry, col + 1, sign * g);
            }
        }
        let w = es.energies[a] - es.energies[b];
        if w != 0.0 {
            coo.push(rx, ry, w);
            coo.push(ry, rx, -w);
        }
    }
    Ok(BandGenerator {
        d,
        pairs,
        matrix: CsrMatrix::from(&coo),
        intraband_gram_ratio: ratio,
    })
}

impl BandGenerator {
    /// Steady state by eliminating the coherences,
    /// `W_eff = A_pp − A_pc A_cc⁻¹ A_cp`, then solving for the kernel of `W_eff`.
    pub fn steady_state(&self) -> Result<BandSteadyState> {
        let d = self.d;
        let n_c = self.dim() - d;
        if n_c > MAX_COHERENCE_PARAMS {
            return Err(Error::Infeasible(format!(
                "{n_c} coherence parameters exceed the limit {MAX_COHERENCE_PARAMS}"
            )));
        }
        let mut a_pp = DMatrix::<f64>::zeros(d, d);
        let mut a_pc = DMatrix::<f64>::zeros(d, n_c);
        let mut a_cp = DMatrix::<f64>::zeros(n_c, d);
        let mut a_cc = DMatrix::<f64>::zeros(n_c, n_c);
        for (i, j, &v) in self.matrix.triplet_iter() {
            match (i < d, j < d) {
                (true, true) => a_pp[(i, j)] += v,
                (true, false) => a_pc[(i, j - d)] += v,
                (false, true) => a_cp[(i - d, j)] += v,
                (false, false) => a_cc[(i - d, j - d)] += v,
            }
        }
        let x = if n_c > 0 {
            a_cc.clone()
                .lu()
                .solve(&a_cp)
                .ok_or_else(|| Error::Numerical("coherence block is singular".into()))?
        } else {
            DMatrix::zeros(0, d)
        };
        let w_eff = if n_c > 0 {
            &a_pp - gemm(&a_pc, &x)
        } else {
            a_pp
        };
        let p = steady_populations(w_eff)?;
        let c = -(&x * &p);
        let mut rho = DMatrix::<C64>::zeros(d, d);
        for i in 0..d {
            rho[(i, i)] = C64::new(p[i], 0.0);
        }
        for (q, &(i, j)) in self.pairs.iter().enumerate() {
            let z = C64::new(c[2 * q], c[2 * q + 1]);
            rho[(i, j)] = z;
            rho[(j, i)] = z.conj();
        }
        let rho = super::full::clean_density(rho)?;
        Ok(BandSteadyState {
            populations: p,
            rho_eigen: rho,
        })
    }
}

fn steady_populations(mut w: DMatrix<f64>) -> Result<DVector<f64>> {
    let d = w.nrows();
    let scale = w.amax();
    let mut min_off = 0.0f64;
    for j in 0..d {
        for i in 0..d {
            if i != j {
                min_off = min_off.min(w[(i, j)]);
            }
        }
    }
    if min_off >= -1e-14 * scale {
        // a proper rate matrix up to rounding
        for j in 0..d {
            for i in 0..d {
                if i != j && w[(i, j)] < 0.0 {
                    w[(i, j)] = 0.0;
                }
            }
        }
        return ness_secular(&RateMatrix::from_offdiagonal(w));
    }
    let sv = singular_values(&w)?;
    let dim = numerical_kernel_dim(&sv, 1e-12);
    if dim > 1 {
        return Err(Error::NonUniqueSteadyState { dim });
    }
    let mut p = null_vector(&w)?;
    let min = p.min();
    if min < -1e-10 {
        return Err(Error::Numerical(format!(
            "steady-state population {min:e} is negative"
        )));
    }
    p.apply(|x| *x = x.max(0.0));
    let s = p.sum();
    Ok(p / s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{enumerate_basis, BosonTruncation};
    use crate::holstein::{build_hamiltonian, chain_eigensystem, ChainParams};
    use crate::lindblad::{build_lindblad_ops, secular_rate_matrix, BathRates};

    #[test]
    fn partition_checks() {
        let p = MinibandPartition {
            groups: vec![vec![0, 1], vec![1, 2]],
            threshold: 0.1,
        };
        assert!(p.band_of(3).is_err());
        let p = MinibandPartition {
            groups: vec![vec![0], vec![2]],
            threshold: 0.1,
        };
        assert!(p.band_of(3).is_err());
    }

    #[test]
    fn singleton_bands_reproduce_secular() {
        let b = enumerate_basis(2, BosonTruncation::per_mode(2)).unwrap();
        let h = build_hamiltonian(&ChainParams::new(2, 0.45, 0.4, 0.01), &b).unwrap();
        let es = chain_eigensystem(&h, &b).unwrap();
        let ops = build_lindblad_ops(&b, &BathRates::new(1e-3, 1e-5, 1e-6)).unwrap();
        let w = secular_rate_matrix(&es, &ops).unwrap();
        let g =
            partial_secular_generator(&es, &ops, &MinibandPartition::singletons(b.dim())).unwrap();
        assert_eq!(g.dim(), b.dim());
        let mut a = DMatrix::zeros(g.dim(), g.dim());
        for (i, j, &v) in g.matrix.triplet_iter() {
            a[(i, j)] += v;
        }
        assert!((a - &w.w).amax() < 1e-14 * w.w.amax());
    }

    #[test]
    fn bands_follow_gaps() {
        let b = enumerate_basis(2, BosonTruncation::per_mode(1)).unwrap();
        let h = build_hamiltonian(&ChainParams::new(2, 0.3, 0.0, 0.0), &b).unwrap();
        let es = chain_eigensystem(&h, &b).unwrap();
        let p = minibands(&es, 1e-6);
        // degenerate one-boson levels share a band
        assert_eq!(p.groups[0], vec![0]);
        assert!(p.groups.iter().any(|g| g.len() == 2));
        assert_eq!(p.band_of(b.dim()).unwrap().len(), b.dim());
    }
}
