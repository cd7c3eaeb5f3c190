//! Zero- and one-exciton Fock space of an N-site chain with one boson mode per site.

use std::collections::HashMap;

use nalgebra_sparse::{CooMatrix, CsrMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

pub type SparseOp = CsrMatrix<f64>;

/// Boson truncation: a cap per mode and an optional cap on the total quanta.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BosonTruncation {
    pub per_mode_max: usize,
    pub total_max: Option<usize>,
}

impl BosonTruncation {
    pub fn per_mode(per_mode_max: usize) -> Self {
        Self {
            per_mode_max,
            total_max: None,
        }
    }

    pub fn with_total(per_mode_max: usize, total_max: usize) -> Self {
        Self {
            per_mode_max,
            total_max: Some(total_max),
        }
    }

    pub fn validate(&self, n_sites: usize) -> Result<()> {
        if let Some(t) = self.total_max {
            if t > n_sites * self.per_mode_max {
                return invalid(format!(
                    "total_max {t} exceeds n_sites * per_mode_max = {}",
                    n_sites * self.per_mode_max
                ));
            }
        }
        Ok(())
    }

    pub fn admits(&self, occ: &[u8]) -> bool {
        occ.iter().all(|&m| (m as usize) <= self.per_mode_max)
            && self
                .total_max
                .is_none_or(|t| occ.iter().map(|&m| m as usize).sum::<usize>() <= t)
    }

    /// Number of admissible occupation vectors over `n_sites` modes.
    pub fn count_occupations(&self, n_sites: usize) -> usize {
        // dp[s] = number of vectors with total s
        let cap = self.total_max.unwrap_or(n_sites * self.per_mode_max);
        let mut dp = vec![0usize; cap + 1];
        dp[0] = 1;
        for _ in 0..n_sites {
            let mut next = vec![0usize; cap + 1];
            for (s, &c) in dp.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                for m in 0..=self.per_mode_max {
                    if s + m > cap {
                        break;
                    }
                    next[s + m] += c;
                }
            }
            dp = next;
        }
        dp.iter().sum()
    }
}

/// Exciton part of a basis state. Sites are numbered from 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Exciton {
    Ground,
    Site(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct BasisState {
    pub exciton: Exciton,
    pub occupations: Vec<u8>,
}

/// Ordered basis: ground first, then one-exciton states sorted by (site, occupations).
#[derive(Clone, Debug)]
pub struct Basis {
    n_sites: usize,
    trunc: BosonTruncation,
    occupations: Vec<Vec<u8>>,
    occ_index: HashMap<Vec<u8>, usize>,
}

pub fn enumerate_basis(n_sites: usize, trunc: BosonTruncation) -> Result<Basis> {
    if n_sites == 0 {
        return invalid("n_sites must be at least 1");
    }
    trunc.validate(n_sites)?;
    if trunc.per_mode_max > u8::MAX as usize {
        return invalid("per_mode_max must fit in u8");
    }
    let mut occupations = Vec::new();
    let mut cur = vec![0u8; n_sites];
    fill_occupations(&trunc, 0, 0, &mut cur, &mut occupations);
    if occupations.is_empty() {
        return invalid("truncation leaves an empty one-exciton sector");
    }
    let occ_index = occupations
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, o)| (o, i))
        .collect();
    Ok(Basis {
        n_sites,
        trunc,
        occupations,
        occ_index,
    })
}

// Depth-first in lexicographic order.
fn fill_occupations(
    trunc: &BosonTruncation,
    pos: usize,
    total: usize,
    cur: &mut Vec<u8>,
    out: &mut Vec<Vec<u8>>,
) {
    if pos == cur.len() {
        out.push(cur.clone());
        return;
    }
    for m in 0..=trunc.per_mode_max {
        if trunc.total_max.is_some_and(|t| total + m > t) {
            break;
        }
        cur[pos] = m as u8;
        fill_occupations(trunc, pos + 1, total + m, cur, out);
    }
    cur[pos] = 0;
}

impl Basis {
    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn truncation(&self) -> BosonTruncation {
        self.trunc
    }

    pub fn dim(&self) -> usize {
        1 + self.n_sites * self.occupations.len()
    }

    pub fn n_occupations(&self) -> usize {
        self.occupations.len()
    }

    pub fn occupation_vectors(&self) -> &[Vec<u8>] {
        &self.occupations
    }

    /// Index of `|site; occ⟩`, `site` from 1.
    pub fn one_exciton_index(&self, site: usize, occ: &[u8]) -> Option<usize> {
        if site == 0 || site > self.n_sites {
            return None;
        }
        self.occ_index
            .get(occ)
            .map(|k| 1 + (site - 1) * self.occupations.len() + k)
    }

    pub fn index_of(&self, state: &BasisState) -> Option<usize> {
        match state.exciton {
            Exciton::Ground => state.occupations.iter().all(|&m| m == 0).then_some(0),
            Exciton::Site(n) => self.one_exciton_index(n, &state.occupations),
        }
    }

    pub fn state(&self, i: usize) -> BasisState {
        assert!(i < self.dim(), "basis index out of range");
        if i == 0 {
            return BasisState {
                exciton: Exciton::Ground,
                occupations: vec![0; self.n_sites],
            };
        }
        let (site, k) = self.site_and_occ(i);
        BasisState {
            exciton: Exciton::Site(site),
            occupations: self.occupations[k].clone(),
        }
    }

    pub fn states(&self) -> impl Iterator<Item = BasisState> + '_ {
        (0..self.dim()).map(|i| self.state(i))
    }

    /// Site (from 1) and occupation-vector index of a one-exciton basis index.
    pub fn site_and_occ(&self, i: usize) -> (usize, usize) {
        debug_assert!(i >= 1 && i < self.dim());
        let j = i - 1;
        (1 + j / self.occupations.len(), j % self.occupations.len())
    }

    pub fn site_of(&self, i: usize) -> Option<usize> {
        (i >= 1 && i < self.dim()).then(|| self.site_and_occ(i).0)
    }

    /// Basis index of `|N; 0⃗⟩`, the state fed by the pump.
    pub fn top_vacuum_index(&self) -> usize {
        1 + (self.n_sites - 1) * self.occupations.len()
    }
}

fn check_site(basis: &Basis, site: usize, what: &str) -> Result<()> {
    if site == 0 || site > basis.n_sites {
        return invalid(format!("{what} {site} outside 1..={}", basis.n_sites));
    }
    Ok(())
}

/// Boson annihilator `a_mode` acting within the one-exciton sector.
pub fn boson_annihilator(basis: &Basis, mode: usize) -> Result<SparseOp> {
    check_site(basis, mode, "mode")?;
    let d = basis.dim();
    let mut coo = CooMatrix::new(d, d);
    let mut lowered = vec![0u8; basis.n_sites];
    for i in 1..d {
        let (site, k) = basis.site_and_occ(i);
        let occ = &basis.occupations[k];
        let m = occ[mode - 1];
        if m == 0 {
            continue;
        }
        lowered.copy_from_slice(occ);
        lowered[mode - 1] -= 1;
        if let Some(j) = basis.one_exciton_index(site, &lowered) {
            coo.push(j, i, (m as f64).sqrt());
        }
    }
    Ok(CsrMatrix::from(&coo))
}

/// Exciton annihilator `c_site`: every `|site; m⃗⟩` maps to the ground state with amplitude 1.
/// Because the ground sector keeps no bosons, `cᵀc` is the site projector only when
/// `per_mode_max = 0`; the recombination channel therefore uses one jump per source
/// state (see [`crate::lindblad::LindbladOp`]), whose summed `LᵀL` is always [`site_projector`].
pub fn exciton_annihilator(basis: &Basis, site: usize) -> Result<SparseOp> {
    check_site(basis, site, "site")?;
    let d = basis.dim();
    let mut coo = CooMatrix::new(d, d);
    let n_occ = basis.occupations.len();
    let start = 1 + (site - 1) * n_occ;
    for i in start..start + n_occ {
        coo.push(0, i, 1.0);
    }
    Ok(CsrMatrix::from(&coo))
}

/// Exciton creator onto the boson vacuum: `|site; 0⃗⟩⟨g|`.
pub fn exciton_creator(basis: &Basis, site: usize) -> Result<SparseOp> {
    check_site(basis, site, "site")?;
    let d = basis.dim();
    let mut coo = CooMatrix::new(d, d);
    let vac = vec![0u8; basis.n_sites];
    let i = basis
        .one_exciton_index(site, &vac)
        .expect("vacuum is always admissible");
    coo.push(i, 0, 1.0);
    Ok(CsrMatrix::from(&coo))
}

/// Projector onto states with the exciton on `site`.
pub fn site_projector(basis: &Basis, site: usize) -> Result<SparseOp> {
    check_site(basis, site, "site")?;
    let d = basis.dim();
    let mut coo = CooMatrix::new(d, d);
    let n_occ = basis.occupations.len();
    let start = 1 + (site - 1) * n_occ;
    for i in start..start + n_occ {
        coo.push(i, i, 1.0);
    }
    Ok(CsrMatrix::from(&coo))
}

pub fn to_dense(op: &SparseOp) -> nalgebra::DMatrix<f64> {
    let mut m = nalgebra::DMatrix::zeros(op.nrows(), op.ncols());
    for (i, j, &v) in op.triplet_iter() {
        m[(i, j)] += v;
    }
    m
}
