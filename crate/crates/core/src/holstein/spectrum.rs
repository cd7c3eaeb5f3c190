use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{build_hamiltonian, chain_eigensystem, ChainParams, EigenSystem};
use crate::error::{invalid, Error, Result};
use crate::fockspace::{enumerate_basis, to_dense, Basis, BosonTruncation};

/// Lowest one-exciton levels along a Δ grid, with adiabatic labels.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SpectrumTable {
    pub deltas: Vec<f64>,
    /// `energies[i]` ascending at `deltas[i]`.
    pub energies: Vec<Vec<f64>>,
    /// `labels[i][k]`: sorted position at point `i` of tracked level `k`.
    pub labels: Vec<Vec<usize>>,
    /// `link_overlap[i][k]`: squared overlap linking level `k` from point `i-1` to `i`.
    pub link_overlap: Vec<Vec<f64>>,
}

impl SpectrumTable {
    pub fn n_levels(&self) -> usize {
        self.energies.first().map_or(0, |e| e.len())
    }

    pub fn tracked_energy(&self, point: usize, level: usize) -> f64 {
        self.energies[point][self.labels[point][level]]
    }
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return invalid("empty delta grid");
    }
    if grid.iter().any(|&d| !(d > 0.0) || !d.is_finite()) {
        return invalid("delta grid values must be positive");
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("delta grid must be strictly increasing");
    }
    Ok(())
}

fn lowest_levels(
    params: &ChainParams,
    basis: &Basis,
    n_levels: usize,
) -> Result<(Vec<f64>, DMatrix<f64>)> {
    let h = build_hamiltonian(params, basis)?;
    let es = chain_eigensystem(&h, basis)?;
    let r = es.one_exciton_range();
    let n = n_levels.min(r.len());
    let e = es.energies.as_slice()[r.start..r.start + n].to_vec();
    let v = es.vectors.columns(r.start, n).into_owned();
    Ok((e, v))
}

/// Lowest `n_levels` one-exciton energies at each Δ, computed in parallel and
/// then linked point to point by maximal eigenvector overlap.
pub fn spectrum_sweep(
    template: &ChainParams,
    trunc: BosonTruncation,
    delta_grid: &[f64],
    n_levels: usize,
) -> Result<SpectrumTable> {
    check_grid(delta_grid)?;
    if n_levels == 0 {
        return invalid("n_levels must be positive");
    }
    let basis = enumerate_basis(template.n_sites, trunc)?;
    let points = delta_grid
        .par_iter()
        .map(|&d| lowest_levels(&template.with_delta(d), &basis, n_levels))
        .collect::<Result<Vec<_>>>()?;
    let n = points[0].0.len();
    let mut labels = vec![(0..n).collect::<Vec<_>>()];
    let mut link_overlap = vec![vec![1.0; n]];
    for i in 1..points.len() {
        let prev = &points[i - 1].1;
        let cur = &points[i].1;
        let ov = (prev.transpose() * cur).map(|x| x * x);
        // greedy assignment, largest overlaps first
        let mut pairs: Vec<(usize, usize)> =
            (0..n).flat_map(|a| (0..n).map(move |b| (a, b))).collect();
        pairs.sort_by(|&(a, b), &(c, d)| ov[(c, d)].total_cmp(&ov[(a, b)]));
        let mut next_of_prev = vec![usize::MAX; n];
        let mut taken = vec![false; n];
        for (a, b) in pairs {
            if next_of_prev[a] == usize::MAX && !taken[b] {
                next_of_prev[a] = b;
                taken[b] = true;
            }
        }
        let prev_labels = &labels[i - 1];
        let lab: Vec<usize> = prev_labels.iter().map(|&a| next_of_prev[a]).collect();
        let link: Vec<f64> = prev_labels
            .iter()
            .map(|&a| ov[(a, next_of_prev[a])])
            .collect();
        labels.push(lab);
        link_overlap.push(link);
    }
    Ok(SpectrumTable {
        deltas: delta_grid.to_vec(),
        energies: points.into_iter().map(|p| p.0).collect(),
        labels,
        link_overlap,
    })
}

/// Distance from `x` to the nearest fraction `j/m` with `1 <= m <= m_max`,
/// returned with that fraction's numerator and denominator (reduced form).
pub fn nearest_rational(x: f64, m_max: usize) -> (f64, usize, usize) {
    let mut best = (f64::INFINITY, 0, 1);
    for m in 1..=m_max.max(1) {
        let j = (x * m as f64).round().max(0.0) as usize;
        let dist = (x - j as f64 / m as f64).abs();
        if dist < best.0 - 1e-12 {
            best = (dist, j, m);
        }
    }
    best
}

/// Finite-difference slopes of tracked levels on segments farther than
/// `exclusion` from every `j/m` with `m <= m_max` and with a clean overlap link.
/// Returns `(level, midpoint Δ, slope)`.
pub fn level_slopes(table: &SpectrumTable, exclusion: f64, m_max: usize) -> Vec<(usize, f64, f64)> {
    let mut out = Vec::new();
    for i in 1..table.deltas.len() {
        let (d0, d1) = (table.deltas[i - 1], table.deltas[i]);
        if nearest_rational(d0, m_max).0 < exclusion || nearest_rational(d1, m_max).0 < exclusion {
            continue;
        }
        for k in 0..table.n_levels() {
            if table.link_overlap[i][k] < 0.5 {
                continue;
            }
            let s = (table.tracked_energy(i, k) - table.tracked_energy(i - 1, k)) / (d1 - d0);
            out.push((k, 0.5 * (d0 + d1), s));
        }
    }
    out
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CrossingOptions {
    pub lambda: f64,
    pub j_hop: f64,
    pub m_max: usize,
    /// ceiling is `max(ceiling_factor * λ (J/Δ)^m, floor)`
    pub ceiling_factor: f64,
    pub floor: f64,
    /// a minimum must be below `contrast` times both neighbouring gaps
    pub contrast: f64,
}

impl CrossingOptions {
    pub fn new(lambda: f64, j_hop: f64) -> Self {
        Self {
            lambda,
            j_hop,
            m_max: 4,
            ceiling_factor: 10.0,
            floor: 1e-10,
            contrast: 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    pub delta_star: f64,
    pub gap: f64,
    pub jump_length: usize,
    pub numerator: usize,
    /// sorted positions of the pair at `delta_star`
    pub level_index: usize,
    pub upper_index: usize,
}

/// Local minima of the gap between any two tracked levels, below the resonance
/// ceiling. Tracking by overlap keeps a level's identity while it passes through
/// a cluster of nearly degenerate spectators, which sorted neighbours would not.
pub fn detect_avoided_crossings(
    table: &SpectrumTable,
    opts: &CrossingOptions,
) -> Vec<CrossingReport> {
    let mut out = Vec::new();
    let np = table.deltas.len();
    if np < 3 {
        return out;
    }
    let nl = table.n_levels();
    for a in 0..nl {
        for b in a + 1..nl {
            let gap = |i: usize| (table.tracked_energy(i, b) - table.tracked_energy(i, a)).abs();
            for i in 1..np - 1 {
                let (g0, g, g1) = (gap(i - 1), gap(i), gap(i + 1));
                // one side may tie so that exact degeneracies next to a plateau still count
                let is_min = (g < g0 && g <= g1) || (g <= g0 && g < g1);
                if !is_min || g > opts.contrast * g0.min(g1) {
                    continue;
                }
                let delta = table.deltas[i];
                let (_, j, m) = nearest_rational(delta, opts.m_max);
                let scale = opts.lambda.abs() * (opts.j_hop.abs() / delta).powi(m as i32);
                let ceiling = (opts.ceiling_factor * scale).max(opts.floor);
                if g <= ceiling {
                    let (la, lb) = (table.labels[i][a], table.labels[i][b]);
                    out.push(CrossingReport {
                        delta_star: delta,
                        gap: g,
                        jump_length: m,
                        numerator: j,
                        level_index: la.min(lb),
                        upper_index: la.max(lb),
                    });
                }
            }
        }
    }
    out.sort_by(|a, b| {
        a.delta_star
            .total_cmp(&b.delta_star)
            .then(a.level_index.cmp(&b.level_index))
    });
    out.dedup_by(|a, b| {
        a.delta_star == b.delta_star
            && a.level_index == b.level_index
            && a.upper_index == b.upper_index
    });
    out
}

fn one_exciton_energies(params: &ChainParams, basis: &Basis, upto: usize) -> Result<Vec<f64>> {
    let h = to_dense(&build_hamiltonian(params, basis)?);
    let d = basis.dim();
    let m = faer::Mat::<f64>::from_fn(d - 1, d - 1, |i, j| h[(i + 1, j + 1)]);
    let mut e = m
        .self_adjoint_eigenvalues(faer::Side::Lower)
        .map_err(|e| Error::Numerical(format!("eigensolver failed: {e:?}")))?;
    e.truncate(upto);
    Ok(e)
}

/// Golden-section minimisation of the reported pair's gap within
/// `delta_star ± half_width`.
pub fn refine_crossing(
    template: &ChainParams,
    trunc: BosonTruncation,
    report: &CrossingReport,
    half_width: f64,
) -> Result<CrossingReport> {
    let basis = enumerate_basis(template.n_sites, trunc)?;
    let (k, u) = (report.level_index, report.upper_index);
    let gap = |d: f64| -> Result<f64> {
        let e = one_exciton_energies(&template.with_delta(d), &basis, u + 1)?;
        Ok(e[u] - e[k])
    };
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = (report.delta_star - half_width).max(f64::MIN_POSITIVE);
    let mut b = report.delta_star + half_width;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (gap(c)?, gap(d)?);
    for _ in 0..80 {
        if (b - a) < 1e-13 * report.delta_star.max(1.0) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = gap(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = gap(d)?;
        }
    }
    let (x, g) = if fc < fd { (c, fc) } else { (d, fd) };
    if g < report.gap {
        Ok(CrossingReport {
            delta_star: x,
            gap: g.max(0.0),
            ..*report
        })
    } else {
        Ok(*report)
    }
}

/// Energy splitting between the eigenstate carrying the most weight of the
/// pumped state `|N; 0⟩` and its partner, the state with the next largest weight
/// within a quarter boson energy. At a resonance these are the hybridised pair.
pub fn pump_state_splitting(params: &ChainParams, basis: &Basis) -> Result<f64> {
    let es = chain_eigensystem(&build_hamiltonian(params, basis)?, basis)?;
    let top = basis.top_vacuum_index();
    let weight = |k: usize| es.vectors[(top, k)].powi(2);
    let by_weight = |a: &usize, b: &usize| weight(*a).total_cmp(&weight(*b));
    let main = es
        .one_exciton_range()
        .max_by(by_weight)
        .ok_or_else(|| Error::Numerical("no one-exciton states".into()))?;
    let e0 = es.energies[main];
    let partner = es
        .one_exciton_range()
        .filter(|&k| k != main && (es.energies[k] - e0).abs() < 0.25)
        .max_by(by_weight);
    match partner {
        Some(k) => Ok((es.energies[k] - e0).abs()),
        None => invalid("the pumped state has no partner within a quarter boson energy"),
    }
}

/// Smallest [`pump_state_splitting`] within `center ± half_width`: a scan on
/// `step`, then golden-section refinement around the best grid point.
/// Returns `(Δ*, splitting)`.
pub fn min_pump_splitting(
    template: &ChainParams,
    trunc: BosonTruncation,
    center: f64,
    half_width: f64,
    step: f64,
) -> Result<(f64, f64)> {
    if !(step > 0.0 && half_width >= step && center - half_width > 0.0) {
        return invalid("scan window must be positive and hold at least one step");
    }
    let basis = enumerate_basis(template.n_sites, trunc)?;
    let split = |d: f64| pump_state_splitting(&template.with_delta(d), &basis);
    let n = (2.0 * half_width / step).round() as usize;
    let scan = (0..=n)
        .into_par_iter()
        .map(|k| {
            let d = center - half_width + k as f64 * step;
            split(d).map(|g| (d, g))
        })
        .collect::<Result<Vec<_>>>()?;
    let (d0, _) = scan
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap_or((center, 0.0));
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (d0 - step, d0 + step);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (split(c)?, split(d)?);
    for _ in 0..80 {
        if b - a < 1e-13 * center.max(1.0) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = split(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = split(d)?;
        }
    }
    Ok(if fc < fd { (c, fc) } else { (d, fd) })
}

/// Site weights of every eigenvector: entry `(k, n)` is the exciton weight of
/// eigenvector `k` on site `n + 1`. The ground row is zero.
pub fn site_weight_matrix(es: &EigenSystem, basis: &Basis) -> Result<DMatrix<f64>> {
    let d = basis.dim();
    if es.vectors.nrows() != d {
        return Err(Error::DimensionMismatch(format!(
            "eigenvectors have {} rows, basis has dimension {d}",
            es.vectors.nrows()
        )));
    }
    let n = basis.n_sites();
    let mut w = DMatrix::zeros(es.vectors.ncols(), n);
    for k in 0..es.vectors.ncols() {
        let col = es.vectors.column(k);
        for i in 1..d {
            let site = basis.site_and_occ(i).0;
            w[(k, site - 1)] += col[i] * col[i];
        }
    }
    Ok(w)
}

/// Site populations of the one-exciton eigenstates, one row per eigenstate.
pub fn eigenstate_site_populations(es: &EigenSystem, basis: &Basis) -> Result<DMatrix<f64>> {
    let w = site_weight_matrix(es, basis)?;
    let r = es.one_exciton_range();
    let rows = w.rows(r.start, r.len()).into_owned();
    for (k, row) in rows.row_iter().enumerate() {
        if row.sum() < 0.5 {
            return invalid(format!(
                "eigenvector {} has no one-exciton weight",
                r.start + k
            ));
        }
    }
    Ok(rows)
}

/// Inverse participation ratio `1 / Σ w_n²`.
pub fn ipr(site_weights: &[f64]) -> Result<f64> {
    if site_weights.iter().any(|&w| w < 0.0 || !w.is_finite()) {
        return invalid("site weights must be non-negative");
    }
    let s: f64 = site_weights.iter().sum();
    if (s - 1.0).abs() > 1e-8 {
        return invalid(format!("site weights sum to {s}, not 1"));
    }
    Ok(1.0 / site_weights.iter().map(|w| w * w).sum::<f64>())
}

/// Lowest Δ-crossing report within `tol` of `target`, preferring the lowest level pair.
pub fn crossing_near(reports: &[CrossingReport], target: f64, tol: f64) -> Option<&CrossingReport> {
    reports
        .iter()
        .filter(|r| (r.delta_star - target).abs() <= tol)
        .min_by_key(|r| r.level_index)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(a: f64, b: f64, step: f64) -> Vec<f64> {
        let n = ((b - a) / step).round() as usize;
        (0..=n).map(|i| a + i as f64 * step).collect()
    }

    #[test]
    fn ipr_values() {
        assert_eq!(ipr(&[1.0, 0.0, 0.0]).unwrap(), 1.0);
        assert!((ipr(&[0.25; 4]).unwrap() - 4.0).abs() < 1e-14);
        assert!((ipr(&[0.5, 0.5, 0.0, 0.0]).unwrap() - 2.0).abs() < 1e-14);
        assert!(ipr(&[1.5, -0.5]).is_err());
    }

    #[test]
    fn uncoupled_levels_are_lines() {
        let p = ChainParams::new(2, 0.3, 0.0, 0.0);
        let t = spectrum_sweep(&p, BosonTruncation::per_mode(1), &grid(0.1, 0.4, 0.01), 8).unwrap();
        for (_, _, slope) in level_slopes(&t, 0.0, 1) {
            assert!((slope - slope.round()).abs() < 1e-9 && slope.round() >= 1.0);
        }
        assert!(spectrum_sweep(&p, BosonTruncation::per_mode(1), &[], 3).is_err());
        assert!(spectrum_sweep(&p, BosonTruncation::per_mode(1), &[0.2, 0.1], 3).is_err());
    }

    #[test]
    fn exact_crossings_without_coupling() {
        let p = ChainParams::new(2, 0.3, 0.0, 0.0);
        let t = spectrum_sweep(&p, BosonTruncation::per_mode(1), &grid(0.8, 1.2, 0.01), 8).unwrap();
        let rep = detect_avoided_crossings(&t, &CrossingOptions::new(0.0, 0.0));
        assert!(!rep.is_empty());
        for r in &rep {
            assert!((r.delta_star - 1.0).abs() < 1e-9);
            assert!(r.gap < 1e-10);
        }
    }

    #[test]
    fn nearest_rational_reduced() {
        let (d, j, m) = nearest_rational(0.5, 4);
        assert_eq!((j, m), (1, 2));
        assert!(d < 1e-15);
        assert_eq!(nearest_rational(0.66, 4).2, 3);
        assert_eq!(nearest_rational(1.0, 4).2, 1);
    }
}
