use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::steady::generator;
use crate::error::{invalid, Error, Result};
use crate::fockspace::Basis;
use crate::holstein::{site_weight_matrix, EigenSystem};
use crate::lindblad::{
    propagate_sampled, secular_rate_matrix, BathRates, LindbladOp, PropagateOptions,
};

/// Site populations sampled in time; `initial` and every sample list the ground first.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SiteTrajectory {
    pub initial: Vec<f64>,
    pub times: Vec<f64>,
    pub samples: Vec<Vec<f64>>,
}

impl SiteTrajectory {
    /// 40 log-spaced times from `0.1/r_b` to `20/r_r`.
    pub fn default_times(rates: &BathRates) -> Result<Vec<f64>> {
        if !(rates.r_b > 0.0 && rates.r_r > 0.0) {
            return invalid("sampling times need positive r_b and r_r");
        }
        let (a, b) = ((0.1 / rates.r_b).ln(), (20.0 / rates.r_r).ln());
        Ok((0..40)
            .map(|k| (a + (b - a) * k as f64 / 39.0).exp())
            .collect())
    }
}

/// Secular evolution from the dephased top-site vacuum state, coarse-grained to sites.
pub fn secular_site_trajectory(
    es: &EigenSystem,
    basis: &Basis,
    ops: &[LindbladOp],
    times: &[f64],
) -> Result<SiteTrajectory> {
    let w = secular_rate_matrix(es, ops)?;
    let top = basis.top_vacuum_index();
    let p0 = DVector::from_fn(es.dim(), |k, _| es.vectors[(top, k)].powi(2));
    let opts = PropagateOptions {
        rtol: 1e-9,
        atol: 1e-13,
        ..Default::default()
    };
    let tr = propagate_sampled(&w, &p0, times, &opts)?;
    let sw = site_weight_matrix(es, basis)?;
    let coarse = |p: &DVector<f64>| -> Vec<f64> {
        let ground: f64 = (0..es.dim())
            .map(|k| es.vectors[(0, k)].powi(2) * p[k])
            .sum();
        std::iter::once(ground)
            .chain((0..basis.n_sites()).map(|n| sw.column(n).dot(p)))
            .collect()
    };
    Ok(SiteTrajectory {
        initial: coarse(&p0),
        times: tr.times,
        samples: tr.states.iter().map(coarse).collect(),
    })
}

#[derive(Clone, Copy, Debug)]
pub struct FitOptions {
    /// relative RMS misfit above which the fit is flagged
    pub residual_threshold: f64,
    pub max_iters: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            residual_threshold: 0.05,
            max_iters: 500,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub k_nn: f64,
    pub k_j: f64,
    pub f_hat: f64,
    pub g_hat: f64,
    /// `√(Σ misfit² / Σ data²)` over all site samples
    pub residual: f64,
    pub flagged: bool,
}

// Rates below this fraction of r_b are indistinguishable from zero.
const LOG_FLOOR: f64 = -30.0;

struct Problem<'a> {
    data: &'a SiteTrajectory,
    n: usize,
    m: usize,
    rates: BathRates,
}

impl Problem<'_> {
    fn rates_of(&self, theta: &[f64]) -> (f64, f64) {
        let f = theta[0].max(LOG_FLOOR).exp();
        let g = if self.m > 0 {
            theta[1].max(LOG_FLOOR).exp()
        } else {
            0.0
        };
        (self.rates.r_b * f, self.rates.r_b * g)
    }

    fn misfit(&self, k_nn: f64, k_j: f64) -> f64 {
        let w = generator(
            self.n,
            self.m,
            [k_nn, k_j, self.rates.r_r, self.rates.r_p],
            0.0,
        );
        let x0 = DVector::from_column_slice(&self.data.initial);
        let mut s = 0.0;
        for (t, sample) in self.data.times.iter().zip(&self.data.samples) {
            let x = (&w * *t).exp() * &x0;
            for i in 1..=self.n {
                s += (x[i] - sample[i]).powi(2);
            }
        }
        s
    }
}

impl CostFunction for Problem<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, theta: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        let (k_nn, k_j) = self.rates_of(theta);
        Ok(self.misfit(k_nn, k_j))
    }
}

/// Least-squares fit of `k_nn` and `k_j` (searched as `ln f`, `ln g`) so that the
/// kinetic model started from `data.initial` reproduces the sampled site populations.
pub fn infer_kinetic_rates(
    data: &SiteTrajectory,
    n_sites: usize,
    jump_length: usize,
    rates: &BathRates,
    opts: &FitOptions,
) -> Result<RateFit> {
    rates.validate()?;
    if !(rates.r_b > 0.0) {
        return invalid("rate inference needs r_b > 0");
    }
    if data.initial.len() != n_sites + 1 || data.samples.iter().any(|s| s.len() != n_sites + 1) {
        return Err(Error::DimensionMismatch(format!(
            "samples must hold the ground and {n_sites} sites"
        )));
    }
    if data.times.len() != data.samples.len() || data.times.is_empty() {
        return invalid("one sample per time is required");
    }
    let prob = Problem {
        data,
        n: n_sites,
        m: jump_length,
        rates: *rates,
    };
    let starts: &[f64] = &[-4.0, -2.0, 0.0];
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut consider = |theta: Vec<f64>, cost: f64| {
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, theta));
        }
    };
    let dims = if jump_length > 0 { 2 } else { 1 };
    let ln10 = std::f64::consts::LN_10;
    let mut seeds: Vec<Vec<f64>> = Vec::new();
    for &a in starts {
        if dims == 1 {
            seeds.push(vec![a * ln10]);
        } else {
            for &b in starts {
                seeds.push(vec![a * ln10, b * ln10]);
            }
        }
    }
    for seed in seeds {
        let mut simplex = vec![seed.clone()];
        for d in 0..dims {
            let mut v = seed.clone();
            v[d] += 1.0;
            simplex.push(v);
        }
        let solver = NelderMead::new(simplex)
            .with_sd_tolerance(1e-12)
            .map_err(|e| Error::Numerical(format!("fit setup failed: {e}")))?;
        let res = Executor::new(&prob, solver)
            .configure(|s| s.max_iters(opts.max_iters))
            .run()
            .map_err(|e| Error::Numerical(format!("fit failed: {e}")))?;
        let st = res.state();
        if let Some(p) = st.get_best_param() {
            consider(p.clone(), st.get_best_cost());
        }
    }
    let (cost, theta) = best.ok_or_else(|| Error::Numerical("fit produced no estimate".into()))?;
    let (k_nn, k_j) = prob.rates_of(&theta);
    let norm: f64 = data
        .samples
        .iter()
        .flat_map(|s| s[1..].iter())
        .map(|x| x * x)
        .sum();
    let residual = (cost / norm.max(f64::MIN_POSITIVE)).sqrt();
    Ok(RateFit {
        k_nn,
        k_j,
        f_hat: k_nn / rates.r_b,
        g_hat: k_j / rates.r_b,
        residual,
        flagged: !(residual <= opts.residual_threshold),
    })
}

impl CostFunction for &Problem<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, theta: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        (*self).cost(theta)
    }
}

/// Exact kinetic trajectory, used to check the estimator on its own model.
#[cfg(test)]
fn kinetic_trajectory(n: usize, m: usize, k: [f64; 4], times: &[f64]) -> SiteTrajectory {
    let w = generator(n, m, k, 0.0);
    let mut x0 = DVector::zeros(n + 1);
    x0[n] = 1.0;
    let samples = times
        .iter()
        .map(|&t| ((&w * t).exp() * &x0).as_slice().to_vec())
        .collect();
    SiteTrajectory {
        initial: x0.as_slice().to_vec(),
        times: times.to_vec(),
        samples,
    }
}
