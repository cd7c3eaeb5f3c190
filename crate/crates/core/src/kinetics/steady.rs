use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{population_factors, KineticParams};
use crate::error::{invalid, Result};
use crate::lindblad::RateMatrix;

/// Shape of the downward recursion, set by chain length `N` and jump length `m`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum KineticRegime {
    SingleSite,
    /// `m = 0` or `m ≥ N > 1`: no site has a jump partner
    NoJumps,
    /// `2m ≥ N > m`
    Intermediate,
    /// `N > 2m`
    Long,
}

impl KineticRegime {
    pub fn of(n: usize, m: usize) -> Self {
        if n == 1 {
            Self::SingleSite
        } else if m == 0 || m >= n {
            Self::NoJumps
        } else if 2 * m >= n {
            Self::Intermediate
        } else {
            Self::Long
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KineticNess {
    /// `ρ_n = P_n / P_ex`, site 1 first
    pub rho: Vec<f64>,
    pub p_ex: f64,
    pub p_g: f64,
    pub regime: KineticRegime,
}

/// Closed-form steady state: `ρ_N` from the balance of the pumped top site,
/// then each lower site from the sites that feed it.
pub fn kinetic_ness(p: &KineticParams) -> Result<KineticNess> {
    let fac = population_factors(p)?;
    let (n, m) = (p.n_sites, p.jump_length);
    let regime = KineticRegime::of(n, m);
    // 1-based, index n + 1.. unused
    let mut rho = vec![0.0; n + 1];
    match regime {
        KineticRegime::SingleSite => rho[1] = 1.0,
        KineticRegime::NoJumps => {
            rho[n] = p.k_r / (p.k_nn + p.k_r);
            for i in (2..n).rev() {
                rho[i] = fac.nu * rho[i + 1];
            }
            rho[1] = fac.chi * rho[2];
        }
        KineticRegime::Intermediate => {
            rho[n] = p.k_r / (p.k_nn + p.k_j + p.k_r);
            for i in (1..n).rev() {
                rho[i] = if i > m {
                    fac.alpha * rho[i + 1]
                } else if i > n - m {
                    fac.nu * rho[i + 1]
                } else if i > 1 {
                    fac.mu * rho[i + m] + fac.nu * rho[i + 1]
                } else {
                    fac.xi * rho[i + m] + fac.chi * rho[i + 1]
                };
            }
        }
        KineticRegime::Long => {
            rho[n] = p.k_r / (p.k_nn + p.k_j + p.k_r);
            for i in (1..n).rev() {
                rho[i] = if i > n - m {
                    fac.alpha * rho[i + 1]
                } else if i > m {
                    fac.gamma * rho[i + m] + fac.alpha * rho[i + 1]
                } else if i > 1 {
                    fac.mu * rho[i + m] + fac.nu * rho[i + 1]
                } else {
                    fac.xi * rho[i + m] + fac.chi * rho[i + 1]
                };
            }
        }
    }
    rho.remove(0);
    let p_ex = p.k_p / (p.k_r + p.k_p);
    Ok(KineticNess {
        rho,
        p_ex,
        p_g: 1.0 - p_ex,
        regime,
    })
}

/// Steady state below the top of an unbounded chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SemiInfiniteNess {
    /// `ρ` at distance `k` below the top site
    pub rho_from_top: Vec<f64>,
    /// population on sites beyond the computed depth, `1 − Σ ρ`
    pub tail_mass: f64,
}

/// Evaluates at least `2m + 30` sites below the top; deeper sites only
/// contribute `tail_mass`.
pub fn kinetic_ness_semi_infinite(p: &KineticParams, depth: usize) -> Result<SemiInfiniteNess> {
    let fac = population_factors(p)?;
    let m = p.jump_length;
    let len = depth.max(2 * m + 30);
    let mut rho = vec![0.0; len];
    rho[0] = p.k_r / (p.k_nn + p.k_j + p.k_r);
    for k in 1..len {
        rho[k] = if m == 0 || k < m {
            fac.alpha * rho[k - 1]
        } else {
            fac.gamma * rho[k - m] + fac.alpha * rho[k - 1]
        };
    }
    let tail_mass = (1.0 - rho.iter().sum::<f64>()).max(0.0);
    Ok(SemiInfiniteNess {
        rho_from_top: rho,
        tail_mass,
    })
}

/// Generator over `{g, 1, …, N}` (ground first) of the site kinetics.
pub fn kinetic_rate_matrix(p: &KineticParams) -> Result<RateMatrix> {
    kinetic_rate_matrix_with_upward(p, 0.0)
}

/// As [`kinetic_rate_matrix`], with every hop and jump also running uphill at
/// `upward` times its downhill rate.
pub fn kinetic_rate_matrix_with_upward(p: &KineticParams, upward: f64) -> Result<RateMatrix> {
    p.validate()?;
    if !(0.0..=1.0).contains(&upward) {
        return invalid(format!("upward factor must lie in [0, 1], got {upward}"));
    }
    RateMatrix::new(generator(
        p.n_sites,
        p.jump_length,
        [p.k_nn, p.k_j, p.k_r, p.k_p],
        upward,
    ))
}

/// Dense generator for rates `[k_nn, k_j, k_r, k_p]`, without validation.
pub(super) fn generator(n: usize, m: usize, k: [f64; 4], upward: f64) -> DMatrix<f64> {
    let [k_nn, k_j, k_r, k_p] = k;
    let mut w = DMatrix::zeros(n + 1, n + 1);
    let mut flow = |from: usize, to: usize, k: f64| {
        w[(to, from)] += k;
        w[(from, from)] -= k;
    };
    for i in 1..=n {
        if i < n {
            flow(i + 1, i, k_nn);
            flow(i, i + 1, upward * k_nn);
        }
        if m > 0 && i + m <= n {
            flow(i + m, i, k_j);
            flow(i, i + m, upward * k_j);
        }
        flow(i, 0, k_r);
    }
    flow(0, n, k_p);
    w
}

/// Uphill-to-downhill ratio `exp(−Δ / scale)`, which tends to one as the bias vanishes.
pub fn upward_factor(delta: f64, scale: f64) -> Result<f64> {
    if !(scale > 0.0) || delta < 0.0 {
        return invalid("the bias must be non-negative and the scale positive");
    }
    Ok((-delta / scale).exp())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KineticLimits {
    pub ratios: Vec<f64>,
    /// normalised populations for each `R`, site 1 first
    pub rho: Vec<Vec<f64>>,
    pub top_monotone: bool,
}

/// Normalised populations along a grid of `R = r_b / r_r` at fixed `f`, `g`.
pub fn kinetic_limits(
    n_sites: usize,
    jump_length: usize,
    f: f64,
    g: f64,
    ratios: &[f64],
) -> Result<KineticLimits> {
    if ratios.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
        return invalid("R grid must be positive");
    }
    let rho = ratios
        .iter()
        .map(|&r| {
            // only R matters once k_r is the unit
            let p = KineticParams::new(n_sites, jump_length, r * f, r * g, 1.0, 0.1)?;
            Ok(kinetic_ness(&p)?.rho)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut order: Vec<usize> = (0..ratios.len()).collect();
    order.sort_by(|&a, &b| ratios[a].total_cmp(&ratios[b]));
    let top_monotone = order
        .windows(2)
        .all(|w| rho[w[1]][n_sites - 1] <= rho[w[0]][n_sites - 1]);
    Ok(KineticLimits {
        ratios: ratios.to_vec(),
        rho,
        top_monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lindblad::ness_secular;

    fn oracle(p: &KineticParams) -> Vec<f64> {
        let x = ness_secular(&kinetic_rate_matrix(p).unwrap()).unwrap();
        let ex: f64 = x.iter().skip(1).sum();
        x.iter().skip(1).map(|v| v / ex).collect()
    }

    #[test]
    fn regime_dispatch() {
        assert_eq!(KineticRegime::of(1, 3), KineticRegime::SingleSite);
        assert_eq!(KineticRegime::of(4, 0), KineticRegime::NoJumps);
        assert_eq!(KineticRegime::of(3, 3), KineticRegime::NoJumps);
        assert_eq!(KineticRegime::of(4, 2), KineticRegime::Intermediate);
        assert_eq!(KineticRegime::of(5, 2), KineticRegime::Long);
    }

    #[test]
    fn trimer_without_jumps() {
        let p = KineticParams::new(3, 0, 1.0, 0.0, 1.0, 0.3).unwrap();
        let s = kinetic_ness(&p).unwrap();
        assert_eq!(s.rho, vec![0.25, 0.25, 0.5]);
        for (a, b) in s.rho.iter().zip(oracle(&p)) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn single_site() {
        let p = KineticParams::new(1, 0, 0.0, 0.0, 2.0, 0.5).unwrap();
        let s = kinetic_ness(&p).unwrap();
        assert_eq!(s.rho, vec![1.0]);
        assert!((s.p_ex - 0.2).abs() < 1e-15);
        let w = kinetic_rate_matrix(&p).unwrap().w;
        assert_eq!(w, DMatrix::from_row_slice(2, 2, &[-0.5, 2.0, 0.5, -2.0]));
    }

    #[test]
    fn jump_outflow_gated() {
        let p = KineticParams::new(4, 2, 0.0, 1.0, 0.1, 0.01).unwrap();
        let w = kinetic_rate_matrix(&p).unwrap().w;
        // sites 1 and 2 lose population only to recombination
        assert!((w[(1, 1)] + 0.1).abs() < 1e-15);
        assert!((w[(2, 2)] + 0.1).abs() < 1e-15);
        assert!((w[(3, 3)] + 1.1).abs() < 1e-15);
        assert_eq!(w[(1, 3)], 1.0);
    }

    #[test]
    fn jump_dominated_tetramer() {
        let rates = crate::lindblad::BathRates::new(1e-3, 1e-5, 1e-6);
        let p = KineticParams::from_bath(4, 2, &rates, 1e-3, 1.0).unwrap();
        let s = kinetic_ness(&p).unwrap();
        assert!(s.rho[1] > 10.0 * s.rho[2]);
    }

    #[test]
    fn semi_infinite_matches_long_chain_top() {
        let p = KineticParams::new(60, 3, 0.7, 1.3, 2.0, 0.1).unwrap();
        let s = kinetic_ness_semi_infinite(&p, 10).unwrap();
        let fin = kinetic_ness(&p).unwrap();
        assert_eq!(s.rho_from_top.len(), 36);
        for (k, r) in s.rho_from_top.iter().enumerate() {
            assert!((r - fin.rho[59 - k]).abs() < 1e-15);
        }
        // whatever the finite chain holds below the window is the tail
        let below: f64 = fin.rho[..24].iter().sum();
        assert!((s.tail_mass - below).abs() < 1e-12);
        assert!(s.tail_mass < 1e-3);
    }

    #[test]
    fn limits_in_ratio() {
        let l = kinetic_limits(4, 2, 0.02, 0.5, &[1e-9, 1.0, 1e3, 1e9]).unwrap();
        assert!(l.rho[0][3] > 0.999);
        assert!(l.rho[3][0] > 0.99);
        assert!(l.top_monotone);
    }

    #[test]
    fn upward_mode() {
        let p = KineticParams::new(3, 0, 1.0, 0.0, 0.01, 0.001).unwrap();
        let w = kinetic_rate_matrix_with_upward(&p, upward_factor(0.0, 0.1).unwrap()).unwrap();
        let x = ness_secular(&w).unwrap();
        // symmetric hopping with slow recombination spreads the population evenly
        assert!((x[1] - x[3]).abs() < 0.05 * x[3]);
        assert!(kinetic_rate_matrix_with_upward(&p, 1.5).is_err());
    }
}
