//! Coarse-grained site kinetics: downhill nearest-neighbour hops at `k_nn`,
//! resonant `m`-site jumps at `k_j`, recombination `k_r` and pumping `k_p` into the top site.

mod fit;
mod steady;

pub use fit::{infer_kinetic_rates, secular_site_trajectory, FitOptions, RateFit, SiteTrajectory};
pub use steady::{
    kinetic_limits, kinetic_ness, kinetic_ness_semi_infinite, kinetic_rate_matrix,
    kinetic_rate_matrix_with_upward, upward_factor, KineticLimits, KineticNess, KineticRegime,
    SemiInfiniteNess,
};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::lindblad::{fmt17, BathRates};

pub const KINETIC_CSV_HEADER: &str = "N,m,k_nn,k_j,k_r,k_p,site,rho";

/// Rates carry units of the boson frequency; `m = 0` is the off-resonant model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KineticParams {
    pub n_sites: usize,
    pub jump_length: usize,
    pub k_nn: f64,
    pub k_j: f64,
    pub k_r: f64,
    pub k_p: f64,
}

impl KineticParams {
    pub fn new(
        n_sites: usize,
        jump_length: usize,
        k_nn: f64,
        k_j: f64,
        k_r: f64,
        k_p: f64,
    ) -> Result<Self> {
        let p = Self {
            n_sites,
            jump_length,
            k_nn,
            k_j,
            k_r,
            k_p,
        };
        p.validate()?;
        Ok(p)
    }

    /// `k_r = r_r`, `k_p = r_p`, `k_nn = r_b f`, `k_j = r_b g`.
    pub fn from_bath(
        n_sites: usize,
        jump_length: usize,
        rates: &BathRates,
        f: f64,
        g: f64,
    ) -> Result<Self> {
        Self::new(
            n_sites,
            jump_length,
            rates.r_b * f,
            rates.r_b * g,
            rates.r_r,
            rates.r_p,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_sites == 0 {
            return invalid("the chain needs at least one site");
        }
        for (name, v) in [("k_nn", self.k_nn), ("k_j", self.k_j)] {
            if !(v >= 0.0 && v.is_finite()) {
                return invalid(format!("{name} must be finite and non-negative, got {v}"));
            }
        }
        for (name, v) in [("k_r", self.k_r), ("k_p", self.k_p)] {
            if !(v > 0.0 && v.is_finite()) {
                return invalid(format!("{name} must be finite and positive, got {v}"));
            }
        }
        if self.jump_length == 0 && self.k_j != 0.0 {
            return invalid("k_j must vanish without a jump length");
        }
        Ok(())
    }

    /// Whether any site has a jump partner `m` sites below it.
    pub fn jumps_active(&self) -> bool {
        self.jump_length > 0 && self.k_j > 0.0 && self.n_sites > self.jump_length
    }

    pub fn csv_rows(&self, rho: &[f64]) -> Vec<String> {
        rho.iter()
            .enumerate()
            .map(|(k, r)| {
                format!(
                    "{},{},{},{},{},{},{},{}",
                    self.n_sites,
                    self.jump_length,
                    fmt17(self.k_nn),
                    fmt17(self.k_j),
                    fmt17(self.k_r),
                    fmt17(self.k_p),
                    k + 1,
                    fmt17(*r)
                )
            })
            .collect()
    }
}

/// Ratios entering the downward recursion for the normalised populations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PopulationFactors {
    pub alpha: f64,
    pub gamma: f64,
    pub mu: f64,
    pub nu: f64,
    pub xi: f64,
    pub chi: f64,
}

pub fn population_factors(p: &KineticParams) -> Result<PopulationFactors> {
    p.validate()?;
    let (knn, kj, kr) = (p.k_nn, p.k_j, p.k_r);
    Ok(PopulationFactors {
        alpha: knn / (kj + knn + kr),
        gamma: kj / (kj + knn + kr),
        mu: kj / (knn + kr),
        nu: knn / (knn + kr),
        xi: kj / kr,
        chi: knn / kr,
    })
}

/// The same factors written through `f = k_nn/r_b`, `g = k_j/r_b` and `R = r_b/r_r`.
pub fn population_factors_from_ratio(f: f64, g: f64, ratio: f64) -> Result<PopulationFactors> {
    if !(f >= 0.0 && g >= 0.0 && ratio > 0.0) || !(f + g + ratio).is_finite() {
        return invalid("f and g must be non-negative and R positive");
    }
    let inv = 1.0 / ratio;
    Ok(PopulationFactors {
        alpha: f / (f + g + inv),
        gamma: g / (f + g + inv),
        mu: g / (f + inv),
        nu: f / (f + inv),
        xi: g * ratio,
        chi: f * ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn factors_without_jumps() {
        let p = KineticParams::new(3, 0, 2.0, 0.0, 2.0, 1.0).unwrap();
        let f = population_factors(&p).unwrap();
        assert_eq!(
            (f.nu, f.chi, f.gamma, f.mu, f.xi),
            (0.5, 1.0, 0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn ratio_form() {
        let f = population_factors_from_ratio(1.0, 1.0, 1.0).unwrap();
        assert_relative_eq!(f.alpha, 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(f.gamma, 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!((f.mu, f.nu, f.xi, f.chi), (0.5, 0.5, 1.0, 1.0));
        let f = population_factors_from_ratio(0.3, 0.3, 1e12).unwrap();
        assert_relative_eq!(f.alpha, 0.5, epsilon = 1e-11);
        assert_relative_eq!(f.nu, 1.0, epsilon = 1e-11);
    }

    #[test]
    fn both_forms_agree() {
        let rates = BathRates::new(1e-3, 1e-5, 1e-6);
        let p = KineticParams::from_bath(5, 2, &rates, 0.04, 0.7).unwrap();
        let a = population_factors(&p).unwrap();
        let b = population_factors_from_ratio(0.04, 0.7, 100.0).unwrap();
        for (x, y) in [
            (a.alpha, b.alpha),
            (a.gamma, b.gamma),
            (a.mu, b.mu),
            (a.nu, b.nu),
            (a.xi, b.xi),
            (a.chi, b.chi),
        ] {
            assert_relative_eq!(x, y, max_relative = 1e-12);
        }
    }

    #[test]
    fn invariants_enforced() {
        assert!(KineticParams::new(3, 0, 1.0, 0.5, 1.0, 1.0).is_err());
        assert!(KineticParams::new(3, 1, 1.0, 0.5, 0.0, 1.0).is_err());
        assert!(KineticParams::new(0, 1, 1.0, 0.5, 1.0, 1.0).is_err());
        let p = KineticParams::new(3, 1, 1.0, 0.5, 1.0, 1.0).unwrap();
        assert_eq!(p.csv_rows(&[0.2, 0.3, 0.5]).len(), 3);
        assert_eq!(
            KINETIC_CSV_HEADER.split(',').count(),
            p.csv_rows(&[1.0])[0].split(',').count()
        );
    }
}
