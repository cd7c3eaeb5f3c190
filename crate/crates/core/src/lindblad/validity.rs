use serde::{Deserialize, Serialize};

use super::bands::MinibandPartition;
use super::BathRates;
use crate::holstein::EigenSystem;

/// "Much smaller" means at most this fraction.
const MUCH_SMALLER: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SecularRegime {
    /// all level spacings exceed the bath rates
    FullSecular,
    /// spacings inside the bands are small, spacings between them large
    PartialSecular,
    Invalid,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SecularValidity {
    pub r: f64,
    /// smallest spacing between neighbouring bands
    pub omega_inter: f64,
    /// smallest and largest spacing between neighbouring levels in the same band, zero if none
    pub omega_intra_min: f64,
    pub omega_intra_max: f64,
    /// `r` over the smallest spacing of all, and `r` over `omega_inter`
    pub ratios: (f64, f64),
    pub regime: SecularRegime,
}

/// Compares the largest bath rate with the one-exciton level spacings.
/// The ground state is not part of any spacing.
pub fn secular_validity(
    es: &EigenSystem,
    rates: &BathRates,
    bands: &MinibandPartition,
) -> SecularValidity {
    let r = rates.max_rate();
    let mut idx: Vec<usize> = es.one_exciton_range().collect();
    idx.sort_by(|&a, &b| es.energies[a].total_cmp(&es.energies[b]));
    let band_of = bands.band_of(es.dim()).ok();
    let mut inter = f64::INFINITY;
    let (mut intra_min, mut intra_max) = (f64::INFINITY, 0.0f64);
    for w in idx.windows(2) {
        let gap = es.energies[w[1]] - es.energies[w[0]];
        if band_of.as_ref().is_some_and(|b| b[w[0]] == b[w[1]]) {
            intra_min = intra_min.min(gap);
            intra_max = intra_max.max(gap);
        } else {
            inter = inter.min(gap);
        }
    }
    let min_gap = inter.min(intra_min);
    if intra_min.is_infinite() {
        intra_min = 0.0;
    }
    let over = |g: f64| if g.is_finite() { r / g } else { 0.0 };
    let ratios = (over(min_gap), over(inter));
    let regime = if r == 0.0 || ratios.0 <= MUCH_SMALLER {
        SecularRegime::FullSecular
    } else if ratios.1 <= MUCH_SMALLER && intra_max < r {
        SecularRegime::PartialSecular
    } else {
        SecularRegime::Invalid
    };
    SecularValidity {
        r,
        omega_inter: inter,
        omega_intra_min: intra_min,
        omega_intra_max: intra_max,
        ratios,
        regime,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fockspace::{enumerate_basis, BosonTruncation};
    use crate::holstein::{build_hamiltonian, chain_eigensystem, ChainParams};
    use crate::lindblad::minibands;

    fn es(delta: f64) -> EigenSystem {
        let b = enumerate_basis(2, BosonTruncation::per_mode(3)).unwrap();
        let h = build_hamiltonian(&ChainParams::new(2, delta, 0.5, 0.01), &b).unwrap();
        chain_eigensystem(&h, &b).unwrap()
    }

    #[test]
    fn regimes() {
        let e = es(0.45);
        let rates = BathRates::new(1e-4, 1e-6, 1e-7);
        let v = secular_validity(&e, &rates, &MinibandPartition::singletons(e.dim()));
        assert_eq!(v.regime, SecularRegime::FullSecular);
        let v = secular_validity(
            &e,
            &BathRates::new(0.5, 1e-6, 1e-7),
            &MinibandPartition::singletons(e.dim()),
        );
        assert_eq!(v.regime, SecularRegime::Invalid);
        let v = secular_validity(
            &e,
            &BathRates::new(0.0, 0.0, 0.0),
            &MinibandPartition::singletons(e.dim()),
        );
        assert_eq!(v.regime, SecularRegime::FullSecular);
    }

    #[test]
    fn narrow_bands_are_partial() {
        let b = enumerate_basis(3, BosonTruncation::with_total(3, 3)).unwrap();
        let h = build_hamiltonian(&ChainParams::new(3, 0.45, 0.2, 0.01), &b).unwrap();
        let e = chain_eigensystem(&h, &b).unwrap();
        let bands = minibands(&e, 1e-3);
        let v = secular_validity(&e, &BathRates::new(1e-4, 1e-6, 1e-7), &bands);
        assert!(v.omega_intra_max > 0.0 && v.omega_intra_max < 1e-4);
        assert!(v.omega_inter > 1e-3);
        assert_eq!(v.regime, SecularRegime::PartialSecular);
        let v = secular_validity(&e, &BathRates::new(1e-3, 1e-6, 1e-7), &bands);
        assert_eq!(v.regime, SecularRegime::Invalid);
    }
}
