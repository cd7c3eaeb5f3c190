use holstein_core::fockspace::Basis;
use holstein_core::holstein::{build_hamiltonian, chain_eigensystem, ChainParams};
use holstein_core::kinetics::{kinetic_ness, KineticNess, KineticParams};
use holstein_core::lindblad::{
    build_lindblad_ops, full_liouvillian, minibands, ness_full, ness_observables,
    ness_observables_density, ness_secular, partial_secular_generator, secular_rate_matrix,
    BathRates, NessSolution,
};
use holstein_core::Result;

use crate::config::{Solver, SweepSpec};

/// Default band threshold of the partial solver, in units of the largest bath rate.
pub const MINIBAND_FACTOR: f64 = 10.0;

/// Steady state of one parameter point with the requested quantum solver.
pub fn solve_point(
    chain: &ChainParams,
    rates: &BathRates,
    basis: &Basis,
    solver: Solver,
    miniband_threshold: Option<f64>,
) -> Result<NessSolution> {
    let h = build_hamiltonian(chain, basis)?;
    let ops = build_lindblad_ops(basis, rates)?;
    match solver {
        Solver::Secular => {
            let es = chain_eigensystem(&h, basis)?;
            let p = ness_secular(&secular_rate_matrix(&es, &ops)?)?;
            ness_observables(&p, &es, basis)
        }
        Solver::Partial => {
            let es = chain_eigensystem(&h, basis)?;
            let threshold = miniband_threshold.unwrap_or(MINIBAND_FACTOR * rates.max_rate());
            let g = partial_secular_generator(&es, &ops, &minibands(&es, threshold))?;
            let rho = g.steady_state()?.rho_fock(&es);
            ness_observables_density(&rho, basis)
        }
        Solver::Full => ness_observables_density(&ness_full(&full_liouvillian(&h, &ops)?)?, basis),
        Solver::Kinetic => unreachable!("kinetic points are solved by kinetic_point"),
    }
}

pub fn kinetic_params(spec: &SweepSpec, rates: &BathRates) -> Result<KineticParams> {
    KineticParams::from_bath(spec.chain.n_sites, spec.jump_length, rates, spec.f, spec.g)
}

pub fn kinetic_point(spec: &SweepSpec, rates: &BathRates) -> Result<(KineticParams, KineticNess)> {
    let p = kinetic_params(spec, rates)?;
    Ok((p, kinetic_ness(&p)?))
}
