use super::{bessel_first_kind, ChainParams};
use crate::error::{invalid, Result};

/// Site amplitudes of the Wannier–Stark state centred on site `j` (from 1),
/// `J_{i-j}(2J/Δ)`, restricted to the chain and renormalized.
pub fn ws_coefficients(j: usize, params: &ChainParams) -> Result<Vec<f64>> {
    if params.delta <= 0.0 {
        return invalid("Wannier-Stark states need delta > 0");
    }
    if j == 0 || j > params.n_sites {
        return invalid(format!("site {j} outside 1..={}", params.n_sites));
    }
    let z = 2.0 * params.j_hop / params.delta;
    let mut v = (1..=params.n_sites)
        .map(|i| bessel_first_kind(i as i32 - j as i32, z))
        .collect::<Result<Vec<_>>>()?;
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
    Ok(v)
}

/// Leading-order coupling magnitude `λ (J/Δ)^{|i-k|}` between sites `i` and `k`.
pub fn ws_coupling_scale(i: usize, k: usize, params: &ChainParams) -> Result<f64> {
    if params.delta <= 0.0 {
        return invalid("Wannier-Stark coupling needs delta > 0");
    }
    Ok(params.lambda * (params.j_hop / params.delta).powi(i.abs_diff(k) as i32))
}
