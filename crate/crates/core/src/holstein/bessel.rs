use crate::error::{invalid, Result};

const MAX_ARG: f64 = 2.0;
const TERMS: usize = 25;

/// Bessel function of the first kind `J_order(x)` from its ascending series.
/// Only `|x| <= 2` is accepted; there 25 terms are far past double precision.
pub fn bessel_first_kind(order: i32, x: f64) -> Result<f64> {
    if !x.is_finite() || x.abs() > MAX_ARG {
        return invalid(format!(
            "Bessel argument {x} outside [-{MAX_ARG}, {MAX_ARG}]"
        ));
    }
    let n = order.unsigned_abs();
    let half = 0.5 * x;
    // leading term (x/2)^n / n!
    let mut term = 1.0;
    for k in 1..=n {
        term *= half / k as f64;
    }
    let q = -half * half;
    let mut sum = term;
    for k in 1..TERMS {
        term *= q / (k as f64 * (k as u32 + n) as f64);
        sum += term;
        if term.abs() <= f64::EPSILON * 1e-3 * sum.abs() {
            break;
        }
    }
    if order < 0 && n % 2 == 1 {
        sum = -sum;
    }
    Ok(sum)
}
