use nalgebra::DVector;

use super::bands::BandGenerator;
use super::full::FullLiouvillian;
use super::secular::RateMatrix;
use crate::error::{Error, Result};

/// A real linear generator `ẋ = A x`.
pub trait Generator: Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[f64], out: &mut [f64]);
    /// Trace of the density matrix encoded by `x`.
    fn trace(&self, x: &[f64]) -> f64 {
        x.iter().sum()
    }
}

impl Generator for RateMatrix {
    fn dim(&self) -> usize {
        self.w.nrows()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let d = self.w.nrows();
        out.iter_mut().for_each(|o| *o = 0.0);
        for (j, &xj) in x.iter().enumerate().take(d) {
            if xj == 0.0 {
                continue;
            }
            for (o, w) in out.iter_mut().zip(self.w.column(j).iter()) {
                *o += w * xj;
            }
        }
    }
}

impl Generator for BandGenerator {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        for (i, row) in self.matrix.row_iter().enumerate() {
            out[i] = row
                .col_indices()
                .iter()
                .zip(row.values())
                .map(|(&j, &v)| v * x[j])
                .sum();
        }
    }

    fn trace(&self, x: &[f64]) -> f64 {
        x[..self.d].iter().sum()
    }
}

/// Acts on `[Re vec ρ; Im vec ρ]`.
impl Generator for FullLiouvillian {
    fn dim(&self) -> usize {
        2 * self.d * self.d
    }

    fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.d * self.d;
        let (re, im) = x.split_at(n);
        let (ore, oim) = out.split_at_mut(n);
        for i in 0..n {
            let (mut a, mut b) = (0.0, 0.0);
            for j in 0..n {
                let z = self.matrix[(i, j)];
                a += z.re * re[j] - z.im * im[j];
                b += z.re * im[j] + z.im * re[j];
            }
            ore[i] = a;
            oim[i] = b;
        }
    }

    fn trace(&self, x: &[f64]) -> f64 {
        (0..self.d).map(|i| x[self.vec_index(i, i)]).sum()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PropagateOptions {
    pub rtol: f64,
    pub atol: f64,
    /// first trial step; zero picks one from the generator scale
    pub h0: f64,
    pub max_steps: usize,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-8,
            atol: 1e-12,
            h0: 0.0,
            max_steps: 1_000_000,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub steps: usize,
}

// Dormand–Prince 5(4) tableau; the generator is autonomous so the nodes are not needed
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

/// Integrates `ẋ = A x` from zero to `t_final` and returns the final state.
pub fn propagate<G: Generator + ?Sized>(
    gen: &G,
    x0: &DVector<f64>,
    t_final: f64,
    tol: f64,
) -> Result<DVector<f64>> {
    let opts = PropagateOptions {
        rtol: tol,
        atol: tol * 1e-4,
        ..Default::default()
    };
    let tr = propagate_sampled(gen, x0, &[t_final], &opts)?;
    Ok(tr.states.into_iter().next().unwrap())
}

/// Adaptive Dormand–Prince integration that lands exactly on each sample time.
pub fn propagate_sampled<G: Generator + ?Sized>(
    gen: &G,
    x0: &DVector<f64>,
    times: &[f64],
    opts: &PropagateOptions,
) -> Result<Trajectory> {
    let n = gen.dim();
    if x0.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "initial state has length {}, generator {n}",
            x0.len()
        )));
    }
    if times.iter().any(|t| !t.is_finite() || *t < 0.0) || times.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument(
            "sample times must be finite, non-negative and sorted".into(),
        ));
    }
    let mut x = x0.as_slice().to_vec();
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut t = 0.0;
    gen.apply(&x, &mut k[0]);
    let mut h = if opts.h0 > 0.0 {
        opts.h0
    } else {
        let xs = x.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(opts.atol);
        let fs = k[0].iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if fs > 0.0 {
            0.01 * xs / fs
        } else {
            times.last().copied().unwrap_or(1.0).max(1e-6)
        }
    };
    let mut steps = 0;
    let mut out_t = Vec::with_capacity(times.len());
    let mut out_x = Vec::with_capacity(times.len());
    for &target in times {
        while t < target {
            if steps >= opts.max_steps {
                return Err(Error::Numerical(format!(
                    "propagation exceeded {} steps at t = {t:e}",
                    opts.max_steps
                )));
            }
            let last = h >= target - t;
            let hs = if last { target - t } else { h };
            if hs < 1e-14 * t.abs().max(f64::MIN_POSITIVE) && !last {
                return Err(Error::Numerical(format!(
                    "step size underflow at t = {t:e}"
                )));
            }
            for s in 1..7 {
                for i in 0..n {
                    let mut acc = x[i];
                    for (r, a) in A[s].iter().enumerate().take(s) {
                        if *a != 0.0 {
                            acc += hs * a * k[r][i];
                        }
                    }
                    tmp[i] = acc;
                }
                gen.apply(&tmp, &mut k[s]);
            }
            // fifth-order solution is the last stage input (FSAL)
            let mut err = 0.0f64;
            for i in 0..n {
                let mut e = 0.0;
                for s in 0..7 {
                    e += (B5[s] - B4[s]) * k[s][i];
                }
                let sc = opts.atol + opts.rtol * x[i].abs().max(tmp[i].abs());
                err = err.max((hs * e).abs() / sc);
            }
            steps += 1;
            if err <= 1.0 {
                t = if last { target } else { t + hs };
                x.copy_from_slice(&tmp);
                let (a, b) = k.split_at_mut(6);
                a[0].copy_from_slice(&b[0]);
            }
            let fac = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if !(last && err <= 1.0) {
                h = hs * fac;
            }
        }
        out_t.push(target);
        out_x.push(DVector::from_column_slice(&x));
    }
    Ok(Trajectory {
        times: out_t,
        states: out_x,
        steps,
    })
}
