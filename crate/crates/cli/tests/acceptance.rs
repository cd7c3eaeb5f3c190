//! End-to-end acceptance checks. Each test writes one `criterion N ... PASS|FAIL`
//! line straight to stderr (visible without `--nocapture`) and fails when the
//! criterion is not met.

use std::io::Write;

use holstein_cli::config::{Grid, Output};
use holstein_cli::{recipe_spec, run_spectrum, run_sweep, validate_secular, SweepSpec};
use holstein_core::fockspace::{enumerate_basis, BosonTruncation};
use holstein_core::holstein::{
    build_hamiltonian, chain_eigensystem, level_slopes, min_pump_splitting, nearest_rational,
    ChainParams,
};
use holstein_core::kinetics::{
    infer_kinetic_rates, kinetic_ness, kinetic_rate_matrix, population_factors,
    secular_site_trajectory, FitOptions, KineticParams, KineticRegime, SiteTrajectory,
};
use holstein_core::lindblad::{
    build_lindblad_ops, ness_observables, ness_secular, secular_rate_matrix, BathRates,
    NessSolution, RateMatrix,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(n: u32, title: &str, pass: bool, detail: &str) {
    let line = format!(
        "criterion {n} ({title}): {} | {detail}",
        if pass { "PASS" } else { "FAIL" }
    );
    let _ = writeln!(std::io::stderr(), "{line}");
    assert!(pass, "{line}");
}

fn tetramer(lambda: f64, j_hop: f64, r_b: f64) -> SweepSpec {
    let mut s = recipe_spec("fig3").unwrap();
    s.chain.lambda = lambda;
    s.chain.j_hop = j_hop;
    s.rates.r_b = r_b;
    s
}

/// Normalised populations at each Δ, in order.
fn rho_along(spec: &SweepSpec, deltas: &[f64]) -> Vec<Vec<f64>> {
    let mut s = spec.clone();
    s.axis1.grid = Grid::List(deltas.to_vec());
    s.axis2 = None;
    let t = run_sweep(&s).unwrap();
    t.outcomes
        .iter()
        .zip(deltas)
        .map(|(o, d)| {
            o.rho()
                .unwrap_or_else(|| panic!("no steady state at Δ = {d}"))
                .to_vec()
        })
        .collect()
}

fn grid(a: f64, b: f64, step: f64) -> Vec<f64> {
    let n = ((b - a) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| a + k as f64 * step).collect()
}

#[derive(Debug)]
struct Peak {
    at: f64,
    height: f64,
    base: f64,
    width: f64,
}

const FINE: f64 = 0.0005;
const HALF_WINDOW: f64 = 0.01;
const NEIGHBOURHOOD: f64 = 0.025;

/// Full width at `half` around the maximum `xs[i]`, linearly interpolated; a
/// side that never drops below `half` extends to the end of the scan.
fn fwhm(xs: &[f64], ys: &[f64], i: usize, half: f64) -> f64 {
    let cross = |k: usize, j: usize| xs[k] + (half - ys[k]) / (ys[j] - ys[k]) * (xs[j] - xs[k]);
    let left = (0..i)
        .rev()
        .find(|&k| ys[k] < half)
        .map_or(xs[0], |k| cross(k, k + 1));
    let right = (i + 1..xs.len())
        .find(|&k| ys[k] < half)
        .map_or(xs[xs.len() - 1], |k| cross(k, k - 1));
    right - left
}

fn argmax(ys: &[f64]) -> usize {
    (0..ys.len())
        .max_by(|&a, &b| ys[a].total_cmp(&ys[b]))
        .unwrap()
}

/// Largest value of `ρ_site` within `center ± 0.01` on a 5e-4 grid, the mean
/// of the values `0.025` either side as the off-resonant neighbourhood, and the
/// full width at half height above that neighbourhood.
fn peak(spec: &SweepSpec, site: usize, center: f64) -> Peak {
    let mut deltas = grid(center - HALF_WINDOW, center + HALF_WINDOW, FINE);
    let n = deltas.len();
    deltas.push(center - NEIGHBOURHOOD);
    deltas.push(center + NEIGHBOURHOOD);
    deltas.sort_by(f64::total_cmp);
    let rho = rho_along(spec, &deltas);
    let y: Vec<f64> = rho.iter().map(|r| r[site - 1]).collect();
    let base = 0.5 * (y[0] + y[n + 1]);
    let (xs, ys) = (&deltas[1..=n], &y[1..=n]);
    let i = argmax(ys);
    let (mut at, mut height) = (xs[i], ys[i]);
    let mut width = fwhm(xs, ys, i, base + 0.5 * (ys[i] - base));
    let mut step = FINE;
    // rescan around the maximum until the width spans at least 8 grid steps
    for _ in 0..4 {
        if width >= 8.0 * step {
            break;
        }
        let span = width.max(2.0 * step);
        step = span / 20.0;
        let fx = grid(at - span, at + span, step);
        let fy: Vec<f64> = rho_along(spec, &fx).iter().map(|r| r[site - 1]).collect();
        let k = argmax(&fy);
        (at, height) = (fx[k], fy[k]);
        width = fwhm(&fx, &fy, k, base + 0.5 * (fy[k] - base));
    }
    Peak {
        at,
        height,
        base,
        width,
    }
}

#[test]
fn criterion_1_truncation_convergence() {
    let text = "n_sites = 3\nlambda = 0.4\nj_hop = 0.01\nr_b = 1e-7\nr_r = 1e-9\nr_p = 1e-10\nsolver = secular\naxis1 = delta\naxis1_grid = 0.45,0.5\n";
    let base = holstein_cli::parse_config_str(text).unwrap();
    let rho: Vec<Vec<Vec<f64>>> = [3, 4, 5]
        .iter()
        .map(|&t| {
            let s = base
                .clone()
                .with_truncation(BosonTruncation::with_total(10, t))
                .unwrap();
            rho_along(&s, &[0.45, 0.5])
        })
        .collect();
    let mut worst = [[0.0f64; 2]; 2];
    for step in 0..2 {
        for d in 0..2 {
            worst[step][d] = rho[step][d]
                .iter()
                .zip(&rho[step + 1][d])
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
        }
    }
    let pass = worst.iter().flatten().all(|&w| w < 1e-3);
    let detail = format!(
        "max |Δρ| 3→4: {:.2e} (Δ=0.45), {:.2e} (Δ=0.5); 4→5: {:.2e}, {:.2e}; ρ(0.5) at tm 3/4/5 = {:.4?} / {:.4?} / {:.4?}",
        worst[0][0], worst[0][1], worst[1][0], worst[1][1], rho[0][1], rho[1][1], rho[2][1]
    );
    report(1, "truncation convergence", pass, &detail);
}

#[test]
fn criterion_2_spectrum() {
    let spec = recipe_spec("fig2").unwrap();
    let run = run_spectrum(&spec).unwrap();
    let table = run.table.as_ref().unwrap();
    let step = 0.005;
    let slopes = level_slopes(table, 0.03, 3);
    let bad: Vec<_> = slopes
        .iter()
        .filter(|(_, _, s)| {
            let k = s.round();
            !((1.0..=3.0).contains(&k) && (s - k).abs() < 0.05)
        })
        .collect();
    let located: Vec<(f64, Option<f64>)> = [0.5, 1.0, 1.5]
        .iter()
        .map(|&t| {
            let best = run
                .crossings
                .iter()
                .map(|c| c.detected.delta_star)
                .min_by(|a, b| (a - t).abs().total_cmp(&(b - t).abs()));
            (t, best)
        })
        .collect();
    let all_found = located
        .iter()
        .all(|(t, b)| b.is_some_and(|b| (b - t).abs() <= step * (1.0 + 1e-9)));
    let gap = |c: f64| {
        min_pump_splitting(&spec.chain, spec.truncation, c, 0.03, 0.002)
            .unwrap()
            .1
    };
    let (g05, g10) = (gap(0.5), gap(1.0));
    let pass = bad.is_empty() && !slopes.is_empty() && all_found && g05 < g10;
    let detail = format!(
        "(a) {} of {} slopes off {{1,2,3}}; (b) nearest crossings {:?}; (c) gap(0.5) = {g05:.3e}, gap(1.0) = {g10:.3e}",
        bad.len(),
        slopes.len(),
        located
    );
    report(2, "spectrum", pass, &detail);
}

#[test]
fn criterion_3_hypersensitivity() {
    let base = tetramer(0.5, 0.01, 1e-7);
    let rho4 = rho_along(&base, &[0.45])[0][3];
    let targets = [(2usize, 0.5), (2, 1.5), (1, 2.0 / 3.0)];
    let peaks = |s: &SweepSpec| -> Vec<Peak> {
        targets.iter().map(|&(site, c)| peak(s, site, c)).collect()
    };
    let p0 = peaks(&base);
    let a = rho4 > 0.9;
    let b = p0[0].height >= 5.0 * p0[0].base && p0[1].height >= 5.0 * p0[1].base;
    let c = p0[2].height >= 2.0 * p0[2].base;
    let variants = [(0.4, 0.01), (0.5, 0.008), (0.5, 0.012)];
    let pv: Vec<Vec<Peak>> = variants
        .iter()
        .map(|&(l, j)| peaks(&tetramer(l, j, 1e-7)))
        .collect();
    let shift = pv
        .iter()
        .flatten()
        .zip(p0.iter().cycle())
        .map(|(p, q)| (p.at - q.at).abs())
        .fold(0.0, f64::max);
    let d_shift = shift < 0.005;
    let widths_lambda = (0..3).all(|k| pv[0][k].width < p0[k].width);
    let widths_j = (0..3).all(|k| pv[1][k].width < p0[k].width && p0[k].width < pv[2][k].width);
    let pass = a && b && c && d_shift && widths_lambda && widths_j;
    let fmt = |p: &Peak| {
        format!(
            "{:.4}@{:.4} (base {:.2e}, w {:.1e})",
            p.height, p.at, p.base, p.width
        )
    };
    let mut detail = format!(
        "(a) ρ4(0.45) = {rho4:.4}; (b) ρ2 peaks {} and {}; (c) ρ1 peak {}; (d) max shift {shift:.4}, widths λ-monotone {widths_lambda}, J-monotone {widths_j}",
        fmt(&p0[0]),
        fmt(&p0[1]),
        fmt(&p0[2])
    );
    for ((l, j), ps) in variants.iter().zip(&pv) {
        detail += &format!(
            "; λ={l},J={j}: {}",
            ps.iter().map(&fmt).collect::<Vec<_>>().join(" ")
        );
    }
    report(3, "hypersensitivity", pass, &detail);
}

/// Secular steady states of one chain at several bath-rate sets, sharing the
/// eigensystem and using that the rate matrix is linear in the rates.
fn secular_at_rates(
    chain: &ChainParams,
    trunc: BosonTruncation,
    rates: &[BathRates],
) -> Vec<NessSolution> {
    let basis = enumerate_basis(chain.n_sites, trunc).unwrap();
    let es = chain_eigensystem(&build_hamiltonian(chain, &basis).unwrap(), &basis).unwrap();
    let unit = build_lindblad_ops(&basis, &BathRates::new(1.0, 1.0, 1.0)).unwrap();
    let family = |prefix: char| {
        let ops: Vec<_> = unit
            .iter()
            .filter(|o| o.label.starts_with(prefix))
            .cloned()
            .collect();
        secular_rate_matrix(&es, &ops).unwrap().w
    };
    let (wb, wr, wp) = (family('b'), family('r'), family('p'));
    rates
        .iter()
        .map(|r| {
            let w = RateMatrix::new(&wb * r.r_b + &wr * r.r_r + &wp * r.r_p).unwrap();
            ness_observables(&ness_secular(&w).unwrap(), &es, &basis).unwrap()
        })
        .collect()
}

fn off_resonant(delta: f64) -> bool {
    nearest_rational(delta, 3).0 >= 0.02
}

#[test]
fn criterion_4_ratio_limits() {
    let spec = tetramer(0.5, 0.01, 1e-7);
    let rates: Vec<BathRates> = [1.0, 1e2, 1e6]
        .iter()
        .map(|&r| BathRates::new(r * 1e-9, 1e-9, 1e-10))
        .collect();
    let deltas = grid(0.4, 2.0, 0.005);
    let sols: Vec<Vec<NessSolution>> = holstein_cli_par(&deltas, |d| {
        secular_at_rates(&spec.chain.with_delta(d), spec.truncation, &rates)
    });
    let rho = |k: usize, r: usize| sols[k][r].rho.as_ref().unwrap();
    let low: Vec<(f64, f64)> = deltas
        .iter()
        .enumerate()
        .filter(|(_, d)| off_resonant(**d))
        .map(|(k, d)| (*d, rho(k, 0)[3]))
        .collect();
    let low_worst = low
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let low_fails: Vec<f64> = low.iter().filter(|x| x.1 <= 0.95).map(|x| x.0).collect();
    let high_bottom: Vec<(f64, f64)> = deltas
        .iter()
        .enumerate()
        .map(|(k, d)| (*d, rho(k, 2)[0]))
        .collect();
    let high_worst = high_bottom
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap();
    let high_fail_below = high_bottom
        .iter()
        .filter(|x| x.1 <= 0.9)
        .map(|x| x.0)
        .fold(0.0, f64::max);
    let msd_ordered = (0..deltas.len()).all(|k| {
        let m: Vec<f64> = (0..3).map(|r| sols[k][r].msd / sols[k][r].p_ex).collect();
        m[0] <= m[1] * (1.0 + 1e-9) && m[1] <= m[2] * (1.0 + 1e-9)
    });
    let p_ex_target = 1e-10 / (1e-9 + 1e-10);
    let p_ex_err = sols
        .iter()
        .flatten()
        .map(|s| (s.p_ex / p_ex_target - 1.0).abs())
        .fold(0.0, f64::max);
    // j/3 resonances at R = 1, scanned finely since they are narrower than the grid
    let mut r1 = spec.clone();
    r1.rates = rates[0];
    let (mut third_excess, mut third_at) = (0.0f64, (0.0, 0));
    for c in [2.0 / 3.0, 4.0 / 3.0, 5.0 / 3.0] {
        let mut ds = grid(c - 0.005, c + 0.005, FINE);
        ds.insert(0, c - NEIGHBOURHOOD);
        ds.push(c + NEIGHBOURHOOD);
        let rho = rho_along(&r1, &ds);
        let m = rho.len() - 1;
        for site in 0..4 {
            let base = 0.5 * (rho[0][site] + rho[m][site]);
            for r in &rho[1..m] {
                if r[site] - base > third_excess {
                    (third_excess, third_at) = (r[site] - base, (c, site + 1));
                }
            }
        }
    }
    let no_third_peaks = third_excess < 0.01;
    let pass = low_fails.is_empty()
        && no_third_peaks
        && high_worst.1 > 0.9
        && msd_ordered
        && p_ex_err < 0.01;
    let detail = format!(
        "R=1: min off-resonant ρ4 = {:.4} at Δ = {:.3} ({} of {} off-resonant points <= 0.95, at {:?}), largest j/3 excess {third_excess:.2e} (ρ{} near {:.4}); R=1e6: min ρ1 = {:.4} at Δ = {:.3}, ρ1 <= 0.9 up to Δ = {high_fail_below:.3}; MSD ordered {msd_ordered}; max P_ex error {p_ex_err:.2e}",
        low_worst.1,
        low_worst.0,
        low_fails.len(),
        low.len(),
        low_fails,
        third_at.1,
        third_at.0,
        high_worst.1,
        high_worst.0
    );
    report(4, "R limits", pass, &detail);
}

/// Ordered parallel map.
fn holstein_cli_par<T: Send>(xs: &[f64], f: impl Fn(f64) -> T + Sync) -> Vec<T> {
    use rayon::prelude::*;
    xs.par_iter().map(|&x| f(x)).collect()
}

#[test]
fn criterion_5_small_bias_uniformity() {
    let spec = tetramer(0.5, 0.01, 1e6 * 1e-9);
    let rho = &rho_along(&spec, &[0.05])[0];
    let spread =
        rho.iter().copied().fold(f64::MIN, f64::max) - rho.iter().copied().fold(f64::MAX, f64::min);
    report(
        5,
        "small-bias uniformity",
        spread < 0.3,
        &format!("ρ(0.05) = {rho:.4?}, spread {spread:.4}"),
    );
}

fn draw_params(rng: &mut ChaCha8Rng, regime: KineticRegime) -> KineticParams {
    let mut rate = || 10f64.powf(rng.gen_range(-3.0..3.0));
    let (k_nn, k_j, k_r, k_p) = (rate(), rate(), rate(), rate());
    let (n, m) = match regime {
        KineticRegime::SingleSite => (1, rng.gen_range(0..3)),
        KineticRegime::NoJumps => {
            if rng.gen_bool(0.5) {
                (rng.gen_range(2..12), 0)
            } else {
                let n = rng.gen_range(2..8);
                (n, rng.gen_range(n..n + 4))
            }
        }
        KineticRegime::Intermediate => {
            let m = rng.gen_range(1..6);
            (rng.gen_range(m + 1..=2 * m), m)
        }
        KineticRegime::Long => {
            let m = rng.gen_range(1..5);
            (rng.gen_range(2 * m + 1..2 * m + 12), m)
        }
    };
    let k_j = if m == 0 { 0.0 } else { k_j };
    KineticParams::new(n, m, k_nn, k_j, k_r, k_p).unwrap()
}

fn null_space_rho(p: &KineticParams) -> Vec<f64> {
    let x = ness_secular(&kinetic_rate_matrix(p).unwrap()).unwrap();
    let ex: f64 = x.iter().skip(1).sum();
    x.iter().skip(1).map(|v| v / ex).collect()
}

#[test]
fn criterion_6_kinetic_closed_forms() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    // SingleSite, m = 0, m >= N > 1, 2m >= N > m, N > 2m
    let regimes = [
        (KineticRegime::SingleSite, false),
        (KineticRegime::NoJumps, false),
        (KineticRegime::NoJumps, true),
        (KineticRegime::Intermediate, false),
        (KineticRegime::Long, false),
    ];
    let (mut worst, mut seen) = (0.0f64, [0usize; 5]);
    let (mut closed, mut pump) = (0.0f64, 0.0f64);
    for k in 0..200 {
        let (regime, long_jump) = regimes[k % 5];
        let p = loop {
            let p = draw_params(&mut rng, regime);
            let m_ge_n = p.jump_length >= p.n_sites && p.n_sites > 1;
            if regime != KineticRegime::NoJumps || long_jump == m_ge_n {
                break p;
            }
        };
        assert_eq!(KineticRegime::of(p.n_sites, p.jump_length), regime);
        seen[k % 5] += 1;
        let rho = kinetic_ness(&p).unwrap().rho;
        for (a, b) in rho.iter().zip(null_space_rho(&p)) {
            worst = worst.max((a - b).abs());
        }
        if p.jump_length == 0 && p.n_sites > 1 {
            let f = population_factors(&p).unwrap();
            let n = p.n_sites;
            let top = p.k_r / (p.k_nn + p.k_j + p.k_r);
            for site in 1..=n {
                let expect = if site > 1 {
                    f.nu.powi((n - site) as i32) * top
                } else {
                    f.chi * f.nu.powi(n as i32 - 2) * top
                };
                closed = closed.max((rho[site - 1] - expect).abs() / expect.max(f64::MIN_POSITIVE));
            }
        }
        let q = KineticParams {
            k_p: p.k_p * 1e-6,
            ..p
        };
        for (a, b) in rho.iter().zip(kinetic_ness(&q).unwrap().rho) {
            pump = pump.max((a - b).abs());
        }
    }
    let pass = worst < 1e-10 && closed < 1e-12 && pump < 1e-12 && seen.iter().all(|&s| s == 40);
    let detail = format!(
        "200 draws ({seen:?} per regime): max |ρ − null space| = {worst:.2e}; off-resonant closed form rel. err {closed:.2e}; k_p × 1e-6 change {pump:.1e}"
    );
    report(6, "kinetic analytic correctness", pass, &detail);
}

#[test]
fn criterion_7_secular_validity_thresholds() {
    let off = validate_secular(&recipe_spec("appendixA-off").unwrap()).unwrap();
    let on = validate_secular(&recipe_spec("appendixA-on").unwrap()).unwrap();
    let ratio = match (off.breakdown, on.breakdown) {
        (Some(a), Some(b)) => a / b,
        _ => f64::NAN,
    };
    let plateaus = off.threshold.is_some() && on.threshold.is_some();
    let pass = plateaus && ratio >= 10.0;
    let detail = format!(
        "agreement up to grid r = {:?} (Δ=0.99) and {:?} (Δ=1.00); interpolated breakdown {:.3e} vs {:.3e}, ratio {ratio:.2} (needs >= 10)",
        off.threshold,
        on.threshold,
        off.breakdown.unwrap_or(f64::NAN),
        on.breakdown.unwrap_or(f64::NAN)
    );
    report(7, "secular validity thresholds", pass, &detail);
}

#[test]
fn criterion_8_cross_model_agreement() {
    let spec = tetramer(0.5, 0.01, 1e-7);
    let rates = spec.rates;
    let basis = enumerate_basis(4, spec.truncation).unwrap();
    let ops = build_lindblad_ops(&basis, &rates).unwrap();
    let times = SiteTrajectory::default_times(&rates).unwrap();
    let fit_at = |delta: f64| {
        let es = chain_eigensystem(
            &build_hamiltonian(&spec.chain.with_delta(delta), &basis).unwrap(),
            &basis,
        )
        .unwrap();
        let data = secular_site_trajectory(&es, &basis, &ops, &times).unwrap();
        let fit = infer_kinetic_rates(&data, 4, 2, &rates, &FitOptions::default()).unwrap();
        let p = ness_secular(&secular_rate_matrix(&es, &ops).unwrap()).unwrap();
        let quantum = ness_observables(&p, &es, &basis).unwrap().rho.unwrap();
        let kp = KineticParams::new(4, 2, fit.k_nn, fit.k_j, rates.r_r, rates.r_p).unwrap();
        let kinetic = kinetic_ness(&kp).unwrap().rho;
        let err = quantum
            .iter()
            .zip(&kinetic)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        (fit, quantum, kinetic, err)
    };
    let (on, on_q, on_k, on_err) = fit_at(0.5);
    let (off, off_q, off_k, off_err) = fit_at(0.45);
    let on_ratio = on.g_hat / on.f_hat;
    let off_ratio = off.g_hat / off.f_hat;
    let pass = on_ratio > 10.0 && off_ratio < 0.1 && on_err < 0.1 && off_err < 0.1;
    let detail = format!(
        "Δ=0.5: g/f = {on_ratio:.3e} (residual {:.2e}), ρ quantum {on_q:.3?} vs kinetic {on_k:.3?}, max err {on_err:.3}; Δ=0.45: g/f = {off_ratio:.3e} (residual {:.2e}), ρ quantum {off_q:.3?} vs kinetic {off_k:.3?}, max err {off_err:.3}",
        on.residual, off.residual
    );
    report(8, "cross-model agreement", pass, &detail);
}

#[test]
fn recipes_carry_the_acceptance_parameters() {
    let s = recipe_spec("fig3").unwrap();
    assert!(s.has_output(Output::Rho));
    assert!((s.rates.ratio().unwrap() - 100.0).abs() < 1e-9);
    assert_eq!(
        recipe_spec("fig2").unwrap().truncation,
        BosonTruncation::with_total(10, 4)
    );
    assert_eq!(
        recipe_spec("appendixA-on").unwrap().truncation,
        BosonTruncation::with_total(2, 2)
    );
}
