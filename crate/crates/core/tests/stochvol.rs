//! Volatility updates against their conjugate laws and a simulation oracle.

mod common;

use common::{batch_mean_se, ks_critical_1pct, ks_statistic, simpson};
use ggmsv::linalg::SymMatrix;
use ggmsv::stochvol::{fit, simulate, update_phi, update_tau, update_x, SvConfig, SvData, SvHyper, SvState};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Gamma as GammaDist, Normal};

fn path(t: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut x = Vec::with_capacity(t);
    let mut prev = 0.0;
    for _ in 0..t {
        prev = 0.8 * prev + 0.5 * rng.random_range(-1.0..1.0);
        x.push(prev);
    }
    x
}

/// Log density of `φ | X, τ` up to a constant, from the AR(1) likelihood
/// with `X_0 = 0` and the `N(0, τ₀)` prior.
fn ln_phi_kernel(phi: f64, x: &[f64], tau: f64, tau0: f64) -> f64 {
    let mut lp = -0.5 * phi * phi / tau0;
    let mut prev = 0.0;
    for &xt in x {
        lp -= 0.5 * tau * (xt - phi * prev).powi(2);
        prev = xt;
    }
    lp
}

/// The kernel is quadratic, so three evaluations give mean and variance.
fn gaussian_from_kernel(f: impl Fn(f64) -> f64) -> (f64, f64) {
    let (a, b, c) = (f(-1.0), f(0.0), f(1.0));
    let curv = a - 2.0 * b + c;
    let var = -1.0 / curv;
    let mean = var * 0.5 * (c - a);
    (mean, var)
}

fn draw_many(state: &SvState, n: usize, seed: u64, mut f: impl FnMut(&mut SvState, &mut ChaCha8Rng) -> f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let mut s = state.clone();
            f(&mut s, &mut rng)
        })
        .collect()
}

#[test]
fn phi_draws_follow_the_conjugate_normal() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut state = SvState::initial(40, 2);
    state.x = path(40, &mut rng);
    state.tau = 3.0;
    let hyper = SvHyper { tau0: 0.7, ..SvHyper::default() };
    let (m, v) = gaussian_from_kernel(|phi| ln_phi_kernel(phi, &state.x, state.tau, hyper.tau0));
    let xs = draw_many(&state, 4_000, 2, |s, r| {
        update_phi(s, &hyper, r).unwrap();
        s.phi
    });
    let law = Normal::new(m, v.sqrt()).unwrap();
    let stat = ks_statistic(&xs, |x| law.cdf(x));
    assert!(stat < ks_critical_1pct(xs.len()), "KS {stat}");
}

#[test]
fn truncated_phi_draws_follow_the_truncated_normal() {
    // few, weakly informative points so that the bound at 1 matters
    let mut state = SvState::initial(3, 2);
    state.x = vec![0.9, 1.0, 1.1];
    state.tau = 1.0;
    let hyper = SvHyper { tau0: 4.0, truncate_phi: true, ..SvHyper::default() };
    let (m, v) = gaussian_from_kernel(|phi| ln_phi_kernel(phi, &state.x, state.tau, hyper.tau0));
    let law = Normal::new(m, v.sqrt()).unwrap();
    let (lo, hi) = (law.cdf(-1.0), law.cdf(1.0));
    assert!(hi < 0.9, "test case should truncate noticeably");
    let xs = draw_many(&state, 4_000, 3, |s, r| {
        update_phi(s, &hyper, r).unwrap();
        s.phi
    });
    assert!(xs.iter().all(|x| x.abs() <= 1.0));
    let stat = ks_statistic(&xs, |x| (law.cdf(x) - lo) / (hi - lo));
    assert!(stat < ks_critical_1pct(xs.len()), "KS {stat}");
}

#[test]
fn tau_draws_follow_the_conjugate_gamma() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut state = SvState::initial(25, 2);
    state.x = path(25, &mut rng);
    state.phi = 0.6;
    let hyper = SvHyper { a: 2.0, b: 0.5, ..SvHyper::default() };
    let ss: f64 = state
        .x
        .iter()
        .scan(0.0, |prev, &xt| {
            let r = xt - state.phi * *prev;
            *prev = xt;
            Some(r * r)
        })
        .sum();
    let law = GammaDist::new(hyper.a + 12.5, hyper.b + 0.5 * ss).unwrap();
    let xs = draw_many(&state, 4_000, 5, |s, r| {
        update_tau(s, &hyper, r).unwrap();
        s.tau
    });
    let stat = ks_statistic(&xs, |x| law.cdf(x));
    assert!(stat < ks_critical_1pct(xs.len()), "KS {stat}");
}

#[test]
fn tau_with_flat_volatility_is_the_prior_shifted_by_half_t() {
    let state = SvState::initial(8, 2);
    let hyper = SvHyper::default();
    let law = GammaDist::new(hyper.a + 4.0, hyper.b).unwrap();
    let xs = draw_many(&state, 4_000, 6, |s, r| {
        update_tau(s, &hyper, r).unwrap();
        s.tau
    });
    let stat = ks_statistic(&xs, |x| law.cdf(x));
    assert!(stat < ks_critical_1pct(xs.len()), "KS {stat}");
}

#[test]
fn constant_volatility_data_give_flat_posterior_mean() {
    // a single day's quadratic form carries information growing with p;
    // with few assets the largest of T posterior means sits near 0.5
    // because of sampling noise in Y alone
    let p = 20;
    let k = SymMatrix::from_fn(p, |i, j| match i.abs_diff(j) {
        0 => 1.0,
        1 => 0.3,
        _ => 0.0,
    });
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let y = simulate(&k, &vec![0.0; 200], &mut rng).unwrap();
    let config = SvConfig { iters: 2_000, burnin: 500, seed: 8, ..SvConfig::default() };
    let fit = fit(&y, &SvHyper::default(), &config, None).unwrap();
    let worst = fit.x_mean.iter().fold(0.0f64, |w, x| w.max(x.abs()));
    assert!(worst <= 0.5, "largest |E[X_t]| = {worst}");
}

#[test]
fn single_site_updates_target_the_joint_conditional() {
    // T = 2, K = I: log p(x | Y, φ, τ) =
    //   Σ_t [-(p/2) x_t - q_t e^{-x_t} / 2] - τ x₁² / 2 - τ (x₂ - φ x₁)² / 2
    let (p, q, tau, phi) = (3usize, [7.5f64, 1.2], 2.0, 0.4);
    let y = vec![vec![q[0].sqrt(), 0.0, 0.0], vec![0.0, q[1].sqrt(), 0.0]];
    let mut state = SvState::initial(2, p);
    state.tau = tau;
    state.phi = phi;
    let ln_target = |a: f64, b: f64| {
        -0.5 * p as f64 * (a + b) - 0.5 * (q[0] * (-a).exp() + q[1] * (-b).exp())
            - 0.5 * tau * (a * a + (b - phi * a).powi(2))
    };
    let moment = |f: &dyn Fn(f64, f64) -> f64| {
        simpson(-6.0, 6.0, 600, |a| simpson(-6.0, 6.0, 600, |b| f(a, b) * ln_target(a, b).exp()))
    };
    let z = moment(&|_, _| 1.0);
    let mean = [moment(&|a, _| a) / z, moment(&|_, b| b) / z];
    let var1 = moment(&|a, _| (a - mean[0]).powi(2)) / z;

    let data = SvData::new(&y).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut traces = [Vec::new(), Vec::new()];
    for _ in 0..200_000 {
        update_x(&mut state, &data, 0.8, &mut rng);
        traces[0].push(state.x[0]);
        traces[1].push(state.x[1]);
    }
    for t in 0..2 {
        let (m, se) = batch_mean_se(&traces[t], 100);
        assert!((m - mean[t]).abs() < 3.0 * se, "E[x{t}] {m} vs {} (se {se})", mean[t]);
    }
    let m = mean[0];
    let v = traces[0].iter().map(|x| (x - m).powi(2)).sum::<f64>() / traces[0].len() as f64;
    assert!((v / var1 - 1.0).abs() < 0.03, "variance {v} vs {var1}");
}
