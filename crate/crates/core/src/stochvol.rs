//! Multivariate graphical stochastic volatility.
//!
//! ```text
//! Y_t | K, X_t   ~ N_p(0, exp(X_t) K⁻¹)
//! X_t | φ, τ     ~ N(φ X_{t-1}, 1/τ),   X_0 = 0
//! φ ~ N(0, τ₀),  τ ~ Gamma(a, b),  (K, G) ~ W_G(δ, D) × Bernoulli(q)^{edges}
//! ```
//!
//! Given `X`, the precision has a G-Wishart full conditional with `δ + T`
//! and `D + Σ_t Y_t Y_t′ / exp(X_t)`, so `(K, G)` are refreshed with one
//! structure-search sweep per model sweep.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::counters::OpCounters;
use crate::error::{Error, Result};
use crate::graph::{CliqueCover, Graph};
use crate::gwishart::{ChainState, GWishartParams};
use crate::io::ReturnsSeries;
use crate::linalg::{cholesky, SymMatrix};
use crate::search::{posterior_sweep, GraphPrior, MoveContext, Sampler};

/// Hyperparameters. `tau0` is the prior variance of `φ`; `b` is a rate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvHyper {
    pub tau0: f64,
    pub a: f64,
    pub b: f64,
    pub delta: f64,
    /// Prior scale; `None` means `I_p`.
    #[serde(default)]
    pub d: Option<SymMatrix>,
    pub edge_probability: f64,
    /// Restrict `φ` to `(-1, 1)`.
    #[serde(default)]
    pub truncate_phi: bool,
}

impl Default for SvHyper {
    fn default() -> Self {
        SvHyper {
            tau0: 1.0,
            a: 1.0,
            b: 1.0,
            delta: 3.0,
            d: None,
            edge_probability: 0.5,
            truncate_phi: false,
        }
    }
}

impl SvHyper {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("tau0", self.tau0), ("a", self.a), ("b", self.b)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        GraphPrior::new(self.edge_probability)?;
        Ok(())
    }

    pub fn prior(&self, p: usize) -> Result<GWishartParams> {
        let d = self.d.clone().unwrap_or_else(|| SymMatrix::identity(p));
        GWishartParams::new(self.delta, d, Graph::empty(p))
    }
}

/// `X_1..X_T`, `φ`, `τ` and the coupled `(K, G)`. `X_0 = 0` is implicit.
#[derive(Clone, Debug, PartialEq)]
pub struct SvState {
    pub x: Vec<f64>,
    pub phi: f64,
    pub tau: f64,
    pub chain: ChainState,
}

impl SvState {
    /// `X ≡ 0`, `φ = 0`, `τ = 1`, `K = I` on the empty graph.
    pub fn initial(t: usize, p: usize) -> Self {
        SvState {
            x: vec![0.0; t],
            phi: 0.0,
            tau: 1.0,
            chain: ChainState::identity(Graph::empty(p)),
        }
    }
}

/// Per-sweep data summaries that do not change with the state.
pub struct SvData<'a> {
    y: &'a [Vec<f64>],
    /// Upper triangle of `Y_t Y_t′`, row-major.
    outer: Vec<Vec<f64>>,
    p: usize,
}

impl<'a> SvData<'a> {
    pub fn new(y: &'a [Vec<f64>]) -> Result<Self> {
        let p = y.first().map_or(0, Vec::len);
        if p == 0 || y.len() < 2 {
            return Err(Error::Config("need at least two observations of dimension ≥ 1".into()));
        }
        if let Some(bad) = y.iter().find(|r| r.len() != p) {
            return Err(Error::DimensionMismatch {
                expected: p,
                found: bad.len(),
            });
        }
        let outer = y
            .iter()
            .map(|r| (0..p).flat_map(|i| (i..p).map(move |j| r[i] * r[j])).collect())
            .collect();
        Ok(SvData { y, outer, p })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    /// `D + Σ_t Y_t Y_t′ / exp(X_t)`.
    pub fn scaled_scatter(&self, d: &SymMatrix, x: &[f64]) -> SymMatrix {
        let p = self.p;
        let mut acc = vec![0.0; p * (p + 1) / 2];
        for (o, &xt) in self.outer.iter().zip(x) {
            let w = (-xt).exp();
            acc.iter_mut().zip(o).for_each(|(a, v)| *a += w * v);
        }
        let mut out = d.clone();
        let mut idx = 0;
        for i in 0..p {
            for j in i..p {
                out.set(i, j, out.get(i, j) + acc[idx]);
                idx += 1;
            }
        }
        out
    }
}

/// Log full conditional of `X_t` (0-based `t`) up to a constant, given
/// `q = Y_t′ K Y_t`.
fn log_cond_x(state: &SvState, t: usize, xt: f64, q: f64, p: usize) -> f64 {
    let prev = if t == 0 { 0.0 } else { state.x[t - 1] };
    let mut lp = -0.5 * p as f64 * xt - 0.5 * (-xt).exp() * q - 0.5 * state.tau * (xt - state.phi * prev).powi(2);
    if let Some(&next) = state.x.get(t + 1) {
        lp -= 0.5 * state.tau * (next - state.phi * xt).powi(2);
    }
    lp
}

/// Single-site random-walk MH over `X_1..X_T` with `N(X_t, step²)`
/// proposals. Returns the number of accepted proposals.
pub fn update_x<R: Rng + ?Sized>(state: &mut SvState, data: &SvData<'_>, step: f64, rng: &mut R) -> usize {
    let p = data.p;
    let mut accepted = 0;
    for t in 0..state.x.len() {
        let q = state.chain.k.quad_form(&data.y[t]);
        let cur = state.x[t];
        let z: f64 = rng.sample(StandardNormal);
        let prop = cur + step * z;
        let log_ratio = log_cond_x(state, t, prop, q, p) - log_cond_x(state, t, cur, q, p);
        let u: f64 = rng.random();
        if u.ln() < log_ratio {
            state.x[t] = prop;
            accepted += 1;
        }
    }
    accepted
}

/// Mean and variance of `φ | X, τ`.
pub fn phi_conditional(x: &[f64], tau: f64, tau0: f64) -> (f64, f64) {
    let (mut sxx, mut sxy) = (0.0, 0.0);
    let mut prev = 0.0;
    for &xt in x {
        sxx += prev * prev;
        sxy += prev * xt;
        prev = xt;
    }
    let v = 1.0 / (1.0 / tau0 + tau * sxx);
    (v * tau * sxy, v)
}

/// Exact Gibbs draw of `φ`.
pub fn update_phi<R: Rng + ?Sized>(state: &mut SvState, hyper: &SvHyper, rng: &mut R) -> Result<()> {
    let (m, v) = phi_conditional(&state.x, state.tau, hyper.tau0);
    let sd = v.sqrt();
    state.phi = if hyper.truncate_phi {
        use statrs::distribution::{ContinuousCDF, Normal as StNormal};
        let n = StNormal::new(m, sd).map_err(|e| Error::Domain(e.to_string()))?;
        let (lo, hi) = (n.cdf(-1.0), n.cdf(1.0));
        if hi - lo > 0.0 {
            let u: f64 = rng.random();
            n.inverse_cdf(lo + u * (hi - lo)).clamp(-1.0, 1.0)
        } else {
            m.clamp(-1.0, 1.0)
        }
    } else {
        Normal::new(m, sd).map_err(|e| Error::Domain(e.to_string()))?.sample(rng)
    };
    Ok(())
}

/// Shape and rate of `τ | X, φ`.
pub fn tau_conditional(x: &[f64], phi: f64, a: f64, b: f64) -> (f64, f64) {
    let mut prev = 0.0;
    let mut ss = 0.0;
    for &xt in x {
        ss += (xt - phi * prev).powi(2);
        prev = xt;
    }
    (a + 0.5 * x.len() as f64, b + 0.5 * ss)
}

/// Exact Gibbs draw of `τ`.
pub fn update_tau<R: Rng + ?Sized>(state: &mut SvState, hyper: &SvHyper, rng: &mut R) -> Result<()> {
    let (shape, rate) = tau_conditional(&state.x, state.phi, hyper.a, hyper.b);
    state.tau = Gamma::new(shape, 1.0 / rate)
        .map_err(|e| Error::Domain(e.to_string()))?
        .sample(rng);
    Ok(())
}

/// One structure-search sweep on `W_G(δ + T, D + Σ Y_t Y_t′ / e^{X_t})`.
pub fn update_k_g<R: Rng + ?Sized>(
    state: &mut SvState,
    data: &SvData<'_>,
    ctx: &mut MoveContext<'_>,
    sampler: Sampler,
    rng: &mut R,
    counters: &mut OpCounters,
) -> Result<()> {
    let d_star = data.scaled_scatter(&ctx.prior.d, &state.x);
    let posterior = GWishartParams::new(ctx.prior.delta + data.len() as f64, d_star, state.chain.graph.clone())?;
    ctx.set_posterior(posterior);
    posterior_sweep(&mut state.chain, sampler, ctx, rng, counters)
}

/// Settings for [`fit`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvConfig {
    pub iters: usize,
    pub burnin: usize,
    pub seed: u64,
    /// Initial random-walk step for `X`; tuned toward 0.35 acceptance
    /// during burn-in and frozen afterwards.
    pub step: f64,
    /// Freeze `X ≡ 0` (constant-volatility ablation).
    pub fixed_vol: bool,
    pub sampler: Sampler,
    pub clique_cover: CliqueCover,
}

impl Default for SvConfig {
    fn default() -> Self {
        SvConfig {
            iters: 2_000,
            burnin: 500,
            seed: 0,
            step: 0.5,
            fixed_vol: false,
            sampler: Sampler::Cl,
            clique_cover: CliqueCover::Maximal,
        }
    }
}

const TARGET_ACCEPT: f64 = 0.35;

impl SvConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iters == 0 || self.burnin >= self.iters {
            return Err(Error::Config(format!(
                "need 0 ≤ burnin < iters, got burnin = {}, iters = {}",
                self.burnin, self.iters
            )));
        }
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::Config(format!("step must be positive, got {}", self.step)));
        }
        Ok(())
    }
}

/// What the predictive needs from one retained draw.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictiveState {
    pub x_last: f64,
    pub phi: f64,
    /// `+∞` pins `X_{T+1} = φ X_T`.
    pub tau: f64,
    pub k: SymMatrix,
}

#[derive(Clone, Debug)]
pub struct SvFit {
    /// Posterior mean of `X_1..X_T`.
    pub x_mean: Vec<f64>,
    pub edge_probs: SymMatrix,
    pub k_mean: SymMatrix,
    pub phi_mean: f64,
    pub tau_mean: f64,
    /// Post-burn-in acceptance rate of the `X` updates.
    pub x_acceptance: f64,
    /// Step after burn-in tuning.
    pub step: f64,
    pub draws: Vec<PredictiveState>,
    pub final_state: SvState,
    pub counters: OpCounters,
}

impl SvFit {
    /// `E[X_{T+1} | Y_{1:T}] = E[φ X_T]`.
    pub fn next_x_mean(&self) -> f64 {
        self.draws.iter().map(|s| s.phi * s.x_last).sum::<f64>() / self.draws.len() as f64
    }
}

/// Runs the sampler on `y`, optionally from `init` (its `X` must have
/// length `T`). One sweep updates `X`, `φ`, `τ`, then `(K, G)`.
pub fn fit(y: &[Vec<f64>], hyper: &SvHyper, config: &SvConfig, init: Option<SvState>) -> Result<SvFit> {
    let rng = ChaCha8Rng::seed_from_u64(config.seed);
    fit_with_rng(y, hyper, config, init, rng)
}

pub fn fit_with_rng(
    y: &[Vec<f64>],
    hyper: &SvHyper,
    config: &SvConfig,
    init: Option<SvState>,
    mut rng: ChaCha8Rng,
) -> Result<SvFit> {
    hyper.validate()?;
    config.validate()?;
    let data = SvData::new(y)?;
    let (t_len, p) = (data.len(), data.p);
    let prior = hyper.prior(p)?;
    if config.sampler == Sampler::Cl && !prior.has_identity_scale() {
        return Err(Error::Config("the CL sampler requires prior scale D = I".into()));
    }
    let mut state = init.unwrap_or_else(|| SvState::initial(t_len, p));
    if state.x.len() != t_len || state.chain.k.n() != p {
        return Err(Error::DimensionMismatch {
            expected: t_len,
            found: state.x.len(),
        });
    }
    if config.fixed_vol {
        state.x.iter_mut().for_each(|x| *x = 0.0);
        state.phi = 0.0;
    }
    let graph_prior = GraphPrior::new(hyper.edge_probability)?;
    let posterior = prior.posterior(&data.scaled_scatter(&SymMatrix::zeros(p), &state.x), t_len as f64)?;
    let mut ctx = MoveContext::new(posterior, &prior, &graph_prior, 1, config.clique_cover);
    let mut counters = OpCounters::default();

    let mut step = config.step;
    let kept = config.iters - config.burnin;
    let mut x_sum = vec![0.0; t_len];
    let mut edge_counts = vec![0u64; p * p];
    let mut k_sum = SymMatrix::zeros(p);
    let (mut phi_sum, mut tau_sum) = (0.0, 0.0);
    let mut accepted_kept = 0usize;
    let mut draws = Vec::with_capacity(kept);
    for it in 0..config.iters {
        if !config.fixed_vol {
            let acc = update_x(&mut state, &data, step, &mut rng);
            if it < config.burnin {
                let rate = acc as f64 / t_len as f64;
                let gain = 1.0 / ((it + 1) as f64).sqrt();
                step *= (gain * (rate - TARGET_ACCEPT)).exp();
            } else {
                accepted_kept += acc;
            }
            update_phi(&mut state, hyper, &mut rng)?;
            update_tau(&mut state, hyper, &mut rng)?;
        }
        update_k_g(&mut state, &data, &mut ctx, config.sampler, &mut rng, &mut counters)?;
        if it >= config.burnin {
            x_sum.iter_mut().zip(&state.x).for_each(|(s, x)| *s += x);
            for (a, b) in state.chain.graph.edges() {
                edge_counts[a * p + b] += 1;
            }
            k_sum.add_assign_scaled(&state.chain.k, 1.0);
            phi_sum += state.phi;
            tau_sum += state.tau;
            draws.push(PredictiveState {
                x_last: *state.x.last().expect("T ≥ 2"),
                phi: state.phi,
                tau: if config.fixed_vol { f64::INFINITY } else { state.tau },
                k: state.chain.k.clone(),
            });
        }
    }
    let n = kept as f64;
    Ok(SvFit {
        x_mean: x_sum.iter().map(|s| s / n).collect(),
        edge_probs: SymMatrix::from_fn(p, |a, b| if a == b { 1.0 } else { edge_counts[a.min(b) * p + a.max(b)] as f64 / n }),
        k_mean: k_sum.scaled(1.0 / n),
        phi_mean: phi_sum / n,
        tau_mean: tau_sum / n,
        x_acceptance: if config.fixed_vol { 0.0 } else { accepted_kept as f64 / (n * t_len as f64) },
        step,
        draws,
        final_state: state,
        counters,
    })
}

/// `m` draws of `Y_{T+1}`; retained states are used in turn, evenly spread
/// when `m` is below their number.
pub fn posterior_predictive<R: Rng + ?Sized>(
    states: &[PredictiveState],
    m: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    if states.is_empty() {
        return Err(Error::Config("posterior predictive needs at least one state".into()));
    }
    let n = states.len();
    let mut out = Vec::with_capacity(m);
    let mut factors: Vec<Option<crate::linalg::CholeskyFactor>> = vec![None; n];
    for r in 0..m {
        let idx = (r * n) / m.max(1);
        let s = &states[idx];
        if factors[idx].is_none() {
            factors[idx] = Some(cholesky(&s.k)?);
        }
        let phi = factors[idx].as_ref().expect("just set");
        let sd = if s.tau.is_infinite() { 0.0 } else { s.tau.recip().sqrt() };
        let x_next = s.phi * s.x_last + sd * rng.sample::<f64, _>(StandardNormal);
        let z: Vec<f64> = (0..s.k.n()).map(|_| rng.sample(StandardNormal)).collect();
        // K = ΦᵀΦ, so Φ⁻¹z has covariance K⁻¹
        let scale = (0.5 * x_next).exp();
        out.push(phi.solve_upper(&z).into_iter().map(|v| scale * v).collect());
    }
    Ok(out)
}

/// Forecast for one day, fitted on every earlier row.
#[derive(Clone, Debug, PartialEq)]
pub struct ForecastDay {
    pub date: String,
    /// Row of the forecast day in the input series.
    pub index: usize,
    pub draws: Vec<Vec<f64>>,
    /// `E[X_{t+1} | Y_{1:t}]`.
    pub x_next_mean: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForecastConfig {
    pub fit: SvConfig,
    /// Predictive draws per day.
    pub draws: usize,
    /// Start each day from the previous day's final state. Forces serial
    /// execution.
    pub warm_start: bool,
    /// Worker threads; `0` uses the rayon default.
    pub jobs: usize,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        ForecastConfig {
            fit: SvConfig::default(),
            draws: 1_000,
            warm_start: false,
            jobs: 0,
        }
    }
}

fn forecast_day(
    series: &ReturnsSeries,
    hyper: &SvHyper,
    config: &ForecastConfig,
    day: usize,
    init: Option<SvState>,
) -> Result<(ForecastDay, SvState)> {
    // seed splitting rule: global seed + row index of the forecast day
    let seed = config.fit.seed.wrapping_add(day as u64);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fit_cfg = SvConfig { seed, ..config.fit.clone() };
    let fit = fit_with_rng(&series.y[..day], hyper, &fit_cfg, init, rng.clone())?;
    // the predictive stream is separate from the fitting stream
    rng.set_stream(1);
    let draws = posterior_predictive(&fit.draws, config.draws, &mut rng)?;
    log::debug!("forecast {}: E[X] = {:.3}", series.dates[day], fit.next_x_mean());
    Ok((
        ForecastDay {
            date: series.dates[day].clone(),
            index: day,
            draws,
            x_next_mean: fit.next_x_mean(),
        },
        fit.final_state,
    ))
}

/// Forecasts rows `start..=end` of `series`, each from a fit on the rows
/// before it. Without warm starts the days are independent and run in
/// parallel; results do not depend on the thread count.
pub fn rolling_forecast(
    series: &ReturnsSeries,
    hyper: &SvHyper,
    start: usize,
    end: usize,
    config: &ForecastConfig,
) -> Result<Vec<ForecastDay>> {
    if start < 2 || end < start || end >= series.len() {
        return Err(Error::Config(format!(
            "forecast window must satisfy 2 ≤ start ≤ end < {}, got {start}..={end}",
            series.len()
        )));
    }
    if config.draws == 0 {
        return Err(Error::Config("draws must be at least 1".into()));
    }
    hyper.validate()?;
    config.fit.validate()?;
    if config.warm_start {
        let mut out = Vec::with_capacity(end - start + 1);
        let mut prev: Option<SvState> = None;
        for day in start..=end {
            let init = prev.take().map(|mut s| {
                let last = *s.x.last().expect("T ≥ 2");
                s.x.push(s.phi * last);
                s
            });
            let (f, s) = forecast_day(series, hyper, config, day, init)?;
            out.push(f);
            prev = Some(s);
        }
        return Ok(out);
    }
    let run = || {
        (start..=end)
            .into_par_iter()
            .map(|day| forecast_day(series, hyper, config, day, None).map(|(f, _)| f))
            .collect::<Result<Vec<_>>>()
    };
    if config.jobs == 0 {
        run()
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(config.jobs)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(run)
    }
}

/// Simulates `T` returns from the model with known `K` and log-volatility
/// path `x`.
pub fn simulate<R: Rng + ?Sized>(k: &SymMatrix, x: &[f64], rng: &mut R) -> Result<Vec<Vec<f64>>> {
    let phi = cholesky(k)?;
    Ok(x.iter()
        .map(|&xt| {
            let z: Vec<f64> = (0..k.n()).map(|_| rng.sample(StandardNormal)).collect();
            let s = (0.5 * xt).exp();
            phi.solve_upper(&z).into_iter().map(|v| s * v).collect()
        })
        .collect())
}

/// Synthetic test bed: six assets on a cycle, `T = 500`, `X = 0` except a
/// `+2` block on rows `spike`.
#[derive(Clone, Debug)]
pub struct SpikeScenario {
    pub series: ReturnsSeries,
    pub k: SymMatrix,
    pub graph: Graph,
    pub x: Vec<f64>,
    pub spike: std::ops::Range<usize>,
}

pub fn spike_scenario(seed: u64) -> Result<SpikeScenario> {
    let p = 6;
    let t_len = 500;
    let spike = 225..275;
    let graph = Graph::from_edges(p, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (0, 5)])?;
    let k = SymMatrix::from_fn(p, |i, j| {
        if i == j {
            1.0
        } else if graph.has_edge(i, j) {
            0.4
        } else {
            0.0
        }
    });
    let x: Vec<f64> = (0..t_len).map(|t| if spike.contains(&t) { 2.0 } else { 0.0 }).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y = simulate(&k, &x, &mut rng)?;
    let dates = (0..t_len).map(|t| format!("d{t:04}")).collect();
    let tickers = (0..p).map(|i| format!("A{}", i + 1)).collect();
    Ok(SpikeScenario {
        series: ReturnsSeries::new(dates, tickers, y)?,
        k,
        graph,
        x,
        spike,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phi_conditional_two_points() {
        let (m, v) = phi_conditional(&[1.0, 1.0], 1.0, 1.0);
        assert!((v - 0.5).abs() < 1e-15);
        assert!((m - 0.5).abs() < 1e-15);
        let (m0, v0) = phi_conditional(&[0.0; 5], 3.0, 2.0);
        assert_eq!((m0, v0), (0.0, 2.0));
    }

    #[test]
    fn phi_conditional_tends_to_least_squares() {
        let x = [0.5, 0.2, -0.4, 0.3];
        let (m, _) = phi_conditional(&x, 1e12, 1.0);
        let ls = (0.5 * 0.2 + 0.2 * -0.4 + -0.4 * 0.3) / (0.25 + 0.04 + 0.16);
        assert!((m - ls).abs() < 1e-9);
    }

    #[test]
    fn tau_conditional_examples() {
        assert_eq!(tau_conditional(&[1.0, 1.0], 0.0, 1.0, 1.0), (2.0, 2.0));
        assert_eq!(tau_conditional(&[0.0; 4], 0.0, 1.5, 0.7), (3.5, 0.7));
        let loose = tau_conditional(&[1.0, -1.0], 0.0, 1.0, 1.0);
        let tight = tau_conditional(&[0.5, -0.5], 0.0, 1.0, 1.0);
        assert!(tight.0 / tight.1 > loose.0 / loose.1);
    }

    #[test]
    fn zero_returns_pull_x_down() {
        let state = SvState::initial(3, 2);
        // with Y_t = 0 only the −(p/2)X_t term and the AR prior remain
        let up = log_cond_x(&state, 1, 0.5, 0.0, 2);
        let down = log_cond_x(&state, 1, -0.5, 0.0, 2);
        assert!(down > up);
    }

    #[test]
    fn scaled_scatter_reduces_to_plain_scatter_at_zero() {
        let y = vec![vec![1.0, 2.0], vec![-1.0, 0.5], vec![0.3, 0.3]];
        let data = SvData::new(&y).unwrap();
        let d = SymMatrix::identity(2);
        let plain = d.add(&crate::io::scatter(&y, None));
        assert!(data.scaled_scatter(&d, &[0.0; 3]).max_abs_diff(&plain) < 1e-14);
        let halved = data.scaled_scatter(&SymMatrix::zeros(2), &[2f64.ln(); 3]);
        let full = data.scaled_scatter(&SymMatrix::zeros(2), &[0.0; 3]);
        assert!(halved.scaled(2.0).max_abs_diff(&full) < 1e-14);
    }

    #[test]
    fn fixed_vol_matches_static_search() {
        let sc = spike_scenario(1).unwrap();
        let y = &sc.series.y[..60];
        let hyper = SvHyper::default();
        let cfg = SvConfig { iters: 200, burnin: 50, seed: 5, fixed_vol: true, ..SvConfig::default() };
        let fit = fit(y, &hyper, &cfg, None).unwrap();
        let prior = hyper.prior(6).unwrap();
        let search = crate::search::SearchConfig { iters: 200, burnin: 50, seed: 5, ..Default::default() };
        let s = crate::search::run_chain(&crate::io::scatter(y, None), 60.0, &prior, &search).unwrap();
        assert_eq!(fit.edge_probs, s.edge_probs);
        assert_eq!(fit.final_state.chain, s.final_state);
    }

    #[test]
    fn degenerate_predictive_is_standard_normal_scaled() {
        let s = PredictiveState { x_last: 0.0, phi: 0.0, tau: f64::INFINITY, k: SymMatrix::identity(2) };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = posterior_predictive(&[s.clone()], 4000, &mut rng).unwrap();
        let var: f64 = draws.iter().map(|d| d[0] * d[0]).sum::<f64>() / 4000.0;
        assert!((var - 1.0).abs() < 0.1);
        let wide = PredictiveState { x_last: 1.0, phi: 2f64.ln(), ..s };
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let scaled = posterior_predictive(&[wide], 4000, &mut rng).unwrap();
        // same normals, X_{T+1} = ln 2 doubles the variance
        for (a, b) in draws.iter().zip(&scaled) {
            assert!((b[0] - a[0] * 2f64.sqrt()).abs() < 1e-12);
        }
        assert!(posterior_predictive(&[], 3, &mut rng).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(SvConfig { burnin: 10, iters: 10, ..SvConfig::default() }.validate().is_err());
        assert!(SvConfig { step: 0.0, ..SvConfig::default() }.validate().is_err());
        assert!(SvHyper { tau0: -1.0, ..SvHyper::default() }.validate().is_err());
        assert!(SvHyper { edge_probability: 1.0, ..SvHyper::default() }.validate().is_err());
    }
}
