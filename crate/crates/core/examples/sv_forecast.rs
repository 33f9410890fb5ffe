//! Graphical stochastic volatility on a simulated series with a volatility
//! spike: fit once, then compare rolling forecasts with and without the
//! volatility process.
//!
//! ```text
//! cargo run --release --example sv_forecast -- [seed]
//! ```

use ggmsv::scoring::{mean_se, score_series, PredictiveSample};
use ggmsv::stochvol::{fit, rolling_forecast, spike_scenario, ForecastConfig, SvConfig, SvHyper};

fn main() -> ggmsv::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(1);
    let sc = spike_scenario(seed)?;
    let hyper = SvHyper::default();

    let f = fit(&sc.series.y, &hyper, &SvConfig { iters: 2_000, burnin: 500, seed, ..SvConfig::default() }, None)?;
    println!("phi {:.3}, tau {:.2}, X acceptance {:.2}", f.phi_mean, f.tau_mean, f.x_acceptance);
    for t in (200..300).step_by(10) {
        println!("  t = {t}: E[X] {:6.3}  true {:.1}", f.x_mean[t], sc.x[t]);
    }

    let (start, end) = (200, 299);
    let realized: Vec<_> = (start..=end).map(|t| (sc.series.dates[t].clone(), sc.series.y[t].clone())).collect();
    for fixed_vol in [false, true] {
        let config = ForecastConfig {
            fit: SvConfig { iters: 400, burnin: 150, seed, fixed_vol, ..SvConfig::default() },
            draws: 300,
            ..ForecastConfig::default()
        };
        let days = rolling_forecast(&sc.series, &hyper, start, end, &config)?;
        let pred: Vec<_> = days.into_iter().map(|d| PredictiveSample { label: d.date, draws: d.draws }).collect();
        let es = score_series(&pred, &realized, 1.0)?;
        let inside: Vec<f64> = (start..=end).zip(&es).filter(|(t, _)| sc.spike.contains(t)).map(|(_, &v)| v).collect();
        let (m, se) = mean_se(&inside);
        let name = if fixed_vol { "fixed volatility" } else { "stochastic volatility" };
        println!("{name}: mean ES in the spike window {m:.3} ± {se:.3}");
    }
    Ok(())
}
