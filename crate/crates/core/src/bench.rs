//! Timed CL versus WL comparison on a fixed problem.
//!
//! Wall-clock time on a shared machine drifts by tens of percent between
//! runs, so the two samplers are run in alternating pairs and the reported
//! speedup is the median of the per-pair ratios. A seeded chain is
//! deterministic, so every repeat produces the same draws; only the clock
//! differs.

use serde::{Deserialize, Serialize};

use crate::counters::OpCounters;
use crate::error::{Error, Result};
use crate::gwishart::GWishartParams;
use crate::linalg::SymMatrix;
use crate::search::{edge_mse, run_chain, ChainSummary, Sampler, SearchConfig};

/// Timing and counters of one structure-search configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub sampler: String,
    /// Median over `repeat_seconds`.
    pub seconds: f64,
    #[serde(default)]
    pub repeat_seconds: Vec<f64>,
    pub iters: usize,
    pub burnin: usize,
    pub seed: u64,
    pub edge_move_inversions_per_sweep: f64,
    pub counters: OpCounters,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub mse_vs_target: Option<f64>,
}

impl Timing {
    pub fn from_run(summary: &ChainSummary, config: &SearchConfig, target: Option<&SymMatrix>) -> Self {
        Timing {
            sampler: config.sampler.to_string(),
            seconds: summary.seconds,
            repeat_seconds: vec![summary.seconds],
            iters: config.iters,
            burnin: config.burnin,
            seed: config.seed,
            edge_move_inversions_per_sweep: summary.counters.edge_move_inversions_per_sweep(),
            counters: summary.counters,
            mse_vs_target: target.map(|t| edge_mse(&summary.edge_probs, t)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub cl: Timing,
    pub wl: Timing,
    /// Median over repeats of WL seconds / CL seconds.
    pub speedup: f64,
    pub reference: Vec<ReferenceRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub sampler: String,
    pub seconds: f64,
    pub mse: f64,
    pub mse_sd: f64,
}

/// Reference timings and errors for the six-node benchmark.
pub fn reference_timings() -> Vec<ReferenceRow> {
    vec![
        ReferenceRow {
            sampler: "cl".into(),
            seconds: 182.5,
            mse: 0.0088,
            mse_sd: 6e-4,
        },
        ReferenceRow {
            sampler: "wl".into(),
            seconds: 818.4,
            mse: 0.0349,
            mse_sd: 0.0025,
        },
    ]
}

pub fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Builds a report from one CL run and one WL run.
pub fn benchmark_report(
    cl: (&ChainSummary, &SearchConfig),
    wl: (&ChainSummary, &SearchConfig),
    target: Option<&SymMatrix>,
) -> Result<BenchmarkReport> {
    check_pair(cl.1, wl.1)?;
    let cl_t = Timing::from_run(cl.0, cl.1, target);
    let wl_t = Timing::from_run(wl.0, wl.1, target);
    let speedup = ratio(wl_t.seconds, cl_t.seconds);
    Ok(BenchmarkReport {
        cl: cl_t,
        wl: wl_t,
        speedup,
        reference: reference_timings(),
    })
}

fn check_pair(a: &SearchConfig, b: &SearchConfig) -> Result<()> {
    if a.sampler != Sampler::Cl || b.sampler != Sampler::Wl {
        return Err(Error::Config("benchmark expects a CL run and a WL run".into()));
    }
    if a.iters != b.iters
        || a.burnin != b.burnin
        || a.seed != b.seed
        || a.graph_prior != b.graph_prior
        || a.clique_cover != b.clique_cover
    {
        return Err(Error::Config("benchmark runs must share iters, burnin, seed and priors".into()));
    }
    Ok(())
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        f64::INFINITY
    }
}

/// Both chains of the last repeat together with the aggregated report.
#[derive(Clone, Debug)]
pub struct BenchmarkRun {
    pub cl: ChainSummary,
    pub wl: ChainSummary,
    pub report: BenchmarkReport,
}

/// Runs CL and WL `repeats` times each, alternating which goes first.
/// `base.sampler` is ignored.
pub fn run_benchmark(
    u: &SymMatrix,
    n: f64,
    prior: &GWishartParams,
    base: &SearchConfig,
    repeats: usize,
    target: Option<&SymMatrix>,
) -> Result<BenchmarkRun> {
    if repeats == 0 {
        return Err(Error::Config("repeats must be at least 1".into()));
    }
    let cl_cfg = SearchConfig { sampler: Sampler::Cl, ..base.clone() };
    let wl_cfg = SearchConfig { sampler: Sampler::Wl, ..base.clone() };
    let (mut cl_secs, mut wl_secs) = (Vec::new(), Vec::new());
    let mut last = None;
    for r in 0..repeats {
        let (cl, wl) = if r % 2 == 0 {
            let cl = run_chain(u, n, prior, &cl_cfg)?;
            (cl, run_chain(u, n, prior, &wl_cfg)?)
        } else {
            let wl = run_chain(u, n, prior, &wl_cfg)?;
            (run_chain(u, n, prior, &cl_cfg)?, wl)
        };
        log::info!("benchmark repeat {}: cl {:.3}s, wl {:.3}s", r + 1, cl.seconds, wl.seconds);
        cl_secs.push(cl.seconds);
        wl_secs.push(wl.seconds);
        last = Some((cl, wl));
    }
    let (cl, wl) = last.expect("at least one repeat");
    let mut report = benchmark_report((&cl, &cl_cfg), (&wl, &wl_cfg), target)?;
    let ratios: Vec<f64> = wl_secs.iter().zip(&cl_secs).map(|(&w, &c)| ratio(w, c)).collect();
    report.speedup = median(&ratios);
    report.cl.seconds = median(&cl_secs);
    report.cl.repeat_seconds = cl_secs;
    report.wl.seconds = median(&wl_secs);
    report.wl.repeat_seconds = wl_secs;
    Ok(BenchmarkRun { cl, wl, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;
    use crate::io::builtin_wangli6;

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }

    #[test]
    fn mismatched_configs_are_rejected() {
        let (u, n) = builtin_wangli6();
        let prior = GWishartParams::identity_scale(3.0, Graph::empty(6)).unwrap();
        let a = SearchConfig { sampler: Sampler::Cl, iters: 20, burnin: 5, seed: 3, ..SearchConfig::default() };
        let b = SearchConfig { sampler: Sampler::Wl, seed: 4, ..a.clone() };
        let ca = run_chain(&u, n, &prior, &a).unwrap();
        let cb = run_chain(&u, n, &prior, &b).unwrap();
        assert!(matches!(benchmark_report((&ca, &a), (&cb, &b), None), Err(Error::Config(_))));
        assert!(matches!(benchmark_report((&cb, &b), (&ca, &a), None), Err(Error::Config(_))));
    }

    #[test]
    fn repeats_give_identical_draws() {
        let (u, n) = builtin_wangli6();
        let prior = GWishartParams::identity_scale(3.0, Graph::empty(6)).unwrap();
        let base = SearchConfig { iters: 30, burnin: 10, seed: 9, ..SearchConfig::default() };
        let run = run_benchmark(&u, n, &prior, &base, 3, None).unwrap();
        assert_eq!(run.report.cl.repeat_seconds.len(), 3);
        let single = run_chain(&u, n, &prior, &SearchConfig { sampler: Sampler::Cl, ..base.clone() }).unwrap();
        assert_eq!(single.edge_probs, run.cl.edge_probs);
        assert!(run.report.speedup > 0.0);
        assert!(run_benchmark(&u, n, &prior, &base, 0, None).is_err());
    }
}
