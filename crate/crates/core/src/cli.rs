//! `ggmsv` command line.
//!
//! Every subcommand also reads an optional JSON file given with
//! `--config`: an object whose keys are the long flag names in snake case.
//! Flags given on the command line override the file. A boolean switch can
//! be turned on from either place but not turned off from the command line.
//!
//! Exit codes: 0 success, 2 configuration or input error, 3 numerical
//! failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::bench::{run_benchmark, Timing};
use crate::error::{Error, Result};
use crate::graph::{clique_cover, CliqueCover, Graph};
use crate::gwishart::{sample_chain, ChainState, GWishartParams, PriorSampler, TraceWriter};
use crate::io::{
    builtin_wangli6, ingest_path, read_predictions, scatter, wangli6_target, write_json, write_matrix,
    write_predictions, IngestMode, ReturnsSeries,
};
use crate::linalg::SymMatrix;
use crate::scoring::{compare, mean_se, score_series, write_scores, DEFAULT_BETA};
use crate::search::{run_chain_with, GraphPrior, Sampler, SearchConfig};
use crate::stochvol::{rolling_forecast, ForecastConfig, SvConfig, SvHyper};

#[derive(Debug, Parser)]
#[command(name = "ggmsv", version, about = "Gaussian graphical model search and graphical stochastic volatility")]
pub struct Cli {
    /// JSON file with default values for the subcommand's flags.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Joint (K, G) posterior sampling on a data set.
    Search(SearchArgs),
    /// Timed CL versus WL comparison on the built-in six-node problem.
    Benchmark(BenchmarkArgs),
    /// Rolling one-day-ahead forecasts from the stochastic volatility model.
    SvForecast(SvForecastArgs),
    /// Energy scores of two forecast directories against realised returns.
    Score(ScoreArgs),
    /// Raw G-Wishart prior draws.
    Sample(SampleArgs),
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchArgs {
    /// Built-in data set (`wangli6`).
    #[arg(long)]
    pub builtin: Option<String>,
    /// Returns CSV (`date,<ticker>,...`).
    #[arg(long, visible_alias = "data")]
    #[serde(alias = "data")]
    pub returns: Option<PathBuf>,
    /// Expected dimension; checked against the data.
    #[arg(long)]
    pub p: Option<usize>,
    /// The CSV holds prices; log-returns are taken.
    #[arg(long)]
    #[serde(default)]
    pub prices: bool,
    /// `cl` or `wl`.
    #[arg(long)]
    pub sampler: Option<String>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub burnin: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Prior edge inclusion probability.
    #[arg(long, visible_alias = "edge-prior")]
    #[serde(alias = "edge_prior")]
    pub edge_prob: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub rwmh_steps: Option<usize>,
    /// `maximal` or `edge-pairs`.
    #[arg(long)]
    pub clique_cover: Option<String>,
    /// Per-sweep CSV of the upper triangle of K.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkArgs {
    #[arg(long)]
    pub builtin: Option<String>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub burnin: Option<usize>,
    /// Required.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Alternating CL/WL pairs; the median ratio is reported.
    #[arg(long)]
    pub repeats: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvForecastArgs {
    #[arg(long)]
    pub returns: Option<PathBuf>,
    #[arg(long)]
    #[serde(default)]
    pub prices: bool,
    /// Last training date; forecasting starts on the next row.
    #[arg(long)]
    pub train_end: Option<String>,
    /// Last forecast date (default: the last row).
    #[arg(long)]
    pub forecast_end: Option<String>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub burnin: Option<usize>,
    /// Predictive draws per day.
    #[arg(long)]
    pub draws: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Hold X at zero (constant-volatility ablation).
    #[arg(long)]
    #[serde(default)]
    pub fixed_vol: bool,
    /// Start each day's chain from the previous day's final state.
    #[arg(long)]
    #[serde(default)]
    pub warm_start: bool,
    /// Worker threads for independent days (0: all cores).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Initial random-walk step for X.
    #[arg(long)]
    pub step: Option<f64>,
    /// Prior variance of φ.
    #[arg(long)]
    pub tau0: Option<f64>,
    /// Shape of the Gamma prior on τ.
    #[arg(long)]
    pub a: Option<f64>,
    /// Rate of the Gamma prior on τ.
    #[arg(long)]
    pub b: Option<f64>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long, visible_alias = "edge-prior")]
    #[serde(alias = "edge_prior")]
    pub edge_prob: Option<f64>,
    /// Restrict φ to (-1, 1).
    #[arg(long)]
    #[serde(default)]
    pub truncate_phi: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreArgs {
    /// Forecast directory of the first model.
    #[arg(long)]
    pub model_a: Option<PathBuf>,
    /// Forecast directory of the second model.
    #[arg(long)]
    pub model_b: Option<PathBuf>,
    /// Realised returns CSV.
    #[arg(long)]
    pub returns: Option<PathBuf>,
    #[arg(long)]
    #[serde(default)]
    pub prices: bool,
    /// Distance exponent in (0, 2].
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleArgs {
    /// Edge list: node count on the first line, then 1-based `i j` pairs.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Complete graph on this many nodes when `--graph` is absent.
    #[arg(long)]
    pub p: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    /// `block-gibbs` or `rwmh`.
    #[arg(long)]
    pub sampler: Option<String>,
    #[arg(long)]
    pub iters: Option<usize>,
    #[arg(long)]
    pub burnin: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub clique_cover: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Drops unset values so they do not shadow the config file.
fn strip_unset(v: Value) -> Value {
    match v {
        Value::Object(map) => Value::Object(
            map.into_iter()
                .filter(|(_, v)| !matches!(v, Value::Null | Value::Bool(false)))
                .collect(),
        ),
        other => other,
    }
}

/// Overlays command-line values on the config file.
pub fn layered<T: Serialize + DeserializeOwned>(cli: &T, config: Option<&Path>) -> Result<T> {
    let Some(path) = config else {
        return Ok(serde_json::from_value(serde_json::to_value(cli)?)?);
    };
    let text = std::fs::read_to_string(path)?;
    let mut base: Value = serde_json::from_str(&text)?;
    let Value::Object(base_map) = &mut base else {
        return Err(Error::Config(format!("{} must hold a JSON object", path.display())));
    };
    if let Value::Object(flags) = strip_unset(serde_json::to_value(cli)?) {
        base_map.extend(flags);
    }
    serde_json::from_value(base).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

pub fn exit_code(err: &Error) -> i32 {
    if err.is_numeric() {
        3
    } else {
        2
    }
}

/// Parses `args`, runs the subcommand and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();
    match run(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    let config = cli.config.as_deref();
    match &cli.command {
        Command::Search(a) => search(&layered(a, config)?),
        Command::Benchmark(a) => benchmark(&layered(a, config)?),
        Command::SvForecast(a) => sv_forecast(&layered(a, config)?),
        Command::Score(a) => score(&layered(a, config)?),
        Command::Sample(a) => sample(&layered(a, config)?),
    }
}

fn out_dir(out: &Option<PathBuf>) -> Result<PathBuf> {
    let dir = out.clone().unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn mode(prices: bool) -> IngestMode {
    if prices {
        IngestMode::Prices
    } else {
        IngestMode::Returns
    }
}

fn load_returns(path: &Option<PathBuf>, prices: bool) -> Result<ReturnsSeries> {
    let path = path.as_ref().ok_or_else(|| Error::Config("--returns is required".into()))?;
    let ingested = ingest_path(path, mode(prices))?;
    if ingested.dropped_rows > 0 {
        log::warn!("{}: dropped {} rows with missing values", path.display(), ingested.dropped_rows);
    }
    Ok(ingested.series)
}

fn parse_opt<T: std::str::FromStr<Err = Error>>(v: &Option<String>, default: T) -> Result<T> {
    v.as_deref().map_or(Ok(default), str::parse)
}

fn builtin(name: &str) -> Result<(SymMatrix, f64, Option<SymMatrix>)> {
    match name {
        "wangli6" => {
            let (u, n) = builtin_wangli6();
            Ok((u, n, Some(wangli6_target())))
        }
        other => Err(Error::Config(format!("unknown built-in data set `{other}`"))),
    }
}

fn search(a: &SearchArgs) -> Result<()> {
    let (u, n, target) = match (&a.builtin, &a.returns) {
        (Some(name), None) => builtin(name)?,
        (None, Some(_)) => {
            let series = load_returns(&a.returns, a.prices)?;
            (scatter(&series.y, None), series.len() as f64, None)
        }
        _ => return Err(Error::Config("give exactly one of --builtin and --returns".into())),
    };
    if let Some(p) = a.p {
        if p != u.n() {
            return Err(Error::DimensionMismatch { expected: p, found: u.n() });
        }
    }
    let config = SearchConfig {
        sampler: parse_opt(&a.sampler, Sampler::Cl)?,
        iters: a.iters.unwrap_or(60_000),
        burnin: a.burnin.unwrap_or(10_000),
        seed: a.seed.unwrap_or(0),
        graph_prior: GraphPrior::new(a.edge_prob.unwrap_or(0.5))?,
        rwmh_steps: a.rwmh_steps.unwrap_or(1),
        clique_cover: parse_opt(&a.clique_cover, CliqueCover::Maximal)?,
    };
    config.validate()?;
    let prior = GWishartParams::identity_scale(a.delta.unwrap_or(3.0), Graph::empty(u.n()))?;
    let dir = out_dir(&a.out)?;
    let mut trace = a
        .trace
        .as_ref()
        .map(|p| File::create(p).map(|f| TraceWriter::new(BufWriter::new(f))))
        .transpose()?;
    let rng = ChaCha8Rng::seed_from_u64(config.seed);
    let state = ChainState::identity(Graph::empty(u.n()));
    let summary = run_chain_with(state, &u, n, &prior, &config, rng, |it, s| match trace.as_mut() {
        Some(t) => t.write(it, &s.k),
        None => Ok(()),
    })?;
    if let Some(t) = trace {
        t.finish()?;
    }
    write_matrix(&dir.join("edge_probs.csv"), &summary.edge_probs)?;
    write_matrix(&dir.join("k_mean.csv"), &summary.k_mean)?;
    let timing = Timing::from_run(&summary, &config, target.as_ref());
    write_json(&dir.join("timing.json"), &timing)?;
    match timing.mse_vs_target {
        Some(mse) => println!("{} done in {:.2}s, MSE vs target {:.5}", config.sampler, timing.seconds, mse),
        None => println!("{} done in {:.2}s", config.sampler, timing.seconds),
    }
    Ok(())
}

fn benchmark(a: &BenchmarkArgs) -> Result<()> {
    let seed = a.seed.ok_or_else(|| Error::Config("benchmark needs --seed".into()))?;
    let (u, n, target) = builtin(a.builtin.as_deref().unwrap_or("wangli6"))?;
    let base = SearchConfig {
        iters: a.iters.unwrap_or(60_000),
        burnin: a.burnin.unwrap_or(10_000),
        seed,
        ..SearchConfig::default()
    };
    base.validate()?;
    let prior = GWishartParams::identity_scale(3.0, Graph::empty(u.n()))?;
    let dir = out_dir(&a.out)?;
    let run = run_benchmark(&u, n, &prior, &base, a.repeats.unwrap_or(3), target.as_ref())?;
    write_matrix(&dir.join("edge_probs_cl.csv"), &run.cl.edge_probs)?;
    write_matrix(&dir.join("edge_probs_wl.csv"), &run.wl.edge_probs)?;
    write_json(&dir.join("timing.json"), &run.report)?;
    let r = &run.report;
    println!(
        "cl {:.3}s, wl {:.3}s, speedup {:.2}; inversions per sweep cl {:.1}, wl {:.1}",
        r.cl.seconds, r.wl.seconds, r.speedup, r.cl.edge_move_inversions_per_sweep, r.wl.edge_move_inversions_per_sweep
    );
    Ok(())
}

fn sv_forecast(a: &SvForecastArgs) -> Result<()> {
    let series = load_returns(&a.returns, a.prices)?;
    let train_end = a.train_end.as_ref().ok_or_else(|| Error::Config("--train-end is required".into()))?;
    let last_train = series
        .index_of(train_end)
        .ok_or_else(|| Error::Config(format!("train end {train_end} is not a date in the series")))?;
    let end = match &a.forecast_end {
        Some(d) => series
            .index_of(d)
            .ok_or_else(|| Error::Config(format!("forecast end {d} is not a date in the series")))?,
        None => series.len() - 1,
    };
    let hyper = SvHyper {
        tau0: a.tau0.unwrap_or(1.0),
        a: a.a.unwrap_or(1.0),
        b: a.b.unwrap_or(1.0),
        delta: a.delta.unwrap_or(3.0),
        d: None,
        edge_probability: a.edge_prob.unwrap_or(0.5),
        truncate_phi: a.truncate_phi,
    };
    let defaults = SvConfig::default();
    let config = ForecastConfig {
        fit: SvConfig {
            iters: a.iters.unwrap_or(defaults.iters),
            burnin: a.burnin.unwrap_or(defaults.burnin),
            seed: a.seed.unwrap_or(0),
            step: a.step.unwrap_or(defaults.step),
            fixed_vol: a.fixed_vol,
            ..defaults
        },
        draws: a.draws.unwrap_or(1_000),
        warm_start: a.warm_start,
        jobs: a.jobs.unwrap_or(0),
    };
    let dir = out_dir(&a.out)?;
    let days = rolling_forecast(&series, &hyper, last_train + 1, end, &config)?;
    write_predictions(&dir, &series.tickers, &days)?;
    println!("{} forecast days written to {}", days.len(), dir.display());
    Ok(())
}

fn score(a: &ScoreArgs) -> Result<()> {
    let need = |p: &Option<PathBuf>, flag: &str| p.clone().ok_or_else(|| Error::Config(format!("{flag} is required")));
    let (ta, pa) = read_predictions(&need(&a.model_a, "--model-a")?)?;
    let (tb, pb) = read_predictions(&need(&a.model_b, "--model-b")?)?;
    let series = load_returns(&a.returns, a.prices)?;
    if ta != series.tickers || tb != series.tickers {
        return Err(Error::LabelMismatch("forecast tickers differ from the returns file".into()));
    }
    let realized = |pred: &[crate::scoring::PredictiveSample]| -> Result<Vec<(String, Vec<f64>)>> {
        pred.iter()
            .map(|s| {
                let i = series
                    .index_of(&s.label)
                    .ok_or_else(|| Error::LabelMismatch(format!("no realised returns for {}", s.label)))?;
                Ok((s.label.clone(), series.y[i].clone()))
            })
            .collect()
    };
    let beta = a.beta.unwrap_or(DEFAULT_BETA);
    let sa = score_series(&pa, &realized(&pa)?, beta)?;
    let sb = score_series(&pb, &realized(&pb)?, beta)?;
    let la: Vec<String> = pa.iter().map(|s| s.label.clone()).collect();
    let lb: Vec<String> = pb.iter().map(|s| s.label.clone()).collect();
    if la != lb {
        return Err(Error::LabelMismatch("the two forecast directories cover different dates".into()));
    }
    let rows = compare(&la, &sa, &sb)?;
    let dir = out_dir(&a.out)?;
    write_scores(BufWriter::new(File::create(dir.join("es.csv"))?), &rows)?;
    let diffs: Vec<f64> = rows.iter().map(|r| r.difference).collect();
    let (m, se) = mean_se(&diffs);
    println!("{} days, mean difference (a − b) {m:.5} (se {se:.5})", rows.len());
    Ok(())
}

fn sample(a: &SampleArgs) -> Result<()> {
    let graph = match (&a.graph, a.p) {
        (Some(path), _) => Graph::parse_edge_list(&std::fs::read_to_string(path)?)?,
        (None, Some(p)) => Graph::complete(p),
        (None, None) => return Err(Error::Config("give --graph or --p".into())),
    };
    let params = GWishartParams::identity_scale(a.delta.unwrap_or(3.0), graph)?;
    let sampler = parse_opt(&a.sampler, PriorSampler::BlockGibbs)?;
    let iters = a.iters.unwrap_or(10_000);
    let burnin = a.burnin.unwrap_or(1_000);
    if burnin >= iters {
        return Err(Error::Config(format!("iters ({iters}) must exceed burnin ({burnin})")));
    }
    let cliques = clique_cover(&params.graph, parse_opt(&a.clique_cover, CliqueCover::Maximal)?);
    let dir = out_dir(&a.out)?;
    let mut trace = TraceWriter::new(BufWriter::new(File::create(dir.join("trace.csv"))?));
    let mut sum = SymMatrix::zeros(params.p());
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed.unwrap_or(0));
    sample_chain(&params, sampler, &cliques, iters, burnin, &mut rng, |it, k| {
        sum.add_assign_scaled(k, 1.0);
        trace.write(it, k)
    })?;
    trace.finish()?;
    write_matrix(&dir.join("k_mean.csv"), &sum.scaled(1.0 / (iters - burnin) as f64))?;
    println!("{} draws written to {}", iters - burnin, dir.join("trace.csv").display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cfg.json");
        std::fs::write(&path, r#"{"iters": 50, "seed": 4, "prices": true}"#).unwrap();
        let cli = SearchArgs { iters: Some(70), ..SearchArgs::default() };
        let merged = layered(&cli, Some(&path)).unwrap();
        assert_eq!(merged.iters, Some(70));
        assert_eq!(merged.seed, Some(4));
        assert!(merged.prices);
        std::fs::write(&path, r#"{"iterz": 50}"#).unwrap();
        assert!(matches!(layered(&cli, Some(&path)), Err(Error::Config(_))));
        std::fs::write(&path, "[1]").unwrap();
        assert!(layered(&cli, Some(&path)).is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(exit_code(&Error::NotPositiveDefinite { pivot: 0, value: -1.0 }), 3);
        assert_eq!(main_with_args(["ggmsv", "benchmark", "--iters", "10", "--burnin", "2"]), 2);
        assert_eq!(main_with_args(["ggmsv", "nonsense"]), 2);
    }
}
