//! Joint `(K, G)` posterior sampling for Gaussian graphical models.
//!
//! Each sweep visits every unordered node pair in lexicographic order with
//! an edge move, then refreshes `K` with one block-Gibbs pass under the
//! current graph. Two edge moves are available:
//!
//! * [`Sampler::Cl`]: conditional Bayes factor on the Cholesky factor of a
//!   permuted `K`, auxiliary prior draw by random-walk MH. No sub-block of
//!   `K` is ever inverted.
//! * [`Sampler::Wl`]: conditional Bayes factor on `K` itself, auxiliary
//!   prior draw by one block-Gibbs sweep. Needs several `(p-1)`- and
//!   `(p-2)`-dimensional solves per edge.

pub mod factors;
pub mod moves;

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::counters::OpCounters;
use crate::error::{Error, Result};
use crate::graph::{CliqueCover, Graph};
use crate::gwishart::{block_gibbs_sweep, ChainState, GWishartParams};
use crate::linalg::SymMatrix;

pub use factors::{
    factor_h, factor_i, factor_j, factor_n, ln_factor_h, ln_factor_i, ln_factor_j, ln_factor_n,
    EdgeConditional,
};
pub use moves::{cl_edge_move, wl_edge_move, EdgeMoveFactors, EdgeMoveOutcome, MoveContext};

/// Independent Bernoulli(q) edge inclusion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphPrior {
    pub edge_probability: f64,
}

impl GraphPrior {
    pub fn new(edge_probability: f64) -> Result<Self> {
        if !(edge_probability > 0.0 && edge_probability < 1.0) {
            return Err(Error::Domain(format!(
                "edge probability must lie in (0, 1), got {edge_probability}"
            )));
        }
        Ok(GraphPrior { edge_probability })
    }

    /// `log pr(G ∪ e) - log pr(G)`.
    pub fn log_odds(&self) -> f64 {
        let q = self.edge_probability;
        q.ln() - (-q).ln_1p()
    }
}

impl Default for GraphPrior {
    fn default() -> Self {
        GraphPrior {
            edge_probability: 0.5,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sampler {
    #[default]
    Cl,
    Wl,
}

impl std::str::FromStr for Sampler {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cl" => Ok(Sampler::Cl),
            "wl" => Ok(Sampler::Wl),
            other => Err(Error::Config(format!("unknown sampler `{other}` (expected cl or wl)"))),
        }
    }
}

impl std::fmt::Display for Sampler {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Sampler::Cl => "cl",
            Sampler::Wl => "wl",
        })
    }
}

/// Applies one edge move per unordered pair, in lexicographic order, then
/// one block-Gibbs pass over `K` under the resulting graph.
pub fn posterior_sweep<R: rand::Rng + ?Sized>(
    state: &mut ChainState,
    sampler: Sampler,
    ctx: &MoveContext<'_>,
    rng: &mut R,
    counters: &mut OpCounters,
) -> Result<()> {
    let p = state.k.n();
    for i in 0..p {
        for j in i + 1..p {
            match sampler {
                Sampler::Cl => cl_edge_move(state, i, j, ctx, rng, counters)?,
                Sampler::Wl => wl_edge_move(state, i, j, ctx, rng, counters)?,
            };
        }
    }
    let post = ctx.posterior.with_graph(state.graph.clone());
    let mut cache = ctx.cliques.borrow_mut();
    block_gibbs_sweep(state, &post, cache.get(&post.graph), rng, counters)?;
    counters.sweeps += 1;
    Ok(())
}

/// Settings for [`run_chain`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub sampler: Sampler,
    pub iters: usize,
    pub burnin: usize,
    pub seed: u64,
    pub graph_prior: GraphPrior,
    pub rwmh_steps: usize,
    pub clique_cover: CliqueCover,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            sampler: Sampler::Cl,
            iters: 60_000,
            burnin: 10_000,
            seed: 0,
            graph_prior: GraphPrior::default(),
            rwmh_steps: 1,
            clique_cover: CliqueCover::Maximal,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iters <= self.burnin {
            return Err(Error::Config(format!(
                "iters ({}) must exceed burnin ({})",
                self.iters, self.burnin
            )));
        }
        if self.sampler == Sampler::Cl && self.rwmh_steps == 0 {
            return Err(Error::Config("rwmh_steps must be at least 1".into()));
        }
        GraphPrior::new(self.graph_prior.edge_probability)?;
        Ok(())
    }
}

/// Output of [`run_chain`].
#[derive(Clone, Debug, PartialEq)]
pub struct ChainSummary {
    /// Post-burn-in edge inclusion frequencies, ones on the diagonal.
    pub edge_probs: SymMatrix,
    /// Model-averaged posterior mean of `K`.
    pub k_mean: SymMatrix,
    pub seconds: f64,
    pub counters: OpCounters,
    pub final_state: ChainState,
}

/// Runs the joint `(K, G)` sampler on data summarised by the scatter matrix
/// `u` of `n` observations, starting from `K = I` on the empty graph.
pub fn run_chain(
    u: &SymMatrix,
    n: f64,
    prior: &GWishartParams,
    config: &SearchConfig,
) -> Result<ChainSummary> {
    let rng = ChaCha8Rng::seed_from_u64(config.seed);
    run_chain_from(ChainState::identity(Graph::empty(u.n())), u, n, prior, config, rng)
}

pub fn run_chain_from(
    state: ChainState,
    u: &SymMatrix,
    n: f64,
    prior: &GWishartParams,
    config: &SearchConfig,
    rng: ChaCha8Rng,
) -> Result<ChainSummary> {
    run_chain_with(state, u, n, prior, config, rng, |_, _| Ok(()))
}

/// [`run_chain_from`] with a callback after every sweep, burn-in included.
pub fn run_chain_with(
    mut state: ChainState,
    u: &SymMatrix,
    n: f64,
    prior: &GWishartParams,
    config: &SearchConfig,
    mut rng: ChaCha8Rng,
    mut on_sweep: impl FnMut(usize, &ChainState) -> Result<()>,
) -> Result<ChainSummary> {
    config.validate()?;
    let p = prior.p();
    if u.n() != p || state.k.n() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: if u.n() != p { u.n() } else { state.k.n() },
        });
    }
    if config.sampler == Sampler::Cl && !prior.has_identity_scale() {
        return Err(Error::Config("the CL sampler requires prior scale D = I".into()));
    }
    let posterior = prior.posterior(u, n)?;
    let ctx = MoveContext::new(
        posterior,
        prior,
        &config.graph_prior,
        config.rwmh_steps,
        config.clique_cover,
    );
    let mut counters = OpCounters::default();
    let mut edge_counts = vec![0u64; p * p];
    let mut k_sum = SymMatrix::zeros(p);
    let start = Instant::now();
    for it in 0..config.iters {
        posterior_sweep(&mut state, config.sampler, &ctx, &mut rng, &mut counters)?;
        on_sweep(it, &state)?;
        if it >= config.burnin {
            for (a, b) in state.graph.edges() {
                edge_counts[a * p + b] += 1;
            }
            k_sum.add_assign_scaled(&state.k, 1.0);
        }
    }
    let seconds = start.elapsed().as_secs_f64();
    let kept = (config.iters - config.burnin) as f64;
    let edge_probs = SymMatrix::from_fn(p, |a, b| {
        if a == b {
            1.0
        } else {
            edge_counts[a * p + b] as f64 / kept
        }
    });
    Ok(ChainSummary {
        edge_probs,
        k_mean: k_sum.scaled(1.0 / kept),
        seconds,
        counters,
        final_state: state,
    })
}

/// Mean squared difference over the strict upper triangle.
pub fn edge_mse(estimate: &SymMatrix, target: &SymMatrix) -> f64 {
    let p = estimate.n();
    assert_eq!(p, target.n());
    let mut s = 0.0;
    let mut count = 0usize;
    for i in 0..p {
        for j in i + 1..p {
            s += (estimate.get(i, j) - target.get(i, j)).powi(2);
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        s / count as f64
    }
}
