//! Single-edge moves: the Cholesky CBF move (CL) and the `K`-space CBF
//! move (WL), both using double Metropolis–Hastings so that prior
//! normalising constants never have to be computed.
//!
//! A move is two-stage. Stage one accepts the graph proposal with the
//! posterior factor times the prior odds; stage two draws an auxiliary
//! matrix from the prior under the proposed graph and accepts with the
//! reciprocal prior factor evaluated there. Finally the two entries tied to
//! the edge are redrawn from their exact conditional under whichever graph
//! won.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal};

use crate::counters::OpCounters;
use crate::error::{Error, Result};
use std::cell::RefCell;

use crate::graph::{edge_permutation, CliqueCache, CliqueCover, GraphMemo, Permutation};
use crate::gwishart::{block_gibbs_sweep, ChainState, GWishartParams, RwmhPrior};
use crate::linalg::{cholesky_in_order, factor_in_place};

use super::factors::{ln_factor_n_parts, ln_n_from, EdgeConditional};
use super::GraphPrior;

/// Log-scale factors evaluated during one edge move. Factors belonging to
/// the other algorithm, or not reached, are `None`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EdgeMoveFactors {
    pub log_n_posterior: Option<f64>,
    pub log_n_prior: Option<f64>,
    pub log_h_posterior: Option<f64>,
    pub log_h_prior: Option<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct EdgeMoveOutcome {
    pub factors: EdgeMoveFactors,
    /// Stage one passed and an auxiliary draw was made.
    pub attempted: bool,
    /// The graph changed.
    pub accepted: bool,
}

/// Everything an edge move needs besides the state.
#[derive(Clone, Debug)]
pub struct MoveContext<'a> {
    /// `W_G(δ + n, D*)`; its graph field is ignored.
    pub posterior: GWishartParams,
    /// `W_G(δ, D)`; its graph field is ignored.
    pub prior: &'a GWishartParams,
    pub graph_prior: &'a GraphPrior,
    /// RWMH steps used for the CL auxiliary draw.
    pub rwmh_steps: usize,
    /// Clique cover used by the WL auxiliary block-Gibbs sweep.
    pub clique_cover: CliqueCover,
    /// Per `(G, e)`: the min-fill order that puts `e` last and the prior
    /// kernel on the reordered, toggled graph.
    aux: RefCell<GraphMemo<(Permutation, RwmhPrior)>>,
    /// Clique covers for the block-Gibbs passes.
    pub cliques: RefCell<CliqueCache>,
    scratch: RefCell<Vec<f64>>,
    order: RefCell<Vec<usize>>,
}

impl<'a> MoveContext<'a> {
    pub fn new(
        posterior: GWishartParams,
        prior: &'a GWishartParams,
        graph_prior: &'a GraphPrior,
        rwmh_steps: usize,
        clique_cover: CliqueCover,
    ) -> Self {
        MoveContext {
            posterior,
            prior,
            graph_prior,
            rwmh_steps,
            clique_cover,
            aux: RefCell::new(GraphMemo::default()),
            cliques: RefCell::new(CliqueCache::new(clique_cover)),
            scratch: RefCell::new(Vec::new()),
            order: RefCell::new(Vec::new()),
        }
    }

    /// Replaces the posterior, keeping the memo tables; they only depend on
    /// the prior and the graphs visited.
    pub fn set_posterior(&mut self, posterior: GWishartParams) {
        self.posterior = posterior;
    }
}

/// The parts of the last two columns of `Φ` that an edge move reads.
struct LastColumns {
    /// `Φ_{p-1,p-1}`.
    diag: f64,
    /// `Σ_{l<p-1} Φ_{l,p-1} Φ_{l,p}`.
    cross: f64,
    /// `Σ_{l<p-1} Φ_{l,p}²`.
    tail_sq: f64,
}

impl LastColumns {
    fn read(phi: &[f64], p: usize) -> Self {
        let (a, b) = (p - 2, p - 1);
        let (mut cross, mut tail_sq) = (0.0, 0.0);
        for l in 0..a {
            let lb = phi[l * p + b];
            cross += phi[l * p + a] * lb;
            tail_sq += lb * lb;
        }
        LastColumns {
            diag: phi[a * p + a],
            cross,
            tail_sq,
        }
    }

    /// Value of `Φ_{p-1,p}` forced by `K_ij = 0`.
    fn phi0(&self) -> f64 {
        -self.cross / self.diag
    }
}

fn accept<R: Rng + ?Sized>(log_ratio: f64, rng: &mut R) -> bool {
    if log_ratio >= 0.0 {
        return true;
    }
    let u: f64 = rng.random();
    u.ln() < log_ratio
}

/// CL move for `e = (i, j)`.
///
/// Works on the Cholesky factor of `K` with `e` moved to the last two
/// positions; for the auxiliary prior draw the other nodes follow a
/// minimum-fill order of `G_{V∖e}`. Only `K_ij` and `K_jj` change; every
/// other entry of `state.k` is left bit-for-bit intact.
pub fn cl_edge_move<R: Rng + ?Sized>(
    state: &mut ChainState,
    i: usize,
    j: usize,
    ctx: &MoveContext<'_>,
    rng: &mut R,
    counters: &mut OpCounters,
) -> Result<EdgeMoveOutcome> {
    let p = state.k.n();
    if i == j || i >= p || j >= p {
        return Err(Error::Domain(format!("invalid edge ({i}, {j}) for p = {p}")));
    }
    let (i, j) = (i.min(j), i.max(j));
    counters.edges_evaluated += 1;
    let mut out = EdgeMoveOutcome::default();

    // The factor value and the conditional law of the last column only
    // depend on which nodes precede the edge, not on their order, so the
    // natural order is factored here and the min-fill order is only set up
    // when an auxiliary draw is needed.
    let (a, b) = (p - 2, p - 1);
    let cols = {
        let mut buf = ctx.scratch.borrow_mut();
        buf.clear();
        buf.resize(p * p, 0.0);
        let mut order = ctx.order.borrow_mut();
        order.clear();
        order.extend((0..p).filter(|&v| v != i && v != j).chain([i, j]));
        for (r, &u) in order.iter().enumerate() {
            for (c, &v) in order.iter().enumerate().skip(r) {
                buf[r * p + c] = state.k.get(u, v);
            }
        }
        factor_in_place(&mut buf, p)?;
        LastColumns::read(&buf, p)
    };
    counters.cholesky_factorizations += 1;

    let has_edge = state.graph.has_edge(i, j);
    // the posterior scale enters only through D*_ij and D*_jj
    let s_post = (ctx.posterior.d.get(i, j), ctx.posterior.d.get(j, j));
    if !(s_post.1 > 0.0) {
        return Err(Error::Domain(format!("N needs S_pp > 0, got {}", s_post.1)));
    }
    let log_n_post = ln_n_from(cols.diag, cols.phi0(), s_post.0, s_post.1);
    out.factors.log_n_posterior = Some(log_n_post);

    let add_ratio = ctx.graph_prior.log_odds() + log_n_post;
    let stage_one = if has_edge { -add_ratio } else { add_ratio };
    let mut edge = has_edge;
    if accept(stage_one, rng) {
        out.attempted = true;
        counters.moves_attempted += 1;
        let mut memo = ctx.aux.borrow_mut();
        let (perm, kernel) = memo.get_or_insert_with(&state.graph, &[i as u64, j as u64], || {
            let perm = edge_permutation(&state.graph, i, j);
            let mut g_new = state.graph.permuted(&perm);
            g_new.set_edge(a, b, !has_edge);
            (perm, RwmhPrior::for_graph(g_new, ctx.prior.delta))
        });
        let start = cholesky_in_order(&state.k, perm.order())?;
        counters.cholesky_factorizations += 1;
        let mut aux = kernel.conform(&start)?;
        for _ in 0..ctx.rwmh_steps {
            aux = kernel.step(&aux, rng, counters)?;
        }
        let s_prior = (ctx.prior.d.get(i, j), ctx.prior.d.get(j, j));
        let log_n_prior = ln_factor_n_parts(&aux, s_prior.0, s_prior.1)?;
        out.factors.log_n_prior = Some(log_n_prior);
        let stage_two = if has_edge { log_n_prior } else { -log_n_prior };
        if accept(stage_two, rng) {
            edge = !has_edge;
            out.accepted = true;
            counters.moves_accepted += 1;
        }
    }

    // redraw Φ_{p-1,p} and Φ_pp under the current graph
    let off = if edge {
        let mu = cols.diag * s_post.0 / s_post.1;
        Normal::new(-mu, (1.0 / s_post.1).sqrt())
            .map_err(|e| Error::Domain(e.to_string()))?
            .sample(rng)
    } else {
        cols.phi0()
    };
    let last_sq = Gamma::new(0.5 * ctx.posterior.delta, 2.0 / s_post.1)
        .map_err(|e| Error::Domain(e.to_string()))?
        .sample(rng);

    // only K_{p-1,p} and K_pp depend on the two redrawn entries
    let k_ab = cols.diag * off + cols.cross;
    let k_bb = off * off + last_sq + cols.tail_sq;
    state.k.set(i, j, if edge { k_ab } else { 0.0 });
    state.k.set(j, j, k_bb);
    state.graph.set_edge(i, j, edge);
    Ok(out)
}

/// WL move for `e = (i, j)`, working directly on `K`.
pub fn wl_edge_move<R: Rng + ?Sized>(
    state: &mut ChainState,
    i: usize,
    j: usize,
    ctx: &MoveContext<'_>,
    rng: &mut R,
    counters: &mut OpCounters,
) -> Result<EdgeMoveOutcome> {
    let p = state.k.n();
    if i == j || i >= p || j >= p {
        return Err(Error::Domain(format!("invalid edge ({i}, {j}) for p = {p}")));
    }
    let (i, j) = (i.min(j), i.max(j));
    counters.edges_evaluated += 1;
    let mut out = EdgeMoveOutcome::default();

    let cond = EdgeConditional::new(&state.k, i, j, counters)?;
    let log_h_post = cond.ln_h(ctx.posterior.delta, &ctx.posterior.d)?;
    out.factors.log_h_posterior = Some(log_h_post);

    let has_edge = state.graph.has_edge(i, j);
    // H is (absent)/(present), so adding the edge divides by it
    let add_ratio = ctx.graph_prior.log_odds() - log_h_post;
    let stage_one = if has_edge { -add_ratio } else { add_ratio };
    let mut edge = has_edge;
    if accept(stage_one, rng) {
        out.attempted = true;
        counters.moves_attempted += 1;
        let mut g_new = state.graph.clone();
        g_new.set_edge(i, j, !has_edge);
        let prior_new = ctx.prior.with_graph(g_new.clone());
        let mut aux = ChainState {
            k: state.k.clone(),
            graph: g_new.clone(),
        };
        let (kij, kjj) = cond.sample(ctx.prior.delta, &ctx.prior.d, !has_edge, rng)?;
        aux.k.set(i, j, kij);
        aux.k.set(j, j, kjj);
        let mut cache = ctx.cliques.borrow_mut();
        block_gibbs_sweep(&mut aux, &prior_new, cache.get(&g_new), rng, counters)?;
        drop(cache);
        let aux_cond = EdgeConditional::new(&aux.k, i, j, counters)?;
        let log_h_prior = aux_cond.ln_h(ctx.prior.delta, &ctx.prior.d)?;
        out.factors.log_h_prior = Some(log_h_prior);
        let stage_two = if has_edge { -log_h_prior } else { log_h_prior };
        if accept(stage_two, rng) {
            edge = !has_edge;
            out.accepted = true;
            counters.moves_accepted += 1;
        }
    }

    let (kij, kjj) = cond.sample(ctx.posterior.delta, &ctx.posterior.d, edge, rng)?;
    state.k.set(i, j, kij);
    state.k.set(j, j, kjj);
    state.graph.set_edge(i, j, edge);
    Ok(out)
}
