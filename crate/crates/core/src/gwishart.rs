//! The G-Wishart distribution `W_G(δ, D)` on precision matrices with the
//! zero pattern of `G`: Cholesky-coordinate densities, the clique-wise block
//! Gibbs sampler and the random-walk Metropolis–Hastings prior sampler.

use std::io::Write;

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};

use crate::counters::OpCounters;
use crate::error::{Error, Result};
use crate::graph::{natural_fill_in_graph, nu_counts, CliqueSet, Graph};
use crate::linalg::{cholesky, complete_in_place, CholeskyFactor, Scratch, SymMatrix};

/// Parameters `(δ, D, G)` of a G-Wishart law. A posterior is represented by
/// the same type with `δ + n` and `D + U`.
#[derive(Clone, Debug, PartialEq)]
pub struct GWishartParams {
    pub delta: f64,
    pub d: SymMatrix,
    pub graph: Graph,
}

impl GWishartParams {
    pub fn new(delta: f64, d: SymMatrix, graph: Graph) -> Result<Self> {
        if !(delta > 2.0) || !delta.is_finite() {
            return Err(Error::Domain(format!("delta must exceed 2, got {delta}")));
        }
        if d.n() != graph.p() {
            return Err(Error::DimensionMismatch {
                expected: graph.p(),
                found: d.n(),
            });
        }
        if !d.is_positive_definite() {
            return Err(Error::Domain("scale matrix D is not positive definite".into()));
        }
        Ok(GWishartParams { delta, d, graph })
    }

    /// `W_G(δ, I_p)`.
    pub fn identity_scale(delta: f64, graph: Graph) -> Result<Self> {
        let p = graph.p();
        Self::new(delta, SymMatrix::identity(p), graph)
    }

    pub fn p(&self) -> usize {
        self.graph.p()
    }

    /// Conjugate update with `n` observations whose scatter matrix is `u`.
    pub fn posterior(&self, u: &SymMatrix, n: f64) -> Result<Self> {
        if u.n() != self.p() {
            return Err(Error::DimensionMismatch {
                expected: self.p(),
                found: u.n(),
            });
        }
        Self::new(self.delta + n, self.d.add(u), self.graph.clone())
    }

    pub fn with_graph(&self, graph: Graph) -> Self {
        GWishartParams {
            delta: self.delta,
            d: self.d.clone(),
            graph,
        }
    }

    pub fn has_identity_scale(&self) -> bool {
        self.d == SymMatrix::identity(self.p())
    }
}

/// Coupled `(K, G)` with `K` positive definite and `K_ij = 0` off `G`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainState {
    pub k: SymMatrix,
    pub graph: Graph,
}

impl ChainState {
    pub fn new(k: SymMatrix, graph: Graph) -> Result<Self> {
        let s = ChainState { k, graph };
        s.validate()?;
        Ok(s)
    }

    pub fn identity(graph: Graph) -> Self {
        ChainState {
            k: SymMatrix::identity(graph.p()),
            graph,
        }
    }

    /// Exact zeros off the graph and positive definiteness.
    pub fn validate(&self) -> Result<()> {
        if self.k.n() != self.graph.p() {
            return Err(Error::DimensionMismatch {
                expected: self.graph.p(),
                found: self.k.n(),
            });
        }
        let off = self.k.max_abs_outside(&self.graph);
        if off != 0.0 {
            return Err(Error::Domain(format!("K has non-zero entry {off:e} off the graph")));
        }
        cholesky(&self.k).map(|_| ())
    }
}

/// Unnormalised log density of the free Cholesky coordinates,
/// `Σ_i (δ + ν_i - 1) log Φ_ii - ⟨ΦᵀΦ, D⟩ / 2`.
pub fn log_density_phi(phi: &CholeskyFactor, params: &GWishartParams) -> Result<f64> {
    let p = params.p();
    if phi.n() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: phi.n(),
        });
    }
    let nu = nu_counts(&params.graph);
    let mut lp = 0.0;
    for (i, &nu_i) in nu.iter().enumerate() {
        lp += (params.delta + nu_i as f64 - 1.0) * phi.get(i, i).ln();
    }
    lp -= 0.5 * phi.gram().inner(&params.d);
    Ok(lp)
}

/// One pass of block Gibbs over `cliques` in the order given. For each
/// clique `C` the Schur complement `K_C - K_{C,V∖C} K_{V∖C}⁻¹ K_{V∖C,C}` is
/// replaced by a fresh `W(δ, D_C)` draw.
pub fn block_gibbs_sweep<R: Rng + ?Sized>(
    state: &mut ChainState,
    params: &GWishartParams,
    cliques: &CliqueSet,
    rng: &mut R,
    counters: &mut OpCounters,
) -> Result<()> {
    let p = state.k.n();
    if params.p() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: params.p(),
        });
    }
    let mut in_clique = vec![false; p];
    let mut rest = Vec::with_capacity(p);
    let mut scratch = Scratch::default();
    let mut shift = vec![0.0; p * p];
    let mut w = vec![0.0; p * p];
    for c in cliques.iter() {
        in_clique.iter_mut().for_each(|b| *b = false);
        for &v in c {
            in_clique[v] = true;
        }
        rest.clear();
        rest.extend((0..p).filter(|&v| !in_clique[v]));
        scratch.schur_into(&state.k, c, &rest, &mut shift)?;
        if !rest.is_empty() {
            counters.block_gibbs_solves += 1;
        }
        scratch.wishart_into(params.delta, &params.d, c, rng, &mut w)?;
        let q = c.len();
        for (a, &i) in c.iter().enumerate() {
            for (b, &j) in c.iter().enumerate().skip(a) {
                state.k.set(i, j, w[a * q + b] + shift[a * q + b]);
            }
        }
    }
    Ok(())
}

/// Random-walk MH targeting `W_G(δ, I_p)` in Cholesky coordinates.
///
/// The fill pattern `F` is taken from `phi.fill()`, which must be the fill-in
/// graph of `G` under the identity order; `phi` must already satisfy the
/// completion equations on `F ∖ G`.
pub fn rwmh_prior_step<R: Rng + ?Sized>(
    phi: &CholeskyFactor,
    graph: &Graph,
    delta: f64,
    rng: &mut R,
) -> Result<CholeskyFactor> {
    let nu = nu_counts(graph);
    let fill = natural_fill_in_graph(graph);
    if phi.fill() != &fill {
        return Err(Error::Domain("phi does not carry the natural fill-in pattern of the graph".into()));
    }
    let (next, _) = rwmh_step_inner(phi, graph, &fill, &nu, delta, rng)?;
    Ok(next)
}

fn rwmh_step_inner<R: Rng + ?Sized>(
    phi: &CholeskyFactor,
    graph: &Graph,
    fill: &Graph,
    nu: &[usize],
    delta: f64,
    rng: &mut R,
) -> Result<(CholeskyFactor, bool)> {
    let p = graph.p();
    if phi.n() != p {
        return Err(Error::DimensionMismatch {
            expected: p,
            found: phi.n(),
        });
    }
    debug_assert!(phi.fill() == fill);
    let mut psi = phi.clone();
    for i in 0..p {
        let c = ChiSquared::new(delta + nu[i] as f64)
            .map_err(|e| Error::Domain(e.to_string()))?
            .sample(rng);
        psi.set(i, i, c.sqrt());
        for j in i + 1..p {
            let v = if graph.has_edge(i, j) {
                rng.sample(StandardNormal)
            } else {
                0.0
            };
            psi.set(i, j, v);
        }
    }
    complete_in_place(&mut psi, graph, fill)?;
    let mut log_alpha = 0.0;
    for i in 0..p {
        for j in fill.neighbors(i).iter().filter(|&j| j > i && !graph.has_edge(i, j)) {
            log_alpha -= 0.5 * (psi.get(i, j).powi(2) - phi.get(i, j).powi(2));
        }
    }
    let u: f64 = rng.random();
    if u.ln() < log_alpha {
        Ok((psi, true))
    } else {
        Ok((phi.clone(), false))
    }
}

/// Reusable RWMH kernel for `W_G(δ, I_p)`; caches `F` and `ν`.
#[derive(Clone, Debug)]
pub struct RwmhPrior {
    graph: Graph,
    fill: Graph,
    nu: Vec<usize>,
    delta: f64,
}

impl RwmhPrior {
    /// Only the identity scale is supported; other scales are rejected.
    pub fn new(params: &GWishartParams) -> Result<Self> {
        if !params.has_identity_scale() {
            return Err(Error::Config(
                "the random-walk prior sampler requires D = I".into(),
            ));
        }
        Ok(Self::for_graph(params.graph.clone(), params.delta))
    }

    pub(crate) fn for_graph(graph: Graph, delta: f64) -> Self {
        let fill = natural_fill_in_graph(&graph);
        let nu = nu_counts(&graph);
        RwmhPrior {
            graph,
            fill,
            nu,
            delta,
        }
    }

    pub fn fill(&self) -> &Graph {
        &self.fill
    }

    /// Re-completes `phi` for this graph: entries on `F ∖ G` are recomputed
    /// and anything outside `F` is cleared.
    pub fn conform(&self, phi: &CholeskyFactor) -> Result<CholeskyFactor> {
        let p = self.graph.p();
        let mut out = phi.clone();
        for i in 0..p {
            for j in i + 1..p {
                if !self.fill.has_edge(i, j) {
                    out.set(i, j, 0.0);
                }
            }
        }
        complete_in_place(&mut out, &self.graph, &self.fill)?;
        Ok(out)
    }

    pub fn step<R: Rng + ?Sized>(
        &self,
        phi: &CholeskyFactor,
        rng: &mut R,
        counters: &mut OpCounters,
    ) -> Result<CholeskyFactor> {
        let (next, accepted) = rwmh_step_inner(phi, &self.graph, &self.fill, &self.nu, self.delta, rng)?;
        counters.rwmh_steps += 1;
        counters.rwmh_accepts += accepted as u64;
        Ok(next)
    }
}

/// Which kernel `sample_chain` uses.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PriorSampler {
    BlockGibbs,
    Rwmh,
}

impl std::str::FromStr for PriorSampler {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "block-gibbs" => Ok(PriorSampler::BlockGibbs),
            "rwmh" => Ok(PriorSampler::Rwmh),
            other => Err(Error::Config(format!("unknown prior sampler `{other}` (block-gibbs | rwmh)"))),
        }
    }
}

/// Runs `iters` steps of the chosen kernel from `K = I` and returns the
/// retained draws of `K` (after `burnin`).
pub fn sample_chain<R: Rng + ?Sized>(
    params: &GWishartParams,
    sampler: PriorSampler,
    cliques: &CliqueSet,
    iters: usize,
    burnin: usize,
    rng: &mut R,
    mut on_draw: impl FnMut(usize, &SymMatrix) -> Result<()>,
) -> Result<OpCounters> {
    let mut counters = OpCounters::default();
    let mut state = ChainState::identity(params.graph.clone());
    match sampler {
        PriorSampler::BlockGibbs => {
            for it in 0..iters {
                block_gibbs_sweep(&mut state, params, cliques, rng, &mut counters)?;
                counters.sweeps += 1;
                if it >= burnin {
                    on_draw(it, &state.k)?;
                }
            }
        }
        PriorSampler::Rwmh => {
            let kernel = RwmhPrior::new(params)?;
            let mut phi = kernel.conform(&CholeskyFactor::identity(params.p()))?;
            for it in 0..iters {
                phi = kernel.step(&phi, rng, &mut counters)?;
                counters.sweeps += 1;
                if it >= burnin {
                    let mut k = phi.gram();
                    k.zero_outside(&params.graph);
                    on_draw(it, &k)?;
                }
            }
        }
    }
    Ok(counters)
}

/// CSV trace: iteration index followed by the upper triangle of `K`.
pub struct TraceWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> TraceWriter<W> {
    pub fn new(out: W) -> Self {
        TraceWriter {
            inner: csv::WriterBuilder::new().has_headers(false).from_writer(out),
        }
    }

    pub fn write(&mut self, iteration: usize, k: &SymMatrix) -> Result<()> {
        let mut rec = vec![iteration.to_string()];
        rec.extend(k.upper_triangle().iter().map(f64::to_string));
        self.inner.write_record(&rec)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::maximal_cliques;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn params_validation() {
        assert!(GWishartParams::identity_scale(2.0, Graph::empty(2)).is_err());
        assert!(GWishartParams::new(3.0, SymMatrix::identity(3), Graph::empty(2)).is_err());
        let bad = SymMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(GWishartParams::new(3.0, bad, Graph::empty(2)).is_err());
    }

    #[test]
    fn log_density_examples() {
        let params = GWishartParams::identity_scale(3.0, Graph::empty(1)).unwrap();
        let lp = log_density_phi(&CholeskyFactor::identity(1), &params).unwrap();
        assert_eq!(lp, -0.5);

        for graph in [Graph::empty(4), Graph::complete(4), Graph::from_edges(4, &[(0, 2), (1, 3)]).unwrap()] {
            let params = GWishartParams::identity_scale(3.0, graph).unwrap();
            assert_eq!(log_density_phi(&CholeskyFactor::identity(4), &params).unwrap(), -2.0);
        }

        let params = GWishartParams::identity_scale(3.0, Graph::empty(3)).unwrap();
        assert!(log_density_phi(&CholeskyFactor::identity(2), &params).is_err());
    }

    #[test]
    fn empty_graph_density_factorises() {
        // independent chi kernels: sum of per-coordinate log densities
        let params = GWishartParams::identity_scale(4.0, Graph::empty(3)).unwrap();
        let mut phi = CholeskyFactor::identity(3);
        let diag = [0.7, 1.3, 2.1];
        for (i, &d) in diag.iter().enumerate() {
            phi.set(i, i, d);
        }
        let expect: f64 = diag.iter().map(|&d: &f64| 3.0 * d.ln() - 0.5 * d * d).sum();
        assert!((log_density_phi(&phi, &params).unwrap() - expect).abs() < 1e-14);
    }

    #[test]
    fn block_gibbs_preserves_zero_pattern() {
        let graph = Graph::from_edges(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]).unwrap();
        let params = GWishartParams::identity_scale(3.0, graph.clone()).unwrap();
        let cliques = maximal_cliques(&graph);
        let mut state = ChainState::identity(graph);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut c = OpCounters::default();
        for _ in 0..200 {
            block_gibbs_sweep(&mut state, &params, &cliques, &mut rng, &mut c).unwrap();
            state.validate().unwrap();
        }
        assert_eq!(c.block_gibbs_solves, 200 * 5);
    }

    #[test]
    fn rwmh_without_fill_always_accepts() {
        // path graph is chordal in natural order: F = G
        let graph = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let kernel = RwmhPrior::for_graph(graph.clone(), 3.0);
        assert_eq!(kernel.fill(), &graph);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut c = OpCounters::default();
        let mut phi = kernel.conform(&CholeskyFactor::identity(4)).unwrap();
        for _ in 0..100 {
            phi = kernel.step(&phi, &mut rng, &mut c).unwrap();
        }
        assert_eq!(c.rwmh_accepts, 100);
    }

    #[test]
    fn rwmh_keeps_completion_constraints() {
        let graph = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3), (1, 3)]).unwrap();
        let kernel = RwmhPrior::for_graph(graph.clone(), 3.0);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut c = OpCounters::default();
        let mut phi = kernel.conform(&CholeskyFactor::identity(4)).unwrap();
        for _ in 0..500 {
            phi = kernel.step(&phi, &mut rng, &mut c).unwrap();
            let k = phi.gram();
            assert!(k.max_abs_outside(&graph) <= 1e-10 * k.norm_inf());
        }
        assert!(c.rwmh_accepts > 0 && c.rwmh_accepts < 500);
    }

    #[test]
    fn rwmh_rejects_non_identity_scale() {
        let params = GWishartParams::new(3.0, SymMatrix::diagonal(&[1.0, 2.0]), Graph::complete(2)).unwrap();
        assert!(matches!(RwmhPrior::new(&params), Err(Error::Config(_))));
    }

    #[test]
    fn trace_rows_hold_upper_triangle() {
        let mut buf = Vec::new();
        {
            let mut w = TraceWriter::new(&mut buf);
            w.write(7, &SymMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 2.0]]).unwrap()).unwrap();
            w.finish().unwrap();
        }
        assert_eq!(String::from_utf8(buf).unwrap(), "7,1,0.5,2\n");
    }
}
