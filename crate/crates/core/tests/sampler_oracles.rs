//! Samplers against closed-form targets.

mod common;

use common::{batch_mean_se, ks_critical_1pct, ks_statistic, spd};
use ggmsv::graph::{clique_cover, CliqueCover, Graph};
use ggmsv::gwishart::{sample_chain, GWishartParams, PriorSampler};
use ggmsv::linalg::SymMatrix;
use ggmsv::search::{run_chain, GraphPrior, Sampler, SearchConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, Gamma as GammaDist};
use statrs::function::gamma::ln_gamma;

/// `log I` for the complete graph on two nodes: the Wishart normaliser
/// `2^{δ+1} Γ₂((δ+1)/2) |D|^{-(δ+1)/2}`.
fn ln_i_complete2(delta: f64, d: &SymMatrix) -> f64 {
    let a = 0.5 * (delta + 1.0);
    let ln_gamma2 = 0.5 * std::f64::consts::PI.ln() + ln_gamma(a) + ln_gamma(a - 0.5);
    let det = d.get(0, 0) * d.get(1, 1) - d.get(0, 1).powi(2);
    (delta + 1.0) * std::f64::consts::LN_2 + ln_gamma2 - a * det.ln()
}

/// `log I` for the empty graph: a product of gamma normalisers.
fn ln_i_empty2(delta: f64, d: &SymMatrix) -> f64 {
    (0..2)
        .map(|i| ln_gamma(0.5 * delta) + 0.5 * delta * (2.0 / d.get(i, i)).ln())
        .sum()
}

fn two_node_posterior(delta: f64, u: &SymMatrix, n: f64, q: f64) -> f64 {
    let d = SymMatrix::identity(2);
    let dn = d.add(u);
    let full = ln_i_complete2(delta + n, &dn) - ln_i_complete2(delta, &d);
    let empty = ln_i_empty2(delta + n, &dn) - ln_i_empty2(delta, &d);
    1.0 / (1.0 + (1.0 - q) / q * (empty - full).exp())
}

#[test]
fn two_node_inclusion_matches_closed_form() {
    let n = 20.0;
    let u = spd(&[&[n, 0.4 * n], &[0.4 * n, n]]);
    for q in [0.5, 0.3] {
        let exact = two_node_posterior(3.0, &u, n, q);
        let prior = GWishartParams::identity_scale(3.0, Graph::empty(2)).unwrap();
        for sampler in [Sampler::Cl, Sampler::Wl] {
            let config = SearchConfig {
                sampler,
                iters: 55_000,
                burnin: 5_000,
                seed: 5,
                graph_prior: GraphPrior::new(q).unwrap(),
                ..SearchConfig::default()
            };
            let est = run_chain(&u, n, &prior, &config).unwrap().edge_probs.get(0, 1);
            assert!((est - exact).abs() < 0.02, "{sampler} q = {q}: {est} vs {exact}");
        }
    }
}

#[test]
fn block_gibbs_on_complete_graph_has_wishart_mean() {
    let d = spd(&[&[2.0, 0.5, -0.3], &[0.5, 1.0, 0.2], &[-0.3, 0.2, 1.5]]);
    let delta = 4.0;
    let params = GWishartParams::new(delta, d.clone(), Graph::complete(3)).unwrap();
    let cliques = clique_cover(&params.graph, CliqueCover::Maximal);
    let mut draws = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    sample_chain(&params, PriorSampler::BlockGibbs, &cliques, 20_000, 0, &mut rng, |_, k| {
        draws.push(k.clone());
        Ok(())
    })
    .unwrap();
    let expected = d.inverse().unwrap().scaled(delta + 2.0);
    for i in 0..3 {
        for j in i..3 {
            let xs: Vec<f64> = draws.iter().map(|k| k.get(i, j)).collect();
            let (m, se) = batch_mean_se(&xs, 50);
            let z = (m - expected.get(i, j)) / se;
            assert!(z.abs() < 3.0, "K[{i},{j}]: mean {m}, expected {}, z = {z}", expected.get(i, j));
        }
    }
}

#[test]
fn one_dimensional_draws_are_gamma() {
    let (delta, d) = (3.5, 0.8);
    let params = GWishartParams::new(delta, SymMatrix::diagonal(&[d]), Graph::empty(1)).unwrap();
    let cliques = clique_cover(&params.graph, CliqueCover::Maximal);
    let mut xs = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    sample_chain(&params, PriorSampler::BlockGibbs, &cliques, 5_000, 0, &mut rng, |_, k| {
        xs.push(k.get(0, 0));
        Ok(())
    })
    .unwrap();
    let law = GammaDist::new(0.5 * delta, 0.5 * d).unwrap();
    let stat = ks_statistic(&xs, |x| law.cdf(x));
    assert!(stat < ks_critical_1pct(xs.len()), "KS {stat}");
}

fn prior_means(params: &GWishartParams, sampler: PriorSampler, iters: usize, seed: u64) -> Vec<(f64, f64)> {
    let p = params.p();
    let cliques = clique_cover(&params.graph, CliqueCover::Maximal);
    let mut traces = vec![Vec::new(); p * p];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_chain(params, sampler, &cliques, iters, 1_000, &mut rng, |_, k| {
        for i in 0..p {
            for j in i..p {
                if i == j || params.graph.has_edge(i, j) {
                    traces[i * p + j].push(k.get(i, j));
                }
            }
        }
        Ok(())
    })
    .unwrap();
    traces
        .iter()
        .filter(|t| !t.is_empty())
        .map(|t| batch_mean_se(t, 50))
        .collect()
}

fn assert_kernels_agree(graph: Graph) {
    let params = GWishartParams::identity_scale(3.0, graph).unwrap();
    let gibbs = prior_means(&params, PriorSampler::BlockGibbs, 101_000, 3);
    let rwmh = prior_means(&params, PriorSampler::Rwmh, 201_000, 4);
    for ((mg, sg), (mr, sr)) in gibbs.iter().zip(&rwmh) {
        let z = (mg - mr) / (sg * sg + sr * sr).sqrt();
        assert!(z.abs() < 3.0, "block Gibbs {mg} vs RWMH {mr}, z = {z}");
    }
}

#[test]
fn rwmh_agrees_with_block_gibbs_when_completion_is_needed() {
    // eliminating node 0 first fills (1, 2)
    assert_kernels_agree(Graph::from_edges(3, &[(0, 1), (0, 2)]).unwrap());
}

#[test]
fn rwmh_agrees_with_block_gibbs_on_four_cycle() {
    assert_kernels_agree(Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap());
}

fn diagonal_ks(params: &GWishartParams, seed: u64, law_of: impl Fn(usize) -> GammaDist) {
    let p = params.p();
    let cliques = clique_cover(&params.graph, CliqueCover::Maximal);
    let mut diag = vec![Vec::new(); p];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_chain(params, PriorSampler::BlockGibbs, &cliques, 10_000, 0, &mut rng, |_, k| {
        for (i, d) in diag.iter_mut().enumerate() {
            d.push(k.get(i, i));
        }
        Ok(())
    })
    .unwrap();
    for (i, xs) in diag.iter().enumerate() {
        let law = law_of(i);
        let stat = ks_statistic(xs, |x| law.cdf(x));
        assert!(stat < ks_critical_1pct(xs.len()), "K[{i},{i}]: KS {stat}");
    }
}

#[test]
fn empty_graph_diagonals_are_independent_gammas() {
    let d = SymMatrix::diagonal(&[0.5, 1.0, 3.0]);
    let params = GWishartParams::new(3.0, d.clone(), Graph::empty(3)).unwrap();
    diagonal_ks(&params, 31, |i| GammaDist::new(1.5, 0.5 * d.get(i, i)).unwrap());
}

#[test]
fn complete_graph_diagonals_are_scaled_chi_squares() {
    // K ~ Wishart(δ + p - 1, D⁻¹), so K_ii ~ Σ_ii χ²_{δ+p-1} with Σ = D⁻¹
    let d = spd(&[&[2.0, 0.5, -0.3], &[0.5, 1.0, 0.2], &[-0.3, 0.2, 1.5]]);
    let sigma = d.inverse().unwrap();
    let params = GWishartParams::new(3.5, d, Graph::complete(3)).unwrap();
    diagonal_ks(&params, 32, |i| GammaDist::new(0.5 * 5.5, 0.5 / sigma.get(i, i)).unwrap());
}
