//! Draws from a G-Wishart on a non-chordal graph with both prior kernels and
//! compares their Monte Carlo means.
//!
//! ```text
//! cargo run --release --example gwishart_sampling -- [iters]
//! ```

use ggmsv::graph::{clique_cover, CliqueCover, Graph};
use ggmsv::gwishart::{sample_chain, GWishartParams, PriorSampler};
use ggmsv::linalg::SymMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> ggmsv::Result<()> {
    let iters: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(50_000);
    let g = Graph::parse_edge_list("5\n1 2\n2 3\n3 4\n4 5\n5 1\n")?;
    let params = GWishartParams::identity_scale(3.0, g.clone())?;
    let cliques = clique_cover(&g, CliqueCover::Maximal);

    for sampler in [PriorSampler::BlockGibbs, PriorSampler::Rwmh] {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut sum = SymMatrix::zeros(5);
        let counters = sample_chain(&params, sampler, &cliques, iters, iters / 10, &mut rng, |_, k| {
            sum.add_assign_scaled(k, 1.0);
            Ok(())
        })?;
        let mean = sum.scaled(1.0 / (iters - iters / 10) as f64);
        println!("{sampler:?}: E[K] ≈");
        for row in mean.rows() {
            println!("  {}", row.iter().map(|v| format!("{v:7.3}")).collect::<Vec<_>>().join(" "));
        }
        if counters.rwmh_steps > 0 {
            println!("  acceptance {:.3}", counters.rwmh_accepts as f64 / counters.rwmh_steps as f64);
        }
    }
    Ok(())
}
