//! CL versus WL on the six-node cycle benchmark.
//!
//! ```text
//! cargo run --release --example wangli6_benchmark -- [iters] [burnin] [seed] [repeats]
//! ```

use ggmsv::bench::run_benchmark;
use ggmsv::graph::Graph;
use ggmsv::gwishart::GWishartParams;
use ggmsv::io::{builtin_wangli6, wangli6_target};
use ggmsv::search::SearchConfig;

fn main() -> ggmsv::Result<()> {
    let args: Vec<u64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let iters = args.first().copied().unwrap_or(6_000) as usize;
    let burnin = args.get(1).copied().unwrap_or(iters as u64 / 6) as usize;
    let seed = args.get(2).copied().unwrap_or(1);
    let repeats = args.get(3).copied().unwrap_or(3) as usize;

    let (u, n) = builtin_wangli6();
    let prior = GWishartParams::identity_scale(3.0, Graph::empty(6))?;
    let target = wangli6_target();
    let base = SearchConfig { iters, burnin, seed, ..SearchConfig::default() };
    let run = run_benchmark(&u, n, &prior, &base, repeats, Some(&target))?;

    for (name, chain) in [("CL", &run.cl), ("WL", &run.wl)] {
        println!("{name} edge inclusion probabilities:");
        for row in chain.edge_probs.rows() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.3}")).collect();
            println!("  {}", cells.join(" "));
        }
    }
    println!("{}", serde_json::to_string_pretty(&run.report)?);
    Ok(())
}
