//! Structure search on a price file: prices become log-returns, rows with
//! gaps are dropped, and the scatter matrix feeds the sampler.

use std::io::Cursor;

use ggmsv::graph::Graph;
use ggmsv::gwishart::GWishartParams;
use ggmsv::io::{ingest, scatter, IngestMode};
use ggmsv::search::{run_chain, SearchConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> ggmsv::Result<()> {
    // three assets, the first two sharing a factor
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let z = Normal::new(0.0, 0.01).unwrap();
    let mut price = [100.0f64, 50.0, 20.0];
    let mut csv = String::from("date,AAA,BBB,CCC\n");
    for day in 0..400 {
        let common = z.sample(&mut rng);
        let r: [f64; 3] = [common + z.sample(&mut rng), common + z.sample(&mut rng), z.sample(&mut rng)];
        for (p, r) in price.iter_mut().zip(r) {
            *p *= r.exp();
        }
        if day == 17 {
            csv.push_str(&format!("d{day:04},{:.4},,{:.4}\n", price[0], price[2]));
        } else {
            csv.push_str(&format!("d{day:04},{:.4},{:.4},{:.4}\n", price[0], price[1], price[2]));
        }
    }

    let data = ingest(Cursor::new(csv), IngestMode::Prices)?;
    println!("{} returns, {} row(s) dropped", data.series.len(), data.dropped_rows);
    // percent returns keep the scatter on the scale of the identity prior
    let y: Vec<Vec<f64>> = data.series.y.iter().map(|r| r.iter().map(|v| v * 100.0).collect()).collect();
    let u = scatter(&y, None);
    let prior = GWishartParams::identity_scale(3.0, Graph::empty(3))?;
    let config = SearchConfig { iters: 6_000, burnin: 1_000, ..SearchConfig::default() };
    let summary = run_chain(&u, y.len() as f64, &prior, &config)?;
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        println!(
            "P({} - {}) = {:.3}",
            data.series.tickers[i],
            data.series.tickers[j],
            summary.edge_probs.get(i, j)
        );
    }
    Ok(())
}
