//! Energy scores of a sharp and a diffuse predictive against the same
//! outcome. With `β = 2` the score only sees the predictive mean, so the
//! two come out close and the ranking can flip.

use ggmsv::scoring::{compare, energy_score, write_scores};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> ggmsv::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let outcome = vec![0.1, -0.2, 0.05];
    let mut draws = |sd: f64| -> Vec<Vec<f64>> {
        let z = Normal::new(0.0, sd).unwrap();
        (0..500).map(|_| (0..3).map(|_| z.sample(&mut rng)).collect()).collect()
    };
    let (sharp, wide) = (draws(0.3), draws(2.0));

    let mut a = Vec::new();
    let mut b = Vec::new();
    for beta in [0.5, 1.0, 2.0] {
        a.push(energy_score(&sharp, &outcome, beta)?);
        b.push(energy_score(&wide, &outcome, beta)?);
    }
    let labels: Vec<String> = ["beta=0.5", "beta=1", "beta=2"].iter().map(|s| s.to_string()).collect();
    write_scores(std::io::stdout(), &compare(&labels, &a, &b)?)?;
    Ok(())
}
