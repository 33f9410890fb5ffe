//! The two conditional Bayes factors for one edge of a fixed state.

use ggmsv::graph::Graph;
use ggmsv::gwishart::GWishartParams;
use ggmsv::io::builtin_wangli6;
use ggmsv::linalg::{cholesky, SymMatrix};
use ggmsv::search::factors::{completion_value, ln_factor_h, ln_factor_n};

fn main() -> ggmsv::Result<()> {
    let (u, n) = builtin_wangli6();
    let post = GWishartParams::identity_scale(3.0, Graph::empty(6))?.posterior(&u, n)?;
    let k = SymMatrix::from_fn(6, |i, j| match i.abs_diff(j) {
        0 => 2.0,
        1 | 5 => 0.5,
        _ => 0.0,
    });

    // H works on K directly
    for e in [(0, 1), (0, 2), (2, 3)] {
        let h = ln_factor_h(post.delta, e, &k, &post.d)?;
        println!("log H{e:?} = {h:8.3}  (edge favoured when negative)");
    }

    // N needs the edge in the last two positions of Φ
    let order = [1, 2, 4, 5, 0, 3];
    let phi = cholesky(&k.submatrix(&order))?;
    let s = post.d.submatrix(&order);
    println!(
        "log N(0, 3) = {:8.3}  with completion value {:.4}",
        ln_factor_n(&phi, &s)?,
        completion_value(&phi)
    );
    Ok(())
}
