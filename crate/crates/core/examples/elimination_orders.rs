//! Fill-in under different elimination orders, and the per-edge orders the
//! CL move uses.

use ggmsv::graph::{
    edge_permutation, fill_count, fill_in_graph, maximal_cliques, min_fill_ordering, Graph, Permutation,
};

fn main() -> ggmsv::Result<()> {
    // 3 x 3 grid, nodes numbered row by row
    let mut edges = Vec::new();
    for r in 0..3 {
        for c in 0..3 {
            let v = 3 * r + c;
            if c < 2 {
                edges.push((v, v + 1));
            }
            if r < 2 {
                edges.push((v, v + 3));
            }
        }
    }
    let grid = Graph::from_edges(9, &edges)?;

    let natural = Permutation::identity(9);
    let greedy = min_fill_ordering(&grid);
    println!("natural order fill: {}", fill_count(&grid, &natural));
    println!("min-fill order {:?} fill: {}", greedy.order(), fill_count(&grid, &greedy));

    let chordal = fill_in_graph(&grid, &greedy);
    println!("cliques of the filled graph:");
    for c in maximal_cliques(&chordal).iter() {
        println!("  {c:?}");
    }

    // the pair goes last, present or not; the rest follow a min-fill order
    for (i, j) in [(0, 1), (4, 5), (0, 8)] {
        let perm = edge_permutation(&grid, i, j);
        let moved = grid.permuted(&perm);
        println!(
            "pair ({i}, {j}): order {:?}, fill {}",
            perm.order(),
            fill_count(&moved, &Permutation::identity(9))
        );
    }
    Ok(())
}
