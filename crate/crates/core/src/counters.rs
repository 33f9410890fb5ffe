use serde::{Deserialize, Serialize};

/// Operation counts accumulated by the samplers.
///
/// `edge_move_inversions` counts dense solves against `(p-1)`- or
/// `(p-2)`-dimensional sub-blocks of `K` made while evaluating or completing
/// an edge move; block-Gibbs solves are tallied separately.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpCounters {
    pub sweeps: u64,
    pub edges_evaluated: u64,
    pub moves_attempted: u64,
    pub moves_accepted: u64,
    pub edge_move_inversions: u64,
    pub cholesky_factorizations: u64,
    pub block_gibbs_solves: u64,
    pub rwmh_steps: u64,
    pub rwmh_accepts: u64,
}

impl OpCounters {
    pub fn merge(&mut self, other: &OpCounters) {
        self.sweeps += other.sweeps;
        self.edges_evaluated += other.edges_evaluated;
        self.moves_attempted += other.moves_attempted;
        self.moves_accepted += other.moves_accepted;
        self.edge_move_inversions += other.edge_move_inversions;
        self.cholesky_factorizations += other.cholesky_factorizations;
        self.block_gibbs_solves += other.block_gibbs_solves;
        self.rwmh_steps += other.rwmh_steps;
        self.rwmh_accepts += other.rwmh_accepts;
    }

    pub fn edge_move_inversions_per_sweep(&self) -> f64 {
        if self.sweeps == 0 {
            0.0
        } else {
            self.edge_move_inversions as f64 / self.sweeps as f64
        }
    }
}
