//! Reference objects of a finite game: equilibria, dominance-based solution
//! sets, coarse correlated equilibria and structural certificates.
//!
//! Every function here is pure, so shared games can be solved concurrently.

mod cce;
mod certificates;
mod monopoly;
mod nash;
mod rationalizability;

#[cfg(test)]
mod properties;

use serde::{Deserialize, Serialize};

use crate::game::NormalFormGame;

pub use cce::{cce_max_violation, cce_solve, CceObjective, JointDistribution};
pub use certificates::{
    check_increasing_differences, check_potential_identity, linear_potential, potential_deviation,
    IdWitness, IncreasingDifferences,
};
pub use monopoly::{joint_profit_max, joint_profit_max_spec, joint_profit_search};
pub use nash::{continuous_linear_nash, enumerate_pure_nash, is_pure_nash, reference_prices, search_symmetric_nash};
pub use rationalizability::{
    competition_constant, competition_value, cr_set, dominance_slack, isd, isd_random_order,
};

/// Per-player subsets of grid indices, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionSubsets(pub Vec<Vec<usize>>);

impl ActionSubsets {
    pub fn full(game: &NormalFormGame) -> Self {
        Self((0..game.players()).map(|i| (0..game.actions(i)).collect()).collect())
    }

    pub fn players(&self) -> usize {
        self.0.len()
    }

    pub fn get(&self, player: usize) -> &[usize] {
        &self.0[player]
    }

    pub fn contains(&self, player: usize, action: usize) -> bool {
        self.0[player].binary_search(&action).is_ok()
    }

    pub fn contains_profile(&self, profile: &[usize]) -> bool {
        profile.iter().enumerate().all(|(i, &a)| self.contains(i, a))
    }

    pub fn is_full(&self, game: &NormalFormGame) -> bool {
        self.0.iter().enumerate().all(|(i, s)| s.len() == game.actions(i))
    }

    /// Grid values of the surviving actions.
    pub fn values(&self, game: &NormalFormGame) -> Vec<Vec<f64>> {
        self.0
            .iter()
            .enumerate()
            .map(|(i, s)| s.iter().map(|&a| game.action_values(i)[a]).collect())
            .collect()
    }
}
