use serde::{Deserialize, Serialize};

use super::demand::BertrandSpec;
use crate::error::{Error, Result};

/// Default limit on `players * joint profiles` for materialized tensors.
pub const DEFAULT_CELL_BUDGET: u128 = 100_000_000;

/// A finite game with a dense payoff tensor.
///
/// Joint profiles are indexed lexicographically with player 0 most significant.
/// Payoffs are stored profile-major: `payoffs[joint * n + player]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalFormGame {
    action_values: Vec<Vec<f64>>,
    strides: Vec<usize>,
    payoffs: Vec<f64>,
}

/// Number of payoff cells (`players * joint profiles`) for the given action counts.
pub fn cell_count(counts: &[usize]) -> u128 {
    counts.iter().fold(1u128, |acc, &k| acc.saturating_mul(k as u128)) * counts.len() as u128
}

impl NormalFormGame {
    /// Builds a game by evaluating `payoff(profile, out)` on every joint profile.
    pub fn from_fn<F>(action_values: Vec<Vec<f64>>, budget: u128, mut payoff: F) -> Result<Self>
    where
        F: FnMut(&[usize], &mut [f64]),
    {
        let counts: Vec<usize> = action_values.iter().map(Vec::len).collect();
        if counts.is_empty() || counts.iter().any(|&k| k == 0) {
            return Err(Error::InvalidArgument("every player needs at least one action".into()));
        }
        let cells = cell_count(&counts);
        if cells > budget {
            return Err(Error::BudgetExceeded { cells, budget });
        }
        let n = counts.len();
        let strides = strides_for(&counts);
        let joint = strides[0] * counts[0];
        let mut payoffs = vec![0.0; joint * n];
        let mut profile = vec![0usize; n];
        for j in 0..joint {
            payoff(&profile, &mut payoffs[j * n..(j + 1) * n]);
            increment(&mut profile, &counts);
        }
        if let Some(bad) = payoffs.iter().position(|u| !u.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite payoff at joint profile {}",
                bad / n
            )));
        }
        Ok(Self { action_values, strides, payoffs })
    }

    /// A hand-written game. `lists[i]` holds player `i`'s payoffs over joint
    /// profiles in lexicographic order. Action values default to `0, 1, 2, ...`.
    pub fn from_payoff_lists(counts: &[usize], lists: &[Vec<f64>]) -> Result<Self> {
        if lists.len() != counts.len() {
            return Err(Error::InvalidArgument(format!(
                "{} players but {} payoff lists",
                counts.len(),
                lists.len()
            )));
        }
        let joint: usize = counts.iter().product();
        if let Some(l) = lists.iter().find(|l| l.len() != joint) {
            return Err(Error::InvalidArgument(format!(
                "payoff list has {} entries, expected {joint}",
                l.len()
            )));
        }
        let values = counts.iter().map(|&k| (0..k).map(|a| a as f64).collect()).collect();
        let strides = strides_for(counts);
        let mut j = 0usize;
        Self::from_fn(values, u128::MAX, |profile, out| {
            debug_assert_eq!(joint_of(&strides, profile), j);
            for (i, o) in out.iter_mut().enumerate() {
                *o = lists[i][j];
            }
            j += 1;
        })
    }

    /// Two-player game from row-player and column-player matrices.
    pub fn bimatrix(p1: &[Vec<f64>], p2: &[Vec<f64>]) -> Result<Self> {
        let rows = p1.len();
        let cols = p1.first().map_or(0, Vec::len);
        if p2.len() != rows || p1.iter().chain(p2).any(|r| r.len() != cols) {
            return Err(Error::InvalidArgument("bimatrix shapes disagree".into()));
        }
        let flat = |m: &[Vec<f64>]| m.iter().flatten().copied().collect::<Vec<_>>();
        Self::from_payoff_lists(&[rows, cols], &[flat(p1), flat(p2)])
    }

    /// Replaces the numeric labels of each player's actions (e.g. prices).
    pub fn with_action_values(mut self, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != self.players()
            || values.iter().zip(&self.action_values).any(|(a, b)| a.len() != b.len())
        {
            return Err(Error::InvalidArgument("action value shape mismatch".into()));
        }
        self.action_values = values;
        Ok(self)
    }

    pub fn players(&self) -> usize {
        self.action_values.len()
    }

    pub fn actions(&self, player: usize) -> usize {
        self.action_values[player].len()
    }

    pub fn action_counts(&self) -> Vec<usize> {
        self.action_values.iter().map(Vec::len).collect()
    }

    pub fn action_values(&self, player: usize) -> &[f64] {
        &self.action_values[player]
    }

    /// Joint-index step of one action of `player`.
    #[inline]
    pub fn stride(&self, player: usize) -> usize {
        self.strides[player]
    }

    pub fn joint_size(&self) -> usize {
        self.payoffs.len() / self.players()
    }

    #[inline]
    pub fn joint_index(&self, profile: &[usize]) -> usize {
        joint_of(&self.strides, profile)
    }

    pub fn profile(&self, mut joint: usize) -> Vec<usize> {
        self.strides
            .iter()
            .map(|&s| {
                let a = joint / s;
                joint %= s;
                a
            })
            .collect()
    }

    /// Action of `player` inside a joint index.
    #[inline]
    pub fn action_in(&self, joint: usize, player: usize) -> usize {
        (joint / self.strides[player]) % self.actions(player)
    }

    /// Joint index after `player` switches to `action`.
    #[inline]
    pub fn deviate(&self, joint: usize, player: usize, action: usize) -> usize {
        let s = self.strides[player];
        let current = (joint / s) % self.actions(player);
        joint - current * s + action * s
    }

    #[inline]
    pub fn payoff(&self, player: usize, joint: usize) -> f64 {
        self.payoffs[joint * self.players() + player]
    }

    pub fn payoff_at(&self, player: usize, profile: &[usize]) -> f64 {
        self.payoff(player, self.joint_index(profile))
    }

    /// All payoffs of one player, in joint order.
    pub fn player_payoffs(&self, player: usize) -> impl Iterator<Item = f64> + '_ {
        self.payoffs.iter().skip(player).step_by(self.players()).copied()
    }

    pub fn raw_payoffs(&self) -> &[f64] {
        &self.payoffs
    }

    /// Iterates the joint indices of all profiles inside a product set of actions.
    pub fn joints_in(&self, subsets: &[Vec<usize>]) -> Vec<usize> {
        let mut out = vec![0usize];
        for (player, subset) in subsets.iter().enumerate() {
            let s = self.strides[player];
            out = out.iter().flat_map(|&base| subset.iter().map(move |&a| base + a * s)).collect();
        }
        out
    }

    /// Joint indices of opponent profiles (with `player`'s action set to 0)
    /// ranging over the given subsets.
    pub fn opponent_joints(&self, player: usize, subsets: &[Vec<usize>]) -> Vec<usize> {
        let mut restricted = subsets.to_vec();
        restricted[player] = vec![0];
        self.joints_in(&restricted)
    }
}

/// Materializes the payoff tensor of a Bertrand instance with all players active.
pub fn build_game(spec: &BertrandSpec) -> Result<NormalFormGame> {
    build_game_with_budget(spec, DEFAULT_CELL_BUDGET)
}

pub fn build_game_with_budget(spec: &BertrandSpec, budget: u128) -> Result<NormalFormGame> {
    spec.validate()?;
    let n = spec.players();
    let active = vec![true; n];
    let mut prices = vec![0.0; n];
    NormalFormGame::from_fn(spec.grid.all().to_vec(), budget, |profile, out| {
        for i in 0..n {
            prices[i] = spec.grid.price(i, profile[i]);
        }
        spec.utility_into(&prices, &active, out);
    })
}

fn strides_for(counts: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; counts.len()];
    for i in (0..counts.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * counts[i + 1];
    }
    strides
}

#[inline]
fn joint_of(strides: &[usize], profile: &[usize]) -> usize {
    profile.iter().zip(strides).map(|(a, s)| a * s).sum()
}

/// Advances a mixed-radix counter, last position fastest.
pub fn increment(profile: &mut [usize], counts: &[usize]) -> bool {
    for i in (0..profile.len()).rev() {
        profile[i] += 1;
        if profile[i] < counts[i] {
            return true;
        }
        profile[i] = 0;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{DemandModel, PriceGrid};

    #[test]
    fn standard_duopoly_tensor() {
        let spec = BertrandSpec::new(
            vec![0.0, 0.0],
            DemandModel::Standard { total: 1.0 },
            PriceGrid::uniform(2, 0.05, 1.0, 21).unwrap(),
        )
        .unwrap();
        let g = build_game(&spec).unwrap();
        assert_eq!(g.players(), 2);
        assert_eq!(g.action_counts(), vec![21, 21]);
        assert_eq!(g.raw_payoffs().len(), 2 * 21 * 21);
        let expected = 0.5 * (1.0 - 0.05) * 0.05;
        assert!((g.payoff_at(0, &[0, 0]) - expected).abs() < 1e-15);
        assert!((g.payoff_at(1, &[0, 0]) - expected).abs() < 1e-15);
    }

    #[test]
    fn single_player_at_cost_is_zero() {
        let spec = BertrandSpec::new(
            vec![0.3],
            DemandModel::Standard { total: 1.0 },
            PriceGrid::new(vec![vec![0.3]]).unwrap(),
        )
        .unwrap();
        let g = build_game(&spec).unwrap();
        assert!(g.raw_payoffs().iter().all(|&u| u == 0.0));
    }

    #[test]
    fn hand_game_echoes_lists() {
        let g = NormalFormGame::bimatrix(
            &[vec![0.0, 2.0], vec![2.0, 1.0]],
            &[vec![2.0, 0.0], vec![0.0, 0.0]],
        )
        .unwrap();
        assert_eq!(g.payoff_at(0, &[0, 1]), 2.0);
        assert_eq!(g.payoff_at(0, &[1, 1]), 1.0);
        assert_eq!(g.payoff_at(1, &[0, 0]), 2.0);
        assert_eq!(g.player_payoffs(0).collect::<Vec<_>>(), vec![0.0, 2.0, 2.0, 1.0]);
    }

    #[test]
    fn budget_guard() {
        let spec = BertrandSpec::new(
            vec![0.0; 10],
            DemandModel::Standard { total: 1.0 },
            PriceGrid::uniform(10, 0.05, 1.0, 21).unwrap(),
        )
        .unwrap();
        match build_game(&spec) {
            Err(Error::BudgetExceeded { cells, .. }) => assert_eq!(cells, 21u128.pow(10) * 10),
            other => panic!("expected budget error, got {other:?}"),
        }
    }

    #[test]
    fn index_arithmetic() {
        let g = NormalFormGame::from_payoff_lists(&[2, 3, 4], &[vec![0.0; 24], vec![0.0; 24], vec![0.0; 24]])
            .unwrap();
        for j in 0..24 {
            let p = g.profile(j);
            assert_eq!(g.joint_index(&p), j);
            for i in 0..3 {
                assert_eq!(g.action_in(j, i), p[i]);
            }
        }
        assert_eq!(g.deviate(g.joint_index(&[1, 2, 3]), 1, 0), g.joint_index(&[1, 0, 3]));
        assert_eq!(g.joints_in(&[vec![1], vec![0, 2], vec![3]]), vec![g.joint_index(&[1, 0, 3]), g.joint_index(&[1, 2, 3])]);
    }

    #[test]
    fn build_is_pure() {
        let spec = BertrandSpec::new(
            vec![0.5, 1.0],
            DemandModel::Logit { quality: vec![1.5, 2.0], outside: 0.0, mu: 0.25 },
            PriceGrid::uniform(2, 1.0, 2.0, 21).unwrap(),
        )
        .unwrap();
        assert_eq!(build_game(&spec).unwrap(), build_game(&spec).unwrap());
    }
}
