use serde::{Deserialize, Serialize};

use super::demand::BertrandSpec;
use super::normal_form::NormalFormGame;

/// Affine map of one player's utility range onto `[0, 1]`.
///
/// A degenerate range (`lo == hi`) maps everything to `0.5`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Affine {
    pub lo: f64,
    pub hi: f64,
}

impl Affine {
    #[inline]
    pub fn apply(&self, u: f64) -> f64 {
        if self.hi > self.lo {
            (u - self.lo) / (self.hi - self.lo)
        } else {
            0.5
        }
    }

    pub fn scale(&self) -> f64 {
        if self.hi > self.lo {
            1.0 / (self.hi - self.lo)
        } else {
            0.0
        }
    }
}

/// Per-player reward normalization used to feed bandit learners.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardNormalizer {
    maps: Vec<Affine>,
}

impl RewardNormalizer {
    pub fn from_bounds(bounds: impl IntoIterator<Item = (f64, f64)>) -> Self {
        Self { maps: bounds.into_iter().map(|(lo, hi)| Affine { lo, hi }).collect() }
    }

    /// Maps each player's `[min u_i, max u_i]` over the tensor onto `[0, 1]`.
    pub fn from_game(game: &NormalFormGame) -> Self {
        Self::from_bounds((0..game.players()).map(|i| {
            game.player_payoffs(i)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), u| (lo.min(u), hi.max(u)))
        }))
    }

    /// Exact utility range over the grid for every active set in `active_sets`,
    /// without materializing the tensor.
    pub fn from_spec(spec: &BertrandSpec, active_sets: &[Vec<bool>]) -> Self {
        Self::from_bounds((0..spec.players()).map(|i| {
            active_sets
                .iter()
                .filter(|set| set[i])
                .map(|set| spec.utility_bounds(i, set))
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (a, b)| (lo.min(a), hi.max(b)))
        }))
    }

    pub fn player(&self, i: usize) -> Affine {
        self.maps[i]
    }

    #[inline]
    pub fn apply(&self, player: usize, u: f64) -> f64 {
        self.maps[player].apply(u)
    }

    pub fn players(&self) -> usize {
        self.maps.len()
    }
}

/// Convenience wrapper matching the free-function form used elsewhere.
pub fn reward_normalizer(game: &NormalFormGame) -> RewardNormalizer {
    RewardNormalizer::from_game(game)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{build_game, DemandModel, PriceGrid};
    use proptest::prelude::*;

    #[test]
    fn affine_cases() {
        let g = NormalFormGame::bimatrix(&[vec![0.0, 0.25]], &[vec![-1.0, 1.0]]).unwrap();
        let n = reward_normalizer(&g);
        assert!((n.apply(0, 0.1) - 0.4).abs() < 1e-15);
        assert_eq!(n.apply(1, 0.0), 0.5);
        assert_eq!(n.apply(1, -1.0), 0.0);
        let flat = NormalFormGame::bimatrix(&[vec![3.0, 3.0]], &[vec![3.0, 3.0]]).unwrap();
        assert_eq!(reward_normalizer(&flat).apply(0, 3.0), 0.5);
    }

    fn spec_for(model: u8, n: usize, costs: Vec<f64>, lo: f64, hi: f64, k: usize) -> BertrandSpec {
        let demand = match model {
            0 => DemandModel::Standard { total: 1.0 },
            1 => DemandModel::Linear { alpha: vec![0.48; n], beta: vec![0.9; n], gamma: 0.6 },
            _ => DemandModel::Logit { quality: vec![2.0; n], outside: 0.0, mu: 0.25 },
        };
        BertrandSpec::new(costs, demand, PriceGrid::uniform(n, lo, hi, k).unwrap()).unwrap()
    }

    proptest! {
        #[test]
        fn analytic_bounds_match_tensor(model in 0u8..3, n in 2usize..4, k in 2usize..7,
                                        lo in 0.0f64..0.5, width in 0.1f64..1.5, c in 0.0f64..0.6) {
            let costs: Vec<f64> = (0..n).map(|i| c * i as f64 / n as f64).collect();
            let spec = spec_for(model, n, costs, lo, lo + width, k);
            let game = build_game(&spec).unwrap();
            let exact = RewardNormalizer::from_game(&game);
            let analytic = RewardNormalizer::from_spec(&spec, &[vec![true; n]]);
            for i in 0..n {
                prop_assert_eq!(exact.player(i), analytic.player(i));
            }
        }
    }
}
