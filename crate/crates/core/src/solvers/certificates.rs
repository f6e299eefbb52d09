use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::{cell_count, increment, BertrandSpec, DemandModel, NormalFormGame, DEFAULT_CELL_BUDGET};

const ID_TOL: f64 = 1e-12;

/// A violation of increasing differences: raising the own action from `low`
/// to `high` pays less against `opp_high` than against `opp_low`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IdWitness {
    pub player: usize,
    pub low: usize,
    pub high: usize,
    /// Opponent action indices in player order, `player` omitted.
    pub opp_low: Vec<usize>,
    pub opp_high: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct IncreasingDifferences {
    pub holds: bool,
    pub witness: Option<IdWitness>,
}

/// Exhaustive check of `u(a', b') - u(a, b') >= u(a', b) - u(a, b)` for all
/// `a < a'` and componentwise `b <= b'`, actions ordered by index.
/// Returns the first violation in lexicographic order of
/// `(player, a, a', b, b')`.
pub fn check_increasing_differences(game: &NormalFormGame) -> IncreasingDifferences {
    let scale = game.raw_payoffs().iter().fold(0.0f64, |m, u| m.max(u.abs()));
    let tol = ID_TOL * (1.0 + scale);
    for i in 0..game.players() {
        let full: Vec<Vec<usize>> = (0..game.players()).map(|p| (0..game.actions(p)).collect()).collect();
        let opponents = game.opponent_joints(i, &full);
        let profiles: Vec<Vec<usize>> = opponents
            .iter()
            .map(|&p| {
                let mut prof = game.profile(p);
                prof.remove(i);
                prof
            })
            .collect();
        let u = |a: usize, p: usize| game.payoff(i, game.deviate(opponents[p], i, a));
        let k = game.actions(i);
        for a in 0..k {
            for a2 in a + 1..k {
                for p in 0..opponents.len() {
                    for p2 in 0..opponents.len() {
                        if p2 == p || !profiles[p].iter().zip(&profiles[p2]).all(|(x, y)| x <= y) {
                            continue;
                        }
                        let high_gain = u(a2, p2) - u(a, p2);
                        let low_gain = u(a2, p) - u(a, p);
                        if high_gain < low_gain - tol {
                            return IncreasingDifferences {
                                holds: false,
                                witness: Some(IdWitness {
                                    player: i,
                                    low: a,
                                    high: a2,
                                    opp_low: profiles[p].clone(),
                                    opp_high: profiles[p2].clone(),
                                }),
                            };
                        }
                    }
                }
            }
        }
    }
    IncreasingDifferences { holds: true, witness: None }
}

/// `sum alpha_k a_k - sum beta_k a_k (a_k - c_k) + gamma / (n - 1) sum_{k<l} a_k a_l`.
pub fn linear_potential(spec: &BertrandSpec, prices: &[f64]) -> Result<f64> {
    let DemandModel::Linear { alpha, beta, gamma } = &spec.demand else {
        return Err(Error::InvalidArgument("potential needs linear demand".into()));
    };
    let n = prices.len();
    let mut phi = 0.0;
    for k in 0..n {
        phi += alpha[k] * prices[k] - beta[k] * prices[k] * (prices[k] - spec.costs[k]);
    }
    if n > 1 {
        let mut cross = 0.0;
        for k in 0..n {
            for l in k + 1..n {
                cross += prices[k] * prices[l];
            }
        }
        phi += gamma / (n - 1) as f64 * cross;
    }
    Ok(phi)
}

/// Largest `|u_i(b, a_-i) - u_i(a) - (phi(b, a_-i) - phi(a))|` over every grid
/// profile and unilateral deviation.
pub fn potential_deviation<F>(spec: &BertrandSpec, mut phi: F) -> Result<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    spec.validate()?;
    let counts = spec.grid.counts();
    let cells = cell_count(&counts);
    if cells > DEFAULT_CELL_BUDGET {
        return Err(Error::BudgetExceeded { cells, budget: DEFAULT_CELL_BUDGET });
    }
    let n = spec.players();
    let active = vec![true; n];
    let mut profile = vec![0usize; n];
    let mut prices = vec![0.0; n];
    let mut worst = 0.0f64;
    loop {
        for i in 0..n {
            prices[i] = spec.grid.price(i, profile[i]);
        }
        let base_phi = phi(&prices);
        for i in 0..n {
            let own = prices[i];
            let base_u = spec.player_utility(i, &prices, &active);
            for &b in spec.grid.prices(i) {
                if b == own {
                    continue;
                }
                prices[i] = b;
                let du = spec.player_utility(i, &prices, &active) - base_u;
                let dphi = phi(&prices) - base_phi;
                worst = worst.max((du - dphi).abs());
            }
            prices[i] = own;
        }
        if !increment(&mut profile, &counts) {
            break;
        }
    }
    Ok(worst)
}

/// Potential-game certificate for linear demand: the maximum mismatch between
/// unilateral profit changes and changes of [`linear_potential`].
pub fn check_potential_identity(spec: &BertrandSpec) -> Result<f64> {
    if !matches!(spec.demand, DemandModel::Linear { .. }) {
        return Err(Error::InvalidArgument("potential check needs linear demand".into()));
    }
    potential_deviation(spec, |p| linear_potential(spec, p).expect("linear demand"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::{build_game, PriceGrid};

    fn o2() -> BertrandSpec {
        BertrandSpec::new(
            vec![0.0, 0.0],
            DemandModel::Linear { alpha: vec![0.48; 2], beta: vec![0.9; 2], gamma: 0.6 },
            PriceGrid::uniform(2, 0.0, 1.0, 21).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn linear_is_potential() {
        assert!(check_potential_identity(&o2()).unwrap() <= 1e-12);
    }

    #[test]
    fn dropping_cross_term_breaks_identity() {
        let spec = o2();
        let dev = potential_deviation(&spec, |p| {
            p.iter().map(|&a| 0.48 * a - 0.9 * a * a).sum()
        })
        .unwrap();
        assert!(dev > 0.01, "{dev}");
    }

    #[test]
    fn single_move_by_hand() {
        let spec = o2();
        let active = [true, true];
        let du = spec.player_utility(0, &[0.5, 0.4], &active) - spec.player_utility(0, &[0.4, 0.4], &active);
        let dphi = linear_potential(&spec, &[0.5, 0.4]).unwrap() - linear_potential(&spec, &[0.4, 0.4]).unwrap();
        // (0.48 - 0.45 + 0.24) * 0.5 - (0.48 - 0.36 + 0.24) * 0.4 = 0.135 - 0.144
        assert!((du + 0.009).abs() < 1e-15);
        assert!((du - dphi).abs() < 1e-15);
    }

    #[test]
    fn non_linear_rejected() {
        let mut spec = o2();
        spec.demand = DemandModel::Standard { total: 1.0 };
        assert!(check_potential_identity(&spec).is_err());
    }

    #[test]
    fn increasing_differences_cases() {
        assert!(check_increasing_differences(&build_game(&o2()).unwrap()).holds);
        let spec = BertrandSpec::new(
            vec![0.0, 0.0],
            DemandModel::Standard { total: 1.0 },
            PriceGrid::uniform(2, 0.05, 1.0, 21).unwrap(),
        )
        .unwrap();
        let r = check_increasing_differences(&build_game(&spec).unwrap());
        assert!(!r.holds);
        let w = r.witness.unwrap();
        let g = build_game(&spec).unwrap();
        let u = |a: usize, b: usize| g.payoff_at(w.player, &if w.player == 0 { [a, b] } else { [b, a] });
        let (lo, hi) = (w.opp_low[0], w.opp_high[0]);
        assert!(u(w.high, hi) - u(w.low, hi) < u(w.high, lo) - u(w.low, lo));
        let flat = NormalFormGame::bimatrix(&vec![vec![1.0; 3]; 3], &vec![vec![1.0; 3]; 3]).unwrap();
        assert_eq!(check_increasing_differences(&flat), IncreasingDifferences { holds: true, witness: None });
    }
}
