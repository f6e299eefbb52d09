use crate::error::{Error, Result};
use crate::game::{BertrandSpec, DemandModel, NormalFormGame};

/// Relative slack below which a deviation does not count as an improvement.
const NASH_TOL: f64 = 1e-12;

#[inline]
fn improves(deviation: f64, current: f64) -> bool {
    deviation > current + NASH_TOL * (1.0 + current.abs())
}

/// All pure Nash equilibria of a materialized game, in lexicographic order.
pub fn enumerate_pure_nash(game: &NormalFormGame) -> Vec<Vec<usize>> {
    let joint = game.joint_size();
    let mut stable = vec![true; joint];
    for i in 0..game.players() {
        let k = game.actions(i);
        let s = game.stride(i);
        let block = s * k;
        for high in 0..joint / block {
            for low in 0..s {
                let base = high * block + low;
                let best = (0..k).map(|b| game.payoff(i, base + b * s)).fold(f64::NEG_INFINITY, f64::max);
                for b in 0..k {
                    let j = base + b * s;
                    if stable[j] && improves(best, game.payoff(i, j)) {
                        stable[j] = false;
                    }
                }
            }
        }
    }
    stable.iter().enumerate().filter(|(_, &ok)| ok).map(|(j, _)| game.profile(j)).collect()
}

/// Whether no player gains from a unilateral deviation at `profile`.
pub fn is_pure_nash(game: &NormalFormGame, profile: &[usize]) -> bool {
    let j = game.joint_index(profile);
    (0..game.players()).all(|i| {
        let u = game.payoff(i, j);
        (0..game.actions(i)).all(|b| !improves(game.payoff(i, game.deviate(j, i, b)), u))
    })
}

/// Symmetric grid profiles that are Nash equilibria, checked by on-demand
/// utility evaluation. Asymmetric equilibria are not searched.
pub fn search_symmetric_nash(spec: &BertrandSpec) -> Result<Vec<Vec<usize>>> {
    spec.validate()?;
    if !spec.is_symmetric() {
        return Err(Error::InvalidArgument("symmetric search needs a symmetric game".into()));
    }
    let n = spec.players();
    let grid = spec.grid.prices(0);
    let active = vec![true; n];
    let mut found = Vec::new();
    let mut prices = vec![0.0; n];
    for k in 0..grid.len() {
        let stable = (0..n).all(|i| {
            prices.iter_mut().for_each(|p| *p = grid[k]);
            let u = spec.player_utility(i, &prices, &active);
            grid.iter().enumerate().filter(|&(b, _)| b != k).all(|(_, &p)| {
                prices[i] = p;
                !improves(spec.player_utility(i, &prices, &active), u)
            })
        });
        if stable {
            found.push(vec![k; n]);
        }
    }
    Ok(found)
}

/// Component-wise maximum price over a list of equilibrium profiles.
pub fn reference_prices(game: &NormalFormGame, equilibria: &[Vec<usize>]) -> Result<Vec<f64>> {
    if equilibria.is_empty() {
        return Err(Error::Undefined("no pure Nash equilibrium to anchor prices".into()));
    }
    Ok((0..game.players())
        .map(|i| {
            equilibria
                .iter()
                .map(|p| game.action_values(i)[p[i]])
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect())
}

/// Symmetric equilibrium price `(alpha + beta c) / (2 beta - gamma)` of the
/// continuous linear-demand game.
pub fn continuous_linear_nash(demand: &DemandModel, cost: f64) -> Result<f64> {
    let DemandModel::Linear { alpha, beta, gamma } = demand else {
        return Err(Error::InvalidArgument("continuous equilibrium needs linear demand".into()));
    };
    let (a, b) = (alpha[0], beta[0]);
    if alpha.iter().any(|&x| x != a) || beta.iter().any(|&x| x != b) {
        return Err(Error::InvalidArgument("continuous equilibrium needs symmetric parameters".into()));
    }
    if b <= *gamma {
        return Err(Error::InvalidArgument(format!("need beta > gamma, got {b} <= {gamma}")));
    }
    Ok((a + b * cost) / (2.0 * b - gamma))
}
