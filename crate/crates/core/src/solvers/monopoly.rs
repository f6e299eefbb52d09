use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::game::{build_game_with_budget, cell_count, BertrandSpec, NormalFormGame};

/// Joint profits within this relative distance of the maximum count as ties.
const PROFIT_TOL: f64 = 1e-12;
const RANDOM_STARTS: usize = 8;
const MAX_SWEEPS: usize = 10_000;

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= PROFIT_TOL * (1.0 + a.abs().max(b.abs()))
}

/// Exhaustive maximizer of total profit over a materialized game.
///
/// Among tied maximizers the profile with the highest price sum wins, then
/// the lexicographically smallest. The first rule matters when a firm that
/// sells nothing can post any price without changing the total.
pub fn joint_profit_max(game: &NormalFormGame) -> Vec<usize> {
    let n = game.players();
    let totals: Vec<f64> = game.raw_payoffs().chunks_exact(n).map(|u| u.iter().sum()).collect();
    let best = totals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut chosen: Option<(usize, f64)> = None;
    for (j, &t) in totals.iter().enumerate() {
        if !close(t, best) {
            continue;
        }
        let sum = price_sum(game, j);
        if chosen.is_none_or(|(_, s)| sum > s) {
            chosen = Some((j, sum));
        }
    }
    game.profile(chosen.expect("nonempty game").0)
}

fn price_sum(game: &NormalFormGame, joint: usize) -> f64 {
    (0..game.players()).map(|i| game.action_values(i)[game.action_in(joint, i)]).sum()
}

/// Joint-profit maximizer of a Bertrand instance: exhaustive when the tensor
/// fits in `budget`, coordinate ascent otherwise.
pub fn joint_profit_max_spec(spec: &BertrandSpec, budget: u128, seed: u64) -> Result<Vec<usize>> {
    if cell_count(&spec.grid.counts()) <= budget {
        Ok(joint_profit_max(&build_game_with_budget(spec, budget)?))
    } else {
        joint_profit_search(spec, seed)
    }
}

/// Coordinate ascent on total profit from the best common-index start plus
/// eight seeded random starts. A local optimum, deterministic given `seed`.
pub fn joint_profit_search(spec: &BertrandSpec, seed: u64) -> Result<Vec<usize>> {
    spec.validate()?;
    let n = spec.players();
    let counts = spec.grid.counts();
    let active = vec![true; n];
    let total = |profile: &[usize], prices: &mut Vec<f64>| -> f64 {
        for i in 0..n {
            prices[i] = spec.grid.price(i, profile[i]);
        }
        (0..n).map(|i| spec.player_utility(i, prices, &active)).sum()
    };
    let key = |profile: &[usize], prices: &mut Vec<f64>| -> (f64, f64) {
        let t = total(profile, prices);
        (t, prices.iter().sum())
    };
    let better = |a: (f64, f64, &[usize]), b: (f64, f64, &[usize])| -> bool {
        if !close(a.0, b.0) {
            return a.0 > b.0;
        }
        if a.1 != b.1 {
            return a.1 > b.1;
        }
        a.2 < b.2
    };
    let mut prices = vec![0.0; n];

    let longest = *counts.iter().max().unwrap();
    let mut starts = Vec::with_capacity(RANDOM_STARTS + 1);
    let mut common: Option<(Vec<usize>, f64, f64)> = None;
    for k in 0..longest {
        let profile: Vec<usize> = counts.iter().map(|&c| k.min(c - 1)).collect();
        let (t, s) = key(&profile, &mut prices);
        if common.as_ref().is_none_or(|(p, ct, cs)| better((t, s, &profile), (*ct, *cs, p))) {
            common = Some((profile, t, s));
        }
    }
    starts.push(common.unwrap().0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RANDOM_STARTS {
        starts.push(counts.iter().map(|&c| rng.random_range(0..c)).collect());
    }

    let mut best: Option<(Vec<usize>, f64, f64)> = None;
    for mut profile in starts {
        let (mut t, mut s) = key(&profile, &mut prices);
        for _ in 0..MAX_SWEEPS {
            let mut moved = false;
            for i in 0..n {
                let current = profile[i];
                for b in 0..counts[i] {
                    if b == current {
                        continue;
                    }
                    let mut trial = profile.clone();
                    trial[i] = b;
                    let (tt, ts) = key(&trial, &mut prices);
                    if better((tt, ts, &trial), (t, s, &profile)) {
                        profile = trial;
                        t = tt;
                        s = ts;
                        moved = true;
                    }
                }
            }
            if !moved {
                break;
            }
        }
        if best.as_ref().is_none_or(|(p, bt, bs)| better((t, s, &profile), (*bt, *bs, p))) {
            best = Some((profile, t, s));
        }
    }
    Ok(best.unwrap().0)
}
