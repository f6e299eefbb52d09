use rand::seq::SliceRandom;
use rand::Rng;

use super::ActionSubsets;
use crate::error::{Error, Result};
use crate::game::NormalFormGame;
use crate::lp::{solve_lp, LinearProgram, LpStatus, Relation, Sense, LP_TOL};

fn optimal(lp: &LinearProgram, what: &str) -> Result<f64> {
    let sol = solve_lp(lp)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.objective),
        other => Err(Error::Numerical(format!("{what} LP ended {other:?}"))),
    }
}

/// Largest margin `eps` by which some mixture of `player`'s other surviving
/// actions beats `action` on every surviving opponent profile. The action is
/// strictly dominated iff this exceeds the LP tolerance. Returns `-inf` when
/// no other action survives.
pub fn dominance_slack(
    game: &NormalFormGame,
    subsets: &ActionSubsets,
    player: usize,
    action: usize,
) -> Result<f64> {
    let others: Vec<usize> = subsets.get(player).iter().copied().filter(|&b| b != action).collect();
    if others.is_empty() {
        return Ok(f64::NEG_INFINITY);
    }
    let opponents = game.opponent_joints(player, &subsets.0);
    let u = |b: usize, p: usize| game.payoff(player, game.deviate(p, player, b));

    // A pure dominator settles the question without an LP.
    let pure = others
        .iter()
        .map(|&b| opponents.iter().map(|&p| u(b, p) - u(action, p)).fold(f64::INFINITY, f64::min))
        .fold(f64::NEG_INFINITY, f64::max);
    if pure > LP_TOL {
        return Ok(pure);
    }

    let m = others.len();
    let mut objective = vec![0.0; m + 1];
    objective[m] = 1.0;
    let mut lp = LinearProgram::new(Sense::Maximize, m + 1)
        .with_objective(objective)
        .bound(m, f64::NEG_INFINITY, f64::INFINITY);
    for &p in &opponents {
        let mut row: Vec<f64> = others.iter().map(|&b| u(b, p)).collect();
        row.push(-1.0);
        lp.push(row, Relation::Ge, u(action, p));
    }
    let mut simplex = vec![1.0; m + 1];
    simplex[m] = 0.0;
    lp.push(simplex, Relation::Eq, 1.0);
    optimal(&lp, "dominance")
}

/// Iterated elimination of actions strictly dominated by mixed strategies.
/// Each round removes every dominated action of every player at once.
pub fn isd(game: &NormalFormGame) -> Result<ActionSubsets> {
    let mut current = ActionSubsets::full(game);
    loop {
        let mut next = current.clone();
        let mut removed = false;
        for i in 0..game.players() {
            let mut keep = Vec::with_capacity(current.get(i).len());
            for &a in current.get(i) {
                if dominance_slack(game, &current, i, a)? > LP_TOL {
                    removed = true;
                } else {
                    keep.push(a);
                }
            }
            next.0[i] = keep;
        }
        if !removed {
            return Ok(current);
        }
        current = next;
    }
}

/// Elimination one action at a time, in an order drawn from `rng`.
/// Used to check that the surviving sets do not depend on the order.
pub fn isd_random_order<R: Rng + ?Sized>(game: &NormalFormGame, rng: &mut R) -> Result<ActionSubsets> {
    let mut current = ActionSubsets::full(game);
    loop {
        let mut candidates: Vec<(usize, usize)> = current
            .0
            .iter()
            .enumerate()
            .flat_map(|(i, s)| s.iter().map(move |&a| (i, a)))
            .collect();
        candidates.shuffle(rng);
        let mut hit = None;
        for (i, a) in candidates {
            if dominance_slack(game, &current, i, a)? > LP_TOL {
                hit = Some((i, a));
                break;
            }
        }
        match hit {
            Some((i, a)) => current.0[i].retain(|&b| b != a),
            None => return Ok(current),
        }
    }
}

/// Best guaranteed advantage of `action` over every own alternative, maximized
/// over correlated beliefs on the surviving opponent profiles. Nonnegative iff
/// some belief makes `action` a best response.
fn belief_margin(game: &NormalFormGame, subsets: &ActionSubsets, player: usize, action: usize) -> Result<f64> {
    let opponents = game.opponent_joints(player, &subsets.0);
    let u = |b: usize, p: usize| game.payoff(player, game.deviate(p, player, b));
    let m = opponents.len();
    let mut objective = vec![0.0; m + 1];
    objective[m] = 1.0;
    let mut lp = LinearProgram::new(Sense::Maximize, m + 1)
        .with_objective(objective)
        .bound(m, f64::NEG_INFINITY, f64::INFINITY);
    for alt in 0..game.actions(player) {
        if alt == action {
            continue;
        }
        let mut row: Vec<f64> = opponents.iter().map(|&p| u(action, p) - u(alt, p)).collect();
        row.push(-1.0);
        lp.push(row, Relation::Ge, 0.0);
    }
    let mut simplex = vec![1.0; m + 1];
    simplex[m] = 0.0;
    lp.push(simplex, Relation::Eq, 1.0);
    Ok(optimal(&lp, "belief")?.min(0.0))
}

/// One application of the correlated rational response operator.
fn rational_responses(game: &NormalFormGame, subsets: &ActionSubsets) -> Result<ActionSubsets> {
    let mut next = Vec::with_capacity(game.players());
    for i in 0..game.players() {
        let mut keep = Vec::new();
        for &a in subsets.get(i) {
            if belief_margin(game, subsets, i, a)? >= -LP_TOL {
                keep.push(a);
            }
        }
        next.push(keep);
    }
    Ok(ActionSubsets(next))
}

/// Correlated rationalizable actions: the fixpoint of keeping only actions
/// that best respond to some correlated belief over surviving opponents.
pub fn cr_set(game: &NormalFormGame) -> Result<ActionSubsets> {
    let mut current = ActionSubsets::full(game);
    loop {
        let next = rational_responses(game, &current)?;
        if next == current {
            return Ok(current);
        }
        current = next;
    }
}

/// `min over beliefs x of max over a' of u(a', x) - u(action, x)`, beliefs
/// ranging over the surviving opponent profiles.
pub fn competition_value(
    game: &NormalFormGame,
    subsets: &ActionSubsets,
    player: usize,
    action: usize,
) -> Result<f64> {
    let opponents = game.opponent_joints(player, &subsets.0);
    let u = |b: usize, p: usize| game.payoff(player, game.deviate(p, player, b));
    let m = opponents.len();
    let mut objective = vec![0.0; m + 1];
    objective[m] = 1.0;
    let mut lp = LinearProgram::new(Sense::Minimize, m + 1)
        .with_objective(objective)
        .bound(m, f64::NEG_INFINITY, f64::INFINITY);
    for alt in 0..game.actions(player) {
        let mut row: Vec<f64> = opponents.iter().map(|&p| u(alt, p) - u(action, p)).collect();
        row.push(-1.0);
        lp.push(row, Relation::Le, 0.0);
    }
    let mut simplex = vec![1.0; m + 1];
    simplex[m] = 0.0;
    lp.push(simplex, Relation::Eq, 1.0);
    optimal(&lp, "competition")
}

/// Smallest margin by which an eliminated action loses to the best
/// alternative, over every elimination step of the rationalizability
/// iteration.
pub fn competition_constant(game: &NormalFormGame) -> Result<f64> {
    let mut current = ActionSubsets::full(game);
    let mut delta = f64::INFINITY;
    loop {
        let next = rational_responses(game, &current)?;
        if next == current {
            break;
        }
        for i in 0..game.players() {
            for &a in current.get(i).iter().filter(|&&a| !next.contains(i, a)) {
                delta = delta.min(competition_value(game, &current, i, a)?);
            }
        }
        current = next;
    }
    if delta.is_infinite() {
        return Err(Error::Undefined(
            "constant undefined: every action is correlated rationalizable".into(),
        ));
    }
    if delta <= 0.0 {
        return Err(Error::Numerical(format!("nonpositive competition constant {delta}")));
    }
    Ok(delta)
}
