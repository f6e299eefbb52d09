use serde::ser::{SerializeStruct, Serializer};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::game::NormalFormGame;
use crate::lp::{solve_lp, LinearProgram, LpStatus, Relation, Sense, LP_TOL};

/// What to optimize over the coarse correlated equilibrium polytope.
#[derive(Debug, Clone, PartialEq)]
pub enum CceObjective {
    /// Any vertex.
    Feasible,
    /// Expected Euclidean price distance to the nearest listed pure profile.
    MaxWasserstein(Vec<Vec<usize>>),
    /// Maximize a linear functional with one coefficient per joint profile.
    Custom(Vec<f64>),
}

/// Probability mass over the joint profiles of a game.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    counts: Vec<usize>,
    mass: Vec<f64>,
}

impl JointDistribution {
    pub fn from_dense(game: &NormalFormGame, mass: Vec<f64>) -> Result<Self> {
        if mass.len() != game.joint_size() {
            return Err(Error::InvalidArgument(format!(
                "{} masses for {} joint profiles",
                mass.len(),
                game.joint_size()
            )));
        }
        Ok(Self { counts: game.action_counts(), mass })
    }

    pub fn point_mass(game: &NormalFormGame, profile: &[usize]) -> Self {
        let mut mass = vec![0.0; game.joint_size()];
        mass[game.joint_index(profile)] = 1.0;
        Self { counts: game.action_counts(), mass }
    }

    pub fn dense(&self) -> &[f64] {
        &self.mass
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Profiles with positive mass, in lexicographic order.
    pub fn support(&self) -> Vec<(Vec<usize>, f64)> {
        let mut out = Vec::new();
        let mut profile = vec![0usize; self.counts.len()];
        for &m in &self.mass {
            if m > 0.0 {
                out.push((profile.clone(), m));
            }
            crate::game::increment(&mut profile, &self.counts);
        }
        out
    }
}

#[derive(Serialize)]
struct Atom<'a> {
    profile: &'a [usize],
    mass: f64,
}

impl Serialize for JointDistribution {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let support = self.support();
        let atoms: Vec<Atom> = support.iter().map(|(p, m)| Atom { profile: p, mass: *m }).collect();
        let mut s = serializer.serialize_struct("JointDistribution", 2)?;
        s.serialize_field("action_counts", &self.counts)?;
        s.serialize_field("support", &atoms)?;
        s.end()
    }
}

/// Largest violation among the equilibrium inequalities, the sum-to-one
/// constraint and nonnegativity. Zero for an exact coarse correlated equilibrium.
pub fn cce_max_violation(game: &NormalFormGame, dist: &JointDistribution) -> f64 {
    let sigma = dist.dense();
    let mut worst = (dist.total() - 1.0).abs();
    worst = worst.max(sigma.iter().fold(0.0, |w, &m| w.max(-m)));
    for i in 0..game.players() {
        for alt in 0..game.actions(i) {
            let gain: f64 = sigma
                .iter()
                .enumerate()
                .filter(|(_, &m)| m != 0.0)
                .map(|(j, &m)| m * (game.payoff(i, game.deviate(j, i, alt)) - game.payoff(i, j)))
                .sum();
            worst = worst.max(gain);
        }
    }
    worst
}

/// Euclidean price distance from each joint profile to the nearest target.
fn distances(game: &NormalFormGame, targets: &[Vec<usize>]) -> Vec<f64> {
    let n = game.players();
    (0..game.joint_size())
        .map(|j| {
            targets
                .iter()
                .map(|t| {
                    (0..n)
                        .map(|i| {
                            let v = game.action_values(i);
                            let d = v[game.action_in(j, i)] - v[t[i]];
                            d * d
                        })
                        .sum::<f64>()
                        .sqrt()
                })
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Optimizes over coarse correlated equilibria: distributions under which no
/// player gains by committing to a fixed action in advance.
pub fn cce_solve(game: &NormalFormGame, objective: &CceObjective) -> Result<JointDistribution> {
    let joint = game.joint_size();
    let c = match objective {
        CceObjective::Feasible => vec![0.0; joint],
        CceObjective::MaxWasserstein(targets) => {
            if targets.is_empty() {
                return Err(Error::InvalidArgument("distance objective needs equilibrium profiles".into()));
            }
            distances(game, targets)
        }
        CceObjective::Custom(c) => {
            if c.len() != joint {
                return Err(Error::InvalidArgument(format!(
                    "objective has {} coefficients for {joint} joint profiles",
                    c.len()
                )));
            }
            c.clone()
        }
    };
    let mut lp = LinearProgram::new(Sense::Maximize, joint).with_objective(c);
    for i in 0..game.players() {
        for alt in 0..game.actions(i) {
            let row: Vec<f64> =
                (0..joint).map(|j| game.payoff(i, game.deviate(j, i, alt)) - game.payoff(i, j)).collect();
            if row.iter().any(|&v| v != 0.0) {
                lp.push(row, Relation::Le, 0.0);
            }
        }
    }
    lp.push(vec![1.0; joint], Relation::Eq, 1.0);
    let sol = solve_lp(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(Error::Infeasible("coarse correlated equilibrium polytope is empty".into()))
        }
        LpStatus::Unbounded => return Err(Error::Numerical("bounded CCE program reported unbounded".into())),
    }
    let mass = sol.x.iter().map(|&m| if m < LP_TOL { m.max(0.0) } else { m }).collect();
    let dist = JointDistribution::from_dense(game, mass)?;
    let violation = cce_max_violation(game, &dist);
    if violation > LP_TOL {
        return Err(Error::Numerical(format!("CCE solution violates constraints by {violation:.3e}")));
    }
    Ok(dist)
}
