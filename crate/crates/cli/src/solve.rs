use std::fmt::Write as _;
use std::path::PathBuf;

use bertrand_lab::config::{read_document, Instance, SolveConfig};
use bertrand_lab::experiments::compute_references;
use bertrand_lab::game::NormalFormGame;
use bertrand_lab::solvers::{
    cce_max_violation, cce_solve, check_increasing_differences, check_potential_identity, competition_constant, cr_set, enumerate_pure_nash, isd,
    joint_profit_max, ActionSubsets, CceObjective,
};
use bertrand_lab::{Error, Result};
use clap::Args;
use serde_json::{json, Map, Value};

#[derive(Args)]
pub struct SolveArgs {
    /// Market or game description (TOML).
    pub config: PathBuf,
    #[arg(long)]
    pub nash: bool,
    #[arg(long)]
    pub monopoly: bool,
    #[arg(long)]
    pub isd: bool,
    #[arg(long)]
    pub cr: bool,
    #[arg(long)]
    pub cce: bool,
    /// CCE objective: `feasible`, `max-wasserstein`, `support(aK)` or `support(pI,aK)`
    /// (1-based player and action; the player defaults to 1).
    #[arg(long, default_value = "feasible")]
    pub objective: String,
    /// Competition constant of the rationalizability iteration.
    #[arg(long)]
    pub delta: bool,
    /// Increasing-differences and potential checks.
    #[arg(long)]
    pub certify: bool,
    #[arg(long, env = "BERTRAND_LAB_OUT", default_value = "results")]
    pub out: PathBuf,
}

/// Parsed `--objective`.
#[derive(Debug, Clone, PartialEq)]
pub enum ObjectiveArg {
    Feasible,
    MaxWasserstein,
    Support { player: usize, action: usize },
}

pub fn parse_objective(s: &str) -> Result<ObjectiveArg> {
    let s = s.trim();
    match s {
        "feasible" => return Ok(ObjectiveArg::Feasible),
        "max-wasserstein" | "wasserstein" => return Ok(ObjectiveArg::MaxWasserstein),
        _ => {}
    }
    let bad = || Error::Config(format!("unknown CCE objective {s:?}"));
    let inner = s.strip_prefix("support(").and_then(|r| r.strip_suffix(')')).ok_or_else(bad)?;
    let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
    let index = |p: &str, prefix: char| -> Result<usize> {
        let k: usize = p.strip_prefix(prefix).and_then(|d| d.parse().ok()).ok_or_else(bad)?;
        k.checked_sub(1).ok_or_else(bad)
    };
    match parts.as_slice() {
        [a] => Ok(ObjectiveArg::Support { player: 0, action: index(a, 'a')? }),
        [p, a] => Ok(ObjectiveArg::Support { player: index(p, 'p')?, action: index(a, 'a')? }),
        _ => Err(bad()),
    }
}

fn labels(game: &NormalFormGame, market: bool, profile: &[usize]) -> Value {
    if market {
        json!(profile.iter().enumerate().map(|(i, &a)| game.action_values(i)[a]).collect::<Vec<_>>())
    } else {
        json!(profile.iter().map(|&a| format!("a{}", a + 1)).collect::<Vec<_>>())
    }
}

fn subsets_json(game: &NormalFormGame, market: bool, s: &ActionSubsets) -> Value {
    if market {
        json!(s.values(game))
    } else {
        json!(s.0.iter().map(|l| l.iter().map(|&a| format!("a{}", a + 1)).collect::<Vec<_>>()).collect::<Vec<_>>())
    }
}

pub fn run(args: &SolveArgs) -> Result<()> {
    let instance = read_document(&args.config, SolveConfig::from_toml)?.instance()?;
    let objective = parse_objective(&args.objective)?;
    let none = !(args.nash || args.monopoly || args.isd || args.cr || args.cce || args.delta || args.certify);
    let market = instance.spec().is_some();
    let mut report = Map::new();
    let mut summary = String::new();

    // Large markets have no tensor; only the equilibrium search works there.
    let game = match &instance {
        Instance::Market(_) => match instance.game() {
            Ok(g) => Some(g),
            Err(Error::BudgetExceeded { .. }) if !(args.isd || args.cr || args.cce || args.delta || args.certify) => None,
            Err(e) => return Err(e),
        },
        Instance::Game(g) => Some(g.clone()),
    };
    if let Some(spec) = instance.spec() {
        report.insert("market".into(), serde_json::to_value(spec)?);
    }

    let mut equilibria: Option<Vec<Vec<usize>>> = None;
    if args.nash || args.monopoly || none || matches!(objective, ObjectiveArg::MaxWasserstein) && args.cce {
        let (eq, mono) = match (&instance, &game) {
            (Instance::Market(spec), _) => {
                let r = compute_references(spec)?;
                (r.equilibria, r.monopoly)
            }
            (Instance::Game(_), Some(g)) => (enumerate_pure_nash(g), joint_profit_max(g)),
            _ => unreachable!(),
        };
        let g = game.as_ref();
        let show = |p: &[usize]| match g {
            Some(g) => labels(g, market, p),
            None => json!(instance.spec().map(|s| p.iter().enumerate().map(|(i, &a)| s.grid.price(i, a)).collect::<Vec<_>>())),
        };
        if args.nash || none {
            let list: Vec<Value> = eq.iter().map(|p| show(p)).collect();
            writeln!(summary, "pure Nash equilibria: {}", list.iter().map(Value::to_string).collect::<Vec<_>>().join(" ")).ok();
            report.insert("nash".into(), json!({ "indices": eq, "profiles": list }));
        }
        if args.monopoly || none {
            let shown = show(&mono);
            writeln!(summary, "joint-profit maximum: {shown}").ok();
            report.insert("monopoly".into(), json!({ "indices": mono, "profile": shown }));
        }
        equilibria = Some(eq);
    }

    if let Some(g) = &game {
        if args.isd {
            let s = isd(g)?;
            writeln!(summary, "iterated strict dominance: {}", subsets_json(g, market, &s)).ok();
            report.insert("isd".into(), json!({ "indices": s.0, "actions": subsets_json(g, market, &s) }));
        }
        if args.cr {
            let s = cr_set(g)?;
            writeln!(summary, "correlated rationalizable set: {}", subsets_json(g, market, &s)).ok();
            report.insert("cr".into(), json!({ "indices": s.0, "actions": subsets_json(g, market, &s) }));
        }
        if args.delta {
            let d = competition_constant(g)?;
            writeln!(summary, "competition constant: {d}").ok();
            report.insert("delta".into(), json!(d));
        }
        if args.cce {
            let (obj, coeffs) = match &objective {
                ObjectiveArg::Feasible => (CceObjective::Feasible, None),
                ObjectiveArg::MaxWasserstein => {
                    let eq = equilibria.clone().unwrap_or_default();
                    (CceObjective::MaxWasserstein(eq), None)
                }
                ObjectiveArg::Support { player, action } => {
                    if *player >= g.players() || *action >= g.actions(*player) {
                        return Err(Error::Config(format!("objective refers to a missing action: {}", args.objective)));
                    }
                    let c: Vec<f64> = (0..g.joint_size()).map(|j| if g.action_in(j, *player) == *action { 1.0 } else { 0.0 }).collect();
                    (CceObjective::Custom(c.clone()), Some(c))
                }
            };
            let dist = cce_solve(g, &obj)?;
            let value = coeffs.map(|c| c.iter().zip(dist.dense()).map(|(a, b)| a * b).sum::<f64>());
            let support: Vec<Value> = dist.support().iter().map(|(p, m)| json!({ "profile": labels(g, market, p), "mass": m })).collect();
            writeln!(summary, "CCE ({}): support {}", args.objective, Value::Array(support.clone())).ok();
            if let Some(v) = value {
                writeln!(summary, "CCE objective value: {v}").ok();
            }
            report.insert(
                "cce".into(),
                json!({ "objective": args.objective, "value": value, "support": support, "max_violation": cce_max_violation(g, &dist) }),
            );
        }
        if args.certify {
            let id = check_increasing_differences(g);
            writeln!(summary, "increasing differences: {}", if id.holds { "hold" } else { "violated" }).ok();
            let mut cert = json!({ "increasing_differences": id });
            if let Some(spec) = instance.spec() {
                match check_potential_identity(spec) {
                    Ok(dev) => {
                        writeln!(summary, "potential identity deviation: {dev:e}").ok();
                        cert["potential_deviation"] = json!(dev);
                    }
                    Err(Error::InvalidArgument(_)) => {}
                    Err(e) => return Err(e),
                }
            }
            report.insert("certificates".into(), cert);
        }
    }

    std::fs::create_dir_all(&args.out)?;
    let text = serde_json::to_string_pretty(&Value::Object(report))?;
    std::fs::write(args.out.join("report.json"), text + "\n")?;
    std::fs::write(args.out.join("summary.txt"), &summary)?;
    print!("{summary}");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn objectives() {
        assert_eq!(parse_objective("feasible").unwrap(), ObjectiveArg::Feasible);
        assert_eq!(parse_objective("max-wasserstein").unwrap(), ObjectiveArg::MaxWasserstein);
        assert_eq!(parse_objective("support(a1)").unwrap(), ObjectiveArg::Support { player: 0, action: 0 });
        assert_eq!(parse_objective("support(p2, a3)").unwrap(), ObjectiveArg::Support { player: 1, action: 2 });
        for bad in ["support(a0)", "support(b1)", "support()", "max", "support(p1,a1,a2)"] {
            assert!(parse_objective(bad).unwrap_err().is_config(), "{bad}");
        }
    }
}
