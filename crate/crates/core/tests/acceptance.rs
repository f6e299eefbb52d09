//! End-to-end acceptance checks, one `PASS`/`FAIL` line per criterion.
//! The simulation criteria run full-length experiments and take several
//! minutes in total. Positional arguments filter criteria by name.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use bertrand_lab::agents::{mean_based_schedule, AgentConfig};
use bertrand_lab::experiments::{
    compute_references, player_sweep, run_manifest, Composition, ConvergenceRow, ConvergenceStudy, ExperimentResult, Manifest, PresetId,
    StaggeredStudy,
};
use bertrand_lab::game::{build_game, NormalFormGame, RewardNormalizer};
use bertrand_lab::metrics::mean_based_violation_rate;
use bertrand_lab::output::write_aggregate;
use bertrand_lab::solvers::{
    cce_max_violation, cce_solve, check_increasing_differences, check_potential_identity, cr_set, enumerate_pure_nash, isd,
    joint_profit_max, CceObjective, JointDistribution,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: std::ops::Range<u64> = 0..10;
const HORIZON: u64 = 250_000;

type Verdict = (bool, String);

fn round2(x: f64) -> f64 {
    (x * 100.0).round() / 100.0
}

fn pair(values: &[f64]) -> (f64, f64) {
    (round2(values[0]), round2(values[1]))
}

fn name(s: &str) -> AgentConfig {
    AgentConfig::from_name(s).unwrap()
}

fn c01_table_of_equilibria_and_joint_optima() -> Verdict {
    // (preset, pure Nash, joint-profit optimum), rounded to cents.
    let expected = [
        (PresetId::O1, (0.05, 0.05), (0.48, 1.00)),
        (PresetId::O2, (0.40, 0.40), (0.80, 0.80)),
        (PresetId::O3, (1.50, 1.50), (1.90, 1.90)),
        (PresetId::O2Asym, (0.45, 0.50), (0.80, 0.90)),
        // Grid result; the continuous game gives (0.97, 1.47) and (1.43, 1.93).
        (PresetId::O3Asym, (1.00, 1.50), (1.40, 1.90)),
    ];
    let mut ok = true;
    let mut notes = Vec::new();
    for (preset, nash, mono) in expected {
        let start = Instant::now();
        let spec = preset.spec();
        let game = build_game(&spec).unwrap();
        let eq = enumerate_pure_nash(&game);
        let jm = joint_profit_max(&game);
        let elapsed = start.elapsed();
        let values = |p: &[usize]| -> Vec<f64> { p.iter().enumerate().map(|(i, &a)| game.action_values(i)[a]).collect() };
        let nash_max: Vec<f64> = (0..2)
            .map(|i| eq.iter().map(|p| values(p)[i]).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let got = (pair(&nash_max), pair(&values(&jm)));
        let refs = compute_references(&spec).unwrap();
        let agree = pair(&refs.prices.nash) == got.0 && pair(&refs.prices.monopoly) == got.1;
        let pass = got == (nash, mono) && agree && elapsed < Duration::from_secs(1);
        ok &= pass;
        notes.push(format!("{} nash {:?} mono {:?} {:.0?}", preset.as_str(), got.0, got.1, elapsed));
    }
    (ok, notes.join("; "))
}

fn random_game(rng: &mut ChaCha8Rng, k: usize) -> NormalFormGame {
    let lists: Vec<Vec<f64>> = (0..2)
        .map(|_| (0..k * k).map(|_| rng.random_range(0..8) as f64).collect())
        .collect();
    NormalFormGame::from_payoff_lists(&[k, k], &lists).unwrap()
}

fn c02_dominance_and_rationalizability() -> Verdict {
    let start = Instant::now();
    let o1 = build_game(&PresetId::O1.spec()).unwrap();
    let lowest = vec![vec![0usize], vec![0usize]];
    let o1_isd = isd(&o1).unwrap();
    let o1_cr = cr_set(&o1).unwrap();
    let o1_ok = o1_isd.0 == lowest && o1_cr.0 == lowest && o1.action_values(0)[0] == 0.05;

    let o2 = build_game(&PresetId::O2.spec()).unwrap();
    let o2_cr = cr_set(&o2).unwrap();
    let o2_vals = o2_cr.values(&o2);
    let o2_ok = o2_vals
        .iter()
        .all(|s| !s.is_empty() && s.iter().all(|&p| [0.40, 0.45].iter().any(|q| (p - q).abs() < 1e-9)));

    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut agree, mut reduced, mut total) = (0, 0, 0);
    for k in [3, 4] {
        for _ in 0..200 {
            let g = random_game(&mut rng, k);
            let a = isd(&g).unwrap();
            let b = cr_set(&g).unwrap();
            total += 1;
            agree += usize::from(a == b);
            reduced += usize::from(!a.is_full(&g));
        }
    }
    let elapsed = start.elapsed();
    let pass = o1_ok && o2_ok && agree == total && elapsed < Duration::from_secs(30);
    (
        pass,
        format!(
            "O1 isd {:?} cr {:?}; O2 cr {o2_vals:?}; random {agree}/{total} equal ({reduced} reduced); {elapsed:.1?}",
            o1_isd.0, o1_cr.0
        ),
    )
}

fn c03_coarse_correlated_equilibria() -> Verdict {
    let g = NormalFormGame::bimatrix(&[vec![0.0, 2.0], vec![2.0, 1.0]], &[vec![2.0, 0.0], vec![0.0, 0.0]]).unwrap();
    let first_row: Vec<f64> = (0..g.joint_size())
        .map(|j| if g.action_in(j, 0) == 0 { 1.0 } else { 0.0 })
        .collect();
    let d = cce_solve(&g, &CceObjective::Custom(first_row.clone())).unwrap();
    let value: f64 = first_row.iter().zip(d.dense()).map(|(c, m)| c * m).sum();
    let mut worst: f64 = 0.0;
    for preset in PresetId::ALL {
        let game = build_game(&preset.spec()).unwrap();
        for ne in enumerate_pure_nash(&game) {
            worst = worst.max(cce_max_violation(&game, &JointDistribution::point_mass(&game, &ne)));
        }
    }
    let pass = value.abs() <= 1e-9 && cce_max_violation(&g, &d) <= 1e-9 && worst <= 1e-9;
    (
        pass,
        format!("max first-row mass {value:.3e}; worst point-mass violation {worst:.3e}"),
    )
}

fn c04_structural_certificates() -> Verdict {
    let dev = check_potential_identity(&PresetId::O2.spec()).unwrap();
    let o2 = check_increasing_differences(&build_game(&PresetId::O2.spec()).unwrap());
    let o1 = check_increasing_differences(&build_game(&PresetId::O1.spec()).unwrap());
    let pass = dev <= 1e-12 && o2.holds && !o1.holds && o1.witness.is_some();
    (
        pass,
        format!("potential deviation {dev:.2e}; O2 holds {}; O1 witness {:?}", o2.holds, o1.witness),
    )
}

fn convergence(agent: AgentConfig, horizon: u64) -> Vec<ConvergenceRow> {
    let study = ConvergenceStudy {
        preset: PresetId::O2,
        agent,
        horizon,
        seeds: SEEDS.collect(),
        tail_fraction: 0.1,
    };
    let target = study.cr_target().unwrap();
    study.seeds.iter().map(|&s| study.run_seed(s, &target).unwrap()).collect()
}

fn mwu_rows() -> &'static [ConvergenceRow] {
    static ROWS: OnceLock<Vec<ConvergenceRow>> = OnceLock::new();
    ROWS.get_or_init(|| convergence(AgentConfig::mwu(), 50_000))
}

fn c05_mean_based_convergence() -> Verdict {
    let mwu = mwu_rows();
    let exp3 = convergence(AgentConfig::mean_based_exp3(), HORIZON);
    let freqs = |rows: &[ConvergenceRow]| {
        rows.iter()
            .map(|r| format!("{:.3}", r.tail_frequency))
            .collect::<Vec<_>>()
            .join(",")
    };
    let low_index = |rows: &[ConvergenceRow]| rows.iter().all(|r| r.ci_prices.iter().all(|&c| c <= 0.1));
    let mwu_ok = mwu.iter().all(|r| r.tail_frequency >= 0.9);
    let exp3_hits = exp3.iter().filter(|r| r.tail_frequency >= 0.8).count();
    let pass = mwu_ok && exp3_hits >= 8 && low_index(mwu) && low_index(&exp3);
    (
        pass,
        format!(
            "MWU tail freq [{}] index<=0.1 {}; mean-based Exp3 tail freq [{}] ({exp3_hits}/10 >= 0.8) index<=0.1 {}",
            freqs(mwu),
            low_index(mwu),
            freqs(&exp3),
            low_index(&exp3)
        ),
    )
}

fn matrix_manifest() -> Manifest {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/manifests/duopoly-matrix.toml");
    let m = Manifest::load(std::path::Path::new(path)).unwrap();
    assert_eq!((m.horizon, m.seeds.clone()), (HORIZON, SEEDS.collect::<Vec<_>>()));
    m
}

fn aggregate_bytes(result: &ExperimentResult) -> Vec<u8> {
    let mut buf = Vec::new();
    write_aggregate(&mut buf, &result.aggregate).unwrap();
    buf
}

fn matrix_run() -> &'static ExperimentResult {
    static RUN: OnceLock<ExperimentResult> = OnceLock::new();
    RUN.get_or_init(|| run_manifest(&matrix_manifest(), None).unwrap())
}

/// Unordered agent pair of a label such as `UCB-T+Exp3`.
fn pair_key(agents: &str) -> String {
    let mut parts: Vec<&str> = agents.split('+').collect();
    parts.sort();
    parts.join("+")
}

fn c06_duopoly_matrix() -> Verdict {
    let result = matrix_run();
    assert_eq!(result.failed(), 0);
    let mut by_pair: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for row in &result.aggregate {
        by_pair.entry(pair_key(&row.agents)).or_default().push(row.ci_price_mean);
    }
    let mut ok = by_pair.len() == 10;
    let mut notes = Vec::new();
    for (key, v) in &by_pair {
        ok &= v.len() == PresetId::ALL.len();
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        let pass = match key.as_str() {
            "UCB-T+UCB-T" => mean >= 0.25,
            "UCB-T+eGreedy" => mean <= 0.2,
            _ => mean <= 0.15,
        };
        ok &= pass;
        notes.push(format!("{key} {mean:.3}"));
    }
    (ok, notes.join("; "))
}

fn c07_oligopoly_size() -> Verdict {
    let roster: Vec<AgentConfig> = ["UCB-T", "Exp3", "eGreedy", "TS"].into_iter().map(name).collect();
    let players: Vec<usize> = (2..=10).collect();
    let seeds: Vec<u64> = SEEDS.collect();
    let result = player_sweep(PresetId::O2, &players, Composition::Identical, &roster, &seeds, HORIZON, None).unwrap();
    assert_eq!(result.failed(), 0);
    let mut ucb = BTreeMap::new();
    let mut worst_other = f64::NEG_INFINITY;
    for row in &result.aggregate {
        if row.agents.split('+').all(|a| a == "UCB-T") {
            ucb.insert(row.players, row.ci_price_mean);
        } else {
            worst_other = worst_other.max(row.ci_price_mean);
        }
    }
    let (n2, n10) = (ucb[&2], ucb[&10]);
    let pass = n10 < n2 && worst_other <= 0.15 && result.aggregate.len() == 36;
    (pass, format!("UCB-T n=2 {n2:.3} n=10 {n10:.3}; max non-UCB {worst_other:.3}"))
}

fn c08_staggered_entry() -> Verdict {
    let study = StaggeredStudy {
        preset: PresetId::O3,
        agent: name("Exp3"),
        horizon: HORIZON,
        seeds: SEEDS.collect(),
        entry_fraction: 0.2,
        block: 10_000,
    };
    assert_eq!(study.entry_step(), 50_001);
    let rows: Vec<_> = study.seeds.iter().map(|&s| study.run_seed(s, false).unwrap()).collect();
    let nash = rows[0].nash_price;
    let mean = |f: fn(&bertrand_lab::experiments::StaggeredRow) -> f64| rows.iter().map(f).sum::<f64>() / rows.len() as f64;
    let (pre, post) = (mean(|r| r.pre_entry_mean), mean(|r| r.post_entry_mean));
    let pass = pre - nash >= 0.1 && post < pre;
    (
        pass,
        format!("grid Nash {nash:.2}; incumbent mean last 10k before entry {pre:.3}, first 10k after {post:.3}"),
    )
}

fn c09_determinism() -> Verdict {
    let first = aggregate_bytes(matrix_run());
    let second = aggregate_bytes(&run_manifest(&matrix_manifest(), Some(1)).unwrap());
    (
        first == second && !first.is_empty(),
        format!("aggregate CSV {} bytes, identical {}", first.len(), first == second),
    )
}

fn c10_mean_based_violation_rate() -> Verdict {
    let mwu = mwu_rows();
    let worst = mwu.iter().map(|r| r.violation_rate).fold(f64::NEG_INFINITY, f64::max);

    // Three actions; the first pays 1 and the others 0 whatever the opponent does.
    let g = NormalFormGame::bimatrix(&[vec![1.0], vec![0.0], vec![0.0]], &[vec![0.0], vec![0.0], vec![0.0]]).unwrap();
    let norm = RewardNormalizer::from_game(&g);
    let steps = 10_000;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let profiles: Vec<Vec<usize>> = (0..steps).map(|_| vec![rng.random_range(0..3), 0]).collect();
    let uniform = vec![vec![1.0 / 3.0; 3]; steps];
    let control = mean_based_violation_rate(&profiles, &uniform, &g, &norm, 0, steps / 2, mean_based_schedule).unwrap();

    let pass = worst < 0.05 && control > 0.5;
    (pass, format!("MWU worst tail-half rate {worst:.4}; uniform control {control:.3}"))
}

const CRITERIA: [(&str, fn() -> Verdict); 10] = [
    ("c01_table_of_equilibria_and_joint_optima", c01_table_of_equilibria_and_joint_optima),
    ("c02_dominance_and_rationalizability", c02_dominance_and_rationalizability),
    ("c03_coarse_correlated_equilibria", c03_coarse_correlated_equilibria),
    ("c04_structural_certificates", c04_structural_certificates),
    ("c05_mean_based_convergence", c05_mean_based_convergence),
    ("c06_duopoly_matrix", c06_duopoly_matrix),
    ("c07_oligopoly_size", c07_oligopoly_size),
    ("c08_staggered_entry", c08_staggered_entry),
    ("c09_determinism", c09_determinism),
    ("c10_mean_based_violation_rate", c10_mean_based_violation_rate),
];

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let filters: Vec<&String> = args.iter().filter(|a| !a.starts_with('-')).collect();
    let selected: Vec<_> = CRITERIA
        .iter()
        .filter(|(n, _)| filters.is_empty() || filters.iter().any(|f| n.contains(f.as_str())))
        .collect();
    if args.iter().any(|a| a == "--list") {
        for (n, _) in &selected {
            println!("{n}: test");
        }
        return ExitCode::SUCCESS;
    }
    let mut failed = Vec::new();
    for (i, (n, run)) in CRITERIA.iter().enumerate() {
        if !selected.iter().any(|(m, _)| m == n) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = match std::panic::catch_unwind(run) {
            Ok(v) => v,
            Err(e) => (
                false,
                format!("panicked: {}", e.downcast_ref::<String>().map_or("", String::as_str)),
            ),
        };
        println!(
            "criterion {:>2}: {} {detail} ({:.1?})",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            start.elapsed()
        );
        if !pass {
            failed.push(i + 1);
        }
    }
    println!(
        "\nacceptance: {} of {} criteria passed",
        selected.len() - failed.len(),
        selected.len()
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        println!("failed criteria: {failed:?}");
        ExitCode::FAILURE
    }
}
