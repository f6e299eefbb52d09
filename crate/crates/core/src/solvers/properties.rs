use super::{cce_max_violation, cce_solve, cr_set, enumerate_pure_nash, isd, isd_random_order, CceObjective, JointDistribution};
use crate::game::NormalFormGame;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Two-player games with small integer payoffs, so ties and dominance both occur.
fn games() -> impl Strategy<Value = NormalFormGame> {
    (2usize..=4, 2usize..=4).prop_flat_map(|(r, c)| {
        proptest::collection::vec(proptest::collection::vec(0i32..6, r * c), 2).prop_map(move |lists| {
            let lists: Vec<Vec<f64>> = lists.into_iter().map(|l| l.into_iter().map(f64::from).collect()).collect();
            NormalFormGame::from_payoff_lists(&[r, c], &lists).unwrap()
        })
    })
}

fn three_player() -> impl Strategy<Value = NormalFormGame> {
    proptest::collection::vec(proptest::collection::vec(0i32..5, 8), 3).prop_map(|lists| {
        let lists: Vec<Vec<f64>> = lists.into_iter().map(|l| l.into_iter().map(f64::from).collect()).collect();
        NormalFormGame::from_payoff_lists(&[2, 2, 2], &lists).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn elimination_order_does_not_matter(g in games(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        prop_assert_eq!(isd_random_order(&g, &mut rng).unwrap(), isd(&g).unwrap());
    }

    #[test]
    fn dominance_and_belief_routes_agree(g in games()) {
        prop_assert_eq!(cr_set(&g).unwrap(), isd(&g).unwrap());
    }

    #[test]
    fn equilibria_survive_elimination(g in games()) {
        let cr = cr_set(&g).unwrap();
        for ne in enumerate_pure_nash(&g) {
            prop_assert!(cr.contains_profile(&ne), "{:?} outside {:?}", ne, cr);
        }
    }

    #[test]
    fn equilibria_survive_elimination_three_players(g in three_player()) {
        let cr = cr_set(&g).unwrap();
        for ne in enumerate_pure_nash(&g) {
            prop_assert!(cr.contains_profile(&ne));
        }
    }

    #[test]
    fn equilibrium_point_masses_are_cce(g in games()) {
        for ne in enumerate_pure_nash(&g) {
            prop_assert!(cce_max_violation(&g, &JointDistribution::point_mass(&g, &ne)) <= 1e-12);
        }
    }

    #[test]
    fn solved_cce_is_valid(g in games()) {
        let d = cce_solve(&g, &CceObjective::Feasible).unwrap();
        prop_assert!(cce_max_violation(&g, &d) <= 1e-7);
    }
}
