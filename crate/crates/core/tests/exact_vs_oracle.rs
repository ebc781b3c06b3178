use gridtree_core::exact::{iteration_bound, solve_min_max_load, valid};
use gridtree_core::flow::{check_feasible, Objective};
use gridtree_core::hardgen::{gen_random_tree, Profile};
use gridtree_core::oracle::brute_force_optimum;

fn suite() -> impl Iterator<Item = (u64, gridtree_core::Network)> {
    (0..300u64).map(|seed| {
        let profile = if seed % 2 == 0 { Profile::balanced() } else { Profile::generous() };
        let n = 5 + (seed % 9) as usize;
        (seed, gen_random_tree(n, seed, &profile).unwrap())
    })
}

#[test]
fn valid_agrees_with_enumeration() {
    let mut feasible = 0;
    for (seed, net) in suite() {
        let oracle = brute_force_optimum(&net, Objective::MinMaxLoad).unwrap();
        let found = valid(&net);
        assert_eq!(found.is_some(), oracle.is_some(), "seed {seed}");
        if let Some(o) = found {
            assert!(check_feasible(&net, &o).feasible, "seed {seed}");
            feasible += 1;
        }
    }
    assert!(feasible > 50, "only {feasible} feasible instances");
}

#[test]
fn min_max_load_matches_enumeration() {
    for (seed, net) in suite() {
        let oracle = brute_force_optimum(&net, Objective::MinMaxLoad).unwrap();
        let solved = solve_min_max_load(&net);
        assert_eq!(solved.as_ref().map(|s| &s.value), oracle.as_ref().map(|o| &o.value), "seed {seed}");
        if let Some(s) = solved {
            assert!(s.iterations as f64 <= iteration_bound(&net), "seed {seed}");
        }
    }
}
