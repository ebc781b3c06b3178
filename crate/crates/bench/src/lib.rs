//! Shared inputs for the criterion benches.

use gridtree_core::exact::valid;
use gridtree_core::hardgen::{gen_random_tree, Profile};
use gridtree_core::{Network, Orientation, Rational};

/// The first seeded balanced tree with `n` nodes that admits a feasible
/// orientation, together with that orientation.
pub fn feasible_tree(n: usize) -> (Network, Orientation) {
    let profile = Profile::by_name("balanced").expect("balanced profile exists");
    (0..10_000u64)
        .find_map(|seed| {
            let net = gen_random_tree(n, seed, &profile).ok()?;
            let o = valid(&net)?;
            Some((net, o))
        })
        .expect("a feasible tree within the first seeds")
}

/// ε′ values from coarse to fine.
pub fn eps_primes() -> Vec<Rational> {
    [4, 10, 40].into_iter().map(|d| Rational::new(1.into(), d.into())).collect()
}
