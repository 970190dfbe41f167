//! Seeded random term generation over the weakly orthogonal fixture
//! systems, for the orthogonalization invariant suite. Deterministic per
//! seed so CLI runs and test runs are reproducible.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::term::Term;
use crate::trs::{find_redexes, Redex, Trs};

/// The two-rule chain system {B(B(x)) -> B(x), B^5(x) -> B^4(x)} over the
/// signature extended with a free binary symbol and a constant. Weakly
/// orthogonal, non-collapsing, rich in nested I-cluster overlaps.
pub fn chain_fixture() -> Trs {
    Trs::parse(
        "b2: B(B(x)) -> B(x)\n\
         b5: B(B(B(B(B(x))))) -> B(B(B(B(x))))",
    )
    .expect("valid system")
}

/// The two-rule identity system {f(B(x), B(y)) -> itself, B(x) -> itself}:
/// weakly orthogonal, non-collapsing, and every branching term produces
/// Y-clusters.
pub fn branching_fixture() -> Trs {
    Trs::parse(
        "idf: f(B(x), B(y)) -> f(B(x), B(y))\n\
         idb: B(x) -> B(x)",
    )
    .expect("valid system")
}

/// A random finite term over {f/2, B/1, c/0}.
pub fn random_term(rng: &mut ChaCha8Rng, budget: usize) -> Term {
    if budget == 0 {
        return Term::constant("c");
    }
    match rng.gen_range(0..10) {
        0..=2 => Term::constant("c"),
        3..=7 => Term::fun("B", vec![random_term(rng, budget - 1)]),
        _ => {
            let left = budget / 2;
            Term::fun(
                "f",
                vec![random_term(rng, left), random_term(rng, budget - 1 - left)],
            )
        }
    }
}

/// A random subject with at most `max_redexes` redexes under `trs`,
/// resampling until the bound holds.
pub fn random_subject(trs: &Trs, rng: &mut ChaCha8Rng, max_redexes: usize) -> (Term, Vec<Redex>) {
    loop {
        let t = random_term(rng, 14);
        let redexes = find_redexes(&t, trs, 16);
        if !redexes.is_empty() && redexes.len() <= max_redexes {
            return (t, redexes);
        }
    }
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
