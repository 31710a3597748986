#![allow(dead_code)]

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use d2d_sim::model::UserState;
use d2d_sim::selector::random::random_problem;
use d2d_sim::selector::SelectionProblem;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn problem(seed: u64, max_users: usize) -> SelectionProblem {
    random_problem(&mut rng(seed), max_users)
}

/// Valid state vectors: a random partial matching plus cellular/dormant labels.
pub fn state_vector(max_users: usize) -> impl Strategy<Value = Vec<UserState>> {
    (0..=max_users)
        .prop_flat_map(|n| {
            (
                Just(n),
                Just((1..=n as u32).collect::<Vec<_>>()).prop_shuffle(),
                proptest::collection::vec(0u8..4, n),
            )
        })
        .prop_map(|(n, order, kinds)| {
            let mut states = vec![UserState::Dormant; n];
            let mut i = 0;
            while i < n {
                let u = order[i] as usize;
                match kinds[i] {
                    0 if i + 1 < n => {
                        let m = order[i + 1] as usize;
                        states[u - 1] = UserState::D2dPaired(m as u32);
                        states[m - 1] = UserState::D2dPaired(u as u32);
                        i += 2;
                        continue;
                    }
                    1 => states[u - 1] = UserState::Cellular,
                    2 => states[u - 1] = UserState::Dormant,
                    _ => states[u - 1] = UserState::Cellular,
                }
                i += 1;
            }
            states
        })
}
