//! Random selection problems for solver cross-checks and benchmarks.

use rand::seq::SliceRandom;
use rand::Rng;

use super::{Candidate, SelectionProblem};
use crate::model::{build_graph, Mode, UserState};
use crate::radio::{build_interference_table, Position};

/// Draws a problem with up to `max_users` users placed in a 150 m square.
///
/// Users are paired, cellular or dormant at random. Utilities mix integers
/// (to exercise tie-breaking) with reals, some negative, and `gamma` is set
/// near a random interference entry so the interference constraints bind.
pub fn random_problem<R: Rng + ?Sized>(rng: &mut R, max_users: usize) -> SelectionProblem {
    let n = rng.gen_range(0..=max_users);
    let mut order: Vec<u32> = (1..=n as u32).collect();
    order.shuffle(rng);
    let mut states = vec![UserState::Dormant; n];
    let mut i = 0;
    while i < order.len() {
        let u = order[i];
        let roll: f64 = rng.gen();
        if roll < 0.45 && i + 1 < order.len() {
            let m = order[i + 1];
            states[u as usize - 1] = UserState::D2dPaired(m);
            states[m as usize - 1] = UserState::D2dPaired(u);
            i += 2;
            continue;
        }
        if roll < 0.85 {
            states[u as usize - 1] = UserState::Cellular;
        }
        i += 1;
    }
    let graph = build_graph(&states, 0).expect("constructed states are symmetric");

    let positions: Vec<Position> = (0..n)
        .map(|_| Position::new(rng.gen_range(-150.0..150.0), rng.gen_range(-150.0..150.0)))
        .collect();
    let powers: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..0.3)).collect();
    let table = build_interference_table(&positions, &powers, 3.5);

    let mut candidates = Vec::new();
    for arc in &graph.arcs {
        for mode in Mode::ALL.into_iter().filter(|m| m.is_legal_on(arc)) {
            if rng.gen_bool(0.85) {
                let utility = if rng.gen_bool(0.3) {
                    rng.gen_range(0..20) as f64
                } else {
                    rng.gen_range(-20.0..100.0)
                };
                candidates.push(Candidate {
                    arc: *arc,
                    mode,
                    utility,
                });
            }
        }
    }

    let entries: Vec<f64> = table
        .rows()
        .flatten()
        .copied()
        .filter(|&v| v > 0.0)
        .collect();
    let gamma = if entries.is_empty() || rng.gen_bool(0.1) {
        1e3
    } else {
        entries[rng.gen_range(0..entries.len())] * rng.gen_range(0.5..3.0)
    };
    let protected = states
        .iter()
        .enumerate()
        .filter(|(_, s)| s.is_active())
        .map(|(i, _)| i as u32 + 1);
    SelectionProblem::new(n, graph.arcs, candidates, table, gamma, protected)
        .expect("generated problems are well formed")
}
