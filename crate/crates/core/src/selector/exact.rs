//! Depth-first branch and bound over include/exclude decisions.
//!
//! Pairs are decided in `(tx, rx, mode)` order. Feasibility is tracked
//! incrementally: degrees and interference sums only grow as pairs are
//! added, so a pair whose inclusion breaks any constraint closes that whole
//! subtree. Interference sums are accumulated in ascending pair order, the
//! same order the feasibility checker uses, so both agree bit for bit at the
//! threshold.

use super::{Incumbent, ModeAssignment, SelectionProblem};
use crate::model::{Mode, Node};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SearchStats {
    pub nodes: u64,
    /// False when the node budget ran out before the search finished.
    pub completed: bool,
}

/// Optimal assignment by exhaustive branch and bound.
pub fn exact_solve(problem: &SelectionProblem) -> ModeAssignment {
    exact_solve_budgeted(problem, u64::MAX)
        .0
        .expect("unbounded search always completes")
}

/// Like [`exact_solve`] but gives up after `node_budget` search nodes.
pub fn exact_solve_budgeted(
    problem: &SelectionProblem,
    node_budget: u64,
) -> (Option<ModeAssignment>, SearchStats) {
    let mut search = Search::new(problem, node_budget);
    search.dfs(0);
    let stats = SearchStats {
        nodes: search.nodes,
        completed: !search.aborted,
    };
    if search.aborted {
        (None, stats)
    } else {
        (Some(problem.assignment_from(&search.best.selected)), stats)
    }
}

#[derive(Clone, Copy)]
enum Slot {
    Protected(usize),
    Victim(usize),
}

struct Search<'p> {
    p: &'p SelectionProblem,
    budget: u64,
    nodes: u64,
    aborted: bool,
    best: Incumbent,
    /// Upper bound on the utility still obtainable from pairs `k..`.
    suffix_bound: Vec<f64>,
    incident: Vec<u32>,
    is_protected: Vec<bool>,
    protected_load: Vec<f64>,
    victim_load: Vec<f64>,
    active: Vec<usize>,
    objective: f64,
    undo: Vec<(Slot, f64)>,
}

impl<'p> Search<'p> {
    fn new(p: &'p SelectionProblem, budget: u64) -> Search<'p> {
        let n = p.n_users();
        let mut is_protected = vec![false; n + 1];
        for x in p.protected() {
            is_protected[x.index(n)] = true;
        }
        Search {
            p,
            budget,
            nodes: 0,
            aborted: false,
            best: Incumbent::empty(),
            suffix_bound: suffix_bounds(p),
            incident: vec![0; n + 1],
            is_protected,
            protected_load: vec![0.0; n + 1],
            victim_load: vec![0.0; p.candidates().len()],
            active: Vec::new(),
            objective: 0.0,
            undo: Vec::new(),
        }
    }

    fn dfs(&mut self, k: usize) {
        self.nodes += 1;
        if self.nodes > self.budget {
            self.aborted = true;
            return;
        }
        if k == self.p.candidates().len() {
            self.best.offer(self.objective, &self.active);
            return;
        }
        let bound = self.objective + self.suffix_bound[k];
        let slack = 1e-9 * (self.best.objective.abs() + bound.abs()) + f64::MIN_POSITIVE;
        if bound < self.best.objective - slack {
            return;
        }
        // A negative pair only lowers the sum of any set containing it.
        if self.p.candidates()[k].utility >= 0.0 {
            let mark = self.undo.len();
            let saved_objective = self.objective;
            if self.try_add(k) {
                self.dfs(k + 1);
                self.remove_last(mark, saved_objective);
            } else {
                self.rollback(mark);
            }
            if self.aborted {
                return;
            }
        }
        self.dfs(k + 1);
    }

    fn set(&mut self, slot: Slot, value: f64) {
        let cell = match slot {
            Slot::Protected(i) => &mut self.protected_load[i],
            Slot::Victim(i) => &mut self.victim_load[i],
        };
        self.undo.push((slot, *cell));
        *cell = value;
    }

    fn rollback(&mut self, mark: usize) {
        while self.undo.len() > mark {
            let (slot, old) = self.undo.pop().unwrap();
            match slot {
                Slot::Protected(i) => self.protected_load[i] = old,
                Slot::Victim(i) => self.victim_load[i] = old,
            }
        }
    }

    fn remove_last(&mut self, mark: usize, saved_objective: f64) {
        let k = self.active.pop().expect("an active pair to remove");
        let n = self.p.n_users();
        let arc = self.p.candidates()[k].arc;
        for node in [arc.tx, arc.rx] {
            if !node.is_enb() {
                self.incident[node.index(n)] -= 1;
            }
        }
        self.objective = saved_objective;
        self.rollback(mark);
    }

    /// Adds pair `k` if every constraint still holds; leaves undo entries either way.
    fn try_add(&mut self, k: usize) -> bool {
        let p = self.p;
        let n = p.n_users();
        let gamma = p.gamma();
        let table = p.interference();
        let c = p.candidates()[k];
        let (tx, rx) = (c.arc.tx, c.arc.rx);

        let busy = |node: Node| !node.is_enb() && self.incident[node.index(n)] > 0;
        if busy(tx) || busy(rx) {
            return false;
        }

        if c.mode == Mode::UnderlayInband {
            for &x in p.protected() {
                if c.arc.touches(x) {
                    continue;
                }
                let i = x.index(n);
                debug_assert!(self.is_protected[i]);
                let load = self.protected_load[i] + table.get(tx, x);
                if load > gamma {
                    return false;
                }
                self.set(Slot::Protected(i), load);
            }
        }

        // Interference this pair adds at already active victims.
        let hits = |victim: Mode| match c.mode {
            Mode::Cellular | Mode::UnderlayInband => victim == Mode::UnderlayInband,
            Mode::OverlayInband => victim == Mode::OverlayInband,
            Mode::OutbandWifi => false,
        };
        for idx in 0..self.active.len() {
            let j = self.active[idx];
            let victim = p.candidates()[j];
            if hits(victim.mode) {
                let load = self.victim_load[j] + table.get(tx, victim.arc.rx);
                if load > gamma {
                    return false;
                }
                self.set(Slot::Victim(j), load);
            }
        }

        // Interference already present at this pair's receiver.
        let sources: &[Mode] = match c.mode {
            Mode::UnderlayInband => &[Mode::Cellular, Mode::UnderlayInband],
            Mode::OverlayInband => &[Mode::OverlayInband],
            _ => &[],
        };
        if !sources.is_empty() {
            let load = self
                .active
                .iter()
                .filter(|&&j| sources.contains(&p.candidates()[j].mode))
                .fold(0.0, |acc, &j| acc + table.get(p.candidates()[j].arc.tx, rx));
            if load > gamma {
                return false;
            }
            self.set(Slot::Victim(k), load);
        }

        for node in [tx, rx] {
            if !node.is_enb() {
                self.incident[node.index(n)] += 1;
            }
        }
        self.active.push(k);
        self.objective += c.utility;
        true
    }
}

/// Per-transmitter bound: a user transmits on at most one active pair, so the
/// best positive utility among the remaining pairs of each transmitter caps
/// what that transmitter can still add.
fn suffix_bounds(p: &SelectionProblem) -> Vec<f64> {
    let cands = p.candidates();
    let len = cands.len();
    let mut bound = vec![0.0; len + 1];
    let mut group_end = len;
    let mut group_best = 0.0f64;
    for k in (0..len).rev() {
        let tx = cands[k].arc.tx;
        if k + 1 < len && cands[k + 1].arc.tx != tx {
            group_end = k + 1;
            group_best = 0.0;
        }
        let gain = cands[k].utility.max(0.0);
        group_best = if tx.is_enb() {
            group_best + gain
        } else {
            group_best.max(gain)
        };
        bound[k] = group_best + bound[group_end];
    }
    bound
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Arc;
    use crate::radio::InterferenceTable;
    use crate::selector::{brute_force_solve, Candidate};

    fn d2d(a: u32, b: u32) -> Arc {
        Arc::between(Node::User(a), Node::User(b)).unwrap()
    }

    #[test]
    fn non_positive_utilities_give_empty() {
        let arcs = vec![d2d(1, 2), Arc::cellular(1), Arc::cellular(2)];
        let cands = vec![
            Candidate {
                arc: arcs[0],
                mode: Mode::OutbandWifi,
                utility: -3.0,
            },
            Candidate {
                arc: arcs[1],
                mode: Mode::Cellular,
                utility: -0.5,
            },
            Candidate {
                arc: arcs[2],
                mode: Mode::Cellular,
                utility: -1.0,
            },
        ];
        let p = SelectionProblem::new(2, arcs, cands, InterferenceTable::zeros(2), 1.0, [1, 2])
            .unwrap();
        let a = exact_solve(&p);
        assert!(a.is_empty());
        assert_eq!(a.objective, 0.0);
    }

    #[test]
    fn interfering_underlay_pairs_pick_smaller_arc() {
        // Pairs (1,2) and (3,4), each underlay with U = 10; each transmitter
        // overloads the other pair's receiver.
        let mut t = InterferenceTable::zeros(4);
        t.set(Node::User(1), Node::User(4), 2.0);
        t.set(Node::User(3), Node::User(2), 2.0);
        let arcs = vec![d2d(1, 2), d2d(3, 4)];
        let cands = arcs
            .iter()
            .map(|&arc| Candidate {
                arc,
                mode: Mode::UnderlayInband,
                utility: 10.0,
            })
            .collect();
        let p = SelectionProblem::new(4, arcs.clone(), cands, t, 1.0, []).unwrap();
        let a = exact_solve(&p);
        assert_eq!(a.chosen, vec![(arcs[0], Mode::UnderlayInband)]);
        assert_eq!(a.objective, 10.0);
        assert_eq!(a, brute_force_solve(&p).unwrap());
    }

    #[test]
    fn suffix_bound_is_per_transmitter() {
        let arcs = vec![d2d(1, 2), Arc::cellular(1), Arc::cellular(2)];
        let cands = vec![
            Candidate {
                arc: arcs[0],
                mode: Mode::UnderlayInband,
                utility: 4.0,
            },
            Candidate {
                arc: arcs[0],
                mode: Mode::OutbandWifi,
                utility: 7.0,
            },
            Candidate {
                arc: arcs[1],
                mode: Mode::Cellular,
                utility: 5.0,
            },
            Candidate {
                arc: arcs[2],
                mode: Mode::Cellular,
                utility: 2.0,
            },
        ];
        let p = SelectionProblem::new(2, arcs, cands, InterferenceTable::zeros(2), 1.0, [1, 2])
            .unwrap();
        // Sorted: (1,2,m1) (1,2,m3) (1,eNB,m0) (2,eNB,m0).
        assert_eq!(suffix_bounds(&p), vec![9.0, 9.0, 7.0, 2.0, 0.0]);
        let a = exact_solve(&p);
        assert_eq!(a.objective, 7.0);
    }

    #[test]
    fn budget_abort() {
        let n = 12;
        let arcs: Vec<Arc> = (1..=n as u32).map(Arc::cellular).collect();
        let cands = arcs
            .iter()
            .map(|&arc| Candidate {
                arc,
                mode: Mode::Cellular,
                utility: 1.0,
            })
            .collect();
        let p =
            SelectionProblem::new(n, arcs, cands, InterferenceTable::zeros(n), 1.0, []).unwrap();
        let (a, stats) = exact_solve_budgeted(&p, 5);
        assert!(a.is_none());
        assert!(!stats.completed);
        let (a, stats) = exact_solve_budgeted(&p, u64::MAX);
        assert_eq!(a.unwrap().objective, 12.0);
        assert!(stats.completed);
    }
}
