//! Joint mode selection and connection activation.
//!
//! A [`SelectionProblem`] lists every legal `(arc, mode)` pair of one mode
//! interval together with its utility. A [`ModeAssignment`] activates a
//! subset of those pairs. The subset is feasible when
//!
//! - **C1/C2**: no user takes part in more than one active connection
//!   (the eNB is exempt);
//! - **C3**: underlay (mode 1) transmitters add at most `gamma` of
//!   interference at every protected cellular receiver and at the eNB;
//! - **C4**: every active underlay receiver sees at most `gamma` from the
//!   other active cellular and underlay transmitters;
//! - **C5**: every active overlay (mode 2) receiver sees at most `gamma`
//!   from the other active overlay transmitters.
//!
//! Three solvers maximize total utility: [`brute_force_solve`] enumerates
//! every subset, [`exact_solve`] runs a depth-first branch and bound, and
//! [`greedy_solve`] is the scalable fallback. All of them break objective
//! ties towards the lexicographically smallest sorted `(tx, rx, mode)` list.

mod brute;
mod exact;
mod greedy;
pub mod instance;
pub mod random;

use std::cmp::Ordering;
use std::fmt;

use thiserror::Error;

use crate::model::{Arc, Mode, Node};
use crate::radio::InterferenceTable;

pub use brute::{brute_force_solve, BRUTE_FORCE_MAX_PAIRS};
pub use exact::{exact_solve, exact_solve_budgeted, SearchStats};
pub use greedy::greedy_solve;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelectionError {
    #[error("mode {mode} is not legal on arc {arc}")]
    IllegalMode { arc: Arc, mode: Mode },
    #[error("candidate arc {0} is not in the arc set")]
    UnknownArc(Arc),
    #[error("duplicate candidate {arc} in mode {mode}")]
    DuplicateCandidate { arc: Arc, mode: Mode },
    #[error("utility of {arc} in mode {mode} is not finite")]
    NonFiniteUtility { arc: Arc, mode: Mode },
    #[error("arc {0} references a node outside the problem")]
    NodeOutOfRange(Arc),
    #[error("interference table is sized for {table} users, problem has {problem}")]
    TableSize { table: usize, problem: usize },
    #[error("gamma must be a non-negative number, got {0}")]
    BadGamma(f64),
    #[error("{pairs} legal pairs exceed the brute-force budget of {max}")]
    BudgetExceeded { pairs: usize, max: usize },
}

/// One legal `(arc, mode)` pair and its utility `U^i_{n,m}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub arc: Arc,
    pub mode: Mode,
    pub utility: f64,
}

impl Candidate {
    fn key(&self) -> (Arc, Mode) {
        (self.arc, self.mode)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionProblem {
    n_users: usize,
    arcs: Vec<Arc>,
    candidates: Vec<Candidate>,
    interference: InterferenceTable,
    gamma: f64,
    protected: Vec<Node>,
}

impl SelectionProblem {
    /// Validates and canonicalizes a problem.
    ///
    /// `protected_users` is the set of user receivers shielded by C3; the eNB
    /// is always protected and need not be listed.
    pub fn new(
        n_users: usize,
        mut arcs: Vec<Arc>,
        mut candidates: Vec<Candidate>,
        interference: InterferenceTable,
        gamma: f64,
        protected_users: impl IntoIterator<Item = u32>,
    ) -> Result<SelectionProblem, SelectionError> {
        if interference.n_users() != n_users {
            return Err(SelectionError::TableSize {
                table: interference.n_users(),
                problem: n_users,
            });
        }
        if !(gamma >= 0.0) {
            return Err(SelectionError::BadGamma(gamma));
        }
        let in_range = |node: Node| match node {
            Node::User(id) => id >= 1 && id as usize <= n_users,
            Node::Enb => true,
        };
        arcs.sort();
        arcs.dedup();
        for arc in &arcs {
            if !in_range(arc.tx) || !in_range(arc.rx) || arc.tx == arc.rx {
                return Err(SelectionError::NodeOutOfRange(*arc));
            }
        }
        candidates.sort_by_key(Candidate::key);
        for (k, c) in candidates.iter().enumerate() {
            if arcs.binary_search(&c.arc).is_err() {
                return Err(SelectionError::UnknownArc(c.arc));
            }
            if !c.mode.is_legal_on(&c.arc) {
                return Err(SelectionError::IllegalMode {
                    arc: c.arc,
                    mode: c.mode,
                });
            }
            if !c.utility.is_finite() {
                return Err(SelectionError::NonFiniteUtility {
                    arc: c.arc,
                    mode: c.mode,
                });
            }
            if k > 0 && candidates[k - 1].key() == c.key() {
                return Err(SelectionError::DuplicateCandidate {
                    arc: c.arc,
                    mode: c.mode,
                });
            }
        }
        let mut protected: Vec<Node> = protected_users
            .into_iter()
            .filter(|&id| id >= 1 && id as usize <= n_users)
            .map(Node::User)
            .collect();
        protected.push(Node::Enb);
        protected.sort();
        protected.dedup();
        Ok(SelectionProblem {
            n_users,
            arcs,
            candidates,
            interference,
            gamma,
            protected,
        })
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    /// Legal pairs sorted by `(tx, rx, mode)`.
    pub fn candidates(&self) -> &[Candidate] {
        &self.candidates
    }

    pub fn interference(&self) -> &InterferenceTable {
        &self.interference
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Receivers shielded by C3, including the eNB.
    pub fn protected(&self) -> &[Node] {
        &self.protected
    }

    /// Same problem with a different interference threshold.
    pub fn with_gamma(&self, gamma: f64) -> Result<SelectionProblem, SelectionError> {
        if !(gamma >= 0.0) {
            return Err(SelectionError::BadGamma(gamma));
        }
        Ok(SelectionProblem {
            gamma,
            ..self.clone()
        })
    }

    pub fn candidate_index(&self, arc: &Arc, mode: Mode) -> Option<usize> {
        self.candidates
            .binary_search_by(|c| c.key().cmp(&(*arc, mode)))
            .ok()
    }

    /// Sum of utilities over ascending candidate indices.
    pub(crate) fn objective_of(&self, selected: &[usize]) -> f64 {
        selected
            .iter()
            .fold(0.0, |acc, &k| acc + self.candidates[k].utility)
    }

    pub(crate) fn assignment_from(&self, selected: &[usize]) -> ModeAssignment {
        ModeAssignment {
            chosen: selected
                .iter()
                .map(|&k| (self.candidates[k].arc, self.candidates[k].mode))
                .collect(),
            objective: self.objective_of(selected),
        }
    }

    /// Evaluates C1-C5 in order on ascending candidate indices.
    pub(crate) fn first_violation(&self, selected: &[usize]) -> Option<Violation> {
        let n = self.n_users;
        let mut tx_deg = vec![0u32; n + 1];
        let mut rx_deg = vec![0u32; n + 1];
        for &k in selected {
            let arc = self.candidates[k].arc;
            tx_deg[arc.tx.index(n)] += 1;
            rx_deg[arc.rx.index(n)] += 1;
        }
        // Users only; the eNB is exempt.
        for u in 0..n {
            if rx_deg[u] >= 2 || (rx_deg[u] >= 1 && tx_deg[u] >= 1) {
                return Some(Violation::at_node(Constraint::C1, Node::User(u as u32 + 1)));
            }
        }
        for u in 0..n {
            if tx_deg[u] >= 2 {
                return Some(Violation::at_node(Constraint::C2, Node::User(u as u32 + 1)));
            }
        }

        let table = &self.interference;

        for &x in &self.protected {
            let load = self
                .active_in(selected, &[Mode::UnderlayInband])
                .map(|k| self.candidates[k].arc)
                .filter(|arc| !arc.touches(x))
                .fold(0.0, |acc, arc| acc + table.get(arc.tx, x));
            if load > self.gamma {
                return Some(Violation::at_node(Constraint::C3, x));
            }
        }

        const RULES: [(Constraint, &[Mode], &[Mode]); 2] = [
            (
                Constraint::C4,
                &[Mode::UnderlayInband],
                &[Mode::Cellular, Mode::UnderlayInband],
            ),
            (
                Constraint::C5,
                &[Mode::OverlayInband],
                &[Mode::OverlayInband],
            ),
        ];
        for (constraint, victims, sources) in RULES {
            for victim in self.active_in(selected, victims) {
                let rx = self.candidates[victim].arc.rx;
                let load = self
                    .active_in(selected, sources)
                    .filter(|&k| k != victim)
                    .fold(0.0, |acc, k| acc + table.get(self.candidates[k].arc.tx, rx));
                if load > self.gamma {
                    return Some(Violation {
                        constraint,
                        node: Some(rx),
                        arc: Some(self.candidates[victim].arc),
                    });
                }
            }
        }
        None
    }

    fn active_in<'a>(
        &'a self,
        selected: &'a [usize],
        modes: &'a [Mode],
    ) -> impl Iterator<Item = usize> + 'a {
        selected
            .iter()
            .copied()
            .filter(move |&k| modes.contains(&self.candidates[k].mode))
    }

    /// Checks an assignment against C1-C5, reporting the first violation.
    pub fn check_feasibility(&self, assignment: &ModeAssignment) -> Result<(), Infeasible> {
        let mut selected = Vec::with_capacity(assignment.chosen.len());
        for &(arc, mode) in &assignment.chosen {
            let k = self
                .candidate_index(&arc, mode)
                .ok_or(Infeasible::UnknownPair { arc, mode })?;
            selected.push(k);
        }
        selected.sort_unstable();
        if selected.windows(2).any(|w| w[0] == w[1]) {
            // The same pair twice is two connections on the same users.
            let k = selected.windows(2).find(|w| w[0] == w[1]).unwrap()[0];
            let arc = self.candidates[k].arc;
            let user = if arc.rx.is_enb() { arc.tx } else { arc.rx };
            return Err(Infeasible::Violated(Violation::at_node(
                Constraint::C1,
                user,
            )));
        }
        match self.first_violation(&selected) {
            Some(v) => Err(Infeasible::Violated(v)),
            None => Ok(()),
        }
    }
}

/// Constraint identifiers in evaluation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Constraint {
    C1,
    C2,
    C3,
    C4,
    C5,
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Violation {
    pub constraint: Constraint,
    /// Overloaded user or receiver.
    pub node: Option<Node>,
    /// Victim connection for C4/C5.
    pub arc: Option<Arc>,
}

impl Violation {
    fn at_node(constraint: Constraint, node: Node) -> Violation {
        Violation {
            constraint,
            node: Some(node),
            arc: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Infeasible {
    #[error(
        "assignment references {arc} in mode {mode}, which is not a legal pair of the problem"
    )]
    UnknownPair { arc: Arc, mode: Mode },
    #[error("constraint {} violated", .0.constraint)]
    Violated(Violation),
}

impl Infeasible {
    pub fn constraint(&self) -> Option<Constraint> {
        match self {
            Infeasible::Violated(v) => Some(v.constraint),
            Infeasible::UnknownPair { .. } => None,
        }
    }
}

/// Active `(arc, mode)` pairs `Y^i_{n,m} = 1`, sorted, with their total utility.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModeAssignment {
    pub chosen: Vec<(Arc, Mode)>,
    pub objective: f64,
}

impl ModeAssignment {
    pub fn empty() -> ModeAssignment {
        ModeAssignment::default()
    }

    pub fn is_empty(&self) -> bool {
        self.chosen.is_empty()
    }

    pub fn mode_of(&self, arc: &Arc) -> Option<Mode> {
        self.chosen.iter().find(|(a, _)| a == arc).map(|&(_, m)| m)
    }

    /// Sum of the member utilities, recomputed from the problem.
    pub fn recompute_objective(&self, problem: &SelectionProblem) -> Option<f64> {
        let mut idx: Vec<usize> = self
            .chosen
            .iter()
            .map(|(a, m)| problem.candidate_index(a, *m))
            .collect::<Option<_>>()?;
        idx.sort_unstable();
        Some(problem.objective_of(&idx))
    }
}

/// Best-so-far incumbent shared by the solvers.
///
/// A set replaces the incumbent if its objective is larger, or equal with a
/// lexicographically smaller index list. Candidate indices follow the
/// `(tx, rx, mode)` order, so index order is triple order.
#[derive(Debug, Clone)]
pub(crate) struct Incumbent {
    pub objective: f64,
    pub selected: Vec<usize>,
}

impl Incumbent {
    pub fn empty() -> Incumbent {
        Incumbent {
            objective: 0.0,
            selected: Vec::new(),
        }
    }

    pub fn offer(&mut self, objective: f64, selected: &[usize]) -> bool {
        let better = match objective.partial_cmp(&self.objective) {
            Some(Ordering::Greater) => true,
            Some(Ordering::Equal) => selected < self.selected.as_slice(),
            _ => false,
        };
        if better {
            self.objective = objective;
            self.selected.clear();
            self.selected.extend_from_slice(selected);
        }
        better
    }
}
