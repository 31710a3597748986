//! Users, states, modes and the per-interval communication graph.
//!
//! Users are labelled `1..=N`; the eNB is the extra node `N + 1`. A user's
//! state fully determines the arcs incident to it, so the graph of an
//! interval is a pure function of the state vector.

use std::fmt;

use thiserror::Error;

/// A node of the communication graph: one of the `N` users or the eNB.
///
/// The derived ordering puts every user before the eNB, which matches the
/// numeric labelling where the eNB is `N + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Node {
    User(u32),
    Enb,
}

impl Node {
    /// Numeric label with the eNB mapped to `n_users + 1`.
    pub fn label(self, n_users: usize) -> usize {
        match self {
            Node::User(id) => id as usize,
            Node::Enb => n_users + 1,
        }
    }

    /// Inverse of [`Node::label`].
    pub fn from_label(label: usize, n_users: usize) -> Option<Node> {
        if label >= 1 && label <= n_users {
            Some(Node::User(label as u32))
        } else if label == n_users + 1 {
            Some(Node::Enb)
        } else {
            None
        }
    }

    /// Zero-based row/column index in `(N + 1)`-sized tables.
    pub fn index(self, n_users: usize) -> usize {
        self.label(n_users) - 1
    }

    pub fn is_enb(self) -> bool {
        matches!(self, Node::Enb)
    }

    pub fn user(self) -> Option<u32> {
        match self {
            Node::User(id) => Some(id),
            Node::Enb => None,
        }
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::User(id) => write!(f, "{id}"),
            Node::Enb => f.write_str("eNB"),
        }
    }
}

/// Per-user state `X_n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UserState {
    /// No data to exchange or no usable channel.
    Dormant,
    /// In D2D reach of the given partner.
    D2dPaired(u32),
    /// Wants to communicate through the eNB only.
    Cellular,
}

impl UserState {
    /// Numeric encoding `0`, `m` or `N + 1`.
    pub fn code(self, n_users: usize) -> usize {
        match self {
            UserState::Dormant => 0,
            UserState::D2dPaired(m) => m as usize,
            UserState::Cellular => n_users + 1,
        }
    }

    pub fn is_active(self) -> bool {
        !matches!(self, UserState::Dormant)
    }
}

/// Transmission mode of a connection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Mode {
    Cellular = 0,
    UnderlayInband = 1,
    OverlayInband = 2,
    OutbandWifi = 3,
}

impl Mode {
    pub const ALL: [Mode; 4] = [
        Mode::Cellular,
        Mode::UnderlayInband,
        Mode::OverlayInband,
        Mode::OutbandWifi,
    ];

    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn from_index(i: u8) -> Option<Mode> {
        Mode::ALL.get(i as usize).copied()
    }

    /// Mode 0 runs only on user-eNB arcs; modes 1-3 only on direct user-user arcs.
    pub fn is_legal_on(self, arc: &Arc) -> bool {
        match self {
            Mode::Cellular => arc.is_cellular(),
            _ => !arc.is_cellular(),
        }
    }

    /// Modes carried over licensed LTE resource blocks.
    pub fn is_lte(self) -> bool {
        !matches!(self, Mode::OutbandWifi)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// A connection of the graph with its designated transmitter and receiver.
///
/// D2D arcs are oriented from the lower user id to the higher one; cellular
/// arcs from the user to the eNB.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Arc {
    pub tx: Node,
    pub rx: Node,
}

impl Arc {
    /// Builds the canonically oriented arc between two distinct nodes.
    pub fn between(a: Node, b: Node) -> Option<Arc> {
        if a == b {
            return None;
        }
        let (tx, rx) = if a < b { (a, b) } else { (b, a) };
        Some(Arc { tx, rx })
    }

    pub fn cellular(user: u32) -> Arc {
        Arc {
            tx: Node::User(user),
            rx: Node::Enb,
        }
    }

    pub fn is_cellular(&self) -> bool {
        self.rx.is_enb() || self.tx.is_enb()
    }

    pub fn touches(&self, node: Node) -> bool {
        self.tx == node || self.rx == node
    }
}

impl fmt::Display for Arc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.tx, self.rx)
    }
}

/// First symmetry or range violation found in a state vector.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid state pairing between users {user} and {partner}")]
pub struct StateViolation {
    pub user: u32,
    pub partner: u32,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    InvalidStates(#[from] StateViolation),
}

/// Checks that every D2D pairing is in range, not a self-pairing, and reciprocated.
pub fn validate_states(states: &[UserState]) -> Result<(), StateViolation> {
    let n = states.len();
    for (i, state) in states.iter().enumerate() {
        let user = i as u32 + 1;
        if let UserState::D2dPaired(m) = *state {
            let reciprocated = m != user
                && m >= 1
                && (m as usize) <= n
                && states[m as usize - 1] == UserState::D2dPaired(user);
            if !reciprocated {
                return Err(StateViolation { user, partner: m });
            }
        }
    }
    Ok(())
}

/// The graph of existing arcs `Z_{n,m} = 1` for one mode interval.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkGraph {
    pub n_users: usize,
    pub interval: u64,
    /// Sorted, deduplicated.
    pub arcs: Vec<Arc>,
}

impl NetworkGraph {
    /// Number of arcs incident to `node`.
    pub fn degree(&self, node: Node) -> usize {
        self.arcs.iter().filter(|a| a.touches(node)).count()
    }

    pub fn contains(&self, arc: &Arc) -> bool {
        self.arcs.binary_search(arc).is_ok()
    }

    /// `floor(3N / 2)`, the largest possible arc count.
    pub fn arc_bound(&self) -> usize {
        3 * self.n_users / 2
    }
}

/// Maps a validated state vector to its graph.
pub fn build_graph(states: &[UserState], interval: u64) -> Result<NetworkGraph, ModelError> {
    validate_states(states)?;
    let mut arcs = Vec::with_capacity(3 * states.len() / 2);
    for (i, state) in states.iter().enumerate() {
        let user = i as u32 + 1;
        match *state {
            UserState::Dormant => {}
            UserState::Cellular => arcs.push(Arc::cellular(user)),
            UserState::D2dPaired(m) => {
                arcs.push(Arc::cellular(user));
                if user < m {
                    arcs.push(Arc {
                        tx: Node::User(user),
                        rx: Node::User(m),
                    });
                }
            }
        }
    }
    arcs.sort();
    arcs.dedup();
    Ok(NetworkGraph {
        n_users: states.len(),
        interval,
        arcs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use UserState::*;

    #[test]
    fn validate_examples() {
        assert_eq!(validate_states(&[Dormant, Dormant]), Ok(()));
        assert_eq!(validate_states(&[D2dPaired(2), D2dPaired(1)]), Ok(()));
        assert_eq!(
            validate_states(&[D2dPaired(2), Cellular]),
            Err(StateViolation {
                user: 1,
                partner: 2
            })
        );
    }

    #[test]
    fn validate_rejects_self_and_out_of_range() {
        assert_eq!(
            validate_states(&[D2dPaired(1)]),
            Err(StateViolation {
                user: 1,
                partner: 1
            })
        );
        assert!(validate_states(&[D2dPaired(3), Dormant]).is_err());
        assert!(validate_states(&[D2dPaired(0), Dormant]).is_err());
    }

    #[test]
    fn empty_graph() {
        let g = build_graph(&[Dormant, Dormant], 1).unwrap();
        assert!(g.arcs.is_empty());
    }

    #[test]
    fn mixed_graph_has_four_arcs() {
        let g = build_graph(&[D2dPaired(2), D2dPaired(1), Cellular, Dormant], 3).unwrap();
        let labels: Vec<(usize, usize)> = g
            .arcs
            .iter()
            .map(|a| (a.tx.label(4), a.rx.label(4)))
            .collect();
        assert_eq!(labels, vec![(1, 2), (1, 5), (2, 5), (3, 5)]);
        assert_eq!(g.interval, 3);
        assert_eq!(g.degree(Node::User(4)), 0);
        assert_eq!(g.degree(Node::User(3)), 1);
        assert_eq!(g.degree(Node::User(1)), 2);
    }

    #[test]
    fn all_paired_hits_the_bound() {
        let states = [
            D2dPaired(2),
            D2dPaired(1),
            D2dPaired(4),
            D2dPaired(3),
            D2dPaired(6),
            D2dPaired(5),
        ];
        let g = build_graph(&states, 0).unwrap();
        assert_eq!(g.arcs.len(), 9);
        assert_eq!(g.arcs.len(), g.arc_bound());
    }

    #[test]
    fn build_rejects_invalid_states() {
        assert!(build_graph(&[D2dPaired(2), Cellular], 0).is_err());
    }

    #[test]
    fn mode_legality() {
        let cell = Arc::cellular(1);
        let d2d = Arc::between(Node::User(2), Node::User(1)).unwrap();
        assert_eq!(d2d.tx, Node::User(1));
        assert!(Mode::Cellular.is_legal_on(&cell));
        assert!(!Mode::Cellular.is_legal_on(&d2d));
        for m in [Mode::UnderlayInband, Mode::OverlayInband, Mode::OutbandWifi] {
            assert!(m.is_legal_on(&d2d));
            assert!(!m.is_legal_on(&cell));
        }
        assert!(Arc::between(Node::Enb, Node::Enb).is_none());
    }

    #[test]
    fn labels_round_trip() {
        assert_eq!(Node::Enb.label(4), 5);
        assert_eq!(Node::from_label(5, 4), Some(Node::Enb));
        assert_eq!(Node::from_label(0, 4), None);
        assert_eq!(Node::from_label(6, 4), None);
        assert_eq!(Cellular.code(4), 5);
    }
}
