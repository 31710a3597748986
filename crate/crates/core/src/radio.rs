//! Channel quality and interference estimation.
//!
//! Links follow a log-distance path-loss law with no fast fading. SNR maps
//! to an LTE CQI through a fixed threshold table, and CQI maps to bits per
//! resource block through the LTE spectral-efficiency column. WiFi rates are
//! a distance step function. The eNB sits at the origin.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::config::{SimConfig, WifiStep};
use crate::model::{Arc, Mode, NetworkGraph, Node};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RadioError {
    #[error("no position for user {0}")]
    MissingPosition(u32),
    #[error("CQI {0} out of range 0..=15")]
    CqiOutOfRange(u8),
    #[error("topology line {line}: {msg}")]
    Topology { line: usize, msg: String },
}

/// Resource elements in one RB pair (12 subcarriers x 14 symbols).
pub const RE_PER_RB: f64 = 168.0;

/// Lowest SNR (dB) for CQI `k + 1`; evenly spaced from -6.7 dB to 22.7 dB.
pub const CQI_SNR_THRESHOLDS_DB: [f64; 15] = [
    -6.7, -4.6, -2.5, -0.4, 1.7, 3.8, 5.9, 8.0, 10.1, 12.2, 14.3, 16.4, 18.5, 20.6, 22.7,
];

/// Spectral efficiency (bits/symbol) for CQI `k + 1` (4-bit CQI table, 64QAM).
pub const CQI_EFFICIENCY: [f64; 15] = [
    0.1523, 0.2344, 0.3770, 0.6016, 0.8770, 1.1758, 1.4766, 1.9141, 2.4063, 2.7305, 3.3223, 3.9023,
    4.5234, 5.1152, 5.5547,
];

pub const ENB_POSITION: Position = Position { x: 0.0, y: 0.0 };

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Position {
        Position { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn norm(&self) -> f64 {
        self.distance(&ENB_POSITION)
    }
}

/// Linear gain `max(d, 1)^-eta`.
pub fn path_gain(a: &Position, b: &Position, exponent: f64) -> f64 {
    gain_at(a.distance(b), exponent)
}

fn gain_at(distance: f64, exponent: f64) -> f64 {
    distance.max(1.0).powf(-exponent)
}

pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CqiIndex(u8);

impl CqiIndex {
    pub const MAX: u8 = 15;

    pub fn new(value: u8) -> Result<CqiIndex, RadioError> {
        if value > Self::MAX {
            Err(RadioError::CqiOutOfRange(value))
        } else {
            Ok(CqiIndex(value))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    /// Number of thresholds the SNR reaches; 0 when below the lowest.
    pub fn from_snr_db(snr_db: f64) -> CqiIndex {
        let reached = CQI_SNR_THRESHOLDS_DB
            .iter()
            .take_while(|&&t| snr_db >= t)
            .count();
        CqiIndex(reached as u8)
    }

    pub fn bits_per_rb(self) -> u32 {
        if self.0 == 0 {
            0
        } else {
            (RE_PER_RB * CQI_EFFICIENCY[self.0 as usize - 1]).floor() as u32
        }
    }
}

/// Bits carried by one RB at the given CQI.
pub fn rate_per_rb(cqi: u8) -> Result<u32, RadioError> {
    CqiIndex::new(cqi).map(CqiIndex::bits_per_rb)
}

/// WiFi rate (bits/s) of the first step whose distance bound covers `distance`.
pub fn wifi_rate(distance: f64, steps: &[WifiStep]) -> f64 {
    steps
        .iter()
        .find(|s| distance <= s.max_distance)
        .map_or(0.0, |s| s.rate_bps)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadioParams {
    pub path_loss_exponent: f64,
    pub noise_power: f64,
    pub tx_power: f64,
    pub shadowing_sigma_db: f64,
    pub wifi_rates: Vec<WifiStep>,
}

impl RadioParams {
    pub fn from_config(cfg: &SimConfig) -> RadioParams {
        RadioParams {
            path_loss_exponent: cfg.path_loss_exponent,
            noise_power: cfg.noise_power,
            tx_power: cfg.tx_power,
            shadowing_sigma_db: cfg.shadowing_sigma_db,
            wifi_rates: cfg.wifi_rates.clone(),
        }
    }
}

fn node_position(node: Node, positions: &[Position]) -> Result<Position, RadioError> {
    match node {
        Node::Enb => Ok(ENB_POSITION),
        Node::User(id) => positions
            .get(id as usize - 1)
            .copied()
            .ok_or(RadioError::MissingPosition(id)),
    }
}

/// Length of an arc in meters.
pub fn arc_length(arc: &Arc, positions: &[Position]) -> Result<f64, RadioError> {
    Ok(node_position(arc.tx, positions)?.distance(&node_position(arc.rx, positions)?))
}

/// Received SNR (linear) of an arc at full transmit power.
pub fn arc_snr(arc: &Arc, positions: &[Position], params: &RadioParams) -> Result<f64, RadioError> {
    let d = arc_length(arc, positions)?;
    Ok(params.tx_power * gain_at(d, params.path_loss_exponent) / params.noise_power)
}

/// CQI of every arc in the graph, in arc order.
pub fn estimate_cqi(
    graph: &NetworkGraph,
    positions: &[Position],
    params: &RadioParams,
) -> Result<Vec<(Arc, CqiIndex)>, RadioError> {
    check_positions(graph.n_users, positions)?;
    graph
        .arcs
        .iter()
        .map(|arc| {
            Ok((
                *arc,
                CqiIndex::from_snr_db(to_db(arc_snr(arc, positions, params)?)),
            ))
        })
        .collect()
}

/// Like [`estimate_cqi`] with an independent lognormal shadowing draw per arc.
pub fn estimate_cqi_shadowed<R: Rng + ?Sized>(
    graph: &NetworkGraph,
    positions: &[Position],
    params: &RadioParams,
    rng: &mut R,
) -> Result<Vec<(Arc, CqiIndex)>, RadioError> {
    if params.shadowing_sigma_db <= 0.0 {
        return estimate_cqi(graph, positions, params);
    }
    check_positions(graph.n_users, positions)?;
    let normal = Normal::new(0.0, params.shadowing_sigma_db).expect("sigma is finite and positive");
    graph
        .arcs
        .iter()
        .map(|arc| {
            let snr_db = to_db(arc_snr(arc, positions, params)?) + normal.sample(rng);
            Ok((*arc, CqiIndex::from_snr_db(snr_db)))
        })
        .collect()
}

fn check_positions(n_users: usize, positions: &[Position]) -> Result<(), RadioError> {
    if positions.len() < n_users {
        return Err(RadioError::MissingPosition(positions.len() as u32 + 1));
    }
    Ok(())
}

/// Rates of one arc: LTE bits/RB (modes 0-2) and WiFi bits/s (mode 3).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkRates {
    pub cqi: CqiIndex,
    pub bits_per_rb: u32,
    pub wifi_bps: f64,
}

/// Per-arc, per-mode rates `R^{i,CQI}` for one interval.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RateTable {
    entries: BTreeMap<Arc, LinkRates>,
}

impl RateTable {
    pub fn build(
        cqis: &[(Arc, CqiIndex)],
        positions: &[Position],
        params: &RadioParams,
    ) -> Result<RateTable, RadioError> {
        let mut entries = BTreeMap::new();
        for (arc, cqi) in cqis {
            let wifi_bps = if arc.is_cellular() {
                0.0
            } else {
                wifi_rate(arc_length(arc, positions)?, &params.wifi_rates)
            };
            entries.insert(
                *arc,
                LinkRates {
                    cqi: *cqi,
                    bits_per_rb: cqi.bits_per_rb(),
                    wifi_bps,
                },
            );
        }
        Ok(RateTable { entries })
    }

    pub fn insert(&mut self, arc: Arc, rates: LinkRates) {
        self.entries.insert(arc, rates);
    }

    pub fn get(&self, arc: &Arc) -> Option<&LinkRates> {
        self.entries.get(arc)
    }

    /// Bits/RB for LTE modes, bits/s for WiFi; `None` for unknown arcs or illegal modes.
    pub fn rate(&self, arc: &Arc, mode: Mode) -> Option<f64> {
        if !mode.is_legal_on(arc) {
            return None;
        }
        let r = self.entries.get(arc)?;
        Some(if mode.is_lte() {
            r.bits_per_rb as f64
        } else {
            r.wifi_bps
        })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Arc, &LinkRates)> {
        self.entries.iter()
    }
}

/// Worst-case interference `I_{n,m}` caused by node `n` at node `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterferenceTable {
    n_users: usize,
    values: Vec<f64>,
}

impl InterferenceTable {
    pub fn zeros(n_users: usize) -> InterferenceTable {
        let dim = n_users + 1;
        InterferenceTable {
            n_users,
            values: vec![0.0; dim * dim],
        }
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    fn dim(&self) -> usize {
        self.n_users + 1
    }

    pub fn get(&self, from: Node, to: Node) -> f64 {
        self.values[from.index(self.n_users) * self.dim() + to.index(self.n_users)]
    }

    /// Sets an off-diagonal entry. Negative or diagonal writes are ignored.
    pub fn set(&mut self, from: Node, to: Node, value: f64) {
        if from != to && value >= 0.0 {
            let dim = self.dim();
            self.values[from.index(self.n_users) * dim + to.index(self.n_users)] = value;
        }
    }

    /// Row-major entries, indexed by zero-based node labels.
    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.dim())
    }
}

/// `I_{n,m} = tx_power(n) * gain(n, m)` for every user transmitter `n`.
///
/// The eNB does not transmit in the modelled direction, so its row is zero.
pub fn build_interference_table(
    positions: &[Position],
    tx_powers: &[f64],
    path_loss_exponent: f64,
) -> InterferenceTable {
    let n = positions.len();
    let mut table = InterferenceTable::zeros(n);
    let node_pos = |k: usize| if k < n { positions[k] } else { ENB_POSITION };
    for from in 0..n {
        let power = tx_powers.get(from).copied().unwrap_or(0.0);
        for to in 0..=n {
            if from != to {
                let gain = path_gain(&positions[from], &node_pos(to), path_loss_exponent);
                table.values[from * (n + 1) + to] = power * gain;
            }
        }
    }
    table
}

/// Parses `user_id x y` lines (meters) into a dense position list.
pub fn parse_topology(text: &str, n_users: usize) -> Result<Vec<Position>, RadioError> {
    let mut slots: Vec<Option<Position>> = vec![None; n_users];
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |msg: &str| RadioError::Topology {
            line: i + 1,
            msg: msg.to_string(),
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [id, x, y] = fields.as_slice() else {
            return Err(err("expected `user_id x y`"));
        };
        let id: usize = id.parse().map_err(|_| err("bad user id"))?;
        if id == 0 || id > n_users {
            return Err(err("user id out of range"));
        }
        let x: f64 = x.parse().map_err(|_| err("bad x"))?;
        let y: f64 = y.parse().map_err(|_| err("bad y"))?;
        slots[id - 1] = Some(Position { x, y });
    }
    slots
        .into_iter()
        .enumerate()
        .map(|(i, p)| p.ok_or(RadioError::MissingPosition(i as u32 + 1)))
        .collect()
}

/// Human-readable CQI threshold and efficiency table for run logs.
pub fn cqi_table_text() -> String {
    let mut s = String::from("cqi snr_threshold_db efficiency bits_per_rb\n");
    let _ = writeln!(s, "0 - 0 0");
    for k in 0..15 {
        let _ = writeln!(
            s,
            "{} {} {} {}",
            k + 1,
            CQI_SNR_THRESHOLDS_DB[k],
            CQI_EFFICIENCY[k],
            CqiIndex(k as u8 + 1).bits_per_rb()
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_graph, UserState};

    #[test]
    fn path_gain_examples() {
        let o = Position::new(0.0, 0.0);
        assert_eq!(path_gain(&o, &Position::new(1.0, 0.0), 3.5), 1.0);
        assert_eq!(path_gain(&o, &o, 3.5), 1.0);
        let g = path_gain(&o, &Position::new(10.0, 0.0), 3.5);
        assert!((g - 3.162_277_660_168_379e-4).abs() < 1e-15);
    }

    #[test]
    fn thresholds_are_even() {
        for w in CQI_SNR_THRESHOLDS_DB.windows(2) {
            assert!((w[1] - w[0] - 2.1).abs() < 1e-9);
        }
    }

    #[test]
    fn cqi_boundaries() {
        assert_eq!(CqiIndex::from_snr_db(-30.0).value(), 0);
        assert_eq!(CqiIndex::from_snr_db(-6.7).value(), 1);
        assert_eq!(CqiIndex::from_snr_db(40.0).value(), 15);
        assert_eq!(CqiIndex::from_snr_db(f64::NEG_INFINITY).value(), 0);
    }

    #[test]
    fn rate_examples() {
        assert_eq!(rate_per_rb(0), Ok(0));
        assert_eq!(rate_per_rb(15), Ok(933));
        assert_eq!(rate_per_rb(16), Err(RadioError::CqiOutOfRange(16)));
        let rates: Vec<u32> = (0..=15).map(|c| rate_per_rb(c).unwrap()).collect();
        assert_eq!(
            rates,
            vec![0, 25, 39, 63, 101, 147, 197, 248, 321, 404, 458, 558, 655, 759, 859, 933]
        );
    }

    #[test]
    fn wifi_steps() {
        let steps = SimConfig::default().wifi_rates;
        assert_eq!(wifi_rate(5.0, &steps), 54e6);
        assert_eq!(wifi_rate(10.0, &steps), 54e6);
        assert_eq!(wifi_rate(10.5, &steps), 24e6);
        assert_eq!(wifi_rate(50.0, &steps), 6e6);
        assert_eq!(wifi_rate(50.1, &steps), 0.0);
    }

    #[test]
    fn interference_examples() {
        let t = build_interference_table(&[Position::new(3.0, 4.0)], &[0.2], 3.5);
        assert_eq!(t.get(Node::User(1), Node::User(1)), 0.0);

        let p = Position::new(10.0, 0.0);
        let t = build_interference_table(&[p, p], &[0.2, 0.2], 3.5);
        assert_eq!(t.get(Node::User(1), Node::User(2)), 0.2);
        assert_eq!(t.get(Node::User(2), Node::User(1)), 0.2);
        assert_eq!(t.get(Node::Enb, Node::User(1)), 0.0);
        assert!((t.get(Node::User(1), Node::Enb) - 0.2 * 10f64.powf(-3.5)).abs() < 1e-18);
    }

    #[test]
    fn estimate_cqi_requires_positions() {
        let g = build_graph(&[UserState::Cellular, UserState::Cellular], 0).unwrap();
        let params = RadioParams::from_config(&SimConfig::default());
        assert_eq!(
            estimate_cqi(&g, &[Position::new(1.0, 1.0)], &params),
            Err(RadioError::MissingPosition(2))
        );
    }

    #[test]
    fn zero_sigma_shadowing_matches_baseline() {
        use rand::SeedableRng;
        let g = build_graph(&[UserState::D2dPaired(2), UserState::D2dPaired(1)], 0).unwrap();
        let pos = [Position::new(100.0, 0.0), Position::new(120.0, 0.0)];
        let params = RadioParams::from_config(&SimConfig::default());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        assert_eq!(
            estimate_cqi_shadowed(&g, &pos, &params, &mut rng).unwrap(),
            estimate_cqi(&g, &pos, &params).unwrap()
        );
    }

    #[test]
    fn rate_table_modes() {
        let g = build_graph(&[UserState::D2dPaired(2), UserState::D2dPaired(1)], 0).unwrap();
        let pos = [Position::new(100.0, 0.0), Position::new(105.0, 0.0)];
        let params = RadioParams::from_config(&SimConfig::default());
        let cqis = estimate_cqi(&g, &pos, &params).unwrap();
        let rates = RateTable::build(&cqis, &pos, &params).unwrap();
        let d2d = Arc::between(Node::User(1), Node::User(2)).unwrap();
        assert_eq!(rates.rate(&d2d, Mode::OutbandWifi), Some(54e6));
        assert_eq!(rates.rate(&d2d, Mode::UnderlayInband), Some(933.0));
        assert_eq!(rates.rate(&d2d, Mode::Cellular), None);
        assert_eq!(rates.rate(&Arc::cellular(1), Mode::OutbandWifi), None);
    }

    #[test]
    fn topology_parsing() {
        let pos = parse_topology("# t\n2 5 6\n1 -1.5 2\n", 2).unwrap();
        assert_eq!(pos, vec![Position::new(-1.5, 2.0), Position::new(5.0, 6.0)]);
        assert_eq!(
            parse_topology("1 0 0\n", 2),
            Err(RadioError::MissingPosition(2))
        );
        assert!(matches!(
            parse_topology("3 0 0\n", 2),
            Err(RadioError::Topology { line: 1, .. })
        ));
        assert!(matches!(
            parse_topology("1 0\n", 2),
            Err(RadioError::Topology { .. })
        ));
    }
}
