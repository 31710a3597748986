//! The mode-interval loop.
//!
//! Every interval: move users and update their states, rebuild the graph,
//! estimate rates and interference, select modes, schedule the interval's
//! frames and account for what was actually transmitted.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::config::{ConfigError, SimConfig, TransitionRow};
use crate::economics::{EnergyParams, LinkEconomics, RbForecast};
use crate::model::{build_graph, validate_states, Arc, Mode, ModelError, NetworkGraph, UserState};
use crate::radio::{
    build_interference_table, estimate_cqi_shadowed, parse_topology, Position, RadioError,
    RadioParams, RateTable,
};
use crate::scheduler::{
    accumulate_interval, schedule_interval, FrameAllocation, PfState, ScheduleError,
    SchedulerParams,
};
use crate::selector::{
    exact_solve_budgeted, greedy_solve, Candidate, ModeAssignment, SelectionError, SelectionProblem,
};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Radio(#[from] RadioError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error("scenario has {positions} positions and {states} states for {users} users")]
    ScenarioShape {
        users: usize,
        positions: usize,
        states: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverUsed {
    Exact,
    Greedy,
}

impl SolverUsed {
    pub fn name(self) -> &'static str {
        match self {
            SolverUsed::Exact => "exact",
            SolverUsed::Greedy => "greedy",
        }
    }
}

/// Everything that carries over from one interval to the next.
#[derive(Debug, Clone)]
pub struct ScenarioState {
    pub interval: u64,
    pub positions: Vec<Position>,
    pub states: Vec<UserState>,
    pub pf: PfState,
    waypoints: Vec<Position>,
    rng: ChaCha8Rng,
}

impl ScenarioState {
    /// Users placed uniformly in the cell, all dormant.
    pub fn random(cfg: &SimConfig) -> ScenarioState {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let positions = (0..cfg.n_users)
            .map(|_| uniform_in_disc(&mut rng, cfg.cell_radius))
            .collect();
        ScenarioState::with_rng(positions, vec![UserState::Dormant; cfg.n_users], rng)
    }

    /// A scenario with given positions and states, seeded from the config.
    pub fn from_parts(
        cfg: &SimConfig,
        positions: Vec<Position>,
        states: Vec<UserState>,
    ) -> Result<ScenarioState, SimError> {
        if positions.len() != cfg.n_users || states.len() != cfg.n_users {
            return Err(SimError::ScenarioShape {
                users: cfg.n_users,
                positions: positions.len(),
                states: states.len(),
            });
        }
        validate_states(&states).map_err(ModelError::from)?;
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Ok(ScenarioState::with_rng(positions, states, rng))
    }

    fn with_rng(
        positions: Vec<Position>,
        states: Vec<UserState>,
        rng: ChaCha8Rng,
    ) -> ScenarioState {
        ScenarioState {
            interval: 0,
            waypoints: positions.clone(),
            positions,
            states,
            pf: PfState::new(),
            rng,
        }
    }
}

fn uniform_in_disc<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> Position {
    let r = radius * rng.gen::<f64>().sqrt();
    let theta = std::f64::consts::TAU * rng.gen::<f64>();
    Position::new(r * theta.cos(), r * theta.sin())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Intent {
    Dormant,
    Cellular,
    Seeking,
}

fn draw_intent<R: Rng + ?Sized>(rng: &mut R, row: &TransitionRow) -> Intent {
    let u: f64 = rng.gen();
    if u < row.to_dormant {
        Intent::Dormant
    } else if u < row.to_dormant + row.to_cellular {
        Intent::Cellular
    } else if row.to_seeking > 0.0 {
        Intent::Seeking
    } else {
        // Rounding left u above the first two entries of a row without a seeking mass.
        Intent::Cellular
    }
}

/// Advances positions and user states by one mode interval.
///
/// Users walk towards random waypoints by at most `max_speed * T`. Pairs
/// that drift out of D2D range or break at random revert to cellular.
/// Unpaired users follow the Markov rows; users who start seeking D2D are
/// matched, in id order, with the nearest other seeker in range (ties to
/// the lower id), and unmatched seekers become cellular.
pub fn evolve_states(s: &mut ScenarioState, cfg: &SimConfig) {
    let n = s.states.len();
    let step = cfg.max_speed * cfg.interval_duration();
    if step > 0.0 {
        for u in 0..n {
            let to_go = s.positions[u].distance(&s.waypoints[u]);
            if to_go <= step {
                s.positions[u] = s.waypoints[u];
                s.waypoints[u] = uniform_in_disc(&mut s.rng, cfg.cell_radius);
            } else {
                let f = step / to_go;
                let (p, w) = (s.positions[u], s.waypoints[u]);
                s.positions[u] = Position::new(p.x + f * (w.x - p.x), p.y + f * (w.y - p.y));
            }
        }
    }

    let before = s.states.clone();
    for u in 0..n {
        if let UserState::D2dPaired(m) = before[u] {
            let m = m as usize - 1;
            if u < m {
                let out_of_range = s.positions[u].distance(&s.positions[m]) > cfg.d2d_range;
                let broken = s.rng.gen::<f64>() < cfg.pair_break_prob;
                if out_of_range || broken {
                    s.states[u] = UserState::Cellular;
                    s.states[m] = UserState::Cellular;
                }
            }
        }
    }

    let mut seeking = vec![false; n];
    for u in 0..n {
        let row = match before[u] {
            UserState::D2dPaired(_) => continue,
            UserState::Dormant => &cfg.transition_dormant,
            UserState::Cellular => &cfg.transition_cellular,
        };
        match draw_intent(&mut s.rng, row) {
            Intent::Dormant => s.states[u] = UserState::Dormant,
            Intent::Cellular => s.states[u] = UserState::Cellular,
            Intent::Seeking => seeking[u] = true,
        }
    }

    for u in 0..n {
        if !seeking[u] {
            continue;
        }
        seeking[u] = false;
        let nearest = (0..n)
            .filter(|&v| seeking[v])
            .map(|v| (s.positions[u].distance(&s.positions[v]), v))
            .filter(|&(d, _)| d <= cfg.d2d_range)
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        match nearest {
            Some((_, v)) => {
                seeking[v] = false;
                s.states[u] = UserState::D2dPaired(v as u32 + 1);
                s.states[v] = UserState::D2dPaired(u as u32 + 1);
            }
            None => s.states[u] = UserState::Cellular,
        }
    }
    debug_assert!(validate_states(&s.states).is_ok());
}

/// Builds the selection problem of one interval from predicted utilities.
///
/// Pairs whose link carries no data in that mode are not candidates. The
/// protected receivers are all non-dormant users.
pub fn build_selection_problem(
    graph: &NetworkGraph,
    states: &[UserState],
    rates: &RateTable,
    interference: crate::radio::InterferenceTable,
    cfg: &SimConfig,
) -> Result<SelectionProblem, SelectionError> {
    let energy = EnergyParams::from_config(cfg);
    let cellular_arcs = graph.arcs.iter().filter(|a| a.is_cellular()).count();
    let forecast = RbForecast::from_config(cfg, cellular_arcs);
    let mut candidates = Vec::new();
    for arc in &graph.arcs {
        let Some(r) = rates.get(arc) else { continue };
        for mode in Mode::ALL.into_iter().filter(|m| m.is_legal_on(arc)) {
            let econ =
                predicted_economics(mode, r.bits_per_rb, r.wifi_bps, &forecast, &energy, cfg);
            if econ.data_bits > 0.0 {
                candidates.push(Candidate {
                    arc: *arc,
                    mode,
                    utility: econ.utility,
                });
            }
        }
    }
    let protected = states
        .iter()
        .enumerate()
        .filter(|(_, s)| s.is_active())
        .map(|(i, _)| i as u32 + 1);
    SelectionProblem::new(
        graph.n_users,
        graph.arcs.clone(),
        candidates,
        interference,
        cfg.gamma,
        protected,
    )
}

fn predicted_economics(
    mode: Mode,
    bits_per_rb: u32,
    wifi_bps: f64,
    forecast: &RbForecast,
    energy: &EnergyParams,
    cfg: &SimConfig,
) -> LinkEconomics {
    if mode.is_lte() {
        LinkEconomics::lte(mode, forecast.predict(mode), bits_per_rb, energy)
            .expect("validated energy parameters are non-negative")
    } else {
        LinkEconomics::wifi(cfg.interval_duration(), wifi_bps, energy)
    }
}

/// One connection's realized values over an interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectionReport {
    pub arc: Arc,
    pub mode: Mode,
    pub rb_count: u64,
    pub data_bits: f64,
    pub energy_j: f64,
    pub utility: f64,
    /// Utility the selector expected from the predicted RB count.
    pub predicted_utility: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalReport {
    pub interval: u64,
    pub n_users: usize,
    pub solver: SolverUsed,
    pub connections: Vec<ConnectionReport>,
    pub total_utility: f64,
    pub total_data_bits: f64,
    pub total_energy_j: f64,
    pub predicted_utility: f64,
    pub mode_counts: [usize; 4],
}

impl IntervalReport {
    fn new(
        interval: u64,
        n_users: usize,
        solver: SolverUsed,
        connections: Vec<ConnectionReport>,
    ) -> Self {
        let mut mode_counts = [0; 4];
        for c in &connections {
            mode_counts[c.mode.index() as usize] += 1;
        }
        IntervalReport {
            interval,
            n_users,
            solver,
            total_utility: connections.iter().map(|c| c.utility).sum(),
            total_data_bits: connections.iter().map(|c| c.data_bits).sum(),
            total_energy_j: connections.iter().map(|c| c.energy_j).sum(),
            predicted_utility: connections.iter().map(|c| c.predicted_utility).sum(),
            mode_counts,
            connections,
        }
    }
}

/// Full detail of one simulated interval.
#[derive(Debug, Clone)]
pub struct IntervalOutcome {
    pub graph: NetworkGraph,
    pub problem: SelectionProblem,
    pub assignment: ModeAssignment,
    pub frames: Vec<FrameAllocation>,
    pub report: IntervalReport,
}

pub struct Simulation {
    cfg: SimConfig,
    state: ScenarioState,
    radio: RadioParams,
    sched: SchedulerParams,
    energy: EnergyParams,
}

impl Simulation {
    /// A scenario with random (or topology-file) positions and dormant users.
    pub fn new(cfg: SimConfig) -> Result<Simulation, SimError> {
        cfg.validate()?;
        let mut state = ScenarioState::random(&cfg);
        if let Some(path) = &cfg.topology_file {
            let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
                path: path.clone(),
                source,
            })?;
            state.positions = parse_topology(&text, cfg.n_users)?;
            state.waypoints = state.positions.clone();
        }
        Ok(Simulation::with_state(cfg, state))
    }

    pub fn from_scenario(cfg: SimConfig, state: ScenarioState) -> Result<Simulation, SimError> {
        cfg.validate()?;
        Ok(Simulation::with_state(cfg, state))
    }

    fn with_state(cfg: SimConfig, state: ScenarioState) -> Simulation {
        Simulation {
            radio: RadioParams::from_config(&cfg),
            sched: SchedulerParams::from_config(&cfg),
            energy: EnergyParams::from_config(&cfg),
            cfg,
            state,
        }
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn state(&self) -> &ScenarioState {
        &self.state
    }

    /// Simulates the next mode interval.
    pub fn step(&mut self) -> Result<IntervalOutcome, SimError> {
        let cfg = &self.cfg;
        let s = &mut self.state;
        s.interval += 1;
        evolve_states(s, cfg);

        let graph = build_graph(&s.states, s.interval)?;
        let cqis = estimate_cqi_shadowed(&graph, &s.positions, &self.radio, &mut s.rng)?;
        let rates = RateTable::build(&cqis, &s.positions, &self.radio)?;
        let powers = vec![cfg.tx_power; cfg.n_users];
        let table = build_interference_table(&s.positions, &powers, cfg.path_loss_exponent);
        let problem = build_selection_problem(&graph, &s.states, &rates, table, cfg)?;

        let (assignment, solver) = match exact_solve_budgeted(&problem, cfg.exact_node_budget).0 {
            Some(a) => (a, SolverUsed::Exact),
            None => (greedy_solve(&problem), SolverUsed::Greedy),
        };

        s.pf.retain_active(&assignment);
        let frames = schedule_interval(
            &problem,
            &assignment,
            &rates,
            &self.sched,
            &mut s.pf,
            cfg.frames_per_interval,
        )?;
        let outcomes = accumulate_interval(
            &frames,
            &assignment,
            &rates,
            &self.energy,
            cfg.interval_duration(),
        )?;
        let connections = outcomes
            .iter()
            .map(|o| {
                let k = problem
                    .candidate_index(&o.arc, o.mode)
                    .expect("assigned pairs are candidates");
                ConnectionReport {
                    arc: o.arc,
                    mode: o.mode,
                    rb_count: o.economics.rb_count,
                    data_bits: o.economics.data_bits,
                    energy_j: o.economics.energy_j,
                    utility: o.economics.utility,
                    predicted_utility: problem.candidates()[k].utility,
                }
            })
            .collect();
        let report = IntervalReport::new(s.interval, cfg.n_users, solver, connections);
        Ok(IntervalOutcome {
            graph,
            problem,
            assignment,
            frames,
            report,
        })
    }
}

/// Runs `n_intervals` mode intervals and returns their reports.
pub fn run(cfg: &SimConfig) -> Result<Vec<IntervalReport>, SimError> {
    let mut sim = Simulation::new(cfg.clone())?;
    (0..cfg.n_intervals)
        .map(|_| sim.step().map(|o| o.report))
        .collect()
}

pub const INTERVALS_CSV_HEADER: &str = "j,tx,rx,mode,B,theta_bits,energy_J,utility";

/// `intervals.csv` body: one row per connection per interval, with header.
pub fn intervals_csv(reports: &[IntervalReport]) -> String {
    let mut s = String::from(INTERVALS_CSV_HEADER);
    s.push('\n');
    for r in reports {
        append_interval_rows(&mut s, r);
    }
    s
}

pub fn append_interval_rows(s: &mut String, r: &IntervalReport) {
    for c in &r.connections {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.interval,
            c.arc.tx.label(r.n_users),
            c.arc.rx.label(r.n_users),
            c.mode.index(),
            c.rb_count,
            c.data_bits,
            c.energy_j,
            c.utility
        );
    }
}

/// Plain-text run summary: totals, per-mode counts, and one line per interval.
pub fn summary_text(reports: &[IntervalReport]) -> String {
    let mut s = String::new();
    let total = |f: fn(&IntervalReport) -> f64| reports.iter().map(f).sum::<f64>();
    let mut modes = [0usize; 4];
    for r in reports {
        for (m, c) in modes.iter_mut().zip(r.mode_counts) {
            *m += c;
        }
    }
    let _ = writeln!(s, "intervals = {}", reports.len());
    let _ = writeln!(s, "total_utility = {}", total(|r| r.total_utility));
    let _ = writeln!(
        s,
        "total_throughput_bits = {}",
        total(|r| r.total_data_bits)
    );
    let _ = writeln!(s, "total_energy_J = {}", total(|r| r.total_energy_j));
    let _ = writeln!(
        s,
        "total_predicted_utility = {}",
        total(|r| r.predicted_utility)
    );
    for (i, m) in modes.iter().enumerate() {
        let _ = writeln!(s, "mode{i}_connections = {m}");
    }
    let exact = reports
        .iter()
        .filter(|r| r.solver == SolverUsed::Exact)
        .count();
    let _ = writeln!(s, "exact_intervals = {exact}");
    let _ = writeln!(s, "greedy_intervals = {}", reports.len() - exact);
    for r in reports {
        let _ = writeln!(
            s,
            "interval {} solver={} active={} modes={},{},{},{} utility={} predicted_utility={}",
            r.interval,
            r.solver.name(),
            r.connections.len(),
            r.mode_counts[0],
            r.mode_counts[1],
            r.mode_counts[2],
            r.mode_counts[3],
            r.total_utility,
            r.predicted_utility
        );
    }
    s
}
