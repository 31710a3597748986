//! Proportional Fair scheduling of active connections onto RB pools.
//!
//! Each subframe grants the shared pool to at most one cellular (mode 0)
//! connection, picked by the PF metric. Underlay (mode 1) connections reuse
//! the shared pool and overlay (mode 2) connections the dedicated pool in
//! every subframe. The overlay pool returns to the shared pool when no
//! overlay connection is active. WiFi (mode 3) connections hold no RBs.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::config::SimConfig;
use crate::economics::{EconomicsError, EnergyParams, LinkEconomics};
use crate::model::{Arc, Mode};
use crate::radio::RateTable;
use crate::selector::{Infeasible, ModeAssignment, SelectionProblem};

/// Initial PF average, in bits per subframe.
pub const PF_AVERAGE_FLOOR: f64 = 1.0;

pub const FRAME_CSV_HEADER: &str = "interval,frame,subframe,conn_tx,conn_rx,mode,rb_count";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScheduleError {
    #[error("assignment is infeasible: {0}")]
    Infeasible(#[from] Infeasible),
    #[error("no rates for active connection {0}")]
    MissingRate(Arc),
    #[error(transparent)]
    Economics(#[from] EconomicsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RbPools {
    /// RBs per subframe for modes 0 and 1.
    pub shared: u32,
    /// RBs per subframe for mode 2.
    pub overlay: u32,
}

impl RbPools {
    pub fn new(rb_per_subframe: u32, overlay_rb_pool: u32, overlay_active: bool) -> RbPools {
        if overlay_active {
            RbPools {
                shared: rb_per_subframe - overlay_rb_pool,
                overlay: overlay_rb_pool,
            }
        } else {
            RbPools {
                shared: rb_per_subframe,
                overlay: 0,
            }
        }
    }

    pub fn for_assignment(params: &SchedulerParams, active: &ModeAssignment) -> RbPools {
        let overlay_active = active.chosen.iter().any(|&(_, m)| m == Mode::OverlayInband);
        RbPools::new(
            params.rb_per_subframe,
            params.overlay_rb_pool,
            overlay_active,
        )
    }

    pub fn grant(&self, mode: Mode) -> u32 {
        match mode {
            Mode::Cellular | Mode::UnderlayInband => self.shared,
            Mode::OverlayInband => self.overlay,
            Mode::OutbandWifi => 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchedulerParams {
    pub rb_per_subframe: u32,
    pub overlay_rb_pool: u32,
    pub subframes_per_frame: u32,
    pub pf_ewma: f64,
}

impl SchedulerParams {
    pub fn from_config(cfg: &SimConfig) -> SchedulerParams {
        SchedulerParams {
            rb_per_subframe: cfg.rb_per_subframe,
            overlay_rb_pool: cfg.overlay_rb_pool,
            subframes_per_frame: cfg.subframes_per_frame,
            pf_ewma: cfg.pf_ewma,
        }
    }
}

/// Exponentially averaged served rate of each cellular connection.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PfState {
    averages: BTreeMap<Arc, f64>,
}

impl PfState {
    pub fn new() -> PfState {
        PfState::default()
    }

    pub fn average(&self, arc: &Arc) -> f64 {
        self.averages.get(arc).copied().unwrap_or(PF_AVERAGE_FLOOR)
    }

    /// Forgets connections that are no longer cellular-active.
    pub fn retain_active(&mut self, active: &ModeAssignment) {
        self.averages
            .retain(|arc, _| active.mode_of(arc) == Some(Mode::Cellular));
    }

    fn update(&mut self, arc: Arc, served: f64, ewma: f64) {
        let avg = self.averages.entry(arc).or_insert(PF_AVERAGE_FLOOR);
        *avg = (1.0 - ewma) * *avg + ewma * served;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Grant {
    pub arc: Arc,
    pub mode: Mode,
    pub rb_count: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SubframeGrants {
    pub cellular: Option<Grant>,
    pub d2d: Vec<Grant>,
}

impl SubframeGrants {
    pub fn iter(&self) -> impl Iterator<Item = &Grant> {
        self.cellular.iter().chain(self.d2d.iter())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrameAllocation {
    pub pools: RbPools,
    pub subframes: Vec<SubframeGrants>,
}

/// Schedules one frame after checking the assignment against the problem.
pub fn schedule_frame(
    problem: &SelectionProblem,
    active: &ModeAssignment,
    rates: &RateTable,
    params: &SchedulerParams,
    pf: &mut PfState,
) -> Result<FrameAllocation, ScheduleError> {
    problem.check_feasibility(active)?;
    let conns = connections(active, rates)?;
    Ok(frame(
        &conns,
        RbPools::for_assignment(params, active),
        params,
        pf,
    ))
}

/// Schedules `frames` consecutive frames of one mode interval.
pub fn schedule_interval(
    problem: &SelectionProblem,
    active: &ModeAssignment,
    rates: &RateTable,
    params: &SchedulerParams,
    pf: &mut PfState,
    frames: u32,
) -> Result<Vec<FrameAllocation>, ScheduleError> {
    problem.check_feasibility(active)?;
    let conns = connections(active, rates)?;
    let pools = RbPools::for_assignment(params, active);
    Ok((0..frames)
        .map(|_| frame(&conns, pools, params, pf))
        .collect())
}

struct Conn {
    arc: Arc,
    mode: Mode,
    bits_per_rb: u32,
}

fn connections(active: &ModeAssignment, rates: &RateTable) -> Result<Vec<Conn>, ScheduleError> {
    active
        .chosen
        .iter()
        .map(|&(arc, mode)| {
            let r = rates.get(&arc).ok_or(ScheduleError::MissingRate(arc))?;
            Ok(Conn {
                arc,
                mode,
                bits_per_rb: r.bits_per_rb,
            })
        })
        .collect()
}

fn frame(
    conns: &[Conn],
    pools: RbPools,
    params: &SchedulerParams,
    pf: &mut PfState,
) -> FrameAllocation {
    let d2d: Vec<Grant> = conns
        .iter()
        .filter(|c| c.mode != Mode::Cellular)
        .map(|c| Grant {
            arc: c.arc,
            mode: c.mode,
            rb_count: pools.grant(c.mode),
        })
        .collect();
    let cellular: Vec<&Conn> = conns.iter().filter(|c| c.mode == Mode::Cellular).collect();

    let mut subframes = Vec::with_capacity(params.subframes_per_frame as usize);
    for _ in 0..params.subframes_per_frame {
        let mut pick: Option<(usize, f64)> = None;
        for (id, c) in cellular.iter().enumerate() {
            let rate = c.bits_per_rb as f64 * pools.shared as f64;
            if rate <= 0.0 {
                continue;
            }
            let metric = rate / pf.average(&c.arc);
            // Strict comparison keeps the lower id on ties.
            if pick.map_or(true, |(_, best)| metric > best) {
                pick = Some((id, metric));
            }
        }
        for (id, c) in cellular.iter().enumerate() {
            let served = match pick {
                Some((p, _)) if p == id => c.bits_per_rb as f64 * pools.shared as f64,
                _ => 0.0,
            };
            pf.update(c.arc, served, params.pf_ewma);
        }
        subframes.push(SubframeGrants {
            cellular: pick.map(|(id, _)| Grant {
                arc: cellular[id].arc,
                mode: Mode::Cellular,
                rb_count: pools.shared,
            }),
            d2d: d2d.clone(),
        });
    }
    FrameAllocation { pools, subframes }
}

/// Realized outcome of one active connection over a mode interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectionOutcome {
    pub arc: Arc,
    pub mode: Mode,
    pub scheduled_subframes: u64,
    pub economics: LinkEconomics,
}

/// Turns scheduled grants into `B`, data, energy and utility per connection.
///
/// WiFi connections carry `T * rate` regardless of the LTE frames.
pub fn accumulate_interval(
    frames: &[FrameAllocation],
    active: &ModeAssignment,
    rates: &RateTable,
    energy: &EnergyParams,
    interval_duration: f64,
) -> Result<Vec<ConnectionOutcome>, ScheduleError> {
    let mut counts: BTreeMap<(Arc, Mode), (u64, u64)> = BTreeMap::new();
    for f in frames {
        for sf in &f.subframes {
            for g in sf.iter() {
                let e = counts.entry((g.arc, g.mode)).or_default();
                e.0 += 1;
                e.1 += g.rb_count as u64;
            }
        }
    }
    active
        .chosen
        .iter()
        .map(|&(arc, mode)| {
            let r = rates.get(&arc).ok_or(ScheduleError::MissingRate(arc))?;
            let (subframes, rbs) = counts.get(&(arc, mode)).copied().unwrap_or((0, 0));
            let economics = if mode.is_lte() {
                LinkEconomics::lte(mode, rbs, r.bits_per_rb, energy)?
            } else {
                LinkEconomics::wifi(interval_duration, r.wifi_bps, energy)
            };
            Ok(ConnectionOutcome {
                arc,
                mode,
                scheduled_subframes: subframes,
                economics,
            })
        })
        .collect()
}

/// CSV rows (no header) for the grants of one interval.
pub fn frame_csv_rows(interval: u64, frames: &[FrameAllocation], n_users: usize) -> String {
    let mut s = String::new();
    for (fi, f) in frames.iter().enumerate() {
        for (si, sf) in f.subframes.iter().enumerate() {
            for g in sf.iter() {
                let _ = writeln!(
                    s,
                    "{interval},{fi},{si},{},{},{},{}",
                    g.arc.tx.label(n_users),
                    g.arc.rx.label(n_users),
                    g.mode.index(),
                    g.rb_count
                );
            }
        }
    }
    s
}
