//! Per-interval energy, transferred data and utility of a connection.
//!
//! LTE modes (0-2) pay energy per allocated resource block and carry
//! `B * R` bits. WiFi (mode 3) carries `T * R` bits and pays a baseline for
//! both endpoints plus a per-bit cost. Utility is `theta - alpha * E`.

use thiserror::Error;

use crate::config::SimConfig;
use crate::model::Mode;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EconomicsError {
    #[error("negative energy parameter (p_tx = {p_tx}, p_rx = {p_rx})")]
    NegativeEnergy { p_tx: f64, p_rx: f64 },
}

/// Energy of an LTE connection: `(p_tx + p_rx) * B`.
pub fn lte_energy(p_tx: f64, p_rx: f64, rb_count: u64) -> Result<f64, EconomicsError> {
    if !(p_tx >= 0.0 && p_rx >= 0.0) {
        return Err(EconomicsError::NegativeEnergy { p_tx, p_rx });
    }
    Ok((p_tx + p_rx) * rb_count as f64)
}

/// Bits moved by an LTE connection: `B * R`.
pub fn lte_data(rb_count: u64, bits_per_rb: u64) -> u64 {
    rb_count * bits_per_rb
}

/// Bits moved over WiFi in an interval of `duration` seconds.
pub fn wifi_data(duration: f64, rate_bps: f64) -> f64 {
    duration * rate_bps
}

/// WiFi energy: both endpoints' baselines plus per-bit TX and RX cost.
pub fn wifi_energy(beta: f64, p_tx: f64, p_rx: f64, data_bits: f64) -> f64 {
    2.0 * beta + (p_tx + p_rx) * data_bits
}

pub fn utility(theta: f64, energy: f64, alpha: f64) -> f64 {
    theta - alpha * energy
}

/// Energy prices and the energy weight used to score connections.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyParams {
    pub p_tx: [f64; 4],
    pub p_rx: [f64; 4],
    pub beta_wifi: f64,
    pub alpha: f64,
}

impl EnergyParams {
    pub fn from_config(cfg: &SimConfig) -> EnergyParams {
        EnergyParams {
            p_tx: cfg.p_tx,
            p_rx: cfg.p_rx,
            beta_wifi: cfg.beta_wifi,
            alpha: cfg.alpha,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkEconomics {
    /// Resource blocks `B`; zero for WiFi.
    pub rb_count: u64,
    pub data_bits: f64,
    pub energy_j: f64,
    pub utility: f64,
}

impl LinkEconomics {
    /// An LTE connection granted `rb_count` RBs at `bits_per_rb`.
    pub fn lte(
        mode: Mode,
        rb_count: u64,
        bits_per_rb: u32,
        params: &EnergyParams,
    ) -> Result<LinkEconomics, EconomicsError> {
        debug_assert!(mode.is_lte());
        let i = mode.index() as usize;
        let energy_j = lte_energy(params.p_tx[i], params.p_rx[i], rb_count)?;
        let data_bits = lte_data(rb_count, bits_per_rb as u64) as f64;
        Ok(LinkEconomics {
            rb_count,
            data_bits,
            energy_j,
            utility: utility(data_bits, energy_j, params.alpha),
        })
    }

    /// A WiFi connection active for `duration` seconds.
    pub fn wifi(duration: f64, rate_bps: f64, params: &EnergyParams) -> LinkEconomics {
        let i = Mode::OutbandWifi.index() as usize;
        let data_bits = wifi_data(duration, rate_bps);
        let energy_j = wifi_energy(params.beta_wifi, params.p_tx[i], params.p_rx[i], data_bits);
        LinkEconomics {
            rb_count: 0,
            data_bits,
            energy_j,
            utility: utility(data_bits, energy_j, params.alpha),
        }
    }
}

/// Inputs of the RB-count predictor used before scheduling has happened.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RbForecast {
    pub subframes_per_interval: u64,
    pub rb_per_subframe: u32,
    pub overlay_rb_pool: u32,
    /// Number of eNB arcs competing for the single cellular slot per subframe.
    pub cellular_candidates: usize,
}

impl RbForecast {
    pub fn from_config(cfg: &SimConfig, cellular_candidates: usize) -> RbForecast {
        RbForecast {
            subframes_per_interval: cfg.subframes_per_interval(),
            rb_per_subframe: cfg.rb_per_subframe,
            overlay_rb_pool: cfg.overlay_rb_pool,
            cellular_candidates,
        }
    }

    /// Predicted `B` for one interval in the given mode.
    ///
    /// Cellular connections get a fair share of the subframes. Underlay
    /// connections transmit every subframe on the whole band, overlay ones on
    /// the dedicated pool. WiFi uses no RBs.
    pub fn predict(&self, mode: Mode) -> u64 {
        let total = self.subframes_per_interval;
        match mode {
            Mode::Cellular => {
                let share = total / self.cellular_candidates.max(1) as u64;
                share * self.rb_per_subframe as u64
            }
            Mode::UnderlayInband => total * self.rb_per_subframe as u64,
            Mode::OverlayInband => total * self.overlay_rb_pool as u64,
            Mode::OutbandWifi => 0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel_eq(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1e-300)
    }

    #[test]
    fn lte_energy_examples() {
        assert_eq!(lte_energy(5.0, 7.0, 0), Ok(0.0));
        assert!(rel_eq(lte_energy(2e-3, 1e-3, 10).unwrap(), 3e-2));
        assert_eq!(lte_energy(0.0, 0.0, 100), Ok(0.0));
        assert!(lte_energy(-1.0, 0.0, 1).is_err());
        assert!(lte_energy(0.0, f64::NAN, 1).is_err());
    }

    #[test]
    fn lte_data_examples() {
        assert_eq!(lte_data(0, 933), 0);
        assert_eq!(lte_data(100, 933), 93_300);
        assert_eq!(lte_data(57, 0), 0);
    }

    #[test]
    fn wifi_examples() {
        assert_eq!(wifi_data(2.0, 0.0), 0.0);
        assert_eq!(wifi_data(2.0, 54e6), 1.08e8);
        assert_eq!(wifi_data(4.0, 54e6), 2.0 * wifi_data(2.0, 54e6));
        assert_eq!(wifi_energy(0.05, 1e-8, 1e-8, 0.0), 0.1);
        assert!(rel_eq(wifi_energy(0.05, 1e-8, 1e-8, 1.08e8), 2.26));
        assert_eq!(wifi_energy(0.0, 0.0, 0.0, 123.0), 0.0);
    }

    #[test]
    fn utility_examples() {
        assert_eq!(utility(93_300.0, 3e-2, 0.0), 93_300.0);
        assert!(rel_eq(utility(93_300.0, 3e-2, 1e5), 90_300.0));
        assert!(utility(0.0, 1.0, 1.0) < 0.0);
    }

    #[test]
    fn forecast() {
        let f = RbForecast::from_config(&SimConfig::default(), 4);
        assert_eq!(f.predict(Mode::Cellular), 500 * 100);
        assert_eq!(f.predict(Mode::UnderlayInband), 2000 * 100);
        assert_eq!(f.predict(Mode::OverlayInband), 2000 * 20);
        assert_eq!(f.predict(Mode::OutbandWifi), 0);
        let lone = RbForecast {
            cellular_candidates: 0,
            ..f
        };
        assert_eq!(lone.predict(Mode::Cellular), 2000 * 100);
    }

    #[test]
    fn economics_bundle() {
        let p = EnergyParams {
            p_tx: [2e-3, 2e-3, 2e-3, 1e-8],
            p_rx: [1e-3, 1e-3, 1e-3, 1e-8],
            beta_wifi: 0.05,
            alpha: 1e5,
        };
        let e = LinkEconomics::lte(Mode::UnderlayInband, 100, 933, &p).unwrap();
        assert_eq!(e.data_bits, 93_300.0);
        assert!(rel_eq(e.energy_j, 0.3));
        assert_eq!(e.utility, e.data_bits - p.alpha * e.energy_j);
        let w = LinkEconomics::wifi(2.0, 54e6, &p);
        assert_eq!(w.rb_count, 0);
        assert!(rel_eq(w.energy_j, 2.26));
    }
}
