//! Simulation configuration and its `key = value` file format.
//!
//! Every key is the name of a [`SimConfig`] field. Blank lines and
//! `#` comments are ignored. [`SimConfig::to_config_text`] writes every
//! key, so its output reloads to an identical configuration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("duplicate config key `{0}`")]
    DuplicateKey(String),
    #[error("invalid value `{value}` for `{key}`")]
    BadValue { key: String, value: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

/// Markov row over the next state of an unpaired user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionRow {
    pub to_dormant: f64,
    pub to_cellular: f64,
    pub to_seeking: f64,
}

impl TransitionRow {
    fn parse(s: &str) -> Option<TransitionRow> {
        let v = parse_f64_list(s)?;
        match v.as_slice() {
            &[to_dormant, to_cellular, to_seeking] => Some(TransitionRow {
                to_dormant,
                to_cellular,
                to_seeking,
            }),
            _ => None,
        }
    }

    fn values(&self) -> [f64; 3] {
        [self.to_dormant, self.to_cellular, self.to_seeking]
    }

    /// Stays in the current state with probability one.
    pub fn stay(state_index: usize) -> TransitionRow {
        let mut v = [0.0; 3];
        v[state_index] = 1.0;
        TransitionRow {
            to_dormant: v[0],
            to_cellular: v[1],
            to_seeking: v[2],
        }
    }
}

/// One step of the WiFi rate function: links up to `max_distance` meters get `rate_bps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WifiStep {
    pub max_distance: f64,
    pub rate_bps: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_users: usize,
    pub n_intervals: u64,
    pub rb_per_subframe: u32,
    pub subframes_per_frame: u32,
    pub frames_per_interval: u32,
    pub alpha: f64,
    pub gamma: f64,
    pub overlay_rb_pool: u32,
    /// Joules per RB for modes 0-2, Joules per bit for mode 3.
    pub p_tx: [f64; 4],
    pub p_rx: [f64; 4],
    pub beta_wifi: f64,
    pub transition_dormant: TransitionRow,
    pub transition_cellular: TransitionRow,
    pub pair_break_prob: f64,
    pub cell_radius: f64,
    pub d2d_range: f64,
    pub max_speed: f64,
    pub path_loss_exponent: f64,
    pub noise_power: f64,
    pub tx_power: f64,
    pub shadowing_sigma_db: f64,
    pub wifi_rates: Vec<WifiStep>,
    pub pf_ewma: f64,
    pub exact_node_budget: u64,
    pub topology_file: Option<PathBuf>,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n_users: 10,
            n_intervals: 50,
            rb_per_subframe: 100,
            subframes_per_frame: 10,
            frames_per_interval: 200,
            alpha: 1e6,
            gamma: 1e-9,
            overlay_rb_pool: 20,
            p_tx: [2e-6, 2e-6, 2e-6, 1e-8],
            p_rx: [0.0, 1e-6, 1e-6, 1e-8],
            beta_wifi: 0.05,
            transition_dormant: TransitionRow {
                to_dormant: 0.7,
                to_cellular: 0.2,
                to_seeking: 0.1,
            },
            transition_cellular: TransitionRow {
                to_dormant: 0.2,
                to_cellular: 0.6,
                to_seeking: 0.2,
            },
            pair_break_prob: 0.1,
            cell_radius: 500.0,
            d2d_range: 50.0,
            max_speed: 1.5,
            path_loss_exponent: 3.5,
            noise_power: 1e-10,
            tx_power: 0.2,
            shadowing_sigma_db: 0.0,
            wifi_rates: vec![
                WifiStep {
                    max_distance: 10.0,
                    rate_bps: 54e6,
                },
                WifiStep {
                    max_distance: 30.0,
                    rate_bps: 24e6,
                },
                WifiStep {
                    max_distance: 50.0,
                    rate_bps: 6e6,
                },
            ],
            pf_ewma: 0.01,
            exact_node_budget: 2_000_000,
            topology_file: None,
            seed: 1,
        }
    }
}

const SUBFRAME_SECONDS: f64 = 1e-3;

const MODE_KEYS_TX: [&str; 4] = ["p_tx_mode0", "p_tx_mode1", "p_tx_mode2", "p_tx_mode3"];
const MODE_KEYS_RX: [&str; 4] = ["p_rx_mode0", "p_rx_mode1", "p_rx_mode2", "p_rx_mode3"];

fn parse_f64_list(s: &str) -> Option<Vec<f64>> {
    s.split(',').map(|p| p.trim().parse::<f64>().ok()).collect()
}

fn fmt_list(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:?}"))
        .collect::<Vec<_>>()
        .join(",")
}

impl SimConfig {
    /// Subframes in one mode interval.
    pub fn subframes_per_interval(&self) -> u64 {
        self.frames_per_interval as u64 * self.subframes_per_frame as u64
    }

    /// Mode interval length `T` in seconds, derived from the frame structure.
    pub fn interval_duration(&self) -> f64 {
        self.subframes_per_interval() as f64 * SUBFRAME_SECONDS
    }

    pub fn load(path: &Path) -> Result<SimConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        SimConfig::parse(&text)
    }

    /// Parses a config file body on top of the defaults and validates the result.
    pub fn parse(text: &str) -> Result<SimConfig, ConfigError> {
        let mut cfg = SimConfig::default();
        let mut seen: Vec<String> = Vec::new();
        let mut declared_t: Option<(String, f64)> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or(ConfigError::Syntax { line: i + 1 })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() {
                return Err(ConfigError::Syntax { line: i + 1 });
            }
            if seen.iter().any(|k| k == key) {
                return Err(ConfigError::DuplicateKey(key.to_string()));
            }
            seen.push(key.to_string());
            if key == "interval_duration_T" {
                let t = value.parse::<f64>().map_err(|_| ConfigError::BadValue {
                    key: key.into(),
                    value: value.into(),
                })?;
                declared_t = Some((value.to_string(), t));
                continue;
            }
            cfg.set(key, value)?;
        }
        if let Some((raw, t)) = declared_t {
            // T follows from the frame structure; a declared value must agree.
            if (t - cfg.interval_duration()).abs() > 1e-12 {
                return Err(ConfigError::Invalid(format!(
                    "interval_duration_T = {raw} disagrees with frames_per_interval x subframes_per_frame x 1 ms = {}",
                    cfg.interval_duration()
                )));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one field from its textual value. Does not validate cross-field invariants.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let bad = || ConfigError::BadValue {
            key: key.to_string(),
            value: value.to_string(),
        };
        fn num<T: std::str::FromStr>(
            v: &str,
            bad: impl Fn() -> ConfigError,
        ) -> Result<T, ConfigError> {
            v.parse::<T>().map_err(|_| bad())
        }
        match key {
            "n_users" => self.n_users = num(value, bad)?,
            "n_intervals" => self.n_intervals = num(value, bad)?,
            "rb_per_subframe" => self.rb_per_subframe = num(value, bad)?,
            "subframes_per_frame" => self.subframes_per_frame = num(value, bad)?,
            "frames_per_interval" => self.frames_per_interval = num(value, bad)?,
            "alpha" => self.alpha = num(value, bad)?,
            "gamma" => self.gamma = num(value, bad)?,
            "overlay_rb_pool" => self.overlay_rb_pool = num(value, bad)?,
            "beta_wifi" => self.beta_wifi = num(value, bad)?,
            "transition_dormant" => {
                self.transition_dormant = TransitionRow::parse(value).ok_or_else(bad)?
            }
            "transition_cellular" => {
                self.transition_cellular = TransitionRow::parse(value).ok_or_else(bad)?
            }
            "pair_break_prob" => self.pair_break_prob = num(value, bad)?,
            "cell_radius" => self.cell_radius = num(value, bad)?,
            "d2d_range" => self.d2d_range = num(value, bad)?,
            "max_speed" => self.max_speed = num(value, bad)?,
            "path_loss_exponent" => self.path_loss_exponent = num(value, bad)?,
            "noise_power" => self.noise_power = num(value, bad)?,
            "tx_power" => self.tx_power = num(value, bad)?,
            "shadowing_sigma_db" => self.shadowing_sigma_db = num(value, bad)?,
            "wifi_rates" => self.wifi_rates = parse_wifi_rates(value).ok_or_else(bad)?,
            "pf_ewma" => self.pf_ewma = num(value, bad)?,
            "exact_node_budget" => self.exact_node_budget = num(value, bad)?,
            "topology_file" => {
                self.topology_file = if value.is_empty() {
                    None
                } else {
                    Some(PathBuf::from(value))
                }
            }
            "seed" => self.seed = num(value, bad)?,
            _ => {
                if let Some(i) = MODE_KEYS_TX.iter().position(|k| *k == key) {
                    self.p_tx[i] = num(value, bad)?;
                } else if let Some(i) = MODE_KEYS_RX.iter().position(|k| *k == key) {
                    self.p_rx[i] = num(value, bad)?;
                } else {
                    return Err(ConfigError::UnknownKey(key.to_string()));
                }
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.rb_per_subframe == 0
            || self.subframes_per_frame == 0
            || self.frames_per_interval == 0
        {
            return invalid("frame structure counts must be positive".into());
        }
        if self.overlay_rb_pool == 0 || self.overlay_rb_pool >= self.rb_per_subframe {
            return invalid(format!(
                "overlay_rb_pool must satisfy 0 < {} < rb_per_subframe = {}",
                self.overlay_rb_pool, self.rb_per_subframe
            ));
        }
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return invalid("alpha must be finite and >= 0".into());
        }
        if !(self.gamma > 0.0) {
            return invalid("gamma must be > 0".into());
        }
        let energies = self.p_tx.iter().chain(&self.p_rx).chain([&self.beta_wifi]);
        if energies.into_iter().any(|&e| !(e >= 0.0 && e.is_finite())) {
            return invalid("energy parameters must be finite and >= 0".into());
        }
        for (name, row) in [
            ("transition_dormant", self.transition_dormant),
            ("transition_cellular", self.transition_cellular),
        ] {
            let v = row.values();
            if v.iter().any(|p| !(0.0..=1.0).contains(p))
                || (v.iter().sum::<f64>() - 1.0).abs() > 1e-9
            {
                return invalid(format!("{name} must be probabilities summing to 1"));
            }
        }
        if !(0.0..=1.0).contains(&self.pair_break_prob) {
            return invalid("pair_break_prob must be in [0, 1]".into());
        }
        if !(self.cell_radius > 0.0) || !(self.d2d_range > 0.0) || !(self.max_speed >= 0.0) {
            return invalid("cell_radius and d2d_range must be > 0, max_speed >= 0".into());
        }
        if !(self.path_loss_exponent > 0.0) || !(self.noise_power > 0.0) || !(self.tx_power >= 0.0)
        {
            return invalid("path_loss_exponent and noise_power must be > 0, tx_power >= 0".into());
        }
        if !(self.shadowing_sigma_db >= 0.0) {
            return invalid("shadowing_sigma_db must be >= 0".into());
        }
        if self
            .wifi_rates
            .windows(2)
            .any(|w| w[0].max_distance >= w[1].max_distance)
            || self
                .wifi_rates
                .iter()
                .any(|s| !(s.rate_bps >= 0.0) || !(s.max_distance > 0.0))
        {
            return invalid("wifi_rates distances must be increasing and rates >= 0".into());
        }
        if !(self.pf_ewma > 0.0 && self.pf_ewma <= 1.0) {
            return invalid("pf_ewma must be in (0, 1]".into());
        }
        Ok(())
    }

    /// Fully resolved configuration in the file format, one key per line.
    pub fn to_config_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("n_users", self.n_users.to_string());
        kv("n_intervals", self.n_intervals.to_string());
        kv("rb_per_subframe", self.rb_per_subframe.to_string());
        kv("subframes_per_frame", self.subframes_per_frame.to_string());
        kv("frames_per_interval", self.frames_per_interval.to_string());
        kv(
            "interval_duration_T",
            format!("{:?}", self.interval_duration()),
        );
        kv("alpha", format!("{:?}", self.alpha));
        kv("gamma", format!("{:?}", self.gamma));
        kv("overlay_rb_pool", self.overlay_rb_pool.to_string());
        for i in 0..4 {
            kv(MODE_KEYS_TX[i], format!("{:?}", self.p_tx[i]));
            kv(MODE_KEYS_RX[i], format!("{:?}", self.p_rx[i]));
        }
        kv("beta_wifi", format!("{:?}", self.beta_wifi));
        kv(
            "transition_dormant",
            fmt_list(&self.transition_dormant.values()),
        );
        kv(
            "transition_cellular",
            fmt_list(&self.transition_cellular.values()),
        );
        kv("pair_break_prob", format!("{:?}", self.pair_break_prob));
        kv("cell_radius", format!("{:?}", self.cell_radius));
        kv("d2d_range", format!("{:?}", self.d2d_range));
        kv("max_speed", format!("{:?}", self.max_speed));
        kv(
            "path_loss_exponent",
            format!("{:?}", self.path_loss_exponent),
        );
        kv("noise_power", format!("{:?}", self.noise_power));
        kv("tx_power", format!("{:?}", self.tx_power));
        kv(
            "shadowing_sigma_db",
            format!("{:?}", self.shadowing_sigma_db),
        );
        kv(
            "wifi_rates",
            self.wifi_rates
                .iter()
                .map(|w| format!("{:?}:{:?}", w.max_distance, w.rate_bps))
                .collect::<Vec<_>>()
                .join(","),
        );
        kv("pf_ewma", format!("{:?}", self.pf_ewma));
        kv("exact_node_budget", self.exact_node_budget.to_string());
        kv(
            "topology_file",
            self.topology_file
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
        );
        kv("seed", self.seed.to_string());
        s
    }
}

/// `d1:r1,d2:r2,...` with distances in meters and rates in bits/s.
fn parse_wifi_rates(s: &str) -> Option<Vec<WifiStep>> {
    if s.trim().is_empty() {
        return Some(Vec::new());
    }
    s.split(',')
        .map(|step| {
            let (d, r) = step.split_once(':')?;
            Some(WifiStep {
                max_distance: d.trim().parse().ok()?,
                rate_bps: r.trim().parse().ok()?,
            })
        })
        .collect()
}
