//! Single-cell LTE-A simulator with multi-mode device-to-device links.
//!
//! Each mode interval the controller rebuilds the user graph, estimates CQI
//! and worst-case interference, selects a mode (cellular, underlay inband,
//! overlay inband or outband WiFi) for every connection by solving a
//! constrained utility maximization, and then schedules resource blocks
//! frame by frame with a Proportional Fair scheduler.

pub mod cli;
pub mod config;
pub mod economics;
pub mod model;
pub mod radio;
pub mod scheduler;
pub mod selector;
pub mod simulator;
