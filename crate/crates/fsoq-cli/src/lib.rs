//! Command-line front end for the free-space link simulator: named
//! scenario and weather presets, zenith sweeps, finite-key rate
//! evaluation, and a reproducible figure-dataset catalogue.
//!
//! Everything here is plumbing — configuration parsing and CSV/manifest
//! rendering around the algorithms in `fsoq-core`. Outputs are data-only
//! (CSV plus a replayable manifest); plotting is delegated to external
//! tools.

pub mod config;
pub mod figures;
pub mod output;
pub mod run;

pub use config::{ProtocolChoice, RawConfig, RunConfig};
pub use run::{run_scenario, PointResult, RunOutput};
