//! Experiment runner for the amplitude-reduction simulator.
//!
//! [`config`] resolves a JSON document plus command-line overrides,
//! [`run`] executes it, [`figures`] holds the canonical configurations and
//! [`output`] renders reports as CSV or JSON.

pub mod config;
pub mod figures;
pub mod output;
pub mod run;
