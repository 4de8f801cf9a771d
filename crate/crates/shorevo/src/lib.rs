//! Files, configuration, plots and the command line around `shorevo-core`.
//!
//! A dataset is a directory of CSV files (see [`io`]) with a `config.json`
//! (see [`config`]). The `shorevo` binary simulates datasets, runs the
//! odometry, evaluates a trajectory against GPS and draws the results.

pub mod cli;
pub mod compare;
pub mod config;
pub mod error;
pub mod io;
pub mod plot;

pub use error::LoadError;
