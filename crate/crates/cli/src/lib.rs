//! Command-line front end: configuration, experiments, CSV output and plot
//! scripts.

pub mod cli;
pub mod config;
pub mod experiments;
pub mod output;
pub mod plot;
