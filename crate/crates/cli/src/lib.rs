//! Command implementations behind the `cyclecert` binary.

pub mod commands;
pub mod config;
mod svg;

pub use commands::{cmd_certify, cmd_find_cycle, cmd_portrait, cmd_sweep, cmd_transform, exit, Outcome};
pub use config::RunConfig;
