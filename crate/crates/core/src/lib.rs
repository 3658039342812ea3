//! Headless agent-based simulation controller.
//!
//! A TCP server owns pools of simulation workspaces driven by a small
//! command/reporter language; a client mirrors the server operations; the
//! analysis toolkit runs Sobol sensitivity analysis and evolutionary
//! calibration against a population-stability objective.

pub mod analysis;
pub mod bench;
pub mod client;
pub mod cmdlang;
pub mod engine;
pub mod server;
