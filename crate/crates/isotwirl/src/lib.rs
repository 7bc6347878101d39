//! Dense oracles, Monte-Carlo sampling, acceptance checks and the command
//! line for isospectral twirling.
//!
//! The closed forms live in [`isotwirl_core`]; this crate checks them
//! against brute force and turns scenario files into CSV output.

pub mod acceptance;
pub mod cli;
pub mod oracle;
pub mod scenario;

pub use isotwirl_core as core;
