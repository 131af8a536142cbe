//! Command-line front end: configuration, the verification suite, and the
//! subcommand implementations, exposed as a library so integration tests can
//! drive them directly.

pub mod commands;
pub mod config;
pub mod spectrum;
pub mod verify;
