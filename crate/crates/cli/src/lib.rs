//! Command implementations behind the `cavity-ghz` binary.

pub mod commands;
pub mod config;
