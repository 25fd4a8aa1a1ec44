//! Library half of the `csaqr` command: configuration parsing and the four
//! subcommands, callable in-process.

pub mod commands;
pub mod config;
