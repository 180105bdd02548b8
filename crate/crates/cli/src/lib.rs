//! Configuration, commands and result formats behind the `cca` executable.

pub mod commands;
pub mod config;
pub mod output;
