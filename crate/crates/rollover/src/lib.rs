//! Quote ingestion, Monte Carlo verification, reports and the command-line
//! driver around [`rollover_core`].

#![warn(missing_docs)]

pub mod cli;
pub mod config;
pub mod exec;
pub mod fixtures;
pub mod io;
pub mod mc;
pub mod price;
pub mod report;
pub mod validate;
