//! Command-line front end for the `nhspec` library.
//!
//! Four subcommands cover the full pipeline: `spectrum` simulates one
//! spectral line, `sweep` fits band energies over a quasimomentum grid,
//! `topology` classifies the resulting complex-energy curves, and
//! `validate` checks the effective model against the six-level master
//! equation. Runs are configured by a TOML file or a named preset and are
//! deterministic given (config, seed).

pub mod cli;
pub mod commands;
pub mod config;
pub mod output;
pub mod presets;
