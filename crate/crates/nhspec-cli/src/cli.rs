//! Argument parsing. Every subcommand takes exactly one of `--config` or
//! `--preset`, plus overrides for seed and output directory.

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(
    name = "nhspec",
    version,
    about = "Simulate, fit, and classify two-band non-Hermitian absorption spectra"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate one spectral line N_a(delta) at a fixed quasimomentum
    Spectrum {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        common: Common,
        /// Quasimomentum of the line (default: the config's `k`, else 0)
        #[arg(long, allow_hyphen_values = true)]
        k: Option<f64>,
        /// Ignore the configured noise model
        #[arg(long)]
        no_noise: bool,
    },
    /// Fit band energies across the quasimomentum grid
    Sweep {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        common: Common,
        /// Ignore the configured noise model
        #[arg(long)]
        no_noise: bool,
        /// Densify the k grid: points become (points - 1) * FACTOR + 1
        #[arg(long, value_name = "FACTOR")]
        grid_refine: Option<u32>,
    },
    /// Classify the complex-energy curves of a sweep (or of the closed form)
    Topology {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        common: Common,
        /// Base energy override, written RE,IM
        #[arg(long, value_name = "RE,IM", value_parser = parse_eb, allow_hyphen_values = true)]
        eb: Option<EbPair>,
    },
    /// Check the effective model against the six-level master equation
    Validate {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        common: Common,
        /// Quasimomentum of the comparison (default: the config's `k`, else 0)
        #[arg(long, allow_hyphen_values = true)]
        k: Option<f64>,
    },
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct Source {
    /// Path to a TOML run configuration
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Name of a bundled configuration
    #[arg(long, value_name = "NAME")]
    pub preset: Option<String>,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Override the configured seed
    #[arg(long)]
    pub seed: Option<u64>,
    /// Override the configured output directory
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EbPair {
    pub re: f64,
    pub im: f64,
}

fn parse_eb(s: &str) -> Result<EbPair, String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err(format!("expected RE,IM, got {s:?}"));
    }
    let re: f64 = parts[0].trim().parse().map_err(|e| format!("bad RE {:?}: {e}", parts[0]))?;
    let im: f64 = parts[1].trim().parse().map_err(|e| format!("bad IM {:?}: {e}", parts[1]))?;
    if !re.is_finite() || !im.is_finite() {
        return Err("base energy must be finite".into());
    }
    Ok(EbPair { re, im })
}
