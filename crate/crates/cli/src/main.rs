//! `eink`: invariant reports, verification suites and tables for the built-in
//! metric families.
//!
//! Exit status is 0 on success, 2 when a verification has failures and 1 on
//! configuration or I/O errors.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};
use eink_core::verify::Suite;

#[derive(Debug, Parser)]
#[command(name = "eink", version, about = "Modified Einstein tensor invariants of explicit metrics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Built-in family: sphere, torus, hyperbolic, berger, product, cylinder_model, spaceform_product.
    #[arg(long, global = true)]
    pub family: Option<String>,
    /// JSON family descriptor `{"family": ..., "params": {...}, "grid": N}`; flags override its params.
    #[arg(long, global = true)]
    pub descriptor: Option<PathBuf>,
    /// Berger fibre scale; a comma-separated list for `berger-table`.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub t: Vec<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub radius: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    #[arg(long, global = true)]
    pub p: Option<usize>,
    #[arg(long, global = true)]
    pub q: Option<usize>,
    /// Berger sphere index (`S^{2n+1}`).
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Manifold dimension; a comma-separated list for `verify`.
    #[arg(long, global = true, value_delimiter = ',')]
    pub dim: Vec<usize>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub bump: Option<f64>,
    /// Sectional curvature of the second product factor: 0, 1 or -1.
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub kappa: Option<f64>,
    /// Points per chart axis (at least 8).
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Comma-separated `k` values.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub k: Vec<f64>,
    #[arg(long, global = true)]
    pub samples: Option<usize>,
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, global = true)]
    pub suite: Option<Suite>,
    /// Tube radii, comma-separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub r: Vec<f64>,
    #[arg(long, global = true, value_enum, default_value_t = Ambient::Sphere)]
    pub ambient: Ambient,
    /// Report file; standard output when absent.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Ein/ein estimates and Ein_k minima for one family.
    Report,
    /// Closed-form Berger table over a list of `t`.
    BergerTable,
    /// Run a verification suite.
    Verify,
    /// Euler characteristic and signature bound of a 4-manifold.
    GaussBonnet,
    /// Tube volumes and total scalar curvature around a closed geodesic.
    Tube,
    /// First variation of total scalar curvature against the Ein_k pairing.
    Gradient,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Ambient {
    Sphere,
    Flat,
}

pub const MIN_GRID: usize = 8;

impl Cli {
    fn validate(&self) -> anyhow::Result<()> {
        if let Some(g) = self.grid {
            if g < MIN_GRID {
                bail!("--grid must be at least {MIN_GRID}, got {g}");
            }
        }
        if let Some(k) = self.k.iter().find(|k| !k.is_finite()) {
            bail!("--k values must be finite, got {k}");
        }
        Ok(())
    }
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(v) = std::env::var("EINK_THREADS") else {
        return Ok(());
    };
    let n: usize = v.trim().parse().with_context(|| format!("EINK_THREADS must be a positive integer, got {v:?}"))?;
    if n == 0 {
        bail!("EINK_THREADS must be positive");
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = cli.validate().and_then(|_| configure_threads()).and_then(|_| commands::run(&cli));
    match result {
        Ok(commands::Status::Passed) => ExitCode::SUCCESS,
        Ok(commands::Status::Failed(n)) => {
            eprintln!("eink: {n} verification failure(s)");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("eink: {e:#}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn clap_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn lists_and_validation() {
        let cli = Cli::parse_from(["eink", "report", "--family", "sphere", "--k", "-1,0.5", "--t", "2"]);
        assert_eq!(cli.k, vec![-1.0, 0.5]);
        assert!(cli.validate().is_ok());
        let cli = Cli::parse_from(["eink", "report", "--grid", "7"]);
        assert!(cli.validate().is_err());
    }
}
