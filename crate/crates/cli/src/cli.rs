use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "thermocluster", version, about = "Thermal cluster-state simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub common: Common,
}

/// Flags shared by every subcommand; each reads only the ones it needs.
#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Lattice name, inline JSON spec, or a file holding a JSON spec or an edge list.
    #[arg(long, global = true)]
    pub lattice: Option<String>,

    /// Extents, e.g. `4x4` or `3,3,3`.
    #[arg(long, global = true)]
    pub dims: Option<String>,

    /// `periodic` (default) or `open`.
    #[arg(long, global = true)]
    pub boundary: Option<String>,

    /// Inverse temperature in units of 1/Δ; `inf` for the ground state.
    #[arg(long, global = true, conflicts_with = "kt")]
    pub beta: Option<f64>,

    /// Temperature in units of Δ.
    #[arg(long, global = true)]
    pub kt: Option<f64>,

    /// Field angle in [0, π/2].
    #[arg(long, global = true)]
    pub theta: Option<f64>,

    #[arg(long, global = true)]
    pub shots: Option<u64>,

    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Measurement pattern JSON file.
    #[arg(long, global = true)]
    pub pattern: Option<PathBuf>,

    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Emit JSON instead of CSV.
    #[arg(long, global = true)]
    pub json: bool,

    /// Dephasing threshold of the fault-tolerance argument.
    #[arg(long, global = true)]
    pub pc: Option<f64>,

    /// Site percolation threshold override.
    #[arg(long, global = true)]
    pub pc_site: Option<f64>,

    /// Bond percolation threshold override.
    #[arg(long, global = true)]
    pub pc_bond: Option<f64>,

    /// Largest graph handled by the exact dense oracle.
    #[arg(long, global = true)]
    pub cap_oracle: Option<usize>,

    /// Largest cluster realized as a state vector.
    #[arg(long, global = true)]
    pub cap_statevector: Option<usize>,

    /// Energy unit used when printing temperatures; internal math stays in units of Δ.
    #[arg(long, global = true, default_value_t = 1.0)]
    pub delta: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Region boundaries per θ, or region labels on a (kT, θ) grid.
    PhaseDiagram {
        #[arg(long, default_value_t = 32)]
        theta_steps: usize,
        /// Emit region labels on a grid instead of boundary rows.
        #[arg(long)]
        grid: bool,
        #[arg(long, default_value_t = 20.0)]
        kt_max: f64,
        #[arg(long, default_value_t = 40)]
        kt_steps: usize,
    },
    /// Sample bond configurations of the thermal state.
    Sample,
    /// Cluster statistics of sampled configurations.
    Percolation {
        /// Use the zero-field ensemble with this entangled fraction.
        #[arg(long)]
        pe: Option<f64>,
    },
    /// Run an adaptive measurement pattern on sampled instances.
    Simulate {
        /// Also compute the exact outcome distribution.
        #[arg(long)]
        exact: bool,
    },
    /// Ensemble decomposition of one thermal bond.
    DecomposeBond {
        /// Degree of the first endpoint; defaults to the lattice coordination.
        #[arg(long)]
        degree: Option<usize>,
        /// Degree of the second endpoint; defaults to `--degree`.
        #[arg(long)]
        degree_b: Option<usize>,
    },
    /// Critical temperature of the classical-simulability region.
    CriticalTemp,
    /// Run the exact-oracle checks on small graphs.
    Verify {
        #[arg(long, default_value_t = 6)]
        max_sites: usize,
    },
}
