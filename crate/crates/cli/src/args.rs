//! Flag definitions. Every value is optional so that a `--config` JSON file
//! can supply it; config keys are the flag names in snake_case.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "epilattice",
    version,
    about = "Cluster epidemics on Z^d and their two-species hydrodynamic limit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// One trajectory of the cluster epidemic.
    Simulate(SimulateArgs),
    /// Finite-horizon survival probability from a single infected site.
    Survival(SurvivalArgs),
    /// Bisection for the critical within-cluster rate.
    PhiC(PhiCArgs),
    /// Coupled replicas checked for ordering (and optionally marginals).
    CoupleCheck(CoupleArgs),
    /// Closed-form tilde rates against Monte Carlo under product Poisson.
    TildeTable(TildeArgs),
    /// The two-species particle system on the discrete torus.
    TwoSpecies(TwoSpeciesArgs),
    /// Reaction-diffusion solve on the circle.
    Pde(PdeArgs),
    /// Particle pairings against the PDE across an N ladder.
    HydroConverge(ConvergeArgs),
    /// Boundary sensitivity of finite tori under shared clocks.
    Window(WindowArgs),
    /// Survival over a grid of model parameters.
    PhaseScan(PhaseArgs),
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct Common {
    /// JSON file with default values for any flag.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    /// Output directory (default: $EPILATTICE_OUT/<command> or epilattice-out/<command>).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Event budget per replica.
    #[arg(long)]
    pub max_events: Option<u64>,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct ModelArgs {
    /// Outside infection rate into healthy clusters.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Outside infection rate into infected clusters.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Within-cluster infection rate.
    #[arg(long)]
    pub phi: Option<f64>,
    /// Cluster size: an integer or `inf`.
    #[arg(long)]
    pub kappa: Option<String>,
    /// `irp` or `crp`.
    #[arg(long)]
    pub model: Option<String>,
    /// Lattice dimension.
    #[arg(long)]
    pub d: Option<usize>,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct RateArgs {
    #[arg(long)]
    pub alpha1: Option<f64>,
    #[arg(long)]
    pub alpha2: Option<f64>,
    /// Death coefficient.
    #[arg(long)]
    pub kd: Option<f64>,
    #[arg(long)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub phi: Option<f64>,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct ProfileArgs {
    /// Healthy profile: const:c, fourier:c,a1,b1,..., values:v0,v1,... or file:path.
    #[arg(long)]
    pub m1: Option<String>,
    /// Infected profile, same syntax.
    #[arg(long)]
    pub m2: Option<String>,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long)]
    pub horizon: Option<f64>,
    /// Initial infected sites, e.g. `0:3;1:1` or `0,0:2` in d=2.
    #[arg(long)]
    pub init: Option<String>,
    /// Snapshot times.
    #[arg(long, value_delimiter = ',')]
    pub snapshots: Option<Vec<f64>>,
    /// Stop once this many individuals are infected.
    #[arg(long)]
    pub cap: Option<u64>,
    /// Also write every event to events.csv.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub events: Option<bool>,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct SurvivalArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub replicas: Option<usize>,
    /// Population at which a replica counts as surviving; 0 disables.
    #[arg(long)]
    pub cap: Option<u64>,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct PhiCArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long)]
    pub phi_lo: Option<f64>,
    #[arg(long)]
    pub phi_hi: Option<f64>,
    #[arg(long)]
    pub tolerance: Option<f64>,
    /// Survival level defining the critical point.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub replicas: Option<usize>,
    #[arg(long)]
    pub cap: Option<u64>,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct CoupleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Second process; unset values copy the first.
    #[arg(long)]
    pub lambda_b: Option<f64>,
    #[arg(long)]
    pub beta_b: Option<f64>,
    #[arg(long)]
    pub phi_b: Option<f64>,
    #[arg(long)]
    pub kappa_b: Option<String>,
    /// Couple against the contact process with the same lambda.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub versus_contact: Option<bool>,
    /// `pointwise`, `occupancy` or `unordered`.
    #[arg(long)]
    pub order: Option<String>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub replicas: Option<usize>,
    #[arg(long)]
    pub cap: Option<u64>,
    /// Also compare coupled marginals with independent runs (KS test).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub marginals: Option<bool>,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct TildeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub rates: RateArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Intensities used for both a and b.
    #[arg(long, value_delimiter = ',')]
    pub grid: Option<Vec<f64>>,
    #[arg(long)]
    pub samples: Option<usize>,
    /// Also check the change-of-variables identities at every grid point.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub identities: Option<bool>,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct TwoSpeciesArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub rates: RateArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub profiles: ProfileArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Scaling parameter (torus size).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub snapshots: Option<Vec<f64>>,
    #[arg(long)]
    pub replicas: Option<usize>,
    /// one, cosK, sinK.
    #[arg(long, value_delimiter = ',')]
    pub observables: Option<Vec<String>>,
    /// Switch off all local reactions.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub diffusion_only: Option<bool>,
    /// Approximate tau-leaping with this step instead of exact simulation.
    #[arg(long)]
    pub tau: Option<f64>,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct PdeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub rates: RateArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub profiles: ProfileArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// Grid points (default 256, or the sample count of a sampled profile).
    #[arg(long)]
    pub grid: Option<usize>,
    /// Final time.
    #[arg(long = "T")]
    #[serde(rename = "T")]
    pub t: Option<f64>,
    /// Time step (default: the stability limit).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Output times (default: T only).
    #[arg(long, value_delimiter = ',')]
    pub outputs: Option<Vec<f64>>,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct ConvergeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub rates: RateArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub profiles: ProfileArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long, value_delimiter = ',')]
    pub ns: Option<Vec<usize>>,
    #[arg(long)]
    pub replicas: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub observables: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub times: Option<Vec<f64>>,
    #[arg(long)]
    pub pde_grid: Option<usize>,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct WindowArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub rates: RateArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub profiles: ProfileArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    #[arg(long)]
    pub n: Option<usize>,
    /// Window half-width in units of N.
    #[arg(long)]
    pub a: Option<usize>,
    /// Torus half-widths in units of N.
    #[arg(long, value_delimiter = ',')]
    pub c_ladder: Option<Vec<usize>>,
    #[arg(long)]
    pub replicas: Option<usize>,
    #[arg(long)]
    pub horizon: Option<f64>,
}

#[derive(Debug, Args, Serialize, Deserialize)]
pub struct PhaseArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
    /// irp, crp.
    #[arg(long, value_delimiter = ',')]
    pub models: Option<Vec<String>>,
    /// Cluster sizes, integers or `inf`.
    #[arg(long, value_delimiter = ',')]
    pub kappas: Option<Vec<String>>,
    #[arg(long, value_delimiter = ',')]
    pub lambdas: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub phis: Option<Vec<f64>>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub d: Option<usize>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub replicas: Option<usize>,
    #[arg(long)]
    pub cap: Option<u64>,
}
