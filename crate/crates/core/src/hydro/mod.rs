//! End-to-end experiments: particle systems against the limiting PDE, the
//! boundary sensitivity of finite tori, and survival phase scans.

mod convergence;
mod phase;
mod window;

pub use convergence::{
    convergence_experiment, write_convergence_csv, write_replica_pairings_csv, ConvergenceReport, ConvergenceRow,
    ConvergenceSpec, ReplicaPairing,
};
pub use phase::{phase_scan, write_phase_csv, PhaseRow, PhaseSpec};
pub use window::{window_experiment, write_window_csv, WindowReport, WindowRow, WindowSpec};
