//! Simulation and numerical verification for lattice cluster epidemics and
//! their two-species hydrodynamic limit.

pub mod coupling;
pub mod epidemic;
pub mod error;
pub mod hydro;
pub mod io;
pub mod lattice;
pub mod pde;
pub mod poisson;
pub mod replica;
pub mod sampling;
pub mod stats;
pub mod two_species;

pub use error::{Error, Result};
