use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::epidemic::{
    survival_probability, ClusterCap, ClusterConfig, ModelParams, Recovery, SimLimits, SurvivalConfig,
};
use crate::error::{Error, Result};
use crate::lattice::Site;
use crate::replica::Jobs;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpec {
    pub recoveries: Vec<Recovery>,
    pub kappas: Vec<ClusterCap>,
    pub lambdas: Vec<f64>,
    pub phis: Vec<f64>,
    pub beta: f64,
    pub d: usize,
    pub horizon: f64,
    pub replicas: usize,
    pub master_seed: u64,
    pub limits: SimLimits,
    #[serde(skip)]
    pub jobs: Jobs,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhaseRow {
    pub model: String,
    pub kappa: String,
    pub lambda: f64,
    pub beta: f64,
    pub phi: f64,
    pub p_hat: f64,
    pub ci: f64,
    pub replicas: usize,
    pub horizon: f64,
    /// φ + 2dλ < 1.
    pub below_line: bool,
    /// φ + 2d(λ ∨ β) < 1.
    pub below_line_max: bool,
    pub capped: usize,
    pub truncated: usize,
    pub seed: u64,
}

/// Survival estimate at every grid point, each from a single infected
/// individual at the origin. Every point uses the same master seed, so the
/// result of a point does not depend on which other points are scanned.
pub fn phase_scan(spec: &PhaseSpec) -> Result<Vec<PhaseRow>> {
    if spec.recoveries.is_empty() || spec.kappas.is_empty() || spec.lambdas.is_empty() || spec.phis.is_empty() {
        return Err(Error::param("grid", "every axis of the scan needs at least one value"));
    }
    let start = ClusterConfig::single(Site::origin(spec.d));
    let two_d = 2.0 * spec.d as f64;
    let cfg = SurvivalConfig {
        horizon: spec.horizon,
        replicas: spec.replicas,
        master_seed: spec.master_seed,
        limits: spec.limits,
        jobs: spec.jobs,
    };
    let mut rows = Vec::new();
    for &recovery in &spec.recoveries {
        for &kappa in &spec.kappas {
            for &lambda in &spec.lambdas {
                for &phi in &spec.phis {
                    let params = ModelParams::new(lambda, spec.beta, phi, kappa, spec.d, recovery);
                    let est = survival_probability(&params, &start, &cfg)?;
                    rows.push(PhaseRow {
                        model: recovery.to_string(),
                        kappa: kappa.to_string(),
                        lambda,
                        beta: spec.beta,
                        phi,
                        p_hat: est.p_hat,
                        ci: est.ci_halfwidth,
                        replicas: est.replicas,
                        horizon: spec.horizon,
                        below_line: phi + two_d * lambda < 1.0,
                        below_line_max: phi + two_d * lambda.max(spec.beta) < 1.0,
                        capped: est.capped,
                        truncated: est.truncated,
                        seed: spec.master_seed,
                    });
                }
            }
        }
    }
    Ok(rows)
}

pub fn write_phase_csv<W: Write>(rows: &[PhaseRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}
