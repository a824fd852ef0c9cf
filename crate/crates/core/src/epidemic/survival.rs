use serde::Serialize;

use super::sim::{simulate, SimLimits, SimOptions};
use super::{ClusterConfig, ModelParams};
use crate::error::{Error, Result};
use crate::replica::{replicate, Jobs, RunStatus};
use crate::stats::proportion_halfwidth;

/// Default population cap for survival runs. A linear birth–death chain
/// started from this many individuals dies out with probability at most
/// (μ/λ)^1000, so hitting the cap is treated as survival.
pub const DEFAULT_POPULATION_CAP: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurvivalConfig {
    pub horizon: f64,
    pub replicas: usize,
    pub master_seed: u64,
    pub limits: SimLimits,
    #[serde(skip)]
    pub jobs: Jobs,
}

impl SurvivalConfig {
    pub fn new(horizon: f64, replicas: usize, master_seed: u64) -> Self {
        SurvivalConfig {
            horizon,
            replicas,
            master_seed,
            limits: SimLimits {
                population_cap: Some(DEFAULT_POPULATION_CAP),
                ..SimLimits::default()
            },
            jobs: Jobs::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalEstimate {
    pub p_hat: f64,
    /// Normal-approximation 95% half-width.
    pub ci_halfwidth: f64,
    pub replicas: usize,
    pub horizon: f64,
    pub survivors: usize,
    /// Survivors that stopped at the population cap.
    pub capped: usize,
    /// Survivors that ran out of event budget.
    pub truncated: usize,
    pub master_seed: u64,
}

/// Fraction of replicas that are still infected at the horizon.
pub fn survival_probability(
    params: &ModelParams,
    config0: &ClusterConfig,
    cfg: &SurvivalConfig,
) -> Result<SurvivalEstimate> {
    if cfg.replicas == 0 {
        return Err(Error::param("replicas", "need at least one replica"));
    }
    params.validate()?;
    config0.validate(params)?;
    let opts = SimOptions {
        limits: cfg.limits,
        ..SimOptions::default()
    };
    let statuses = replicate(cfg.replicas, cfg.master_seed, cfg.jobs, |_, seed| {
        simulate(config0, params, cfg.horizon, seed, &opts).map(|t| t.status)
    })?;
    let count = |s: RunStatus| statuses.iter().filter(|&&x| x == s).count();
    let survivors = statuses.iter().filter(|s| s.survived()).count();
    let p_hat = survivors as f64 / cfg.replicas as f64;
    Ok(SurvivalEstimate {
        p_hat,
        ci_halfwidth: proportion_halfwidth(p_hat, cfg.replicas),
        replicas: cfg.replicas,
        horizon: cfg.horizon,
        survivors,
        capped: count(RunStatus::Capped),
        truncated: count(RunStatus::Truncated),
        master_seed: cfg.master_seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhiSearch {
    pub lo: f64,
    pub hi: f64,
    /// Stop once the bracket is narrower than this.
    pub tolerance: f64,
    pub threshold: f64,
    pub survival: SurvivalConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiProbe {
    pub phi: f64,
    pub estimate: SurvivalEstimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PhiCriticalEstimate {
    pub phi_c: f64,
    pub lo: f64,
    pub hi: f64,
    pub probes: Vec<PhiProbe>,
}

/// Bisection on φ against the finite-horizon survival estimate. Every probe
/// reuses the same master seed, so neighbouring probes share randomness.
pub fn critical_phi_search(
    base: &ModelParams,
    config0: &ClusterConfig,
    search: &PhiSearch,
) -> Result<PhiCriticalEstimate> {
    let PhiSearch {
        mut lo,
        mut hi,
        tolerance,
        threshold,
        survival,
    } = *search;
    if !(tolerance > 0.0) {
        return Err(Error::param("tolerance", format!("must be > 0, got {tolerance}")));
    }
    let probe = |phi: f64| -> Result<PhiProbe> {
        let params = ModelParams { phi, ..*base };
        Ok(PhiProbe {
            phi,
            estimate: survival_probability(&params, config0, &survival)?,
        })
    };
    let invalid = |p_lo: f64, p_hi: f64| Error::BracketInvalid {
        lo: search.lo,
        hi: search.hi,
        threshold,
        p_lo,
        p_hi,
    };
    if !(lo < hi) || lo < 0.0 {
        return Err(invalid(f64::NAN, f64::NAN));
    }
    let mut probes = vec![probe(lo)?, probe(hi)?];
    let (p_lo, p_hi) = (probes[0].estimate.p_hat, probes[1].estimate.p_hat);
    if !(p_lo < threshold && threshold < p_hi) {
        return Err(invalid(p_lo, p_hi));
    }
    while hi - lo >= tolerance {
        let mid = 0.5 * (lo + hi);
        let pr = probe(mid)?;
        if pr.estimate.p_hat < threshold {
            lo = mid;
        } else {
            hi = mid;
        }
        probes.push(pr);
    }
    probes.sort_by(|a, b| a.phi.total_cmp(&b.phi));
    Ok(PhiCriticalEstimate {
        phi_c: 0.5 * (lo + hi),
        lo,
        hi,
        probes,
    })
}

/// Pairs of probes (sorted by φ) whose survival estimates decrease by more
/// than the combined 95% half-widths. `slack` adds an absolute allowance.
pub fn monotonicity_violations(probes: &[PhiProbe], slack: f64) -> Vec<(f64, f64)> {
    let mut sorted: Vec<&PhiProbe> = probes.iter().collect();
    sorted.sort_by(|a, b| a.phi.total_cmp(&b.phi));
    let mut out = Vec::new();
    for (i, a) in sorted.iter().enumerate() {
        for b in &sorted[i + 1..] {
            let (ea, eb) = (&a.estimate, &b.estimate);
            let allowed = ea.ci_halfwidth.hypot(eb.ci_halfwidth) + slack;
            if ea.p_hat - eb.p_hat > allowed {
                out.push((a.phi, b.phi));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epidemic::{ClusterCap, Recovery};
    use crate::lattice::Site;

    #[test]
    fn no_infection_dies_out() {
        let p = ModelParams::new(0.0, 0.0, 0.0, ClusterCap::Infinite, 1, Recovery::Individual);
        let est = survival_probability(
            &p,
            &ClusterConfig::single(Site::line(0)),
            &SurvivalConfig::new(20.0, 200, 1),
        )
        .unwrap();
        assert_eq!(est.p_hat, 0.0);
        assert_eq!(est.ci_halfwidth, 0.0);
    }

    #[test]
    fn degenerate_bracket_is_rejected() {
        let p = ModelParams::new(0.2, 0.2, 0.0, ClusterCap::Infinite, 1, Recovery::Individual);
        let search = PhiSearch {
            lo: 1.0,
            hi: 1.0,
            tolerance: 0.01,
            threshold: 0.1,
            survival: SurvivalConfig::new(10.0, 10, 1),
        };
        let err = critical_phi_search(&p, &ClusterConfig::single(Site::line(0)), &search).unwrap_err();
        assert!(matches!(err, Error::BracketInvalid { .. }));
    }

    #[test]
    fn zero_replicas_rejected() {
        let p = ModelParams::new(0.0, 0.0, 0.0, ClusterCap::Infinite, 1, Recovery::Individual);
        assert!(survival_probability(&p, &ClusterConfig::empty(), &SurvivalConfig::new(1.0, 0, 1)).is_err());
    }
}
