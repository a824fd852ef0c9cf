use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poisson::{poisson_draw, ProfileShape, TildeParams};
use crate::replica::{derive_seed, replicate, rng_from_seed, site_seed, Jobs, RunStatus};
use crate::stats::mean_estimate;
use crate::two_species::{SharedClockLine, TwoSpeciesParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub m1: ProfileShape,
    pub m2: ProfileShape,
    pub params: TildeParams,
    pub n: usize,
    /// Half-width of the observation window in units of N.
    pub a: usize,
    /// Half-widths of the simulated tori in units of N, increasing.
    pub c_ladder: Vec<usize>,
    pub replicas: usize,
    pub horizon: f64,
    pub master_seed: u64,
    pub max_events: u64,
    #[serde(skip)]
    pub jobs: Jobs,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowRow {
    pub c: usize,
    pub sites: usize,
    pub mean_discrepancy: f64,
    pub stderr: f64,
    pub replicas: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowReport {
    pub rows: Vec<WindowRow>,
    pub reference_c: usize,
    /// Mean events per replica on the reference torus.
    pub reference_events: f64,
}

impl WindowReport {
    pub fn nonincreasing(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].mean_discrepancy <= w[0].mean_discrepancy)
    }

    pub fn discrepancy(&self, c: usize) -> Option<f64> {
        self.rows.iter().find(|r| r.c == c).map(|r| r.mean_discrepancy)
    }
}

/// Runs the process on tori {−CN, ..., CN} for each C with common random
/// numbers (per-site initial draws and per-site clocks keyed by the lattice
/// coordinate) and measures the mean per-site |Δη| + |Δξ| inside
/// {−AN, ..., AN} against the largest torus.
pub fn window_experiment(spec: &WindowSpec) -> Result<WindowReport> {
    spec.params.validate()?;
    if spec.c_ladder.is_empty() || spec.c_ladder.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("c_ladder", "must be nonempty and strictly increasing"));
    }
    if spec.a >= spec.c_ladder[0] {
        return Err(Error::param("a", "window must be narrower than the smallest torus"));
    }
    if spec.replicas == 0 {
        return Err(Error::param("replicas", "need at least one replica"));
    }
    if !(spec.horizon >= 0.0) {
        return Err(Error::param("horizon", format!("must be >= 0, got {}", spec.horizon)));
    }
    let params = TwoSpeciesParams::new(spec.params, spec.n);
    let n = spec.n as i64;
    let half = spec.a as i64 * n;
    let reference_c = *spec.c_ladder.last().expect("nonempty");

    let per_replica = replicate(spec.replicas, spec.master_seed, spec.jobs, |_, seed| {
        let init_seed = derive_seed(seed, 0);
        let init = |x: i64| {
            let mut rng = rng_from_seed(site_seed(init_seed, x));
            let theta = x as f64 / n as f64;
            let eta = poisson_draw(&mut rng, spec.m1.eval(theta).max(0.0));
            let xi = poisson_draw(&mut rng, spec.m2.eval(theta).max(0.0));
            (eta, xi)
        };
        let mut windows = Vec::with_capacity(spec.c_ladder.len());
        let mut ref_events = 0;
        for &c in &spec.c_ladder {
            let mut line = SharedClockLine::new(&params, c as i64 * n, init, derive_seed(seed, 1))?;
            if line.run(spec.horizon, spec.max_events)? == RunStatus::Truncated {
                return Err(Error::BudgetExceeded {
                    budget: spec.max_events,
                });
            }
            ref_events = line.events();
            windows.push((-half..=half).map(|x| line.at(x)).collect::<Vec<_>>());
        }
        let reference = windows.last().expect("nonempty").clone();
        let d: Vec<f64> = windows
            .iter()
            .map(|w| {
                let total: u64 = w
                    .iter()
                    .zip(&reference)
                    .map(|(a, b)| a.0.abs_diff(b.0) + a.1.abs_diff(b.1))
                    .sum();
                total as f64 / w.len() as f64
            })
            .collect();
        Ok((d, ref_events))
    })?;

    let rows = spec
        .c_ladder
        .iter()
        .enumerate()
        .map(|(k, &c)| {
            let est = mean_estimate(per_replica.iter().map(|(d, _)| d[k]));
            WindowRow {
                c,
                sites: (2 * c * spec.n) + 1,
                mean_discrepancy: est.mean,
                stderr: est.stderr,
                replicas: spec.replicas,
            }
        })
        .collect();
    let reference_events = per_replica.iter().map(|(_, e)| *e as f64).sum::<f64>() / spec.replicas as f64;
    Ok(WindowReport {
        rows,
        reference_c,
        reference_events,
    })
}

pub fn write_window_csv<W: Write>(report: &WindowReport, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in &report.rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}
