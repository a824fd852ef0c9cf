use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pde::{solve, SolverConfig};
use crate::poisson::{sample_product_poisson, ProfileShape, TildeParams};
use crate::replica::{derive_seed, derive_stream, replicate, Jobs, RunStatus};
use crate::stats::mean_estimate;
use crate::two_species::{empirical_pairing, simulate_torus, Observable, Species, TorusOptions, TwoSpeciesParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceSpec {
    pub m1: ProfileShape,
    pub m2: ProfileShape,
    pub params: TildeParams,
    pub ns: Vec<usize>,
    pub replicas: usize,
    pub observables: Vec<Observable>,
    pub times: Vec<f64>,
    pub master_seed: u64,
    /// Grid of the reference PDE solve.
    pub pde_grid: usize,
    pub max_events: u64,
    #[serde(skip)]
    pub jobs: Jobs,
}

impl ConvergenceSpec {
    fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.m1.validate()?;
        self.m2.validate()?;
        if self.ns.is_empty() || self.ns.iter().any(|&n| n < 2) {
            return Err(Error::param("ns", "need a nonempty ladder of sizes >= 2"));
        }
        if self.replicas < 2 {
            return Err(Error::param("replicas", "need at least 2 replicas for an error bar"));
        }
        if self.observables.is_empty() || self.times.is_empty() {
            return Err(Error::param("observables", "need at least one observable and one time"));
        }
        if let Some(t) = self.times.iter().find(|t| !(**t >= 0.0)) {
            return Err(Error::param("times", format!("must be >= 0, got {t}")));
        }
        if self.pde_grid < 8 {
            return Err(Error::param("pde_grid", "need at least 8 grid points"));
        }
        Ok(())
    }
}

/// Pairings of one replica at one size, indexed [time][observable][species].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicaPairing {
    pub n: usize,
    pub replica: usize,
    pub seed: u64,
    pub values: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub n: usize,
    pub t: f64,
    pub observable_id: String,
    pub species: &'static str,
    pub mean: f64,
    pub stderr: f64,
    pub target: f64,
    pub abs_error: f64,
    pub replicas: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<ConvergenceRow>,
    pub pairings: Vec<ReplicaPairing>,
    /// Largest change of any target when the PDE grid is doubled.
    pub target_refinement_change: f64,
    /// Whether that change is below 10% of the smallest Monte Carlo error bar.
    pub numerics_subordinate: bool,
    pub pde_clipped: u64,
    pub pde_min: f64,
}

impl ConvergenceReport {
    pub fn row(&self, n: usize, t: f64, g: Observable, s: Species) -> Option<&ConvergenceRow> {
        let id = g.id();
        self.rows
            .iter()
            .find(|r| r.n == n && r.t == t && r.observable_id == id && r.species == s.name())
    }

    /// Whether the error decreases weakly along the N ladder for every
    /// (time, observable, species).
    pub fn errors_nonincreasing(&self) -> bool {
        let mut keys: Vec<(f64, &str, &str)> = self
            .rows
            .iter()
            .map(|r| (r.t, r.observable_id.as_str(), r.species))
            .collect();
        keys.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(b.1)).then(a.2.cmp(b.2)));
        keys.dedup();
        keys.into_iter().all(|(t, id, sp)| {
            let mut errs: Vec<(usize, f64)> = self
                .rows
                .iter()
                .filter(|r| r.t == t && r.observable_id == id && r.species == sp)
                .map(|r| (r.n, r.abs_error))
                .collect();
            errs.sort_by_key(|e| e.0);
            errs.windows(2).all(|w| w[1].1 <= w[0].1)
        })
    }
}

fn targets(spec: &ConvergenceSpec, grid: usize) -> Result<(Vec<Vec<[f64; 2]>>, u64, f64)> {
    let m1 = spec.m1.grid(grid)?;
    let m2 = spec.m2.grid(grid)?;
    let horizon = spec.times.iter().copied().fold(0.0, f64::max);
    let sol = solve(
        &m1,
        &m2,
        &spec.params,
        horizon,
        &SolverConfig::stable(grid),
        &spec.times,
    )?;
    let mut out = Vec::with_capacity(spec.times.len());
    for &t in &spec.times {
        let st = sol
            .states
            .iter()
            .find(|s| s.t == t)
            .expect("solver lands on every output time");
        out.push(
            spec.observables
                .iter()
                .map(|g| {
                    [
                        st.lambda1.integrate(|th| g.eval(th)),
                        st.lambda2.integrate(|th| g.eval(th)),
                    ]
                })
                .collect(),
        );
    }
    Ok((out, sol.clipped, sol.min_value))
}

/// Replicas of the torus process at each N, paired with each observable and
/// compared with the PDE solution.
pub fn convergence_experiment(spec: &ConvergenceSpec) -> Result<ConvergenceReport> {
    spec.validate()?;
    let horizon = spec.times.iter().copied().fold(0.0, f64::max);
    let (target, pde_clipped, pde_min) = targets(spec, spec.pde_grid)?;
    let (fine, _, _) = targets(spec, 2 * spec.pde_grid)?;
    let refinement_change = target
        .iter()
        .flatten()
        .zip(fine.iter().flatten())
        .flat_map(|(a, b)| [(a[0] - b[0]).abs(), (a[1] - b[1]).abs()])
        .fold(0.0, f64::max);

    let mut rows = Vec::new();
    let mut pairings = Vec::new();
    for &n in &spec.ns {
        let params = TwoSpeciesParams::new(spec.params, n);
        let m1 = spec.m1.grid(n)?.into_values();
        let m2 = spec.m2.grid(n)?.into_values();
        let (p1, p2) = (crate::poisson::Profile::new(m1)?, crate::poisson::Profile::new(m2)?);
        let opts = TorusOptions {
            max_events: spec.max_events,
            snapshot_times: spec.times.clone(),
        };
        let runs = replicate(
            spec.replicas,
            derive_stream(spec.master_seed, &[n as u64]),
            spec.jobs,
            |i, seed| {
                let c0 = sample_product_poisson(&p1, &p2, derive_seed(seed, 0))?;
                let tr = simulate_torus(&c0, &params, horizon, derive_seed(seed, 1), &opts)?;
                if tr.status == RunStatus::Truncated {
                    return Err(Error::BudgetExceeded {
                        budget: spec.max_events,
                    });
                }
                let values = spec
                    .times
                    .iter()
                    .map(|&t| {
                        let (_, c) = tr
                            .snapshots
                            .iter()
                            .find(|(s, _)| *s == t)
                            .expect("snapshot at every time");
                        spec.observables
                            .iter()
                            .map(|g| {
                                [
                                    empirical_pairing(c.eta(), |th| g.eval(th)),
                                    empirical_pairing(c.xi(), |th| g.eval(th)),
                                ]
                            })
                            .collect()
                    })
                    .collect();
                Ok(ReplicaPairing {
                    n,
                    replica: i,
                    seed,
                    values,
                })
            },
        )?;
        for (ti, &t) in spec.times.iter().enumerate() {
            for (gi, g) in spec.observables.iter().enumerate() {
                for (si, s) in Species::BOTH.into_iter().enumerate() {
                    let est = mean_estimate(runs.iter().map(|r| r.values[ti][gi][si]));
                    let tgt = target[ti][gi][si];
                    rows.push(ConvergenceRow {
                        n,
                        t,
                        observable_id: g.id(),
                        species: s.name(),
                        mean: est.mean,
                        stderr: est.stderr,
                        target: tgt,
                        abs_error: (est.mean - tgt).abs(),
                        replicas: spec.replicas,
                    });
                }
            }
        }
        pairings.extend(runs);
    }
    let smallest_error = rows
        .iter()
        .map(|r| r.stderr)
        .filter(|s| *s > 0.0)
        .fold(f64::INFINITY, f64::min);
    Ok(ConvergenceReport {
        rows,
        pairings,
        target_refinement_change: refinement_change,
        numerics_subordinate: refinement_change < 0.1 * smallest_error,
        pde_clipped,
        pde_min,
    })
}

pub fn write_convergence_csv<W: Write>(report: &ConvergenceReport, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in &report.rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}

/// Rows `n,t,observable_id,species,value,replica`.
pub fn write_replica_pairings_csv<W: Write>(report: &ConvergenceReport, spec: &ConvergenceSpec, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["n", "t", "observable_id", "species", "value", "replica"])?;
    for p in &report.pairings {
        for (ti, t) in spec.times.iter().enumerate() {
            for (gi, g) in spec.observables.iter().enumerate() {
                for (si, s) in Species::BOTH.into_iter().enumerate() {
                    out.serialize((p.n, t, g.id(), s.name(), p.values[ti][gi][si], p.replica))?;
                }
            }
        }
    }
    out.flush()?;
    Ok(())
}
