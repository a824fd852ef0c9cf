use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use super::{apply, channel_rates, EventKind, TwoSpeciesConfig, TwoSpeciesParams};
use crate::error::{Error, Result};
use crate::replica::{rng_from_seed, RunStatus};
use crate::sampling::SumTree;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusOptions {
    pub max_events: u64,
    pub snapshot_times: Vec<f64>,
}

impl Default for TorusOptions {
    fn default() -> Self {
        TorusOptions {
            max_events: 100_000_000,
            snapshot_times: Vec::new(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TorusTrajectory {
    pub seed: u64,
    pub snapshots: Vec<(f64, TwoSpeciesConfig)>,
    pub final_config: TwoSpeciesConfig,
    pub final_time: f64,
    pub events: u64,
    pub jumps: u64,
    pub status: RunStatus,
}

/// Direct-method state: one sum-tree leaf per site holding its total rate.
pub struct TorusEngine<'p> {
    params: &'p TwoSpeciesParams,
    eta: Vec<u64>,
    xi: Vec<u64>,
    tree: SumTree,
}

impl<'p> TorusEngine<'p> {
    pub fn new(params: &'p TwoSpeciesParams, config: &TwoSpeciesConfig) -> Result<Self> {
        params.validate()?;
        let (eta, xi) = (config.eta().to_vec(), config.xi().to_vec());
        let mut e = TorusEngine {
            params,
            tree: SumTree::new(eta.len()),
            eta,
            xi,
        };
        for x in 0..e.eta.len() {
            e.rescore(x);
        }
        Ok(e)
    }

    fn nbr_xi(&self, x: usize) -> u64 {
        let n = self.xi.len();
        self.xi[(x + n - 1) % n] + self.xi[(x + 1) % n]
    }

    fn channels(&self, x: usize) -> [f64; 11] {
        channel_rates(self.eta[x], self.xi[x], self.nbr_xi(x), self.params)
    }

    fn rescore(&mut self, x: usize) {
        let total = self.channels(x).iter().sum();
        self.tree.set(x, total);
    }

    pub fn total_rate(&self) -> f64 {
        self.tree.total()
    }

    pub fn config(&self) -> TwoSpeciesConfig {
        TwoSpeciesConfig::new(self.eta.clone(), self.xi.clone()).expect("engine keeps equal lengths")
    }

    pub fn totals(&self) -> (u64, u64) {
        (self.eta.iter().sum(), self.xi.iter().sum())
    }

    pub fn next_wait<R: Rng>(&self, rng: &mut R) -> Option<f64> {
        let total = self.total_rate();
        (total > 0.0).then(|| rng.sample::<f64, _>(Exp1) / total)
    }

    /// Picks and applies one event.
    pub fn fire<R: Rng>(&mut self, rng: &mut R) -> Result<(usize, EventKind)> {
        let x = self.tree.find(rng.random::<f64>() * self.tree.total());
        let rates = self.channels(x);
        let target = rng.random::<f64>() * self.tree.get(x);
        let mut acc = 0.0;
        let mut kind = None;
        for (k, r) in rates.iter().enumerate() {
            if *r > 0.0 {
                acc += r;
                kind = Some(EventKind::ALL[k]);
                if target < acc {
                    break;
                }
            }
        }
        let kind = kind.expect("picked a site with zero rate");
        if matches!(kind, EventKind::Birth1 | EventKind::Recovery) && self.eta[x] == u64::MAX
            || matches!(
                kind,
                EventKind::Birth2 | EventKind::WithinInfection | EventKind::OutsideInfection
            ) && self.xi[x] == u64::MAX
        {
            return Err(Error::CountOverflow);
        }
        let changed = apply(&mut self.eta, &mut self.xi, x, kind);
        let n = self.eta.len();
        let mut touched = [usize::MAX; 6];
        let mut m = 0;
        for &c in &changed {
            for y in [(c + n - 1) % n, c, (c + 1) % n] {
                if !touched[..m].contains(&y) {
                    touched[m] = y;
                    m += 1;
                }
            }
        }
        for &y in &touched[..m] {
            self.rescore(y);
        }
        Ok((x, kind))
    }
}

/// Exact next-event simulation on the torus with snapshots.
pub fn simulate_torus(
    config0: &TwoSpeciesConfig,
    params: &TwoSpeciesParams,
    horizon: f64,
    seed: u64,
    opts: &TorusOptions,
) -> Result<TorusTrajectory> {
    if !(horizon >= 0.0) {
        return Err(Error::param("horizon", format!("must be >= 0, got {horizon}")));
    }
    let mut engine = TorusEngine::new(params, config0)?;
    let mut rng = rng_from_seed(seed);
    let mut times = opts.snapshot_times.clone();
    times.sort_by(f64::total_cmp);
    let mut next = 0;
    let mut snapshots = Vec::with_capacity(times.len());
    let (mut t, mut events, mut jumps) = (0.0, 0u64, 0u64);

    let status = loop {
        if events >= opts.max_events {
            break RunStatus::Truncated;
        }
        let Some(dt) = engine.next_wait(&mut rng) else {
            break RunStatus::Extinct;
        };
        if t + dt > horizon {
            break RunStatus::Horizon;
        }
        t += dt;
        if next < times.len() && times[next] < t {
            let c = engine.config();
            while next < times.len() && times[next] < t {
                snapshots.push((times[next], c.clone()));
                next += 1;
            }
        }
        let (_, kind) = engine.fire(&mut rng)?;
        events += 1;
        if kind.is_jump() {
            jumps += 1;
        }
    };

    let final_config = engine.config();
    let settled_until = if status == RunStatus::Truncated { t } else { horizon };
    while next < times.len() && times[next] <= settled_until {
        snapshots.push((times[next], final_config.clone()));
        next += 1;
    }
    Ok(TorusTrajectory {
        seed,
        snapshots,
        final_config,
        final_time: settled_until,
        events,
        jumps,
        status,
    })
}
