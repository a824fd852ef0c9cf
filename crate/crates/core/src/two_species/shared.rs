use rand::Rng;
use rand_distr::Exp1;

use super::{apply, channel_rates, EventKind, TwoSpeciesConfig, TwoSpeciesParams};
use crate::error::{Error, Result};
use crate::replica::{rng_from_seed, site_seed, RunStatus, SimRng};
use crate::sampling::MinTree;

/// The two-species process on the torus {−R, ..., R} driven by one
/// unit-rate Poisson stream per site, run through the random time change
/// (modified next reaction method). Site `x` owns its stream whatever R is,
/// so lines of different radii share randomness wherever they overlap.
pub struct SharedClockLine<'p> {
    params: &'p TwoSpeciesParams,
    radius: i64,
    eta: Vec<u64>,
    xi: Vec<u64>,
    rngs: Vec<SimRng>,
    rate: Vec<f64>,
    /// Internal (integrated-rate) time consumed by each site's stream.
    used: Vec<f64>,
    /// Internal time of the next ring.
    next: Vec<f64>,
    updated: Vec<f64>,
    clock: MinTree,
    t: f64,
    events: u64,
}

impl<'p> SharedClockLine<'p> {
    /// `init(x)` gives the initial (η, ξ) at coordinate x.
    pub fn new(
        params: &'p TwoSpeciesParams,
        radius: i64,
        init: impl Fn(i64) -> (u64, u64),
        clock_seed: u64,
    ) -> Result<Self> {
        params.validate()?;
        if radius < 1 {
            return Err(Error::param("radius", format!("must be >= 1, got {radius}")));
        }
        let len = (2 * radius + 1) as usize;
        let coords = -radius..=radius;
        let (eta, xi): (Vec<u64>, Vec<u64>) = coords.clone().map(&init).unzip();
        let mut rngs: Vec<SimRng> = coords.map(|x| rng_from_seed(site_seed(clock_seed, x))).collect();
        let next = rngs.iter_mut().map(|r| r.sample::<f64, _>(Exp1)).collect();
        let mut line = SharedClockLine {
            params,
            radius,
            eta,
            xi,
            rngs,
            rate: vec![0.0; len],
            used: vec![0.0; len],
            next,
            updated: vec![0.0; len],
            clock: MinTree::new(len),
            t: 0.0,
            events: 0,
        };
        for i in 0..len {
            line.refresh(i);
        }
        Ok(line)
    }

    fn len(&self) -> usize {
        self.eta.len()
    }

    fn channels(&self, i: usize) -> [f64; 11] {
        let n = self.len();
        let s = self.xi[(i + n - 1) % n] + self.xi[(i + 1) % n];
        channel_rates(self.eta[i], self.xi[i], s, self.params)
    }

    /// Brings site `i`'s consumed internal time up to the current time.
    fn advance(&mut self, i: usize) {
        self.used[i] += self.rate[i] * (self.t - self.updated[i]);
        self.updated[i] = self.t;
    }

    /// Recomputes the rate of site `i` and its predicted ring time.
    fn refresh(&mut self, i: usize) {
        self.rate[i] = self.channels(i).iter().sum();
        self.updated[i] = self.t;
        let due = if self.rate[i] > 0.0 {
            self.t + (self.next[i] - self.used[i]).max(0.0) / self.rate[i]
        } else {
            f64::INFINITY
        };
        self.clock.set(i, due);
    }

    /// Runs until `horizon` or the event budget.
    pub fn run(&mut self, horizon: f64, max_events: u64) -> Result<RunStatus> {
        let n = self.len();
        loop {
            let (i, due) = self.clock.min();
            if due > horizon {
                self.t = horizon;
                return Ok(if due.is_infinite() {
                    RunStatus::Extinct
                } else {
                    RunStatus::Horizon
                });
            }
            if self.events >= max_events {
                return Ok(RunStatus::Truncated);
            }
            self.t = due;
            self.used[i] = self.next[i];
            self.updated[i] = due;
            let rates = self.channels(i);
            let rng = &mut self.rngs[i];
            self.next[i] += rng.sample::<f64, _>(Exp1);
            let target = rng.random::<f64>() * self.rate[i];
            let mut acc = 0.0;
            let mut kind = EventKind::ALL[0];
            for (k, r) in rates.iter().enumerate() {
                if *r > 0.0 {
                    acc += r;
                    kind = EventKind::ALL[k];
                    if target < acc {
                        break;
                    }
                }
            }
            let mut touched = [usize::MAX; 4];
            let mut m = 0;
            for d in [n - 1, 0, 1, 2] {
                let y = (i + d) % n;
                let needed = match d {
                    2 => matches!(kind, EventKind::HealthyRight | EventKind::InfectedRight),
                    _ => true,
                };
                if needed && !touched[..m].contains(&y) {
                    touched[m] = y;
                    m += 1;
                }
            }
            if matches!(kind, EventKind::HealthyLeft | EventKind::InfectedLeft) {
                let y = (i + n - 2) % n;
                if !touched[..m].contains(&y) && m < 4 {
                    touched[m] = y;
                    m += 1;
                }
            }
            for &y in &touched[..m] {
                if y != i {
                    self.advance(y);
                }
            }
            apply(&mut self.eta, &mut self.xi, i, kind);
            for &y in &touched[..m] {
                self.refresh(y);
            }
            self.events += 1;
        }
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn radius(&self) -> i64 {
        self.radius
    }

    /// (η(x), ξ(x)) at coordinate x ∈ [−R, R].
    pub fn at(&self, x: i64) -> (u64, u64) {
        let i = (x + self.radius) as usize;
        (self.eta[i], self.xi[i])
    }

    /// Configuration indexed from −R.
    pub fn config(&self) -> TwoSpeciesConfig {
        TwoSpeciesConfig::new(self.eta.clone(), self.xi.clone()).expect("equal lengths")
    }
}
