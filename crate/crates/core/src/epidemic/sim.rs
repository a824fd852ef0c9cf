use std::collections::HashMap;
use std::io::Write;

use rand::Rng;
use rand_distr::Exp1;
use serde::Serialize;

use super::rates::{events_for, site_total_rate, SiteEvent};
use super::{ClusterConfig, EventKind, ModelParams};
use crate::error::{Error, Result};
use crate::lattice::Site;
use crate::replica::{rng_from_seed, RunStatus};
use crate::sampling::SumTree;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
pub struct SimLimits {
    /// Event budget per replica.
    pub max_events: u64,
    /// Stop (and count as surviving) once the total infected count reaches this.
    pub population_cap: Option<u64>,
}

impl Default for SimLimits {
    fn default() -> Self {
        SimLimits {
            max_events: 100_000_000,
            population_cap: None,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SimOptions {
    pub limits: SimLimits,
    pub snapshot_times: Vec<f64>,
    pub record_events: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EventRecord {
    pub time: f64,
    pub site: Site,
    pub kind: EventKind,
    /// ξ(site) after the event.
    pub count: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Snapshot {
    pub time: f64,
    pub config: ClusterConfig,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub seed: u64,
    pub initial: ClusterConfig,
    pub events: Vec<EventRecord>,
    pub snapshots: Vec<Snapshot>,
    pub final_config: ClusterConfig,
    pub final_time: f64,
    pub event_count: u64,
    /// Number of infection events (count increments).
    pub infections: u64,
    pub status: RunStatus,
}

impl Trajectory {
    pub fn survived(&self) -> bool {
        self.status.survived()
    }

    /// One JSON object per line: `{"t": .., "sites": [[[coords..], count], ..]}`.
    pub fn write_snapshots_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        #[derive(Serialize)]
        struct Line<'a> {
            t: f64,
            sites: Vec<(&'a Site, u64)>,
        }
        for snap in &self.snapshots {
            let line = Line {
                t: snap.time,
                sites: snap.config.iter().collect(),
            };
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Sparse Gillespie state. The active window is the support plus its
/// neighbours: exactly the sites with ξ(x) > 0 or Σ_{z∼x} ξ(z) > 0.
pub(crate) struct ClusterEngine<'p> {
    params: &'p ModelParams,
    slots: HashMap<Site, usize>,
    sites: Vec<Site>,
    counts: Vec<u64>,
    nbr: Vec<u64>,
    free: Vec<usize>,
    tree: SumTree,
    total_infected: u64,
    support: usize,
}

impl<'p> ClusterEngine<'p> {
    pub fn new(params: &'p ModelParams, config: &ClusterConfig) -> Result<Self> {
        params.validate()?;
        config.validate(params)?;
        let mut e = ClusterEngine {
            params,
            slots: HashMap::new(),
            sites: Vec::new(),
            counts: Vec::new(),
            nbr: Vec::new(),
            free: Vec::new(),
            tree: SumTree::new(16),
            total_infected: 0,
            support: 0,
        };
        for (s, n) in config.iter() {
            let slot = e.slot_of(s);
            e.set_count(slot, n);
        }
        Ok(e)
    }

    fn slot_of(&mut self, site: &Site) -> usize {
        if let Some(&i) = self.slots.get(site) {
            return i;
        }
        let i = match self.free.pop() {
            Some(i) => {
                self.sites[i] = site.clone();
                self.counts[i] = 0;
                self.nbr[i] = 0;
                i
            }
            None => {
                self.sites.push(site.clone());
                self.counts.push(0);
                self.nbr.push(0);
                self.tree.reserve(self.sites.len());
                self.sites.len() - 1
            }
        };
        self.slots.insert(site.clone(), i);
        i
    }

    fn rescore(&mut self, slot: usize) {
        if self.counts[slot] == 0 && self.nbr[slot] == 0 {
            self.tree.set(slot, 0.0);
            let site = std::mem::replace(&mut self.sites[slot], Site::line(0));
            self.slots.remove(&site);
            self.free.push(slot);
        } else {
            let r = site_total_rate(self.counts[slot], self.nbr[slot], self.params);
            self.tree.set(slot, r);
        }
    }

    fn set_count(&mut self, slot: usize, new: u64) {
        let old = self.counts[slot];
        if old == new {
            return;
        }
        self.counts[slot] = new;
        self.total_infected = self.total_infected - old + new;
        match (old, new) {
            (0, _) => self.support += 1,
            (_, 0) => self.support -= 1,
            _ => {}
        }
        let site = self.sites[slot].clone();
        site.for_each_neighbor(|y| {
            let j = self.slot_of(&y);
            self.nbr[j] = self.nbr[j] - old + new;
            self.rescore(j);
        });
        self.rescore(slot);
    }

    pub fn total_rate(&self) -> f64 {
        self.tree.total()
    }

    pub fn total_infected(&self) -> u64 {
        self.total_infected
    }

    pub fn is_extinct(&self) -> bool {
        self.support == 0
    }

    /// Picks (slot, event) for uniforms `u1`, `u2` in [0, 1).
    fn pick(&self, u1: f64, u2: f64) -> (usize, SiteEvent) {
        let slot = self.tree.find(u1 * self.tree.total());
        let events = events_for(self.counts[slot], self.nbr[slot], self.params);
        let target = u2 * self.tree.get(slot);
        let mut acc = 0.0;
        for e in &events {
            acc += e.rate;
            if target < acc {
                return (slot, *e);
            }
        }
        (slot, *events.last().expect("picked a site with no events"))
    }

    /// Exponential waiting time to the next event, or `None` when absorbed.
    pub fn next_wait<R: Rng>(&self, rng: &mut R) -> Option<f64> {
        let total = self.total_rate();
        (total > 0.0).then(|| rng.sample::<f64, _>(Exp1) / total)
    }

    /// Picks an event proportionally to rate and applies it.
    pub fn fire<R: Rng>(&mut self, rng: &mut R) -> Result<(Site, SiteEvent)> {
        let (slot, ev) = self.pick(rng.random(), rng.random());
        if ev.kind.is_infection() && self.counts[slot] == u64::MAX {
            return Err(Error::CountOverflow);
        }
        let site = self.sites[slot].clone();
        self.set_count(slot, ev.to);
        Ok((site, ev))
    }

    pub fn config(&self) -> ClusterConfig {
        ClusterConfig::from_pairs(
            self.slots
                .iter()
                .filter(|(_, &i)| self.counts[i] > 0)
                .map(|(s, &i)| (s.clone(), self.counts[i])),
        )
    }

    #[cfg(test)]
    /// Returns (maintained total, total recomputed from scratch over the same
    /// slot layout). The two are bitwise equal when bookkeeping is correct.
    pub fn audit(&self) -> (f64, f64) {
        let config = self.config();
        let mut leaves = vec![0.0; self.tree.capacity()];
        for (site, &slot) in &self.slots {
            let r = site_total_rate(config.get(site), config.neighbor_sum(site), self.params);
            leaves[slot] = r;
        }
        (self.tree.total(), SumTree::from_weights(&leaves).total())
    }

    #[cfg(test)]
    /// Whether the window is exactly support ∪ neighbours.
    pub fn window_is_consistent(&self) -> bool {
        let config = self.config();
        let mut expected = std::collections::BTreeSet::new();
        for (s, _) in config.iter() {
            expected.insert(s.clone());
            s.for_each_neighbor(|y| {
                expected.insert(y);
            });
        }
        expected.len() == self.slots.len() && expected.iter().all(|s| self.slots.contains_key(s))
    }
}

/// Exact sample path of the cluster process up to `horizon`.
pub fn simulate(
    config0: &ClusterConfig,
    params: &ModelParams,
    horizon: f64,
    seed: u64,
    opts: &SimOptions,
) -> Result<Trajectory> {
    if !(horizon >= 0.0) {
        return Err(Error::param("horizon", format!("must be >= 0, got {horizon}")));
    }
    let mut engine = ClusterEngine::new(params, config0)?;
    let mut rng = rng_from_seed(seed);
    let mut snap_times = opts.snapshot_times.clone();
    snap_times.sort_by(f64::total_cmp);
    let mut next_snap = 0;
    let mut snapshots = Vec::new();
    let mut events = Vec::new();
    let mut t = 0.0;
    let mut count = 0u64;
    let mut infections = 0u64;

    let status = loop {
        if engine.is_extinct() {
            break RunStatus::Extinct;
        }
        if let Some(cap) = opts.limits.population_cap {
            if engine.total_infected() >= cap {
                break RunStatus::Capped;
            }
        }
        if count >= opts.limits.max_events {
            break RunStatus::Truncated;
        }
        let Some(dt) = engine.next_wait(&mut rng) else {
            break RunStatus::Extinct;
        };
        if t + dt > horizon {
            break RunStatus::Horizon;
        }
        let t_new = t + dt;
        if next_snap < snap_times.len() && snap_times[next_snap] < t_new {
            let cfg = engine.config();
            while next_snap < snap_times.len() && snap_times[next_snap] < t_new {
                snapshots.push(Snapshot {
                    time: snap_times[next_snap],
                    config: cfg.clone(),
                });
                next_snap += 1;
            }
        }
        let (site, ev) = engine.fire(&mut rng)?;
        t = t_new;
        count += 1;
        if ev.kind.is_infection() {
            infections += 1;
        }
        if opts.record_events {
            events.push(EventRecord {
                time: t,
                site,
                kind: ev.kind,
                count: ev.to,
            });
        }
    };

    let final_time = match status {
        RunStatus::Horizon => horizon,
        _ => t,
    };
    let final_config = engine.config();
    // Absorbing and horizon-terminated runs stay constant afterwards.
    let fill_until = match status {
        RunStatus::Horizon | RunStatus::Extinct => horizon,
        _ => t,
    };
    while next_snap < snap_times.len() && snap_times[next_snap] <= fill_until {
        snapshots.push(Snapshot {
            time: snap_times[next_snap],
            config: final_config.clone(),
        });
        next_snap += 1;
    }

    Ok(Trajectory {
        seed,
        initial: config0.clone(),
        events,
        snapshots,
        final_config,
        final_time,
        event_count: count,
        infections,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epidemic::{ClusterCap, Recovery};

    fn irp(lambda: f64, beta: f64, phi: f64) -> ModelParams {
        ModelParams::new(lambda, beta, phi, ClusterCap::Infinite, 1, Recovery::Individual)
    }

    #[test]
    fn empty_start_is_absorbing() {
        let p = irp(1.0, 1.0, 1.0);
        let opts = SimOptions {
            snapshot_times: vec![0.0, 1.0, 5.0],
            record_events: true,
            ..Default::default()
        };
        let tr = simulate(&ClusterConfig::empty(), &p, 5.0, 1, &opts).unwrap();
        assert_eq!(tr.event_count, 0);
        assert_eq!(tr.status, RunStatus::Extinct);
        assert_eq!(tr.snapshots.len(), 3);
        assert!(tr.snapshots.iter().all(|s| s.config.is_empty()));
    }

    #[test]
    fn lone_individual_recovers_once() {
        let p = irp(0.0, 0.0, 0.0);
        let opts = SimOptions {
            record_events: true,
            ..Default::default()
        };
        let tr = simulate(&ClusterConfig::single(Site::line(0)), &p, 1e9, 3, &opts).unwrap();
        assert_eq!(tr.event_count, 1);
        assert_eq!(tr.events[0].kind, EventKind::RecoverOne);
        assert_eq!(tr.status, RunStatus::Extinct);
    }

    #[test]
    fn incremental_total_matches_recomputation() {
        let p = irp(0.6, 0.4, 0.8);
        let start = ClusterConfig::from_pairs([(Site::line(0), 3), (Site::line(2), 1)]);
        let mut engine = ClusterEngine::new(&p, &start).unwrap();
        let mut rng = rng_from_seed(11);
        for _ in 0..3000 {
            if engine.next_wait(&mut rng).is_none() {
                break;
            }
            engine.fire(&mut rng).unwrap();
            let (kept, fresh) = engine.audit();
            assert_eq!(kept.to_bits(), fresh.to_bits());
            assert!(engine.window_is_consistent());
        }
    }

    #[test]
    fn snapshot_at_zero_is_the_initial_config() {
        let p = irp(0.5, 0.5, 1.5);
        let start = ClusterConfig::from_pairs([(Site::line(0), 2)]);
        let opts = SimOptions {
            snapshot_times: vec![0.0, 0.5],
            ..Default::default()
        };
        let tr = simulate(&start, &p, 1.0, 9, &opts).unwrap();
        assert_eq!(tr.snapshots[0].config, start);
    }

    #[test]
    fn budget_truncates() {
        let p = irp(1.0, 1.0, 3.0);
        let opts = SimOptions {
            limits: SimLimits {
                max_events: 50,
                population_cap: None,
            },
            ..Default::default()
        };
        let tr = simulate(&ClusterConfig::single(Site::line(0)), &p, 100.0, 2, &opts).unwrap();
        assert!(tr.status == RunStatus::Truncated || tr.status == RunStatus::Extinct);
        assert!(tr.event_count <= 50);
    }
}
