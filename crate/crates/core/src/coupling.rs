//! Basic coupling of two cluster processes on shared event streams.
//!
//! Each site carries two channels, "up" (count + 1) and "down" (recovery).
//! A channel rings at the larger of the two processes' rates and one shared
//! uniform decides, by thinning, which processes follow it. Whenever both are
//! eligible both fire, and pointwise order between an ordered pair survives
//! every event.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::Exp1;
use serde::Serialize;

use crate::epidemic::{down_rate, down_target, simulate, up_rate, ClusterConfig, ModelParams, SimLimits, SimOptions};
use crate::error::{Error, Result};
use crate::lattice::Site;
use crate::replica::{derive_seed, replicate, rng_from_seed, Jobs, RunStatus};
use crate::sampling::SumTree;
use crate::stats::{ks_two_sample, KsResult};

/// Default cap on the total infected count of either process in coupled runs.
pub const DEFAULT_PAIR_CAP: u64 = 2000;

/// How the two marginals are expected to compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Order {
    /// No ordering is asserted.
    Unordered,
    /// ξ_A(x) ≥ ξ_B(x) everywhere.
    Pointwise,
    /// 1{ξ_A(x) > 0} ≥ 1{ξ_B(x) > 0} everywhere.
    Occupancy,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoupledPair {
    pub config_a: ClusterConfig,
    pub config_b: ClusterConfig,
    pub params_a: ModelParams,
    pub params_b: ModelParams,
    pub order: Order,
}

impl CoupledPair {
    /// A pair started from the same configuration.
    pub fn new(config: ClusterConfig, params_a: ModelParams, params_b: ModelParams, order: Order) -> Self {
        CoupledPair {
            config_a: config.clone(),
            config_b: config,
            params_a,
            params_b,
            order,
        }
    }

    /// A model against the contact process with the same λ.
    pub fn versus_contact(params: ModelParams, config: ClusterConfig) -> Self {
        let contact = ModelParams::contact(params.lambda, params.d, params.recovery);
        let contact_config = config.occupancy();
        CoupledPair {
            config_a: config,
            config_b: contact_config,
            params_a: params,
            params_b: contact,
            order: Order::Occupancy,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = (&self.params_a, &self.params_b);
        a.validate()?;
        b.validate()?;
        if a.d != b.d {
            return Err(Error::DimensionMismatch {
                expected: a.d,
                found: b.d,
            });
        }
        if a.recovery != b.recovery {
            return Err(Error::param(
                "recovery",
                "coupled processes must share the recovery mode",
            ));
        }
        self.config_a.validate(a)?;
        self.config_b.validate(b)?;
        match self.order {
            Order::Unordered => {}
            Order::Pointwise => {
                if !(a.lambda >= b.lambda && a.beta >= b.beta && a.phi >= b.phi && a.kappa >= b.kappa) {
                    return Err(Error::param("params", "ordered pair needs rates of A >= rates of B"));
                }
                if !self.config_a.dominates(&self.config_b) {
                    return Err(Error::param("config", "ordered pair needs config A >= config B"));
                }
            }
            Order::Occupancy => {
                if !self.config_a.occupancy().dominates(&self.config_b.occupancy()) {
                    return Err(Error::param("config", "occupancy of A must cover occupancy of B"));
                }
            }
        }
        Ok(())
    }
}

/// Counts at the event site after a coupled event.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairedEvent {
    pub time: f64,
    pub site: Site,
    pub count_a: u64,
    pub count_b: u64,
}

#[derive(Debug, Clone)]
pub struct PairedTrajectory {
    pub seed: u64,
    pub initial_a: ClusterConfig,
    pub initial_b: ClusterConfig,
    pub order: Order,
    pub events: Vec<PairedEvent>,
    pub final_a: ClusterConfig,
    pub final_b: ClusterConfig,
    pub final_time: f64,
    pub status: RunStatus,
    /// Number of count increments in each marginal.
    pub infections_a: u64,
    pub infections_b: u64,
    /// Rings at which both processes were eligible and both fired.
    pub joint_events: u64,
}

struct PairEngine<'p> {
    pa: &'p ModelParams,
    pb: &'p ModelParams,
    slots: HashMap<Site, usize>,
    sites: Vec<Site>,
    ca: Vec<u64>,
    cb: Vec<u64>,
    na: Vec<u64>,
    nb: Vec<u64>,
    free: Vec<usize>,
    tree: SumTree,
    total_a: u64,
    total_b: u64,
}

impl<'p> PairEngine<'p> {
    fn new(pair: &'p CoupledPair) -> Self {
        let mut e = PairEngine {
            pa: &pair.params_a,
            pb: &pair.params_b,
            slots: HashMap::new(),
            sites: Vec::new(),
            ca: Vec::new(),
            cb: Vec::new(),
            na: Vec::new(),
            nb: Vec::new(),
            free: Vec::new(),
            tree: SumTree::new(16),
            total_a: 0,
            total_b: 0,
        };
        for (s, n) in pair.config_a.iter() {
            let i = e.slot_of(s);
            e.set_counts(i, n, e.cb[i]);
        }
        for (s, n) in pair.config_b.iter() {
            let i = e.slot_of(s);
            e.set_counts(i, e.ca[i], n);
        }
        e
    }

    fn slot_of(&mut self, site: &Site) -> usize {
        if let Some(&i) = self.slots.get(site) {
            return i;
        }
        let i = match self.free.pop() {
            Some(i) => {
                self.sites[i] = site.clone();
                i
            }
            None => {
                self.sites.push(site.clone());
                self.ca.push(0);
                self.cb.push(0);
                self.na.push(0);
                self.nb.push(0);
                self.tree.reserve(self.sites.len());
                self.sites.len() - 1
            }
        };
        self.slots.insert(site.clone(), i);
        i
    }

    fn channels(&self, i: usize) -> [(f64, f64); 2] {
        [
            (
                up_rate(self.ca[i], self.na[i], self.pa),
                up_rate(self.cb[i], self.nb[i], self.pb),
            ),
            (down_rate(self.ca[i], self.pa), down_rate(self.cb[i], self.pb)),
        ]
    }

    fn rescore(&mut self, i: usize) {
        if self.ca[i] == 0 && self.cb[i] == 0 && self.na[i] == 0 && self.nb[i] == 0 {
            self.tree.set(i, 0.0);
            let site = std::mem::replace(&mut self.sites[i], Site::line(0));
            self.slots.remove(&site);
            self.free.push(i);
        } else {
            let [(ua, ub), (da, db)] = self.channels(i);
            self.tree.set(i, ua.max(ub) + da.max(db));
        }
    }

    fn set_counts(&mut self, i: usize, a: u64, b: u64) {
        let (oa, ob) = (self.ca[i], self.cb[i]);
        self.ca[i] = a;
        self.cb[i] = b;
        self.total_a = self.total_a - oa + a;
        self.total_b = self.total_b - ob + b;
        let site = self.sites[i].clone();
        site.for_each_neighbor(|y| {
            let j = self.slot_of(&y);
            self.na[j] = self.na[j] - oa + a;
            self.nb[j] = self.nb[j] - ob + b;
            self.rescore(j);
        });
        self.rescore(i);
    }

    fn config(&self, a: bool) -> ClusterConfig {
        let counts = if a { &self.ca } else { &self.cb };
        ClusterConfig::from_pairs(
            self.slots
                .iter()
                .filter(|(_, &i)| counts[i] > 0)
                .map(|(s, &i)| (s.clone(), counts[i])),
        )
    }
}

/// Simulates both processes on shared clocks up to `horizon`.
pub fn coupled_simulate(pair: &CoupledPair, horizon: f64, seed: u64, limits: &SimLimits) -> Result<PairedTrajectory> {
    pair.validate()?;
    if !(horizon >= 0.0) {
        return Err(Error::param("horizon", format!("must be >= 0, got {horizon}")));
    }
    let mut rng = rng_from_seed(seed);
    let mut e = PairEngine::new(pair);
    let mut events = Vec::new();
    let (mut t, mut count) = (0.0, 0u64);
    let (mut inf_a, mut inf_b, mut joint) = (0u64, 0u64, 0u64);

    let status = loop {
        if e.total_a == 0 && e.total_b == 0 {
            break RunStatus::Extinct;
        }
        if let Some(cap) = limits.population_cap {
            if e.total_a.max(e.total_b) >= cap {
                break RunStatus::Capped;
            }
        }
        if count >= limits.max_events {
            break RunStatus::Truncated;
        }
        let total = e.tree.total();
        if total <= 0.0 {
            break RunStatus::Extinct;
        }
        let dt = rng.sample::<f64, _>(Exp1) / total;
        if t + dt > horizon {
            break RunStatus::Horizon;
        }
        t += dt;
        count += 1;

        let i = e.tree.find(rng.random::<f64>() * total);
        let [(ua, ub), (da, db)] = e.channels(i);
        let (up_max, down_max) = (ua.max(ub), da.max(db));
        let pick = rng.random::<f64>() * (up_max + down_max);
        let thin = rng.random::<f64>();
        let (a0, b0) = (e.ca[i], e.cb[i]);
        let (na, nb, fa, fb) = if pick < up_max {
            let (fa, fb) = (thin * up_max < ua, thin * up_max < ub);
            (a0 + fa as u64, b0 + fb as u64, fa, fb)
        } else {
            let (fa, fb) = (thin * down_max < da, thin * down_max < db);
            (
                if fa { down_target(a0, e.pa) } else { a0 },
                if fb { down_target(b0, e.pb) } else { b0 },
                fa,
                fb,
            )
        };
        if na > a0 {
            inf_a += 1;
        }
        if nb > b0 {
            inf_b += 1;
        }
        if fa && fb {
            joint += 1;
        }
        let site = e.sites[i].clone();
        e.set_counts(i, na, nb);
        events.push(PairedEvent {
            time: t,
            site,
            count_a: na,
            count_b: nb,
        });
    };

    Ok(PairedTrajectory {
        seed,
        initial_a: pair.config_a.clone(),
        initial_b: pair.config_b.clone(),
        order: pair.order,
        events,
        final_a: e.config(true),
        final_b: e.config(false),
        final_time: if status == RunStatus::Horizon { horizon } else { t },
        status,
        infections_a: inf_a,
        infections_b: inf_b,
        joint_events: joint,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderingReport {
    pub ok: bool,
    pub events_checked: usize,
    /// (time, site) of the first violation; time 0 refers to the initial state.
    pub first_violation: Option<(f64, Site)>,
}

fn holds(order: Order, a: u64, b: u64) -> bool {
    match order {
        Order::Unordered => true,
        Order::Pointwise => a >= b,
        Order::Occupancy => a > 0 || b == 0,
    }
}

/// Scans the initial state and every event for a breach of the declared order.
pub fn ordering_check(tr: &PairedTrajectory) -> OrderingReport {
    let report = |first_violation: Option<(f64, Site)>| OrderingReport {
        ok: first_violation.is_none(),
        events_checked: tr.events.len(),
        first_violation,
    };
    for (s, b) in tr.initial_b.iter() {
        if !holds(tr.order, tr.initial_a.get(s), b) {
            return report(Some((0.0, s.clone())));
        }
    }
    for ev in &tr.events {
        if !holds(tr.order, ev.count_a, ev.count_b) {
            return report(Some((ev.time, ev.site.clone())));
        }
    }
    report(None)
}

/// Couples `params` against the contact process at the same λ.
pub fn dominate_contact(
    params: &ModelParams,
    config0: &ClusterConfig,
    horizon: f64,
    seed: u64,
    limits: &SimLimits,
) -> Result<PairedTrajectory> {
    coupled_simulate(
        &CoupledPair::versus_contact(*params, config0.clone()),
        horizon,
        seed,
        limits,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSummary {
    pub replicas: usize,
    pub violations: usize,
    pub first_violation: Option<(usize, f64, Site)>,
    pub capped: usize,
    pub truncated: usize,
    pub events: u64,
}

/// Runs `replicas` coupled pairs and counts order violations.
pub fn check_ordering(
    pair: &CoupledPair,
    horizon: f64,
    replicas: usize,
    master_seed: u64,
    limits: &SimLimits,
    jobs: Jobs,
) -> Result<CheckSummary> {
    let results = replicate(replicas, master_seed, jobs, |_, seed| {
        let tr = coupled_simulate(pair, horizon, seed, limits)?;
        Ok((ordering_check(&tr), tr.status, tr.events.len() as u64))
    })?;
    let mut summary = CheckSummary {
        replicas,
        violations: 0,
        first_violation: None,
        capped: 0,
        truncated: 0,
        events: 0,
    };
    for (idx, (rep, status, n)) in results.into_iter().enumerate() {
        summary.events += n;
        match status {
            RunStatus::Capped => summary.capped += 1,
            RunStatus::Truncated => summary.truncated += 1,
            _ => {}
        }
        if let Some((t, s)) = rep.first_violation {
            summary.violations += 1;
            summary.first_violation.get_or_insert((idx, t, s));
        }
    }
    Ok(summary)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarginalReport {
    pub replicas: usize,
    pub ks_a: KsResult,
    pub ks_b: KsResult,
}

/// Two-sample KS comparison of the infection-event counts of each coupled
/// marginal against independent single-process runs.
pub fn marginal_check(
    pair: &CoupledPair,
    horizon: f64,
    replicas: usize,
    master_seed: u64,
    limits: &SimLimits,
    jobs: Jobs,
) -> Result<MarginalReport> {
    let coupled = replicate(replicas, derive_seed(master_seed, 0), jobs, |_, seed| {
        let tr = coupled_simulate(pair, horizon, seed, limits)?;
        Ok((tr.infections_a as f64, tr.infections_b as f64))
    })?;
    let opts = SimOptions {
        limits: *limits,
        ..SimOptions::default()
    };
    let single = |cfg: &ClusterConfig, p: &ModelParams, stream: u64| {
        replicate(replicas, derive_seed(master_seed, stream), jobs, |_, seed| {
            simulate(cfg, p, horizon, seed, &opts).map(|t| t.infections as f64)
        })
    };
    let solo_a = single(&pair.config_a, &pair.params_a, 1)?;
    let solo_b = single(&pair.config_b, &pair.params_b, 2)?;
    let (ca, cb): (Vec<f64>, Vec<f64>) = coupled.into_iter().unzip();
    Ok(MarginalReport {
        replicas,
        ks_a: ks_two_sample(&ca, &solo_a),
        ks_b: ks_two_sample(&cb, &solo_b),
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
    fn identical_processes_move_together() {
        let p = irp(0.5, 0.5, 1.0);
        let pair = CoupledPair::new(ClusterConfig::single(Site::line(0)), p, p, Order::Pointwise);
        let tr = coupled_simulate(&pair, 10.0, 4, &SimLimits::default()).unwrap();
        assert!(tr.events.iter().all(|e| e.count_a == e.count_b));
        assert_eq!(tr.final_a, tr.final_b);
        assert_eq!(tr.joint_events as usize, tr.events.len());
    }

    #[test]
    fn mismatched_recovery_rejected() {
        let a = irp(0.5, 0.5, 1.0);
        let b = ModelParams {
            recovery: Recovery::Cluster,
            ..a
        };
        let pair = CoupledPair::new(ClusterConfig::single(Site::line(0)), a, b, Order::Unordered);
        assert!(coupled_simulate(&pair, 1.0, 1, &SimLimits::default()).is_err());
    }

    #[test]
    fn unordered_rates_rejected_for_ordered_pair() {
        let pair = CoupledPair::new(
            ClusterConfig::single(Site::line(0)),
            irp(0.5, 0.5, 1.0),
            irp(0.5, 0.5, 2.0),
            Order::Pointwise,
        );
        assert!(pair.validate().is_err());
    }

    #[test]
    fn detector_reports_perturbed_event() {
        let pair = CoupledPair::new(
            ClusterConfig::single(Site::line(0)),
            irp(0.5, 0.5, 2.0),
            irp(0.5, 0.5, 1.0),
            Order::Pointwise,
        );
        let mut tr = coupled_simulate(&pair, 3.0, 8, &SimLimits::default()).unwrap();
        assert!(ordering_check(&tr).ok);
        let k = tr.events.len() / 2;
        let ev = &mut tr.events[k];
        ev.count_b = ev.count_a + 1;
        let (t, s) = (ev.time, ev.site.clone());
        let rep = ordering_check(&tr);
        assert!(!rep.ok);
        assert_eq!(rep.first_violation, Some((t, s)));
    }

    #[test]
    fn empty_pair_is_ok() {
        let p = irp(1.0, 1.0, 1.0);
        let tr = dominate_contact(&p, &ClusterConfig::empty(), 5.0, 1, &SimLimits::default()).unwrap();
        assert!(tr.events.is_empty());
        assert!(ordering_check(&tr).ok);
        assert!(tr.final_b.is_empty());
    }
}
