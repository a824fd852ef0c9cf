use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use super::{ClusterConfig, ModelParams, Recovery};
use crate::lattice::Site;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EventKind {
    OutsideInfectNew,
    OutsideInfectMore,
    WithinInfect,
    RecoverOne,
    RecoverAll,
}

impl EventKind {
    pub fn is_infection(self) -> bool {
        matches!(
            self,
            EventKind::OutsideInfectNew | EventKind::OutsideInfectMore | EventKind::WithinInfect
        )
    }
}

/// A transition available at one site: its kind, rate and resulting count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteEvent {
    pub kind: EventKind,
    pub rate: f64,
    pub to: u64,
}

pub(crate) type SiteEvents = SmallVec<[SiteEvent; 3]>;

/// Positive-rate transitions of a site holding `count` infected whose
/// neighbours hold `nbr_sum` infected in total.
pub(crate) fn events_for(count: u64, nbr_sum: u64, p: &ModelParams) -> SiteEvents {
    let mut out = SiteEvents::new();
    let s = nbr_sum as f64;
    if count == 0 {
        let r = p.lambda * s;
        if r > 0.0 {
            out.push(SiteEvent {
                kind: EventKind::OutsideInfectNew,
                rate: r,
                to: 1,
            });
        }
        return out;
    }
    if p.kappa.allows_growth(count) {
        let outside = p.beta * s;
        if outside > 0.0 {
            out.push(SiteEvent {
                kind: EventKind::OutsideInfectMore,
                rate: outside,
                to: count + 1,
            });
        }
        let within = p.phi * count as f64;
        if within > 0.0 {
            out.push(SiteEvent {
                kind: EventKind::WithinInfect,
                rate: within,
                to: count + 1,
            });
        }
    }
    match p.recovery {
        Recovery::Individual => out.push(SiteEvent {
            kind: EventKind::RecoverOne,
            rate: count as f64,
            to: count - 1,
        }),
        Recovery::Cluster => out.push(SiteEvent {
            kind: EventKind::RecoverAll,
            rate: 1.0,
            to: 0,
        }),
    }
    out
}

/// Total exit rate of a site; equals the sum of [`events_for`] in order.
pub fn site_total_rate(count: u64, nbr_sum: u64, p: &ModelParams) -> f64 {
    events_for(count, nbr_sum, p).iter().fold(0.0, |acc, e| acc + e.rate)
}

/// Rate of count → count + 1 (zero at the cap).
pub fn up_rate(count: u64, nbr_sum: u64, p: &ModelParams) -> f64 {
    events_for(count, nbr_sum, p)
        .iter()
        .filter(|e| e.kind.is_infection())
        .fold(0.0, |acc, e| acc + e.rate)
}

/// Rate of the recovery transition (i → i − 1 or i → 0); zero on healthy sites.
pub(crate) fn down_rate(count: u64, p: &ModelParams) -> f64 {
    match (count, p.recovery) {
        (0, _) => 0.0,
        (i, Recovery::Individual) => i as f64,
        (_, Recovery::Cluster) => 1.0,
    }
}

pub(crate) fn down_target(count: u64, p: &ModelParams) -> u64 {
    match p.recovery {
        Recovery::Individual => count.saturating_sub(1),
        Recovery::Cluster => 0,
    }
}

/// All positive-rate transitions at site `x` of `config`.
pub fn site_rates(config: &ClusterConfig, x: &Site, params: &ModelParams) -> Vec<SiteEvent> {
    events_for(config.get(x), config.neighbor_sum(x), params).into_vec()
}
