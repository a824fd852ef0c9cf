//! Cluster epidemic processes on Z^d.
//!
//! Each site carries a cluster whose infected count ξ(x) evolves as
//!
//! * 0 → 1 at rate λ · Σ_{z∼x} ξ(z),
//! * i → i + 1 at rate β · Σ_{z∼x} ξ(z) + iφ, for 1 ≤ i < κ,
//! * i → i − 1 at rate i (individual recovery, IRP), or
//! * i → 0 at rate 1 (cluster recovery, CRP).
//!
//! κ may be infinite. Simulation is exact (Gillespie direct method over a
//! dynamically maintained sparse window), so there is no spatial truncation.

mod rates;
mod sim;
mod survival;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Site;

pub(crate) use rates::{down_rate, down_target};
pub use rates::{site_rates, site_total_rate, up_rate, EventKind, SiteEvent};
pub use sim::{simulate, EventRecord, SimLimits, SimOptions, Snapshot, Trajectory};
pub use survival::{
    critical_phi_search, monotonicity_violations, survival_probability, PhiCriticalEstimate, PhiProbe, PhiSearch,
    SurvivalConfig, SurvivalEstimate, DEFAULT_POPULATION_CAP,
};

/// Maximum infected count per cluster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ClusterCap {
    Finite(u64),
    Infinite,
}

impl ClusterCap {
    /// Whether a cluster holding `count` infected may gain one more.
    pub fn allows_growth(self, count: u64) -> bool {
        match self {
            ClusterCap::Finite(k) => count < k,
            ClusterCap::Infinite => true,
        }
    }

    pub fn admits(self, count: u64) -> bool {
        match self {
            ClusterCap::Finite(k) => count <= k,
            ClusterCap::Infinite => true,
        }
    }
}

impl fmt::Display for ClusterCap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClusterCap::Finite(k) => write!(f, "{k}"),
            ClusterCap::Infinite => write!(f, "inf"),
        }
    }
}

impl FromStr for ClusterCap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if t.eq_ignore_ascii_case("inf") || t.eq_ignore_ascii_case("infinite") {
            return Ok(ClusterCap::Infinite);
        }
        match t.parse::<u64>() {
            Ok(k) if k >= 1 => Ok(ClusterCap::Finite(k)),
            _ => Err(Error::param(
                "kappa",
                format!("expected an integer >= 1 or `inf`, got `{s}`"),
            )),
        }
    }
}

impl Serialize for ClusterCap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ClusterCap::Finite(k) => s.serialize_u64(*k),
            ClusterCap::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ClusterCap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(k) if k >= 1 => Ok(ClusterCap::Finite(k)),
            Raw::Int(k) => Err(serde::de::Error::custom(format!("kappa must be >= 1, got {k}"))),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Recovery {
    /// One infected individual recovers at a time, each at rate 1 (IRP).
    Individual,
    /// The whole cluster recovers at rate 1 (CRP).
    Cluster,
}

impl FromStr for Recovery {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "irp" | "individual" => Ok(Recovery::Individual),
            "crp" | "cluster" => Ok(Recovery::Cluster),
            _ => Err(Error::param("model", format!("expected `irp` or `crp`, got `{s}`"))),
        }
    }
}

impl fmt::Display for Recovery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Recovery::Individual => "irp",
            Recovery::Cluster => "crp",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    /// Outside infection rate into healthy clusters.
    pub lambda: f64,
    /// Outside infection rate into already infected clusters.
    pub beta: f64,
    /// Within-cluster infection rate per infected individual.
    pub phi: f64,
    pub kappa: ClusterCap,
    pub d: usize,
    pub recovery: Recovery,
}

impl ModelParams {
    pub fn new(lambda: f64, beta: f64, phi: f64, kappa: ClusterCap, d: usize, recovery: Recovery) -> Self {
        ModelParams {
            lambda,
            beta,
            phi,
            kappa,
            d,
            recovery,
        }
    }

    /// Basic contact process with infection rate λ.
    pub fn contact(lambda: f64, d: usize, recovery: Recovery) -> Self {
        ModelParams::new(lambda, 0.0, 0.0, ClusterCap::Finite(1), d, recovery)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("lambda", self.lambda), ("beta", self.beta), ("phi", self.phi)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::param(name, format!("must be a finite rate >= 0, got {v}")));
            }
        }
        if self.d == 0 {
            return Err(Error::param("d", "dimension must be at least 1"));
        }
        if let ClusterCap::Finite(0) = self.kappa {
            return Err(Error::param("kappa", "cluster size must be at least 1"));
        }
        Ok(())
    }

    /// β ≤ λ: the regime where existence of the infinite-cluster process on
    /// the whole lattice is established. Runs from finite support are
    /// well defined regardless.
    pub fn within_existence_regime(&self) -> bool {
        self.kappa != ClusterCap::Infinite || self.beta <= self.lambda
    }

    /// φ + 2dλ < 1 (infinite clusters) or φ + 2d(λ ∨ β) < 1 (finite clusters):
    /// sufficient for extinction.
    pub fn below_extinction_line(&self) -> bool {
        let two_d = 2.0 * self.d as f64;
        match self.kappa {
            ClusterCap::Infinite => self.phi + two_d * self.lambda < 1.0,
            ClusterCap::Finite(_) => self.phi + two_d * self.lambda.max(self.beta) < 1.0,
        }
    }
}

/// Sparse configuration: sites with ξ(x) ≥ 1 only.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterConfig {
    occupied: BTreeMap<Site, u64>,
}

impl ClusterConfig {
    pub fn empty() -> Self {
        Self::default()
    }

    /// One infected individual at `site`.
    pub fn single(site: Site) -> Self {
        let mut c = Self::default();
        c.occupied.insert(site, 1);
        c
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Site, u64)>) -> Self {
        let mut c = Self::default();
        for (s, n) in pairs {
            c.set(s, n);
        }
        c
    }

    pub fn get(&self, x: &Site) -> u64 {
        self.occupied.get(x).copied().unwrap_or(0)
    }

    /// Sets ξ(x); zero removes the site.
    pub fn set(&mut self, x: Site, count: u64) {
        if count == 0 {
            self.occupied.remove(&x);
        } else {
            self.occupied.insert(x, count);
        }
    }

    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty()
    }

    pub fn support_size(&self) -> usize {
        self.occupied.len()
    }

    pub fn total_infected(&self) -> u64 {
        self.occupied.values().sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Site, u64)> {
        self.occupied.iter().map(|(s, &n)| (s, n))
    }

    /// Σ_{z∼x} ξ(z).
    pub fn neighbor_sum(&self, x: &Site) -> u64 {
        let mut s = 0;
        x.for_each_neighbor(|z| s += self.get(&z));
        s
    }

    /// Occupancy indicator configuration: every infected cluster counts once.
    pub fn occupancy(&self) -> ClusterConfig {
        ClusterConfig::from_pairs(self.occupied.keys().map(|s| (s.clone(), 1)))
    }

    /// Pointwise ξ_self(x) ≥ ξ_other(x).
    pub fn dominates(&self, other: &ClusterConfig) -> bool {
        other.iter().all(|(s, n)| self.get(s) >= n)
    }

    pub fn validate(&self, params: &ModelParams) -> Result<()> {
        for (s, n) in self.iter() {
            if s.dim() != params.d {
                return Err(Error::DimensionMismatch {
                    expected: params.d,
                    found: s.dim(),
                });
            }
            if !params.kappa.admits(n) {
                return Err(Error::param(
                    "config",
                    format!("count {n} at site {s} exceeds cluster size {}", params.kappa),
                ));
            }
        }
        Ok(())
    }
}
