//! Healthy/infected particles on the discrete torus: local reactions plus
//! independent random walks accelerated by N².

mod shared;
mod tau;
mod torus;

use std::f64::consts::TAU;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poisson::TildeParams;

pub use shared::SharedClockLine;
pub use tau::simulate_torus_tau;
pub use torus::{simulate_torus, TorusEngine, TorusOptions, TorusTrajectory};

/// Healthy counts `eta` and infected counts `xi` per torus site.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TwoSpeciesConfig {
    eta: Vec<u64>,
    xi: Vec<u64>,
}

impl TwoSpeciesConfig {
    pub fn new(eta: Vec<u64>, xi: Vec<u64>) -> Result<Self> {
        if eta.len() != xi.len() {
            return Err(Error::LengthMismatch(format!(
                "eta has {} sites, xi has {}",
                eta.len(),
                xi.len()
            )));
        }
        if eta.is_empty() {
            return Err(Error::param("config", "torus needs at least one site"));
        }
        Ok(TwoSpeciesConfig { eta, xi })
    }

    pub fn empty(len: usize) -> Result<Self> {
        TwoSpeciesConfig::new(vec![0; len], vec![0; len])
    }

    pub fn len(&self) -> usize {
        self.eta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eta.is_empty()
    }

    pub fn eta(&self) -> &[u64] {
        &self.eta
    }

    pub fn xi(&self) -> &[u64] {
        &self.xi
    }

    pub fn counts(&self, s: Species) -> &[u64] {
        match s {
            Species::Healthy => &self.eta,
            Species::Infected => &self.xi,
        }
    }

    pub fn totals(&self) -> (u64, u64) {
        (self.eta.iter().sum(), self.xi.iter().sum())
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut Vec<u64>, &mut Vec<u64>) {
        (&mut self.eta, &mut self.xi)
    }

    /// Σ of ξ over the two neighbours of `x` (with wrap).
    pub fn infected_neighbours(&self, x: usize) -> u64 {
        let n = self.len();
        self.xi[(x + n - 1) % n] + self.xi[(x + 1) % n]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Species {
    Healthy,
    Infected,
}

impl Species {
    pub const BOTH: [Species; 2] = [Species::Healthy, Species::Infected];

    pub fn name(self) -> &'static str {
        match self {
            Species::Healthy => "eta",
            Species::Infected => "xi",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoSpeciesParams {
    pub rates: TildeParams,
    /// Scaling parameter; walks jump at rate N²/2 to each side.
    pub n: usize,
    /// When false only the random walks run; every local channel, recovery
    /// included, is off.
    #[serde(default = "enabled")]
    pub reactions: bool,
}

fn enabled() -> bool {
    true
}

impl TwoSpeciesParams {
    pub fn new(rates: TildeParams, n: usize) -> Self {
        TwoSpeciesParams {
            rates,
            n,
            reactions: true,
        }
    }

    /// Pure migration: both species perform independent walks only.
    pub fn diffusion_only(n: usize) -> Self {
        TwoSpeciesParams {
            rates: TildeParams::default(),
            n,
            reactions: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.rates.validate()?;
        if self.n < 2 {
            return Err(Error::param(
                "n",
                format!("scaling parameter must be >= 2, got {}", self.n),
            ));
        }
        Ok(())
    }

    /// Per-particle, per-direction jump rate N²/2.
    pub fn jump_rate(&self) -> f64 {
        let n = self.n as f64;
        0.5 * n * n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Birth1,
    Death1,
    Birth2,
    Death2,
    Recovery,
    WithinInfection,
    OutsideInfection,
    HealthyLeft,
    HealthyRight,
    InfectedLeft,
    InfectedRight,
}

impl EventKind {
    pub const ALL: [EventKind; 11] = [
        EventKind::Birth1,
        EventKind::Death1,
        EventKind::Birth2,
        EventKind::Death2,
        EventKind::Recovery,
        EventKind::WithinInfection,
        EventKind::OutsideInfection,
        EventKind::HealthyLeft,
        EventKind::HealthyRight,
        EventKind::InfectedLeft,
        EventKind::InfectedRight,
    ];

    pub fn is_jump(self) -> bool {
        matches!(
            self,
            EventKind::HealthyLeft | EventKind::HealthyRight | EventKind::InfectedLeft | EventKind::InfectedRight
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Reaction {
    pub kind: EventKind,
    pub rate: f64,
}

/// All eleven channels of a site in [`EventKind::ALL`] order.
pub(crate) fn channel_rates(eta: u64, xi: u64, nbr_xi: u64, p: &TwoSpeciesParams) -> [f64; 11] {
    let j = p.jump_rate();
    let (e, x, s) = (eta as f64, xi as f64, nbr_xi as f64);
    if !p.reactions {
        return [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, j * e, j * e, j * x, j * x];
    }
    let r = &p.rates;
    let infectable = eta > 0;
    let outside = if !infectable {
        0.0
    } else if xi == 0 {
        r.lambda * s
    } else {
        r.beta * s
    };
    [
        r.alpha1 * (e + x),
        r.kappa_death * e * e * (e + x * x),
        r.alpha2 * (e + x),
        r.kappa_death * x * x * (e * e + x),
        x,
        if infectable { r.phi * x } else { 0.0 },
        outside,
        j * e,
        j * e,
        j * x,
        j * x,
    ]
}

fn reactions(
    config: &TwoSpeciesConfig,
    x: usize,
    p: &TwoSpeciesParams,
    range: std::ops::Range<usize>,
) -> Vec<Reaction> {
    let rates = channel_rates(config.eta[x], config.xi[x], config.infected_neighbours(x), p);
    range
        .map(|k| Reaction {
            kind: EventKind::ALL[k],
            rate: rates[k],
        })
        .collect()
}

/// Birth, death, recovery and infection channels at `x`.
pub fn reaction_rates(config: &TwoSpeciesConfig, x: usize, p: &TwoSpeciesParams) -> Vec<Reaction> {
    reactions(config, x, p, 0..7)
}

/// Jump channels at `x`: each species to each side at N²/2 per particle.
pub fn diffusion_rates(config: &TwoSpeciesConfig, x: usize, p: &TwoSpeciesParams) -> Vec<Reaction> {
    reactions(config, x, p, 7..11)
}

/// Applies `kind` at site `x`; returns the sites whose counts changed.
pub(crate) fn apply(eta: &mut [u64], xi: &mut [u64], x: usize, kind: EventKind) -> [usize; 2] {
    let n = eta.len();
    let left = (x + n - 1) % n;
    let right = (x + 1) % n;
    match kind {
        EventKind::Birth1 => eta[x] += 1,
        EventKind::Death1 => eta[x] -= 1,
        EventKind::Birth2 => xi[x] += 1,
        EventKind::Death2 => xi[x] -= 1,
        EventKind::Recovery => {
            eta[x] += 1;
            xi[x] -= 1;
        }
        EventKind::WithinInfection | EventKind::OutsideInfection => {
            eta[x] -= 1;
            xi[x] += 1;
        }
        EventKind::HealthyLeft => {
            eta[x] -= 1;
            eta[left] += 1;
            return [x, left];
        }
        EventKind::HealthyRight => {
            eta[x] -= 1;
            eta[right] += 1;
            return [x, right];
        }
        EventKind::InfectedLeft => {
            xi[x] -= 1;
            xi[left] += 1;
            return [x, left];
        }
        EventKind::InfectedRight => {
            xi[x] -= 1;
            xi[right] += 1;
            return [x, right];
        }
    }
    [x, x]
}

/// Test function on the circle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Observable {
    One,
    Cos(u32),
    Sin(u32),
}

impl Observable {
    pub fn eval(self, theta: f64) -> f64 {
        match self {
            Observable::One => 1.0,
            Observable::Cos(k) => (TAU * k as f64 * theta).cos(),
            Observable::Sin(k) => (TAU * k as f64 * theta).sin(),
        }
    }

    pub fn id(self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observable::One => write!(f, "one"),
            Observable::Cos(k) => write!(f, "cos{k}"),
            Observable::Sin(k) => write!(f, "sin{k}"),
        }
    }
}

impl FromStr for Observable {
    type Err = Error;

    /// `one`, `cosK` or `sinK` (K ≥ 1, default 1).
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::param("observable", format!("expected one, cosK or sinK, got `{s}`"));
        let freq = |rest: &str| -> Result<u32> {
            if rest.is_empty() {
                Ok(1)
            } else {
                rest.parse().map_err(|_| bad())
            }
        };
        match s {
            "one" | "1" => Ok(Observable::One),
            _ if s.starts_with("cos") => Ok(Observable::Cos(freq(&s[3..])?)),
            _ if s.starts_with("sin") => Ok(Observable::Sin(freq(&s[3..])?)),
            _ => Err(bad()),
        }
    }
}

/// (1/N) Σ_x count(x) G(x/N) with N the number of sites.
pub fn empirical_pairing(counts: &[u64], g: impl Fn(f64) -> f64) -> f64 {
    let n = counts.len() as f64;
    counts
        .iter()
        .enumerate()
        .map(|(x, &c)| c as f64 * g(x as f64 / n))
        .sum::<f64>()
        / n
}

/// Rows `t,x,eta,xi`.
pub fn write_snapshots_csv<W: Write>(snapshots: &[(f64, TwoSpeciesConfig)], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "x", "eta", "xi"])?;
    for (t, c) in snapshots {
        for x in 0..c.len() {
            out.serialize((t, x, c.eta[x], c.xi[x]))?;
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairingRow {
    pub t: f64,
    pub observable_id: String,
    pub species: &'static str,
    pub value: f64,
    pub replica: usize,
}

/// Pairings of every snapshot with every observable, both species.
pub fn pairing_rows(
    snapshots: &[(f64, TwoSpeciesConfig)],
    observables: &[Observable],
    replica: usize,
) -> Vec<PairingRow> {
    let mut rows = Vec::new();
    for (t, c) in snapshots {
        for &g in observables {
            for s in Species::BOTH {
                rows.push(PairingRow {
                    t: *t,
                    observable_id: g.id(),
                    species: s.name(),
                    value: empirical_pairing(c.counts(s), |th| g.eval(th)),
                    replica,
                });
            }
        }
    }
    rows
}

pub fn write_pairings_csv<W: Write>(rows: &[PairingRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for r in rows {
        out.serialize(r)?;
    }
    out.flush()?;
    Ok(())
}
