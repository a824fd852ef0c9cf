//! Product Poisson reference measures on the discrete torus: profiles,
//! sampling, Poisson averages of local rate functions, the change of
//! variables identities, the log density ψ and block averages.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::replica::{derive_stream, rng_from_seed};
use crate::stats::{MeanEstimate, Welford};
use crate::two_species::TwoSpeciesConfig;

/// Floor applied to profiles that must be strictly positive.
pub const PROFILE_FLOOR: f64 = 1e-8;

/// Nonnegative function on [0, 1) sampled at θ = i / n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    values: Vec<f64>,
}

impl Profile {
    /// Accepts any finite values ≥ 0.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::param("profile", "needs at least one grid point"));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::param(
                "profile",
                format!("values must be finite and >= 0, got {v}"),
            ));
        }
        Ok(Profile { values })
    }

    /// Like [`Profile::new`], with every value raised to at least [`PROFILE_FLOOR`].
    pub fn positive(values: Vec<f64>) -> Result<Self> {
        let p = Profile::new(values)?;
        Ok(Profile {
            values: p.values.into_iter().map(|v| v.max(PROFILE_FLOOR)).collect(),
        })
    }

    pub fn constant(n: usize, c: f64) -> Result<Self> {
        Profile::new(vec![c; n])
    }

    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        Profile::new((0..n).map(|i| f(i as f64 / n as f64)).collect())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn theta(&self, i: usize) -> f64 {
        i as f64 / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Periodic rectangle rule for ∫ G(θ) u(θ) dθ.
    pub fn integrate(&self, g: impl Fn(f64) -> f64) -> f64 {
        let n = self.values.len() as f64;
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| v * g(i as f64 / n))
            .sum::<f64>()
            / n
    }
}

/// A profile given by a formula, evaluable on any grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ProfileShape {
    Constant {
        value: f64,
    },
    /// c + Σ_k a_k cos(2πkθ) + b_k sin(2πkθ), k = 1, 2, ...
    Fourier {
        mean: f64,
        modes: Vec<(f64, f64)>,
    },
    /// Grid values, linearly interpolated with periodic wrap.
    Samples {
        values: Vec<f64>,
    },
}

impl ProfileShape {
    pub fn eval(&self, theta: f64) -> f64 {
        match self {
            ProfileShape::Constant { value } => *value,
            ProfileShape::Fourier { mean, modes } => modes.iter().enumerate().fold(*mean, |acc, (k, (a, b))| {
                let w = TAU * (k + 1) as f64 * theta;
                acc + a * w.cos() + b * w.sin()
            }),
            ProfileShape::Samples { values } => {
                let n = values.len();
                let pos = theta.rem_euclid(1.0) * n as f64;
                let i = (pos.floor() as usize).min(n - 1);
                let frac = pos - i as f64;
                values[i] * (1.0 - frac) + values[(i + 1) % n] * frac
            }
        }
    }

    pub fn grid(&self, n: usize) -> Result<Profile> {
        Profile::from_fn(n, |t| self.eval(t))
    }

    pub fn validate(&self) -> Result<()> {
        if let ProfileShape::Samples { values } = self {
            if values.is_empty() {
                return Err(Error::param("profile", "sample list is empty"));
            }
        }
        Ok(())
    }
}

impl fmt::Display for ProfileShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProfileShape::Constant { value } => write!(f, "const:{value}"),
            ProfileShape::Fourier { mean, modes } => {
                write!(f, "fourier:{mean}")?;
                for (a, b) in modes {
                    write!(f, ",{a},{b}")?;
                }
                Ok(())
            }
            ProfileShape::Samples { values } => write!(f, "samples[{}]", values.len()),
        }
    }
}

impl FromStr for ProfileShape {
    type Err = Error;

    /// `const:c`, `fourier:c,a1,b1,a2,b2,...` or `values:v0,v1,...`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |why: String| Error::param("profile", why);
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| bad(format!("expected kind:args, got `{s}`")))?;
        let nums = || -> Result<Vec<f64>> {
            rest.split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|_| bad(format!("not a number: `{t}`"))))
                .collect()
        };
        match kind {
            "const" => {
                let v = nums()?;
                if v.len() != 1 {
                    return Err(bad("const takes one value".into()));
                }
                Ok(ProfileShape::Constant { value: v[0] })
            }
            "fourier" => {
                let v = nums()?;
                if v.len() % 2 != 1 {
                    return Err(bad("fourier takes a mean followed by (cos, sin) pairs".into()));
                }
                Ok(ProfileShape::Fourier {
                    mean: v[0],
                    modes: v[1..].chunks(2).map(|c| (c[0], c[1])).collect(),
                })
            }
            "values" => Ok(ProfileShape::Samples { values: nums()? }),
            other => Err(bad(format!("unknown profile kind `{other}`"))),
        }
    }
}

/// One Poisson draw; zero mean gives zero.
pub fn poisson_draw<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("finite positive mean").sample(rng) as u64
}

/// Independent Poisson counts per site with the two profiles as intensities.
pub fn sample_product_poisson(p1: &Profile, p2: &Profile, seed: u64) -> Result<TwoSpeciesConfig> {
    if p1.len() != p2.len() {
        return Err(Error::LengthMismatch(format!(
            "profiles of length {} and {}",
            p1.len(),
            p2.len()
        )));
    }
    let mut rng = rng_from_seed(seed);
    let eta = p1.values().iter().map(|&m| poisson_draw(&mut rng, m)).collect();
    let xi = p2.values().iter().map(|&m| poisson_draw(&mut rng, m)).collect();
    TwoSpeciesConfig::new(eta, xi)
}

/// Coefficients of the two-species reaction rates and of the infection term.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TildeParams {
    pub alpha1: f64,
    pub alpha2: f64,
    /// Death coefficient.
    pub kappa_death: f64,
    pub lambda: f64,
    pub beta: f64,
    pub phi: f64,
}

impl TildeParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha1", self.alpha1),
            ("alpha2", self.alpha2),
            ("kd", self.kappa_death),
            ("lambda", self.lambda),
            ("beta", self.beta),
            ("phi", self.phi),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(name, format!("must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// Counts seen by a local rate function: the site itself and the infected
/// counts of its two neighbours.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LocalState {
    pub eta: u64,
    pub xi: u64,
    pub nbr_xi: [u64; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LocalRate {
    Beta1,
    Delta1,
    Beta2,
    Delta2,
    G,
}

impl LocalRate {
    pub const ALL: [LocalRate; 5] = [
        LocalRate::Beta1,
        LocalRate::Delta1,
        LocalRate::Beta2,
        LocalRate::Delta2,
        LocalRate::G,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LocalRate::Beta1 => "beta1",
            LocalRate::Delta1 => "delta1",
            LocalRate::Beta2 => "beta2",
            LocalRate::Delta2 => "delta2",
            LocalRate::G => "g",
        }
    }

    /// The particle-level function.
    pub fn eval(self, s: &LocalState, p: &TildeParams) -> f64 {
        let (e, x) = (s.eta as f64, s.xi as f64);
        match self {
            LocalRate::Beta1 => p.alpha1 * (e + x),
            LocalRate::Delta1 => p.kappa_death * e * e * (e + x * x),
            LocalRate::Beta2 => p.alpha2 * (e + x),
            LocalRate::Delta2 => p.kappa_death * x * x * (e * e + x),
            LocalRate::G => {
                if s.eta == 0 {
                    return x;
                }
                let outside = if s.xi == 0 { p.lambda } else { p.beta };
                (1.0 - p.phi) * x - outside * (s.nbr_xi[0] + s.nbr_xi[1]) as f64
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TildeRates {
    pub beta1: f64,
    pub delta1: f64,
    pub beta2: f64,
    pub delta2: f64,
    pub g: f64,
}

impl TildeRates {
    pub fn get(&self, r: LocalRate) -> f64 {
        match r {
            LocalRate::Beta1 => self.beta1,
            LocalRate::Delta1 => self.delta1,
            LocalRate::Beta2 => self.beta2,
            LocalRate::Delta2 => self.delta2,
            LocalRate::G => self.g,
        }
    }
}

/// Closed-form Poisson averages of the local rates at intensities (a, b).
pub fn tilde_rates(a: f64, b: f64, p: &TildeParams) -> TildeRates {
    let m2 = |m: f64| m * m + m;
    let m3 = |m: f64| m * m * m + 3.0 * m * m + m;
    let pa = -(-a).exp_m1();
    let eb = (-b).exp();
    TildeRates {
        beta1: p.alpha1 * (a + b),
        delta1: p.kappa_death * (m3(a) + m2(a) * m2(b)),
        beta2: p.alpha2 * (a + b),
        delta2: p.kappa_death * (m2(a) * m2(b) + m3(b)),
        g: b * (1.0 - p.phi * pa) - 2.0 * b * pa * (p.lambda * eb + p.beta * (1.0 - eb)),
    }
}

/// Draws i.i.d. local states under Poisson(a) × Poisson(b).
pub struct LocalSampler {
    eta: Option<Poisson<f64>>,
    xi: Option<Poisson<f64>>,
}

impl LocalSampler {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        let dist = |name: &'static str, m: f64| -> Result<Option<Poisson<f64>>> {
            if !(m.is_finite() && m >= 0.0) {
                return Err(Error::param(
                    name,
                    format!("intensity must be finite and >= 0, got {m}"),
                ));
            }
            Ok((m > 0.0).then(|| Poisson::new(m).expect("positive intensity")))
        };
        Ok(LocalSampler {
            eta: dist("a", a)?,
            xi: dist("b", b)?,
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> LocalState {
        let draw = |d: &Option<Poisson<f64>>, rng: &mut R| d.as_ref().map_or(0, |d| d.sample(rng) as u64);
        let eta = draw(&self.eta, rng);
        let xi = draw(&self.xi, rng);
        let left = draw(&self.xi, rng);
        let right = draw(&self.xi, rng);
        LocalState {
            eta,
            xi,
            nbr_xi: [left, right],
        }
    }
}

/// Monte Carlo average of `h` under Poisson(a) × Poisson(b).
pub fn tilde_mc(h: impl Fn(&LocalState) -> f64, a: f64, b: f64, samples: usize, seed: u64) -> Result<MeanEstimate> {
    if samples == 0 {
        return Err(Error::param("samples", "need at least one sample"));
    }
    let sampler = LocalSampler::new(a, b)?;
    let mut rng = rng_from_seed(seed);
    let mut w = Welford::default();
    for _ in 0..samples {
        w.push(h(&sampler.sample(&mut rng)));
    }
    Ok(w.estimate())
}

/// Monte Carlo estimates of all five rates from one shared sample.
pub fn tilde_mc_all(a: f64, b: f64, p: &TildeParams, samples: usize, seed: u64) -> Result<[MeanEstimate; 5]> {
    if samples == 0 {
        return Err(Error::param("samples", "need at least one sample"));
    }
    let sampler = LocalSampler::new(a, b)?;
    let mut rng = rng_from_seed(seed);
    let mut w = [Welford::default(); 5];
    for _ in 0..samples {
        let s = sampler.sample(&mut rng);
        for (acc, r) in w.iter_mut().zip(LocalRate::ALL) {
            acc.push(r.eval(&s, p));
        }
    }
    Ok(w.map(|x| x.estimate()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TildeRow {
    pub a: f64,
    pub b: f64,
    pub closed: TildeRates,
    /// Indexed like [`LocalRate::ALL`].
    pub mc: [MeanEstimate; 5],
}

impl TildeRow {
    /// |closed − MC| / stderr for each rate; zero when both agree exactly.
    pub fn z_scores(&self) -> [f64; 5] {
        let mut out = [0.0; 5];
        for (k, r) in LocalRate::ALL.into_iter().enumerate() {
            let diff = (self.closed.get(r) - self.mc[k].mean).abs();
            out[k] = if diff == 0.0 { 0.0 } else { diff / self.mc[k].stderr };
        }
        out
    }
}

/// Closed forms and Monte Carlo estimates over the grid `values × values`.
pub fn tilde_table(values: &[f64], p: &TildeParams, samples: usize, seed: u64) -> Result<Vec<TildeRow>> {
    p.validate()?;
    let mut rows = Vec::with_capacity(values.len() * values.len());
    for (i, &a) in values.iter().enumerate() {
        for (j, &b) in values.iter().enumerate() {
            let mc = tilde_mc_all(a, b, p, samples, derive_stream(seed, &[i as u64, j as u64]))?;
            rows.push(TildeRow {
                a,
                b,
                closed: tilde_rates(a, b, p),
                mc,
            });
        }
    }
    Ok(rows)
}

pub fn write_tilde_csv<W: std::io::Write>(rows: &[TildeRow], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["a".to_string(), "b".to_string()];
    for r in LocalRate::ALL {
        header.push(format!("{}_tilde", r.name()));
    }
    for r in LocalRate::ALL {
        header.push(format!("{}_mc", r.name()));
        header.push(format!("{}_stderr", r.name()));
    }
    out.write_record(&header)?;
    for row in rows {
        let mut rec = vec![row.a.to_string(), row.b.to_string()];
        for r in LocalRate::ALL {
            rec.push(row.closed.get(r).to_string());
        }
        for m in &row.mc {
            rec.push(m.mean.to_string());
            rec.push(m.stderr.to_string());
        }
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Which change of variables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Substitution {
    /// One healthy individual becomes infected: (η, ξ) → (η − 1, ξ + 1).
    HealthyToInfected,
    /// One infected individual recovers: (η, ξ) → (η + 1, ξ − 1).
    InfectedToHealthy,
}

/// A bounded test function of the local state.
pub struct TestFunction {
    pub name: &'static str,
    pub f: fn(&LocalState) -> f64,
}

/// Bounded functions used to exercise the change of variables identities.
pub fn test_battery() -> Vec<TestFunction> {
    vec![
        TestFunction {
            name: "one",
            f: |_| 1.0,
        },
        TestFunction {
            name: "eta_zero",
            f: |s| (s.eta == 0) as u8 as f64,
        },
        TestFunction {
            name: "inv_one_plus_xi",
            f: |s| 1.0 / (1.0 + s.xi as f64),
        },
        TestFunction {
            name: "cosine",
            f: |s| (0.7 * s.eta as f64 - 0.3 * s.xi as f64).cos(),
        },
        TestFunction {
            name: "neighbour_decay",
            f: |s| (-0.5 * (s.xi + s.nbr_xi[1]) as f64).exp() / (1.0 + s.eta as f64),
        },
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SubstitutionRow {
    pub function: &'static str,
    pub substitution: Substitution,
    pub lhs: MeanEstimate,
    pub rhs: MeanEstimate,
    /// (lhs − rhs) / sqrt(se_lhs² + se_rhs²).
    pub z: f64,
}

fn shifted(s: &LocalState, kind: Substitution) -> Option<LocalState> {
    match kind {
        Substitution::HealthyToInfected => (s.eta > 0).then(|| LocalState {
            eta: s.eta - 1,
            xi: s.xi + 1,
            ..*s
        }),
        Substitution::InfectedToHealthy => (s.xi > 0).then(|| LocalState {
            eta: s.eta + 1,
            xi: s.xi - 1,
            ..*s
        }),
    }
}

/// Left side: E[f(shifted state)], where the shift only exists when the
/// moved species is present (the term is zero otherwise).
pub fn substitution_lhs(
    f: &dyn Fn(&LocalState) -> f64,
    kind: Substitution,
    a: f64,
    b: f64,
    samples: usize,
    seed: u64,
) -> Result<MeanEstimate> {
    tilde_mc(|s| shifted(s, kind).map_or(0.0, |t| f(&t)), a, b, samples, seed)
}

/// Right side: (a/b)·E[ξ/(1+η)·f] or (b/a)·E[η/(1+ξ)·f].
pub fn substitution_rhs(
    f: &dyn Fn(&LocalState) -> f64,
    kind: Substitution,
    a: f64,
    b: f64,
    samples: usize,
    seed: u64,
) -> Result<MeanEstimate> {
    let (scale, weight): (f64, fn(&LocalState) -> f64) = match kind {
        Substitution::HealthyToInfected => (a / b, |s| s.xi as f64 / (1.0 + s.eta as f64)),
        Substitution::InfectedToHealthy => (b / a, |s| s.eta as f64 / (1.0 + s.xi as f64)),
    };
    let m = tilde_mc(|s| weight(s) * f(s), a, b, samples, seed)?;
    Ok(MeanEstimate {
        mean: scale * m.mean,
        stderr: scale * m.stderr,
        samples: m.samples,
    })
}

/// Both identities for every function of the battery, with independent
/// samples for each side.
pub fn substitution_check(a: f64, b: f64, samples: usize, seed: u64) -> Result<Vec<SubstitutionRow>> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::param("a, b", format!("intensities must be > 0, got ({a}, {b})")));
    }
    let mut rows = Vec::new();
    for (i, tf) in test_battery().into_iter().enumerate() {
        for (k, kind) in [Substitution::HealthyToInfected, Substitution::InfectedToHealthy]
            .into_iter()
            .enumerate()
        {
            let stream = |side: u64| derive_stream(seed, &[i as u64, k as u64, side]);
            let lhs = substitution_lhs(&tf.f, kind, a, b, samples, stream(0))?;
            let rhs = substitution_rhs(&tf.f, kind, a, b, samples, stream(1))?;
            let se = lhs.stderr.hypot(rhs.stderr);
            let diff = lhs.mean - rhs.mean;
            rows.push(SubstitutionRow {
                function: tf.name,
                substitution: kind,
                lhs,
                rhs,
                z: if diff == 0.0 { 0.0 } else { diff / se },
            });
        }
    }
    Ok(rows)
}

/// log of the density of ν_{λ1(·)} × ν_{λ2(·)} against the constant-ρ product measure.
pub fn log_density_psi(eta: &[u64], xi: &[u64], p1: &Profile, p2: &Profile, rho: f64) -> Result<f64> {
    let n = eta.len();
    if xi.len() != n || p1.len() != n || p2.len() != n {
        return Err(Error::LengthMismatch(format!(
            "configs ({}, {}) and profiles ({}, {})",
            eta.len(),
            xi.len(),
            p1.len(),
            p2.len()
        )));
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Error::param("rho", format!("must be > 0, got {rho}")));
    }
    if p1.values().iter().chain(p2.values()).any(|&v| v <= 0.0) {
        return Err(Error::param("profile", "zero intensity; use a floored profile"));
    }
    let part = |counts: &[u64], p: &Profile| -> f64 {
        counts
            .iter()
            .zip(p.values())
            .map(|(&c, &l)| c as f64 * (l / rho).ln() + rho - l)
            .sum()
    };
    Ok(part(eta, p1) + part(xi, p2))
}

/// Mean of `values` over the periodic block {x − k, ..., x + k}.
pub fn block_average(values: &[f64], x: usize, k: usize) -> f64 {
    block_mean(values.len(), x, k, |i| values[i])
}

/// [`block_average`] for integer counts.
pub fn block_average_counts(values: &[u64], x: usize, k: usize) -> f64 {
    block_mean(values.len(), x, k, |i| values[i] as f64)
}

fn block_mean(n: usize, x: usize, k: usize, at: impl Fn(usize) -> f64) -> f64 {
    let width = 2 * k + 1;
    let start = (x % n + n - k % n) % n;
    (0..width).map(|j| at((start + j) % n)).sum::<f64>() / width as f64
}

/// ln P(Poisson(mean) = c).
pub fn poisson_log_pmf(c: u64, mean: f64) -> f64 {
    if mean <= 0.0 {
        return if c == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    c as f64 * mean.ln() - mean - ln_gamma(c as f64 + 1.0)
}

/// Plug-in KL divergence of an empirical histogram from Poisson(mean).
pub fn kl_from_poisson(counts: &[u64], mean: f64) -> f64 {
    let mut hist = std::collections::BTreeMap::<u64, usize>::new();
    for &c in counts {
        *hist.entry(c).or_default() += 1;
    }
    let n = counts.len() as f64;
    hist.into_iter()
        .map(|(c, k)| {
            let q = k as f64 / n;
            q * (q.ln() - poisson_log_pmf(c, mean))
        })
        .sum()
}

pub const MIN_KL_SNAPSHOTS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalEquilibrium {
    pub eta: Vec<f64>,
    pub xi: Vec<f64>,
}

/// Per-site KL divergence between the counts pooled over a k-block and the
/// snapshot ensemble, and the Poisson law with the profile's intensity there.
pub fn local_equilibrium_divergence(
    snapshots: &[TwoSpeciesConfig],
    p1: &Profile,
    p2: &Profile,
    k: usize,
) -> Result<LocalEquilibrium> {
    if snapshots.len() < MIN_KL_SNAPSHOTS {
        return Err(Error::param(
            "snapshots",
            format!("need at least {MIN_KL_SNAPSHOTS}, got {}", snapshots.len()),
        ));
    }
    let n = p1.len();
    if p2.len() != n || snapshots.iter().any(|s| s.len() != n) {
        return Err(Error::LengthMismatch(
            "snapshots and profiles must share the grid".into(),
        ));
    }
    let mut pooled = Vec::with_capacity(snapshots.len() * (2 * k + 1));
    let mut per_species = |counts: &dyn Fn(&TwoSpeciesConfig) -> &[u64], p: &Profile| -> Vec<f64> {
        (0..n)
            .map(|x| {
                pooled.clear();
                for s in snapshots {
                    let c = counts(s);
                    for j in 0..=2 * k {
                        pooled.push(c[(x + n * (k / n + 1) + j - k) % n]);
                    }
                }
                kl_from_poisson(&pooled, p.values()[x])
            })
            .collect()
    };
    let eta = per_species(&|s| s.eta(), p1);
    let xi = per_species(&|s| s.xi(), p2);
    Ok(LocalEquilibrium { eta, xi })
}
