//! Method-of-lines RK4 solver for the limiting reaction–diffusion system
//! ∂t u = ½Δu + F(u) on the periodic unit interval.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poisson::{tilde_rates, Profile, ProfileShape, TildeParams};

/// Largest admissible dt / dx².
pub const DEFAULT_CFL: f64 = 0.4;

/// Minimum values below this are flagged as losing positivity.
pub const LOW_VALUE_FLAG: f64 = 1e-6;

/// (F1, F2) = (β̃1 − δ̃1 + g̃, β̃2 − δ̃2 − g̃).
pub fn reaction_term(a: f64, b: f64, p: &TildeParams) -> (f64, f64) {
    let r = tilde_rates(a, b, p);
    (r.beta1 - r.delta1 + r.g, r.beta2 - r.delta2 - r.g)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeState {
    pub lambda1: Profile,
    pub lambda2: Profile,
    pub t: f64,
}

impl PdeState {
    pub fn new(lambda1: Profile, lambda2: Profile) -> Result<Self> {
        if lambda1.len() != lambda2.len() {
            return Err(Error::LengthMismatch(format!(
                "profiles of length {} and {}",
                lambda1.len(),
                lambda2.len()
            )));
        }
        if lambda1.len() < 3 {
            return Err(Error::param("grid", "need at least 3 grid points"));
        }
        Ok(PdeState {
            lambda1,
            lambda2,
            t: 0.0,
        })
    }

    pub fn grid(&self) -> usize {
        self.lambda1.len()
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.grid() as f64
    }

    pub fn min(&self) -> f64 {
        self.lambda1.min().min(self.lambda2.min())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt: f64,
    pub cfl_safety: f64,
    /// Test hooks: switch either part of the right-hand side off.
    pub diffusion: bool,
    pub reactions: bool,
}

impl SolverConfig {
    pub fn new(dt: f64) -> Self {
        SolverConfig {
            dt,
            cfl_safety: DEFAULT_CFL,
            diffusion: true,
            reactions: true,
        }
    }

    /// The largest stable step for `grid` points.
    pub fn stable(grid: usize) -> Self {
        let dx = 1.0 / grid as f64;
        SolverConfig::new(DEFAULT_CFL * dx * dx)
    }

    fn check(&self, grid: usize) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::param("dt", format!("must be > 0, got {}", self.dt)));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::param(
                "cfl_safety",
                format!("must lie in (0, 1], got {}", self.cfl_safety),
            ));
        }
        if self.diffusion {
            let dx = 1.0 / grid as f64;
            let limit = self.cfl_safety * dx * dx;
            if self.dt > limit * (1.0 + 1e-12) {
                return Err(Error::CflViolation { dt: self.dt, limit });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct StepReport {
    /// Grid values set back to zero after the step.
    pub clipped: usize,
    /// |Δ mean − dt·(RK4-weighted mean of F)| relative to the mean, worst species.
    pub mass_residual: f64,
}

/// ½·(u_{i−1} − 2u_i + u_{i+1})/dx² with periodic wrap.
pub fn half_laplacian(u: &[f64], out: &mut [f64]) {
    let n = u.len();
    let scale = 0.5 * (n * n) as f64;
    for i in 0..n {
        let l = u[(i + n - 1) % n];
        let r = u[(i + 1) % n];
        out[i] = scale * (l - 2.0 * u[i] + r);
    }
}

struct Rhs<'a> {
    p: &'a TildeParams,
    cfg: &'a SolverConfig,
    lap: Vec<f64>,
}

impl Rhs<'_> {
    /// Writes du/dt into (d1, d2); returns the grid means of (F1, F2).
    fn eval(&mut self, u1: &[f64], u2: &[f64], d1: &mut [f64], d2: &mut [f64]) -> (f64, f64) {
        let n = u1.len();
        let (mut m1, mut m2) = (0.0, 0.0);
        for i in 0..n {
            let (f1, f2) = if self.cfg.reactions {
                reaction_term(u1[i].max(0.0), u2[i].max(0.0), self.p)
            } else {
                (0.0, 0.0)
            };
            d1[i] = f1;
            d2[i] = f2;
            m1 += f1;
            m2 += f2;
        }
        if self.cfg.diffusion {
            for (u, d) in [(u1, &mut *d1), (u2, &mut *d2)] {
                half_laplacian(u, &mut self.lap);
                for (di, li) in d.iter_mut().zip(&self.lap) {
                    *di += li;
                }
            }
        }
        (m1 / n as f64, m2 / n as f64)
    }
}

fn mean(u: &[f64]) -> f64 {
    u.iter().sum::<f64>() / u.len() as f64
}

fn rk4(state: &PdeState, p: &TildeParams, cfg: &SolverConfig, dt: f64) -> (PdeState, StepReport) {
    let n = state.grid();
    let u1 = state.lambda1.values();
    let u2 = state.lambda2.values();
    let mut rhs = Rhs {
        p,
        cfg,
        lap: vec![0.0; n],
    };
    let mut k1 = [vec![0.0; n], vec![0.0; n]];
    let mut k2 = k1.clone();
    let mut k3 = k1.clone();
    let mut k4 = k1.clone();
    let mut tmp = k1.clone();
    let stage = |u: &[f64], k: &[f64], h: f64, out: &mut Vec<f64>| {
        for i in 0..u.len() {
            out[i] = u[i] + h * k[i];
        }
    };

    let [a1, a2] = &mut k1;
    let f1 = rhs.eval(u1, u2, a1, a2);
    let [t1, t2] = &mut tmp;
    stage(u1, &k1[0], 0.5 * dt, t1);
    stage(u2, &k1[1], 0.5 * dt, t2);
    let [b1, b2] = &mut k2;
    let f2 = rhs.eval(t1, t2, b1, b2);
    stage(u1, &k2[0], 0.5 * dt, t1);
    stage(u2, &k2[1], 0.5 * dt, t2);
    let [c1, c2] = &mut k3;
    let f3 = rhs.eval(t1, t2, c1, c2);
    stage(u1, &k3[0], dt, t1);
    stage(u2, &k3[1], dt, t2);
    let [d1, d2] = &mut k4;
    let f4 = rhs.eval(t1, t2, d1, d2);

    let mut clipped = 0;
    let mut next = |u: &[f64], s: usize| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let v = u[i] + dt / 6.0 * (k1[s][i] + 2.0 * k2[s][i] + 2.0 * k3[s][i] + k4[s][i]);
                if v < 0.0 {
                    clipped += 1;
                    0.0
                } else {
                    v
                }
            })
            .collect()
    };
    let n1 = next(u1, 0);
    let n2 = next(u2, 1);

    let residual = |old: &[f64], new: &[f64], fm: [f64; 4]| -> f64 {
        if !cfg.reactions && !cfg.diffusion {
            return 0.0;
        }
        let src = if cfg.reactions {
            dt / 6.0 * (fm[0] + 2.0 * fm[1] + 2.0 * fm[2] + fm[3])
        } else {
            0.0
        };
        let m_old = mean(old);
        let change = mean(new) - m_old;
        (change - src).abs() / m_old.abs().max(f64::MIN_POSITIVE)
    };
    let r1 = residual(u1, &n1, [f1.0, f2.0, f3.0, f4.0]);
    let r2 = residual(u2, &n2, [f1.1, f2.1, f3.1, f4.1]);
    let state = PdeState {
        lambda1: Profile::new(n1).expect("clipped values are >= 0"),
        lambda2: Profile::new(n2).expect("clipped values are >= 0"),
        t: state.t + dt,
    };
    (
        state,
        StepReport {
            clipped,
            mass_residual: r1.max(r2),
        },
    )
}

/// One RK4 step of size `cfg.dt`.
pub fn step(state: &PdeState, p: &TildeParams, cfg: &SolverConfig) -> Result<(PdeState, StepReport)> {
    cfg.check(state.grid())?;
    Ok(rk4(state, p, cfg, cfg.dt))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdeSolution {
    pub states: Vec<PdeState>,
    pub steps: u64,
    pub clipped: u64,
    pub max_mass_residual: f64,
    /// Smallest grid value seen over the whole run.
    pub min_value: f64,
    pub low_min_flag: bool,
}

/// Integrates from the initial profiles to `horizon`, landing exactly on
/// each output time (steps are shortened, never lengthened, to do so).
pub fn solve(
    m1: &Profile,
    m2: &Profile,
    p: &TildeParams,
    horizon: f64,
    cfg: &SolverConfig,
    output_times: &[f64],
) -> Result<PdeSolution> {
    p.validate()?;
    let mut state = PdeState::new(m1.clone(), m2.clone())?;
    cfg.check(state.grid())?;
    if !(horizon >= 0.0) {
        return Err(Error::param("T", format!("must be >= 0, got {horizon}")));
    }
    let mut times: Vec<f64> = output_times.iter().copied().filter(|&t| t <= horizon).collect();
    if let Some(&bad) = output_times.iter().find(|t| !(**t >= 0.0)) {
        return Err(Error::param("output_times", format!("must be >= 0, got {bad}")));
    }
    times.sort_by(f64::total_cmp);
    times.dedup();

    let mut out = Vec::with_capacity(times.len());
    let (mut steps, mut clipped, mut worst) = (0u64, 0u64, 0.0f64);
    let mut min_value = state.min();
    for &target in &times {
        let span = target - state.t;
        if span > 0.0 {
            let k = (span / cfg.dt).ceil().max(1.0) as u64;
            let h = span / k as f64;
            let start = state.t;
            for j in 1..=k {
                let (next, rep) = rk4(&state, p, cfg, h);
                state = next;
                state.t = if j == k { target } else { start + j as f64 * h };
                steps += 1;
                clipped += rep.clipped as u64;
                worst = worst.max(rep.mass_residual);
                min_value = min_value.min(state.min());
            }
        }
        out.push(state.clone());
    }
    Ok(PdeSolution {
        states: out,
        steps,
        clipped,
        max_mass_residual: worst,
        min_value,
        low_min_flag: min_value < LOW_VALUE_FLAG,
    })
}

/// Rows `t,theta,lambda1,lambda2`.
pub fn write_solution_csv<W: Write>(states: &[PdeState], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["t", "theta", "lambda1", "lambda2"])?;
    for s in states {
        for i in 0..s.grid() {
            out.serialize((s.t, s.lambda1.theta(i), s.lambda1.values()[i], s.lambda2.values()[i]))?;
        }
    }
    out.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefinementReport {
    pub grid: usize,
    pub dt: f64,
    pub fine_dt: f64,
    pub horizon: f64,
    /// ⟨λ, 1⟩ on the base and the doubled grid, per species.
    pub mass: [(f64, f64); 2],
    pub mass_change: [f64; 2],
    /// Max |difference| over the coarse grid points.
    pub max_pointwise_change: f64,
}

fn max_dt(grid: usize) -> f64 {
    let dx = 1.0 / grid as f64;
    DEFAULT_CFL * dx * dx
}

/// Solves on `grid` and `2·grid` points (dt halved and kept stable) and
/// compares the results at `horizon`.
pub fn refinement(
    m1: &ProfileShape,
    m2: &ProfileShape,
    p: &TildeParams,
    horizon: f64,
    grid: usize,
    dt: f64,
) -> Result<RefinementReport> {
    let run = |g: usize, dt: f64| -> Result<PdeState> {
        let sol = solve(
            &m1.grid(g)?,
            &m2.grid(g)?,
            p,
            horizon,
            &SolverConfig::new(dt),
            &[horizon],
        )?;
        Ok(sol.states.into_iter().next().expect("one output"))
    };
    let fine_dt = (0.5 * dt).min(max_dt(2 * grid));
    let coarse = run(grid, dt)?;
    let fine = run(2 * grid, fine_dt)?;
    let mass = |s: &PdeState| [mean(s.lambda1.values()), mean(s.lambda2.values())];
    let (mc, mf) = (mass(&coarse), mass(&fine));
    let mut worst = 0.0f64;
    for (c, f) in [(&coarse.lambda1, &fine.lambda1), (&coarse.lambda2, &fine.lambda2)] {
        for i in 0..grid {
            worst = worst.max((c.values()[i] - f.values()[2 * i]).abs());
        }
    }
    Ok(RefinementReport {
        grid,
        dt,
        fine_dt,
        horizon,
        mass: [(mc[0], mf[0]), (mc[1], mf[1])],
        mass_change: [(mc[0] - mf[0]).abs(), (mc[1] - mf[1]).abs()],
        max_pointwise_change: worst,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderEstimate {
    pub grids: [usize; 3],
    /// Values of the functional on each grid.
    pub values: [f64; 3],
    pub order: f64,
}

/// log2(|f(M) − f(2M)| / |f(2M) − f(4M)|) for a functional of the solution
/// of λ1 at `horizon`, each grid at its largest stable step.
pub fn observed_order(
    m1: &ProfileShape,
    m2: &ProfileShape,
    p: &TildeParams,
    cfg: &SolverConfig,
    horizon: f64,
    grid: usize,
    functional: impl Fn(&PdeState) -> f64,
) -> Result<OrderEstimate> {
    let grids = [grid, 2 * grid, 4 * grid];
    let mut values = [0.0; 3];
    for (v, &g) in values.iter_mut().zip(&grids) {
        let c = SolverConfig {
            dt: max_dt(g).min(cfg.dt),
            ..*cfg
        };
        let sol = solve(&m1.grid(g)?, &m2.grid(g)?, p, horizon, &c, &[horizon])?;
        *v = functional(&sol.states[0]);
    }
    let order = ((values[0] - values[1]).abs() / (values[1] - values[2]).abs()).log2();
    Ok(OrderEstimate { grids, values, order })
}
