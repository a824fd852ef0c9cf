use std::f64::consts::PI;

use epilattice::pde::{reaction_term, refinement, solve, step, PdeState, SolverConfig};
use epilattice::poisson::{Profile, ProfileShape, TildeParams};
use epilattice::Error;

fn m2(m: f64) -> f64 {
    m * m + m
}

fn m3(m: f64) -> f64 {
    m * m * m + 3.0 * m * m + m
}

/// Reaction terms written out from the Poisson moments.
fn oracle(a: f64, b: f64, p: &TildeParams) -> (f64, f64) {
    let pa = 1.0 - (-a).exp();
    let g = b * (1.0 - p.phi * pa) - 2.0 * b * pa * (p.lambda * (-b).exp() + p.beta * (1.0 - (-b).exp()));
    let f1 = p.alpha1 * (a + b) - p.kappa_death * (m3(a) + m2(a) * m2(b)) + g;
    let f2 = p.alpha2 * (a + b) - p.kappa_death * (m2(a) * m2(b) + m3(b)) - g;
    (f1, f2)
}

fn rates() -> TildeParams {
    TildeParams {
        alpha1: 0.8,
        alpha2: 1.1,
        kappa_death: 0.3,
        lambda: 0.6,
        beta: 0.2,
        phi: 1.4,
    }
}

#[test]
fn reaction_terms_match_moment_formulas() {
    let p = rates();
    for a in [0.0, 0.1, 0.7, 1.5, 3.0] {
        for b in [0.0, 0.2, 1.0, 2.5] {
            let (f1, f2) = reaction_term(a, b, &p);
            let (o1, o2) = oracle(a, b, &p);
            assert!((f1 - o1).abs() < 1e-12 * (1.0 + o1.abs()), "F1({a},{b})");
            assert!((f2 - o2).abs() < 1e-12 * (1.0 + o2.abs()), "F2({a},{b})");
        }
    }
}

fn scalar_rk4(a: f64, b: f64, p: &TildeParams, dt: f64, steps: usize) -> (f64, f64) {
    let f = |u: (f64, f64)| oracle(u.0, u.1, p);
    let mut u = (a, b);
    for _ in 0..steps {
        let k1 = f(u);
        let k2 = f((u.0 + 0.5 * dt * k1.0, u.1 + 0.5 * dt * k1.1));
        let k3 = f((u.0 + 0.5 * dt * k2.0, u.1 + 0.5 * dt * k2.1));
        let k4 = f((u.0 + dt * k3.0, u.1 + dt * k3.1));
        u.0 += dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        u.1 += dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    u
}

#[test]
fn flat_profiles_follow_the_ode() {
    let p = rates();
    let grid = 16;
    let cfg = SolverConfig::stable(grid);
    let steps = 200;
    let horizon = steps as f64 * cfg.dt;
    let sol = solve(
        &Profile::constant(grid, 0.9).unwrap(),
        &Profile::constant(grid, 0.4).unwrap(),
        &p,
        horizon,
        &cfg,
        &[horizon],
    )
    .unwrap();
    let (a, b) = scalar_rk4(0.9, 0.4, &p, horizon / steps as f64, steps);
    let s = &sol.states[0];
    for i in 0..grid {
        assert!((s.lambda1.values()[i] - a).abs() < 1e-12);
        assert!((s.lambda2.values()[i] - b).abs() < 1e-12);
    }
}

#[test]
fn pure_diffusion_damps_a_cosine_mode() {
    let grid = 64;
    let shape = ProfileShape::Fourier {
        mean: 1.0,
        modes: vec![(0.0, 0.0), (0.3, 0.0)],
    };
    let cfg = SolverConfig {
        reactions: false,
        ..SolverConfig::stable(grid)
    };
    let m = shape.grid(grid).unwrap();
    let t = 0.01;
    let sol = solve(&m, &m, &TildeParams::default(), t, &cfg, &[t]).unwrap();
    let decay = (-2.0 * (2.0 * PI).powi(2) * t).exp();
    let dx = 1.0 / grid as f64;
    // Discrete ½Δ eigenvalue for mode 2.
    let discrete = (-(1.0 - (4.0 * PI * dx).cos()) / (dx * dx) * t).exp();
    assert!((decay - discrete).abs() < 1e-2);
    for (i, v) in sol.states[0].lambda1.values().iter().enumerate() {
        let exact = 1.0 + 0.3 * discrete * (4.0 * PI * m.theta(i)).cos();
        assert!((v - exact).abs() < 1e-8, "{i}: {v} vs {exact}");
    }
    let mean: f64 = sol.states[0].lambda1.values().iter().sum::<f64>() / grid as f64;
    assert!((mean - 1.0).abs() < 1e-12);
}

#[test]
fn refinement_changes_mass_little() {
    let m1 = ProfileShape::Fourier {
        mean: 2.0,
        modes: vec![(0.5, 0.0)],
    };
    let m2 = ProfileShape::Fourier {
        mean: 1.0,
        modes: vec![(0.0, 0.5)],
    };
    let grid = 64;
    let rep = refinement(&m1, &m2, &rates(), 0.1, grid, SolverConfig::stable(grid).dt).unwrap();
    assert!(rep.mass_change.iter().all(|&c| c < 1e-4), "{rep:?}");
    assert!(rep.fine_dt <= 0.4 / (4.0 * (grid * grid) as f64) * (1.0 + 1e-12));
}

#[test]
fn step_reports_mass_residual_and_cfl() {
    let grid = 32;
    let m = ProfileShape::Fourier {
        mean: 1.0,
        modes: vec![(0.4, 0.1)],
    };
    let state = PdeState::new(m.grid(grid).unwrap(), m.grid(grid).unwrap()).unwrap();
    let (_, rep) = step(&state, &rates(), &SolverConfig::stable(grid)).unwrap();
    assert!(rep.mass_residual < 1e-12);
    let too_big = SolverConfig::new(SolverConfig::stable(grid).dt * 1.01);
    assert!(matches!(
        step(&state, &rates(), &too_big),
        Err(Error::CflViolation { .. })
    ));
    let no_diffusion = SolverConfig {
        diffusion: false,
        ..too_big
    };
    assert!(step(&state, &rates(), &no_diffusion).is_ok());
}

#[test]
fn output_times_are_hit_exactly() {
    let grid = 16;
    let m = Profile::constant(grid, 1.0).unwrap();
    let sol = solve(
        &m,
        &m,
        &rates(),
        0.3,
        &SolverConfig::stable(grid),
        &[0.3, 0.0, 0.1234, 0.5],
    )
    .unwrap();
    let times: Vec<f64> = sol.states.iter().map(|s| s.t).collect();
    assert_eq!(times, vec![0.0, 0.1234, 0.3]);
    assert_eq!(sol.states[0].lambda1, m);
    assert!(PdeState::new(Profile::constant(4, 1.0).unwrap(), Profile::constant(5, 1.0).unwrap()).is_err());
}
