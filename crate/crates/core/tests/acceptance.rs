//! Acceptance criteria. Each test prints one `[PASS]`/`[FAIL]` line.
//! Run with `cargo test --release --test acceptance -- --nocapture`.

use std::time::Instant;

use epilattice::coupling::{check_ordering, CoupledPair, Order, DEFAULT_PAIR_CAP};
use epilattice::epidemic::{
    survival_probability, ClusterCap, ClusterConfig, ModelParams, Recovery, SimLimits, SurvivalConfig,
};
use epilattice::hydro::{
    convergence_experiment, window_experiment, write_convergence_csv, write_replica_pairings_csv, ConvergenceSpec,
    WindowSpec,
};
use epilattice::lattice::Site;
use epilattice::pde::{observed_order, solve, step, PdeState, SolverConfig};
use epilattice::poisson::{substitution_check, tilde_rates, tilde_table, LocalRate, ProfileShape, TildeParams};
use epilattice::replica::{rng_from_seed, Jobs};
use epilattice::two_species::{Observable, Species, TorusEngine, TwoSpeciesConfig, TwoSpeciesParams};

const SEED: u64 = 1;

fn verdict(id: u32, title: &str, pass: bool, detail: &str, started: Instant) -> bool {
    println!(
        "[{}] criterion {id}: {title} | {detail} | {:.1}s",
        if pass { "PASS" } else { "FAIL" },
        started.elapsed().as_secs_f64()
    );
    pass
}

fn single() -> ClusterConfig {
    ClusterConfig::single(Site::line(0))
}

fn pair_limits() -> SimLimits {
    SimLimits {
        population_cap: Some(DEFAULT_PAIR_CAP),
        ..SimLimits::default()
    }
}

#[test]
fn criterion_01_monotone_coupling() {
    let t0 = Instant::now();
    let a = ModelParams::new(0.5, 0.5, 2.0, ClusterCap::Infinite, 1, Recovery::Individual);
    let b = ModelParams { phi: 1.0, ..a };
    let pair = CoupledPair::new(single(), a, b, Order::Pointwise);
    let s = check_ordering(&pair, 50.0, 200, SEED, &pair_limits(), Jobs::default()).unwrap();
    let secs = t0.elapsed().as_secs_f64();
    let pass = s.violations == 0 && s.truncated == 0 && secs < 120.0;
    let detail = format!(
        "violations={} replicas={} events={} capped={} truncated={}",
        s.violations, s.replicas, s.events, s.capped, s.truncated
    );
    assert!(
        verdict(1, "ordered IRP pair keeps xi_A >= xi_B", pass, &detail, t0),
        "{detail}"
    );
}

#[test]
fn criterion_02_contact_domination() {
    let t0 = Instant::now();
    let mut details = Vec::new();
    let mut pass = true;
    for recovery in [Recovery::Individual, Recovery::Cluster] {
        let p = ModelParams::new(1.0, 1.0, 3.0, ClusterCap::Infinite, 1, recovery);
        let pair = CoupledPair::versus_contact(p, single());
        let s = check_ordering(&pair, 50.0, 100, SEED, &pair_limits(), Jobs::default()).unwrap();
        pass &= s.violations == 0 && s.truncated == 0;
        details.push(format!("{recovery}: violations={} capped={}", s.violations, s.capped));
    }
    pass &= t0.elapsed().as_secs_f64() < 120.0;
    let detail = details.join(", ");
    assert!(
        verdict(2, "model occupancy dominates the contact process", pass, &detail, t0),
        "{detail}"
    );
}

#[test]
fn criterion_03_extinction_regime() {
    let t0 = Instant::now();
    let mut pass = true;
    let mut details = Vec::new();
    for recovery in [Recovery::Individual, Recovery::Cluster] {
        let p = ModelParams::new(0.3, 0.2, 0.3, ClusterCap::Infinite, 1, recovery);
        let est = survival_probability(&p, &single(), &SurvivalConfig::new(200.0, 2000, SEED)).unwrap();
        pass &= est.p_hat <= 0.01;
        details.push(format!("{recovery}: p_hat={} ci={:.4}", est.p_hat, est.ci_halfwidth));
    }
    pass &= t0.elapsed().as_secs_f64() < 300.0;
    let detail = details.join(", ");
    assert!(
        verdict(3, "no epidemic below phi + 2d lambda = 1", pass, &detail, t0),
        "{detail}"
    );
}

/// Extinction probability of the chain on {0..cap} (birth iφ, death i) from
/// one individual, with `cap` treated as escape.
fn birth_death_extinction(phi: f64, cap: usize) -> f64 {
    // -(1-p) q_{i-1} + q_i - p q_{i+1} = 0 for 0 < i < cap, q_0 = 1, q_cap = 0.
    let p = phi / (1.0 + phi);
    let (lower, upper) = (-(1.0 - p), -p);
    let n = cap - 1;
    let (mut c, mut d) = (vec![0.0; n], vec![0.0; n]);
    for k in 0..n {
        let rhs = if k == 0 { 1.0 - p } else { 0.0 };
        let (c_prev, d_prev) = if k == 0 { (0.0, 0.0) } else { (c[k - 1], d[k - 1]) };
        let m = 1.0 - lower * c_prev;
        c[k] = upper / m;
        d[k] = (rhs - lower * d_prev) / m;
    }
    let mut q = vec![0.0; n];
    for k in (0..n).rev() {
        let next = if k + 1 < n { q[k + 1] } else { 0.0 };
        q[k] = d[k] - c[k] * next;
    }
    q[0]
}

#[test]
fn criterion_04_single_cluster_oracle() {
    let t0 = Instant::now();
    let oracle = 1.0 - birth_death_extinction(2.0, 200);
    let p = ModelParams::new(0.0, 0.0, 2.0, ClusterCap::Infinite, 1, Recovery::Individual);
    let est = survival_probability(&p, &single(), &SurvivalConfig::new(200.0, 5000, SEED)).unwrap();
    let pass = (oracle - 0.5).abs() < 1e-12 && (est.p_hat - 0.5).abs() <= 0.03 && t0.elapsed().as_secs_f64() < 120.0;
    let detail = format!("p_hat={} oracle={oracle:.12} capped={}", est.p_hat, est.capped);
    assert!(
        verdict(4, "birth-death survival 1 - 1/phi", pass, &detail, t0),
        "{detail}"
    );
}

#[test]
fn criterion_05_tilde_closed_forms() {
    let t0 = Instant::now();
    let p = TildeParams {
        alpha1: 1.0,
        alpha2: 1.0,
        kappa_death: 1.0,
        lambda: 1.0,
        beta: 0.0,
        phi: 1.0,
    };
    let rows = tilde_table(&[0.5, 1.0, 2.0], &p, 1_000_000, SEED).unwrap();
    let mut worst = (0.0f64, 0.0, 0.0, "");
    for r in &rows {
        for (k, z) in r.z_scores().into_iter().enumerate() {
            if z > worst.0 {
                worst = (z, r.a, r.b, LocalRate::ALL[k].name());
            }
        }
    }
    let exact_nine = tilde_rates(1.0, 1.0, &TildeParams { kappa_death: 2.5, ..p }).delta1 / 2.5 == 9.0;
    let pass = worst.0 <= 3.0 && exact_nine && t0.elapsed().as_secs_f64() < 180.0;
    let detail = format!(
        "max |z|={:.3} at (a,b)=({},{}) rate {}, delta1(1,1)/kd=9 exact: {exact_nine}",
        worst.0, worst.1, worst.2, worst.3
    );
    assert!(
        verdict(5, "tilde closed forms match Monte Carlo", pass, &detail, t0),
        "{detail}"
    );
}

#[test]
fn criterion_06_substitution_identities() {
    let t0 = Instant::now();
    let mut worst = (0.0f64, String::new());
    for (a, b) in [(1.0, 1.0), (2.0, 0.5)] {
        for r in substitution_check(a, b, 1_000_000, SEED).unwrap() {
            if r.z.abs() >= worst.0 {
                worst = (r.z.abs(), format!("({a},{b}) {} {:?}", r.function, r.substitution));
            }
        }
    }
    let pass = worst.0 <= 3.0 && t0.elapsed().as_secs_f64() < 180.0;
    let detail = format!("max |z|={:.3} at {}", worst.0, worst.1);
    assert!(
        verdict(6, "change of variables identities", pass, &detail, t0),
        "{detail}"
    );
}

#[test]
fn criterion_07_pde_fourier() {
    let t0 = Instant::now();
    let (c, amp, t) = (1.0, 0.5, 0.1);
    let shape = ProfileShape::Fourier {
        mean: c,
        modes: vec![(amp, 0.0)],
    };
    let flat = TildeParams::default();
    let heat = SolverConfig {
        reactions: false,
        ..SolverConfig::stable(256)
    };
    let m1 = shape.grid(256).unwrap();
    let sol = solve(&m1, &m1, &flat, t, &heat, &[t]).unwrap();
    let decay = (-2.0 * std::f64::consts::PI.powi(2) * t).exp();
    let got = sol.states[0].lambda1.values();
    let (mut num, mut den) = (0.0, 0.0);
    for (i, v) in got.iter().enumerate() {
        let th = i as f64 / 256.0;
        let exact = c + amp * decay * (std::f64::consts::TAU * th).cos();
        num += (v - exact).powi(2);
        den += exact * exact;
    }
    let rel_l2 = (num / den).sqrt();

    // Mass balance with the full reaction terms switched on.
    let full = TildeParams {
        alpha1: 0.5,
        alpha2: 0.5,
        kappa_death: 0.5,
        lambda: 0.5,
        beta: 0.5,
        phi: 0.5,
    };
    let m2 = ProfileShape::Fourier {
        mean: 1.0,
        modes: vec![(0.0, 0.5)],
    };
    let mut state = PdeState::new(
        ProfileShape::Fourier {
            mean: 2.0,
            modes: vec![(0.5, 0.0)],
        }
        .grid(256)
        .unwrap(),
        m2.grid(256).unwrap(),
    )
    .unwrap();
    let mut worst_residual = 0.0f64;
    let cfg = SolverConfig::stable(256);
    for _ in 0..2000 {
        let (next, rep) = step(&state, &full, &cfg).unwrap();
        worst_residual = worst_residual.max(rep.mass_residual);
        state = next;
    }

    let order = observed_order(&shape, &shape, &flat, &heat, t, 16, |s| s.lambda1.values()[0]).unwrap();
    let pass = rel_l2 < 1e-3
        && sol.max_mass_residual < 1e-8
        && worst_residual < 1e-8
        && (1.8..=2.2).contains(&order.order)
        && t0.elapsed().as_secs_f64() < 60.0;
    let detail = format!(
        "rel L2={rel_l2:.3e} mass residual={:.3e} order={:.4} (grids {:?})",
        worst_residual.max(sol.max_mass_residual),
        order.order,
        order.grids
    );
    assert!(
        verdict(7, "heat decay, mass balance, second order", pass, &detail, t0),
        "{detail}"
    );
}

#[test]
fn criterion_08_diffusion_conservation() {
    let t0 = Instant::now();
    let p = TwoSpeciesParams::diffusion_only(32);
    let eta: Vec<u64> = (0..32).map(|x| (x % 5) as u64).collect();
    let xi: Vec<u64> = (0..32).map(|x| (x % 3) as u64).collect();
    let c0 = TwoSpeciesConfig::new(eta, xi).unwrap();
    let start = c0.totals();
    let mut engine = TorusEngine::new(&p, &c0).unwrap();
    let mut rng = rng_from_seed(SEED);
    let events = 1_000_000;
    let mut held = true;
    for _ in 0..events {
        engine.fire(&mut rng).unwrap();
        held &= engine.totals() == start;
    }
    let detail = format!("events={events} totals={:?} final={:?}", start, engine.totals());
    assert!(
        verdict(8, "diffusion conserves both species", held, &detail, t0),
        "{detail}"
    );
}

fn hydro_spec(ns: Vec<usize>) -> ConvergenceSpec {
    ConvergenceSpec {
        m1: ProfileShape::Fourier {
            mean: 2.0,
            modes: vec![(0.5, 0.0)],
        },
        m2: ProfileShape::Fourier {
            mean: 1.0,
            modes: vec![(0.0, 0.5)],
        },
        params: TildeParams {
            alpha1: 0.5,
            alpha2: 0.5,
            kappa_death: 0.5,
            lambda: 0.5,
            beta: 0.5,
            phi: 0.5,
        },
        ns,
        replicas: 50,
        observables: vec![Observable::One, Observable::Cos(1), Observable::Sin(1)],
        times: vec![0.1],
        master_seed: SEED,
        pde_grid: 256,
        max_events: 100_000_000,
        jobs: Jobs::default(),
    }
}

#[test]
fn criterion_09_hydrodynamic_convergence() {
    let t0 = Instant::now();
    let spec = hydro_spec(vec![32, 64, 128]);
    let report = convergence_experiment(&spec).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for g in &spec.observables {
        for s in Species::BOTH {
            let small = report.row(32, 0.1, *g, s).unwrap();
            let large = report.row(128, 0.1, *g, s).unwrap();
            let ok = large.abs_error < small.abs_error && large.abs_error <= 0.05f64.max(3.0 * large.stderr);
            pass &= ok;
            parts.push(format!(
                "{g}/{}: {:.4}->{:.4} (se {:.4}){}",
                s.name(),
                small.abs_error,
                large.abs_error,
                large.stderr,
                if ok { "" } else { " X" }
            ));
        }
    }
    pass &= report.pde_clipped == 0 && t0.elapsed().as_secs_f64() < 45.0 * 60.0;
    let detail = parts.join("; ");
    assert!(
        verdict(9, "pairings approach the PDE solution", pass, &detail, t0),
        "{detail}"
    );
}

#[test]
fn criterion_10_window_insensitivity() {
    let t0 = Instant::now();
    let spec = WindowSpec {
        m1: ProfileShape::Fourier {
            mean: 2.0,
            modes: vec![(0.5, 0.0)],
        },
        m2: ProfileShape::Fourier {
            mean: 1.0,
            modes: vec![(0.0, 0.5)],
        },
        params: hydro_spec(vec![16]).params,
        n: 16,
        a: 1,
        c_ladder: vec![2, 4, 8],
        replicas: 20,
        horizon: 0.05,
        master_seed: SEED,
        max_events: 100_000_000,
        jobs: Jobs::default(),
    };
    let report = window_experiment(&spec).unwrap();
    let d2 = report.discrepancy(2).unwrap();
    let d8 = report.discrepancy(8).unwrap();
    let pass = report.nonincreasing() && d8 <= 0.5 * d2 && t0.elapsed().as_secs_f64() < 20.0 * 60.0;
    let detail = report
        .rows
        .iter()
        .map(|r| format!("C={}: {:.4} (se {:.4})", r.c, r.mean_discrepancy, r.stderr))
        .collect::<Vec<_>>()
        .join(", ");
    assert!(
        verdict(10, "window discrepancy decays with torus size", pass, &detail, t0),
        "{detail}"
    );
}

#[test]
fn criterion_11_reproducibility() {
    let t0 = Instant::now();
    let render = |jobs: usize| -> Vec<u8> {
        let spec = ConvergenceSpec {
            jobs: Jobs(jobs),
            ..hydro_spec(vec![32])
        };
        let report = convergence_experiment(&spec).unwrap();
        let mut buf = Vec::new();
        write_convergence_csv(&report, &mut buf).unwrap();
        write_replica_pairings_csv(&report, &spec, &mut buf).unwrap();
        buf
    };
    let first = render(0);
    let second = render(1);
    let pass = first == second && !first.is_empty();
    let detail = format!("{} bytes, identical: {}", first.len(), first == second);
    assert!(
        verdict(11, "same seed gives byte-identical CSV", pass, &detail, t0),
        "{detail}"
    );
}
