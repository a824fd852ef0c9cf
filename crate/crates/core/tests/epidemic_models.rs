use epilattice::epidemic::{
    critical_phi_search, monotonicity_violations, simulate, survival_probability, ClusterCap, ClusterConfig,
    ModelParams, PhiSearch, Recovery, SimLimits, SimOptions, SurvivalConfig,
};
use epilattice::lattice::Site;
use epilattice::replica::{derive_seed, Jobs, RunStatus};
use epilattice::stats::{ks_two_sample, mean_estimate};
use epilattice::Error;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::Exp1;

fn origin() -> ClusterConfig {
    ClusterConfig::single(Site::line(0))
}

#[test]
fn lone_recovery_time_is_unit_exponential() {
    let p = ModelParams::new(0.0, 0.0, 0.0, ClusterCap::Infinite, 1, Recovery::Individual);
    let times: Vec<f64> = (0..2000)
        .map(|i| {
            let tr = simulate(&origin(), &p, 1e9, derive_seed(11, i), &SimOptions::default()).unwrap();
            assert_eq!(tr.status, RunStatus::Extinct);
            assert_eq!(tr.event_count, 1);
            tr.final_time
        })
        .collect();
    let mut rng = epilattice::replica::rng_from_seed(99);
    let reference: Vec<f64> = (0..2000).map(|_| rng.sample(Exp1)).collect();
    let ks = ks_two_sample(&times, &reference);
    assert!(ks.p_value > 1e-3, "{ks:?}");
    let m = mean_estimate(times.iter().copied());
    assert!((m.mean - 1.0).abs() < 4.0 * m.stderr, "{m:?}");
}

#[test]
fn pure_recovery_always_dies() {
    for recovery in [Recovery::Individual, Recovery::Cluster] {
        let p = ModelParams::new(0.0, 0.0, 0.0, ClusterCap::Infinite, 1, recovery);
        let start = ClusterConfig::from_pairs([(Site::line(0), 3), (Site::line(4), 2)]);
        let est = survival_probability(&p, &start, &SurvivalConfig::new(20.0, 500, 2)).unwrap();
        assert_eq!(est.p_hat, 0.0);
    }
}

/// Escape probability of the birth-death chain (birth iφ, death i) from one
/// individual before hitting zero, with `cap` absorbing as escape:
/// 1 − q with q from the gambler's-ruin sum.
fn escape_probability(phi: f64, cap: u32) -> f64 {
    let r = 1.0 / phi;
    let total: f64 = (0..cap).map(|k| r.powi(k as i32)).sum();
    1.0 / total
}

#[test]
fn survival_matches_birth_death_oracle_across_phi() {
    for phi in [1.5, 3.0] {
        let p = ModelParams::new(0.0, 0.0, phi, ClusterCap::Infinite, 1, Recovery::Individual);
        let est = survival_probability(&p, &origin(), &SurvivalConfig::new(100.0, 3000, 4)).unwrap();
        let oracle = escape_probability(phi, 1000);
        assert!((oracle - (1.0 - 1.0 / phi)).abs() < 1e-12);
        assert!(
            (est.p_hat - oracle).abs() <= 4.0 * est.ci_halfwidth / 1.96,
            "phi={phi} p_hat={} oracle={oracle}",
            est.p_hat
        );
    }
}

#[test]
fn survival_does_not_depend_on_worker_count() {
    let p = ModelParams::new(0.3, 0.3, 0.8, ClusterCap::Finite(3), 1, Recovery::Cluster);
    let one = SurvivalConfig {
        jobs: Jobs(1),
        ..SurvivalConfig::new(30.0, 200, 8)
    };
    let many = SurvivalConfig { jobs: Jobs(4), ..one };
    assert_eq!(
        survival_probability(&p, &origin(), &one).unwrap(),
        survival_probability(&p, &origin(), &many).unwrap()
    );
}

#[test]
fn critical_phi_brackets_the_threshold() {
    let base = ModelParams::new(0.2, 0.2, 0.0, ClusterCap::Infinite, 1, Recovery::Individual);
    let search = PhiSearch {
        lo: 0.0,
        hi: 3.0,
        tolerance: 0.1,
        threshold: 0.1,
        survival: SurvivalConfig::new(50.0, 400, 21),
    };
    let est = critical_phi_search(&base, &origin(), &search).unwrap();
    assert!(est.lo < est.phi_c && est.phi_c < est.hi);
    assert!(est.hi - est.lo <= search.tolerance);
    let at = |phi: f64| est.probes.iter().find(|p| p.phi == phi).unwrap().estimate.p_hat;
    assert!(at(est.lo) < search.threshold && at(est.hi) >= search.threshold);
    let slack: Vec<f64> = est.probes.iter().map(|p| p.estimate.ci_halfwidth).collect();
    let worst = slack.iter().copied().fold(0.0, f64::max);
    assert!(monotonicity_violations(&est.probes, 2.0 * worst).is_empty());
}

#[test]
fn degenerate_and_non_straddling_brackets() {
    let base = ModelParams::new(0.0, 0.0, 0.0, ClusterCap::Infinite, 1, Recovery::Individual);
    let mut search = PhiSearch {
        lo: 1.0,
        hi: 1.0,
        tolerance: 0.1,
        threshold: 0.1,
        survival: SurvivalConfig::new(20.0, 50, 1),
    };
    assert!(matches!(
        critical_phi_search(&base, &origin(), &search),
        Err(Error::BracketInvalid { .. })
    ));
    search.lo = 0.0;
    search.hi = 0.5;
    assert!(matches!(
        critical_phi_search(&base, &origin(), &search),
        Err(Error::BracketInvalid { .. })
    ));
}

#[test]
fn snapshots_hold_the_state_before_later_events() {
    let p = ModelParams::new(0.6, 0.4, 1.2, ClusterCap::Finite(4), 1, Recovery::Individual);
    let opts = SimOptions {
        snapshot_times: vec![0.0, 0.5, 1.0, 2.0, 4.0],
        record_events: true,
        ..SimOptions::default()
    };
    let tr = simulate(&origin(), &p, 4.0, 3, &opts).unwrap();
    assert_eq!(tr.snapshots.len(), 5);
    // Replay the event log and compare against every snapshot.
    let mut state = tr.initial.clone();
    let mut events = tr.events.iter().peekable();
    for snap in &tr.snapshots {
        while let Some(e) = events.next_if(|e| e.time <= snap.time) {
            state.set(e.site.clone(), e.count);
        }
        assert_eq!(state, snap.config, "t={}", snap.time);
    }
}

fn params_strategy() -> impl Strategy<Value = ModelParams> {
    (
        0.0..1.5f64,
        0.0..1.5f64,
        0.0..3.0f64,
        prop_oneof![Just(ClusterCap::Infinite), (1u64..5).prop_map(ClusterCap::Finite)],
        1usize..3,
        prop_oneof![Just(Recovery::Individual), Just(Recovery::Cluster)],
    )
        .prop_map(|(l, b, f, k, d, r)| ModelParams::new(l, b, f, k, d, r))
}

fn capped_with_events() -> SimOptions {
    SimOptions {
        record_events: true,
        limits: SimLimits {
            population_cap: Some(300),
            ..SimLimits::default()
        },
        ..SimOptions::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn trajectories_respect_the_cluster_cap(p in params_strategy(), seed in any::<u64>()) {
        let opts = capped_with_events();
        let tr = simulate(&ClusterConfig::single(Site::origin(p.d)), &p, 5.0, seed, &opts).unwrap();
        for e in &tr.events {
            prop_assert!(p.kappa.admits(e.count));
        }
        prop_assert!(tr.final_config.iter().all(|(_, c)| p.kappa.admits(c) && c > 0));
        if tr.status == RunStatus::Extinct {
            prop_assert!(tr.final_config.is_empty());
        }
    }

    #[test]
    fn same_seed_same_path(p in params_strategy(), seed in any::<u64>()) {
        let opts = capped_with_events();
        let c = ClusterConfig::single(Site::origin(p.d));
        let a = simulate(&c, &p, 3.0, seed, &opts).unwrap();
        let b = simulate(&c, &p, 3.0, seed, &opts).unwrap();
        prop_assert_eq!(a.events, b.events);
        prop_assert_eq!(a.final_config, b.final_config);
    }
}
