use epilattice::poisson::{
    block_average, block_average_counts, kl_from_poisson, local_equilibrium_divergence, log_density_psi,
    poisson_log_pmf, sample_product_poisson, substitution_check, substitution_lhs, substitution_rhs, test_battery,
    tilde_mc, tilde_rates, LocalRate, LocalState, Profile, Substitution, TildeParams,
};
use proptest::prelude::*;

const TERMS: u64 = 70;

fn pmf(mean: f64) -> Vec<f64> {
    (0..TERMS).map(|k| poisson_log_pmf(k, mean).exp()).collect()
}

/// E[h] under Poisson(a) × Poisson(b) for the site and both neighbours, by
/// truncated summation.
fn series(h: impl Fn(&LocalState) -> f64, a: f64, b: f64) -> f64 {
    let (pa, pb) = (pmf(a), pmf(b));
    let mut total = 0.0;
    for (e, we) in pa.iter().enumerate() {
        for (x, wx) in pb.iter().enumerate() {
            for (l, wl) in pb.iter().enumerate().take(30) {
                for (r, wr) in pb.iter().enumerate().take(30) {
                    let s = LocalState {
                        eta: e as u64,
                        xi: x as u64,
                        nbr_xi: [l as u64, r as u64],
                    };
                    total += we * wx * wl * wr * h(&s);
                }
            }
        }
    }
    total
}

fn params() -> impl Strategy<Value = TildeParams> {
    (
        0.0..2.0f64,
        0.0..2.0f64,
        0.0..2.0f64,
        0.0..2.0f64,
        0.0..2.0f64,
        0.0..2.0f64,
    )
        .prop_map(|(alpha1, alpha2, kappa_death, lambda, beta, phi)| TildeParams {
            alpha1,
            alpha2,
            kappa_death,
            lambda,
            beta,
            phi,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn closed_forms_equal_series(a in 0.05..2.5f64, b in 0.05..2.5f64, p in params()) {
        let closed = tilde_rates(a, b, &p);
        for r in LocalRate::ALL {
            let exact = series(|s| r.eval(s, &p), a, b);
            let got = closed.get(r);
            prop_assert!((got - exact).abs() <= 1e-9 * (1.0 + exact.abs()), "{} closed {got} series {exact}", r.name());
        }
    }

    #[test]
    fn identities_hold_exactly(a in 0.1..2.5f64, b in 0.1..2.5f64) {
        for tf in test_battery() {
            let f = tf.f;
            let lhs_shift = |s: &LocalState, kind| match kind {
                Substitution::HealthyToInfected if s.eta > 0 => f(&LocalState { eta: s.eta - 1, xi: s.xi + 1, ..*s }),
                Substitution::InfectedToHealthy if s.xi > 0 => f(&LocalState { eta: s.eta + 1, xi: s.xi - 1, ..*s }),
                _ => 0.0,
            };
            let lhs = series(|s| lhs_shift(s, Substitution::HealthyToInfected), a, b);
            let rhs = a / b * series(|s| s.xi as f64 / (1.0 + s.eta as f64) * f(s), a, b);
            prop_assert!((lhs - rhs).abs() < 1e-10, "{} healthy->infected {lhs} vs {rhs}", tf.name);
            let lhs = series(|s| lhs_shift(s, Substitution::InfectedToHealthy), a, b);
            let rhs = b / a * series(|s| s.eta as f64 / (1.0 + s.xi as f64) * f(s), a, b);
            prop_assert!((lhs - rhs).abs() < 1e-10, "{} infected->healthy {lhs} vs {rhs}", tf.name);
        }
    }
}

#[test]
fn constant_function_identity_value() {
    // The shifted state only exists when a healthy individual is present.
    let (a, b) = (1.3, 0.7);
    let lhs = series(|s| (s.eta > 0) as u8 as f64, a, b);
    assert!((lhs - (1.0 - (-a as f64).exp())).abs() < 1e-12);
}

#[test]
fn monte_carlo_sides_match_series() {
    let one = |_: &LocalState| 1.0;
    let (a, b) = (2.0, 0.5);
    for kind in [Substitution::HealthyToInfected, Substitution::InfectedToHealthy] {
        let lhs = substitution_lhs(&one, kind, a, b, 200_000, 3).unwrap();
        let rhs = substitution_rhs(&one, kind, a, b, 200_000, 4).unwrap();
        let exact = match kind {
            Substitution::HealthyToInfected => 1.0 - (-a as f64).exp(),
            Substitution::InfectedToHealthy => 1.0 - (-b as f64).exp(),
        };
        assert!((lhs.mean - exact).abs() < 4.0 * lhs.stderr, "{kind:?} lhs {lhs:?}");
        assert!((rhs.mean - exact).abs() < 4.0 * rhs.stderr, "{kind:?} rhs {rhs:?}");
    }
}

#[test]
fn symmetric_functions_agree_when_intensities_match() {
    let rows = substitution_check(1.5, 1.5, 1, 0).unwrap();
    assert_eq!(rows.len(), 2 * test_battery().len());
    let symmetric = |s: &LocalState| 1.0 / (1.0 + (s.eta + s.xi) as f64);
    let up = series(|s| if s.eta > 0 { symmetric(s) } else { 0.0 }, 1.5, 1.5);
    let down = series(|s| if s.xi > 0 { symmetric(s) } else { 0.0 }, 1.5, 1.5);
    assert!((up - down).abs() < 1e-12);
}

#[test]
fn tilde_special_values() {
    let p = TildeParams {
        alpha1: 1.0,
        alpha2: 1.0,
        kappa_death: 1.0,
        lambda: 1.0,
        beta: 0.0,
        phi: 1.0,
    };
    for b in [0.0, 0.4, 3.0] {
        assert_eq!(
            tilde_rates(
                0.0,
                b,
                &TildeParams {
                    beta: 0.7,
                    phi: 2.0,
                    ..p
                }
            )
            .g,
            b
        );
    }
    assert_eq!(tilde_rates(1.7, 0.0, &p).g, 0.0);
    let ln2 = std::f64::consts::LN_2;
    assert!(tilde_rates(ln2, ln2, &p).g.abs() < 1e-15);
    let mc = tilde_mc(|s| LocalRate::G.eval(s, &p), ln2, ln2, 400_000, 8).unwrap();
    assert!(mc.mean.abs() < 4.0 * mc.stderr, "{mc:?}");
    assert_eq!(
        tilde_rates(1.0, 1.0, &TildeParams { kappa_death: 3.0, ..p }).delta1,
        27.0
    );
}

#[test]
fn product_poisson_moments() {
    let n = 100_000;
    let a = 1.7;
    let flat = Profile::constant(n, a).unwrap();
    let c = sample_product_poisson(&flat, &flat, 12).unwrap();
    for counts in [c.eta(), c.xi()] {
        let mean = counts.iter().sum::<u64>() as f64 / n as f64;
        let var = counts.iter().map(|&k| (k as f64 - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - a).abs() <= 3.0 * (a / n as f64).sqrt(), "mean {mean}");
        assert!((var / mean - 1.0).abs() < 0.05, "variance {var}");
    }
    let tiny = Profile::constant(1000, 1e-9).unwrap();
    let c = sample_product_poisson(&tiny, &tiny, 1).unwrap();
    assert_eq!(c.totals(), (0, 0));
}

#[test]
fn psi_additivity_and_reference() {
    let p1 = Profile::new(vec![1.0, 2.0, 0.5, 1.5]).unwrap();
    let p2 = Profile::new(vec![0.3, 0.6, 0.9, 1.2]).unwrap();
    let eta = [2, 0, 1, 5];
    let xi = [1, 1, 0, 2];
    let whole = log_density_psi(&eta, &xi, &p1, &p2, 0.8).unwrap();
    let half = |r: std::ops::Range<usize>| {
        let q1 = Profile::new(p1.values()[r.clone()].to_vec()).unwrap();
        let q2 = Profile::new(p2.values()[r.clone()].to_vec()).unwrap();
        log_density_psi(&eta[r.clone()], &xi[r], &q1, &q2, 0.8).unwrap()
    };
    assert!((whole - half(0..2) - half(2..4)).abs() < 1e-12);
    let flat = Profile::constant(4, 0.8).unwrap();
    assert_eq!(log_density_psi(&eta, &xi, &flat, &flat, 0.8).unwrap(), 0.0);
}

#[test]
fn block_averages() {
    let v = [0.0, 3.0, 0.0, 6.0, 0.0];
    assert_eq!(block_average(&v, 1, 1), 1.0);
    assert_eq!(block_average(&v, 3, 0), 6.0);
    assert_eq!(block_average(&[2.5; 7], 0, 3), 2.5);
    assert_eq!(block_average_counts(&[4, 4, 4], 2, 1), 4.0);
}

#[test]
fn kl_of_exact_poisson_samples_is_small() {
    let n = 100;
    let p1 = Profile::constant(n, 1.2).unwrap();
    let p2 = Profile::constant(n, 0.4).unwrap();
    let snaps: Vec<_> = (0..100)
        .map(|s| sample_product_poisson(&p1, &p2, 1000 + s).unwrap())
        .collect();
    // 100 snapshots × 100 sites = 10^4 pooled samples per block with k = 0.
    let kl = local_equilibrium_divergence(&snaps, &p1, &p2, 0).unwrap();
    let worst = kl.eta.iter().chain(&kl.xi).copied().fold(0.0, f64::max);
    assert!(worst < 0.2, "worst per-site KL {worst}");
    let pooled = local_equilibrium_divergence(&snaps, &p1, &p2, 49).unwrap();
    let worst = pooled.eta.iter().chain(&pooled.xi).copied().fold(0.0, f64::max);
    assert!(worst <= 0.02, "pooled KL {worst}");
}

#[test]
fn kl_closed_forms() {
    assert!((kl_from_poisson(&[3; 50], 1.0) + poisson_log_pmf(3, 1.0)).abs() < 1e-12);
    assert!(kl_from_poisson(&[0; 50], 1e-9).abs() < 1e-8);
}
