use super::torus::TorusTrajectory;
use super::{apply, channel_rates, EventKind, TwoSpeciesConfig, TwoSpeciesParams};
use crate::error::{Error, Result};
use crate::poisson::poisson_draw;
use crate::replica::{rng_from_seed, RunStatus};

/// Approximate tau-leaping run for exploratory large tori. Rates are frozen
/// over each leap of length `tau`; firings that would drive a count below
/// zero are dropped. Not distributionally exact.
pub fn simulate_torus_tau(
    config0: &TwoSpeciesConfig,
    params: &TwoSpeciesParams,
    horizon: f64,
    tau: f64,
    seed: u64,
    snapshot_times: &[f64],
) -> Result<TorusTrajectory> {
    params.validate()?;
    if !(tau > 0.0) {
        return Err(Error::param("tau", format!("must be > 0, got {tau}")));
    }
    if !(horizon >= 0.0) {
        return Err(Error::param("horizon", format!("must be >= 0, got {horizon}")));
    }
    let mut rng = rng_from_seed(seed);
    let mut c = config0.clone();
    let n = c.len();
    let mut times = snapshot_times.to_vec();
    times.sort_by(f64::total_cmp);
    let mut next = 0;
    let mut snapshots = Vec::new();
    let (mut t, mut events, mut jumps) = (0.0, 0u64, 0u64);
    let mut pending: Vec<(usize, EventKind, u64)> = Vec::new();

    loop {
        while next < times.len() && times[next] <= t + 1e-12 * tau {
            snapshots.push((times[next], c.clone()));
            next += 1;
        }
        if t >= horizon {
            break;
        }
        let h = tau.min(horizon - t);
        pending.clear();
        for x in 0..n {
            let rates = channel_rates(c.eta()[x], c.xi()[x], c.infected_neighbours(x), params);
            for (k, r) in rates.iter().enumerate() {
                let m = poisson_draw(&mut rng, r * h);
                if m > 0 {
                    pending.push((x, EventKind::ALL[k], m));
                }
            }
        }
        let (eta, xi) = c.parts_mut();
        for &(x, kind, m) in &pending {
            for _ in 0..m {
                let ok = match kind {
                    EventKind::Birth1 | EventKind::Birth2 => true,
                    EventKind::Death1
                    | EventKind::WithinInfection
                    | EventKind::OutsideInfection
                    | EventKind::HealthyLeft
                    | EventKind::HealthyRight => eta[x] > 0,
                    EventKind::Death2 | EventKind::Recovery | EventKind::InfectedLeft | EventKind::InfectedRight => {
                        xi[x] > 0
                    }
                };
                if !ok {
                    break;
                }
                apply(eta, xi, x, kind);
                events += 1;
                if kind.is_jump() {
                    jumps += 1;
                }
            }
        }
        t = if h < tau { horizon } else { t + h };
    }
    Ok(TorusTrajectory {
        seed,
        snapshots,
        final_config: c,
        final_time: horizon,
        events,
        jumps,
        status: RunStatus::Horizon,
    })
}
