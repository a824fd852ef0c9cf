//! One handler per subcommand: resolve the config, run, write outputs and
//! the manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use epilattice::coupling::{check_ordering, coupled_simulate, marginal_check, CoupledPair, Order, DEFAULT_PAIR_CAP};
use epilattice::epidemic::{
    critical_phi_search, monotonicity_violations, simulate as simulate_cluster, survival_probability, ClusterCap,
    ClusterConfig, ModelParams, PhiSearch, Recovery, SimLimits, SimOptions, SurvivalConfig, DEFAULT_POPULATION_CAP,
};
use epilattice::hydro::{
    convergence_experiment, phase_scan as run_phase_scan, window_experiment, write_convergence_csv, write_phase_csv,
    write_replica_pairings_csv, write_window_csv, ConvergenceSpec, PhaseSpec, WindowSpec,
};
use epilattice::io::{self, RunRecord};
use epilattice::lattice::Site;
use epilattice::pde::{refinement, solve, write_solution_csv, SolverConfig};
use epilattice::poisson::{
    sample_product_poisson, substitution_check, tilde_table as run_tilde_table, write_tilde_csv, ProfileShape,
    TildeParams,
};
use epilattice::replica::{derive_seed, replicate, Jobs, RunStatus};
use epilattice::two_species::{
    pairing_rows, simulate_torus, simulate_torus_tau, write_pairings_csv, write_snapshots_csv, Observable,
    TorusOptions, TwoSpeciesParams,
};

use crate::args::*;
use crate::config::merge;
use crate::CliError;

const DEFAULT_SEED: u64 = 1;
const DEFAULT_MAX_EVENTS: u64 = 100_000_000;
const OUT_ENV: &str = "EPILATTICE_OUT";

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Invalid(msg.into())
}

fn required<T: Copy>(v: Option<T>, flag: &str) -> Result<T, CliError> {
    v.ok_or_else(|| invalid(format!("missing --{flag}")))
}

/// Output directory plus the manifest being assembled.
struct Run {
    dir: PathBuf,
    record: RunRecord,
}

impl Run {
    fn start(command: &str, common: &Common, effective: &impl Serialize, seed: u64) -> Result<Self, CliError> {
        let dir = match &common.out {
            Some(d) => d.clone(),
            None => std::env::var_os(OUT_ENV)
                .map(PathBuf::from)
                .unwrap_or_else(|| PathBuf::from("epilattice-out"))
                .join(command),
        };
        Ok(Run {
            dir,
            record: RunRecord::start(command, effective, seed)?,
        })
    }

    fn file(&mut self, name: &str) -> Result<BufWriter<File>, CliError> {
        self.record.output(name);
        Ok(io::create(&self.dir, name)?)
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<(), CliError> {
        let mut w = self.file(name)?;
        serde_json::to_writer_pretty(&mut w, value)?;
        w.write_all(b"\n")?;
        w.flush()?;
        Ok(())
    }

    /// Writes the manifest; a budget overrun still gets one before exiting 3.
    fn finish(mut self, budget: Option<String>) -> Result<(), CliError> {
        if let Some(b) = &budget {
            self.record.note(format!("budget exceeded: {b}"));
        }
        let path = self.record.finish(&self.dir)?;
        eprintln!("wrote {}", path.parent().unwrap_or(Path::new(".")).display());
        match budget {
            Some(b) => Err(CliError::Budget(b)),
            None => Ok(()),
        }
    }
}

fn jobs(c: &Common) -> Jobs {
    Jobs(c.jobs.unwrap_or(0))
}

fn seed(c: &Common) -> u64 {
    c.seed.unwrap_or(DEFAULT_SEED)
}

fn max_events(c: &Common) -> u64 {
    c.max_events.unwrap_or(DEFAULT_MAX_EVENTS)
}

fn cap(v: Option<u64>, default: u64) -> Option<u64> {
    match v.unwrap_or(default) {
        0 => None,
        k => Some(k),
    }
}

fn kappa(s: Option<&str>) -> Result<ClusterCap, CliError> {
    Ok(s.unwrap_or("inf").parse()?)
}

fn model_params(m: &ModelArgs, need_phi: bool) -> Result<ModelParams, CliError> {
    let phi = if need_phi {
        required(m.phi, "phi")?
    } else {
        m.phi.unwrap_or(0.0)
    };
    let recovery: Recovery = m.model.as_deref().unwrap_or("irp").parse()?;
    let p = ModelParams::new(
        required(m.lambda, "lambda")?,
        m.beta.unwrap_or(0.0),
        phi,
        kappa(m.kappa.as_deref())?,
        m.d.unwrap_or(1),
        recovery,
    );
    p.validate()?;
    Ok(p)
}

fn tilde_params(r: &RateArgs) -> Result<TildeParams, CliError> {
    let p = TildeParams {
        alpha1: r.alpha1.unwrap_or(0.5),
        alpha2: r.alpha2.unwrap_or(0.5),
        kappa_death: r.kd.unwrap_or(0.5),
        lambda: r.lambda.unwrap_or(0.5),
        beta: r.beta.unwrap_or(0.5),
        phi: r.phi.unwrap_or(0.5),
    };
    p.validate()?;
    Ok(p)
}

/// Profile syntax of the library plus `file:path` with whitespace or
/// comma separated grid values.
fn profile(s: &str) -> Result<ProfileShape, CliError> {
    let shape = match s.strip_prefix("file:") {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("profile file {path}: {e}")))?;
            let values = text
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| invalid(format!("profile file {path}: not a number `{t}`")))
                })
                .collect::<Result<Vec<_>, _>>()?;
            ProfileShape::Samples { values }
        }
        None => s.parse()?,
    };
    shape.validate()?;
    Ok(shape)
}

fn profiles(p: &ProfileArgs) -> Result<(ProfileShape, ProfileShape), CliError> {
    Ok((
        profile(p.m1.as_deref().unwrap_or("fourier:2,0.5,0"))?,
        profile(p.m2.as_deref().unwrap_or("fourier:1,0,0.5"))?,
    ))
}

fn observables(list: Option<&[String]>) -> Result<Vec<Observable>, CliError> {
    match list {
        None => Ok(vec![Observable::One, Observable::Cos(1), Observable::Sin(1)]),
        Some(l) => Ok(l.iter().map(|s| s.parse()).collect::<Result<_, _>>()?),
    }
}

/// `x:count;y:count` with comma separated coordinates.
fn initial_config(s: Option<&str>, d: usize) -> Result<ClusterConfig, CliError> {
    let Some(s) = s else {
        return Ok(ClusterConfig::single(Site::origin(d)));
    };
    let mut pairs = Vec::new();
    for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        let (coords, count) = part.split_once(':').unwrap_or((part, "1"));
        let coords = coords
            .split(',')
            .map(|c| c.trim().parse::<i64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|_| invalid(format!("init: bad coordinates in `{part}`")))?;
        let count = count
            .trim()
            .parse::<u64>()
            .map_err(|_| invalid(format!("init: bad count in `{part}`")))?;
        pairs.push((Site::new(&coords), count));
    }
    Ok(ClusterConfig::from_pairs(pairs))
}

fn budget_note(status: RunStatus, budget: u64) -> Option<String> {
    (status == RunStatus::Truncated).then(|| format!("event budget of {budget} exhausted"))
}

pub fn simulate(a: SimulateArgs) -> Result<(), CliError> {
    let path = a.common.config.clone();
    let a = merge(a, path.as_deref())?;
    let params = model_params(&a.model, true)?;
    let config0 = initial_config(a.init.as_deref(), params.d)?;
    config0.validate(&params)?;
    let horizon = required(a.horizon, "horizon")?;
    let seed = seed(&a.common);
    let opts = SimOptions {
        limits: SimLimits {
            max_events: max_events(&a.common),
            population_cap: cap(a.cap, 0),
        },
        snapshot_times: a.snapshots.clone().unwrap_or_else(|| vec![0.0, horizon]),
        record_events: a.events.unwrap_or(false),
    };
    let effective = json!({
        "params": params, "horizon": horizon, "seed": seed, "limits": opts.limits,
        "snapshots": opts.snapshot_times, "init": a.init, "events": opts.record_events,
    });
    let mut run = Run::start("simulate", &a.common, &effective, seed)?;
    let tr = simulate_cluster(&config0, &params, horizon, seed, &opts)?;

    tr.write_snapshots_jsonl(run.file("snapshots.jsonl")?)?;
    if opts.record_events {
        let mut w = csv_writer(run.file("events.csv")?);
        w.write_record(["t", "site", "kind", "count"]).map_err(csv_err)?;
        for e in &tr.events {
            w.serialize((e.time, e.site.to_string(), e.kind, e.count))
                .map_err(csv_err)?;
        }
        w.flush()?;
    }
    let summary = json!({
        "status": tr.status, "final_time": tr.final_time, "events": tr.event_count,
        "infections": tr.infections, "total_infected": tr.final_config.total_infected(),
        "support_size": tr.final_config.support_size(),
    });
    run.json("summary.json", &summary)?;
    println!(
        "status={:?} t={} events={} infected={}",
        tr.status,
        tr.final_time,
        tr.event_count,
        tr.final_config.total_infected()
    );
    run.finish(budget_note(tr.status, opts.limits.max_events))
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::Writer::from_writer(w)
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Other(e.to_string())
}

#[derive(Serialize)]
struct SurvivalRow {
    phi: f64,
    p_hat: f64,
    ci: f64,
    replicas: usize,
    horizon: f64,
    seed: u64,
    survivors: usize,
    capped: usize,
    truncated: usize,
}

fn survival_config(
    common: &Common,
    horizon: Option<f64>,
    replicas: Option<usize>,
    cap_flag: Option<u64>,
) -> Result<SurvivalConfig, CliError> {
    let mut cfg = SurvivalConfig::new(required(horizon, "horizon")?, replicas.unwrap_or(1000), seed(common));
    cfg.limits = SimLimits {
        max_events: max_events(common),
        population_cap: cap(cap_flag, DEFAULT_POPULATION_CAP),
    };
    cfg.jobs = jobs(common);
    Ok(cfg)
}

pub fn survival(a: SurvivalArgs) -> Result<(), CliError> {
    let path = a.common.config.clone();
    let a = merge(a, path.as_deref())?;
    let params = model_params(&a.model, true)?;
    let cfg = survival_config(&a.common, a.horizon, a.replicas, a.cap)?;
    let mut run = Run::start(
        "survival",
        &a.common,
        &json!({ "params": params, "survival": cfg }),
        cfg.master_seed,
    )?;
    let est = survival_probability(&params, &ClusterConfig::single(Site::origin(params.d)), &cfg)?;
    let mut w = csv_writer(run.file("survival.csv")?);
    w.serialize(SurvivalRow {
        phi: params.phi,
        p_hat: est.p_hat,
        ci: est.ci_halfwidth,
        replicas: est.replicas,
        horizon: est.horizon,
        seed: est.master_seed,
        survivors: est.survivors,
        capped: est.capped,
        truncated: est.truncated,
    })
    .map_err(csv_err)?;
    w.flush()?;
    println!(
        "p_hat={} ci={:.4} ({} of {} survived)",
        est.p_hat, est.ci_halfwidth, est.survivors, est.replicas
    );
    if params.beta > params.lambda {
        run.record
            .note("beta > lambda: outside the parameter range where the infinite-volume process is known to exist");
    }
    let over = (est.truncated > 0).then(|| format!("{} replicas exhausted the event budget", est.truncated));
    run.finish(over)
}

pub fn phi_c(a: PhiCArgs) -> Result<(), CliError> {
    let path = a.common.config.clone();
    let a = merge(a, path.as_deref())?;
    let base = model_params(&a.model, false)?;
    let search = PhiSearch {
        lo: a.phi_lo.unwrap_or(0.0),
        hi: a.phi_hi.unwrap_or(2.0),
        tolerance: a.tolerance.unwrap_or(0.02),
        threshold: a.threshold.unwrap_or(0.05),
        survival: survival_config(&a.common, a.horizon.or(Some(100.0)), a.replicas.or(Some(400)), a.cap)?,
    };
    let mut run = Run::start(
        "phi-c",
        &a.common,
        &json!({ "params": base, "search": search }),
        search.survival.master_seed,
    )?;
    let est = critical_phi_search(&base, &ClusterConfig::single(Site::origin(base.d)), &search)?;
    let mut w = csv_writer(run.file("phi_c.csv")?);
    let mut truncated = 0;
    for p in &est.probes {
        truncated += p.estimate.truncated;
        w.serialize(SurvivalRow {
            phi: p.phi,
            p_hat: p.estimate.p_hat,
            ci: p.estimate.ci_halfwidth,
            replicas: p.estimate.replicas,
            horizon: p.estimate.horizon,
            seed: p.estimate.master_seed,
            survivors: p.estimate.survivors,
            capped: p.estimate.capped,
            truncated: p.estimate.truncated,
        })
        .map_err(csv_err)?;
    }
    w.flush()?;
    let violations = monotonicity_violations(&est.probes, 0.0);
    run.json(
        "phi_c.json",
        &json!({ "phi_c": est.phi_c, "lo": est.lo, "hi": est.hi, "monotonicity_violations": violations }),
    )?;
    println!("phi_c={:.4} in [{:.4}, {:.4}]", est.phi_c, est.lo, est.hi);
    run.finish((truncated > 0).then(|| format!("{truncated} replicas exhausted the event budget")))
}

fn order(s: &str) -> Result<Order, CliError> {
    match s {
        "pointwise" => Ok(Order::Pointwise),
        "occupancy" => Ok(Order::Occupancy),
        "unordered" => Ok(Order::Unordered),
        _ => Err(invalid(format!(
            "order: expected pointwise, occupancy or unordered, got `{s}`"
        ))),
    }
}

pub fn couple_check(a: CoupleArgs) -> Result<(), CliError> {
    let path = a.common.config.clone();
    let a = merge(a, path.as_deref())?;
    let pa = model_params(&a.model, true)?;
    let config0 = ClusterConfig::single(Site::origin(pa.d));
    let pair = if a.versus_contact.unwrap_or(false) {
        CoupledPair::versus_contact(pa, config0)
    } else {
        let pb = ModelParams {
            lambda: a.lambda_b.unwrap_or(pa.lambda),
            beta: a.beta_b.unwrap_or(pa.beta),
            phi: a.phi_b.unwrap_or(pa.phi),
            kappa: match &a.kappa_b {
                Some(k) => kappa(Some(k))?,
                None => pa.kappa,
            },
            ..pa
        };
        CoupledPair::new(config0, pa, pb, order(a.order.as_deref().unwrap_or("pointwise"))?)
    };
    pair.validate()?;
    let horizon = required(a.horizon, "horizon")?;
    let replicas = a.replicas.unwrap_or(100);
    let seed = seed(&a.common);
    let limits = SimLimits {
        max_events: max_events(&a.common),
        population_cap: cap(a.cap, DEFAULT_PAIR_CAP),
    };
    let effective = json!({
        "params_a": pair.params_a, "params_b": pair.params_b, "order": pair.order,
        "horizon": horizon, "replicas": replicas, "seed": seed, "limits": limits,
    });
    let mut run = Run::start("couple-check", &a.common, &effective, seed)?;
    let summary = check_ordering(&pair, horizon, replicas, seed, &limits, jobs(&a.common))?;
    run.json("violations.json", &summary)?;

    let first = coupled_simulate(&pair, horizon, derive_seed(seed, 0), &limits)?;
    let mut w = csv_writer(run.file("events.csv")?);
    w.write_record(["t", "site", "count_a", "count_b"]).map_err(csv_err)?;
    for e in &first.events {
        w.serialize((e.time, e.site.to_string(), e.count_a, e.count_b))
            .map_err(csv_err)?;
    }
    w.flush()?;

    if a.marginals.unwrap_or(false) {
        let report = marginal_check(&pair, horizon, replicas, seed, &limits, jobs(&a.common))?;
        println!("KS p-values: a={:.3} b={:.3}", report.ks_a.p_value, report.ks_b.p_value);
        run.json("ks.json", &report)?;
    }
    println!(
        "{} replicas, {} violations, {} events checked",
        summary.replicas, summary.violations, summary.events
    );
    let over = (summary.truncated > 0).then(|| format!("{} replicas exhausted the event budget", summary.truncated));
    if summary.violations > 0 && over.is_none() {
        run.finish(None)?;
        return Err(CliError::Other(format!(
            "ordering violated in {} replicas",
            summary.violations
        )));
    }
    run.finish(over)
}

#[derive(Serialize)]
struct IdentityRow {
    a: f64,
    b: f64,
    function: &'static str,
    substitution: String,
    lhs: f64,
    lhs_stderr: f64,
    rhs: f64,
    rhs_stderr: f64,
    z: f64,
}

pub fn tilde_table(a: TildeArgs) -> Result<(), CliError> {
    let path = a.common.config.clone();
    let a = merge(a, path.as_deref())?;
    let p = tilde_params(&a.rates)?;
    let grid = a.grid.clone().unwrap_or_else(|| vec![0.5, 1.0, 2.0]);
    let samples = a.samples.unwrap_or(100_000);
    let seed = seed(&a.common);
    let identities = a.identities.unwrap_or(false);
    let effective = json!({ "rates": p, "grid": grid, "samples": samples, "seed": seed, "identities": identities });
    let mut run = Run::start("tilde-table", &a.common, &effective, seed)?;
    let rows = run_tilde_table(&grid, &p, samples, seed)?;
    write_tilde_csv(&rows, run.file("tilde.csv")?)?;
    if identities {
        let mut w = csv_writer(run.file("identities.csv")?);
        for (i, &x) in grid.iter().enumerate() {
            for (j, &y) in grid.iter().enumerate() {
                for r in substitution_check(x, y, samples, derive_seed(seed, (i * grid.len() + j) as u64))? {
                    w.serialize(IdentityRow {
                        a: x,
                        b: y,
                        function: r.function,
                        substitution: serde_json::to_value(r.substitution)?
                            .as_str()
                            .unwrap_or_default()
                            .to_string(),
                        lhs: r.lhs.mean,
                        lhs_stderr: r.lhs.stderr,
                        rhs: r.rhs.mean,
                        rhs_stderr: r.rhs.stderr,
                        z: r.z,
                    })
                    .map_err(csv_err)?;
                }
            }
        }
        w.flush()?;
    }
    let worst = rows.iter().flat_map(|r| r.z_scores()).fold(0.0f64, f64::max);
    println!("{} rows, max |z| = {worst:.3}", rows.len());
    run.finish(None)
}

pub fn two_species(a: TwoSpeciesArgs) -> Result<(), CliError> {
    let path = a.common.config.clone();
    let a = merge(a, path.as_deref())?;
    let (m1, m2) = profiles(&a.profiles)?;
    let n = a.n.unwrap_or(32);
    let params = TwoSpeciesParams {
        reactions: !a.diffusion_only.unwrap_or(false),
        ..TwoSpeciesParams::new(tilde_params(&a.rates)?, n)
    };
    params.validate()?;
    let horizon = required(a.horizon, "horizon")?;
    let replicas = a.replicas.unwrap_or(1);
    let obs = observables(a.observables.as_deref())?;
    let seed = seed(&a.common);
    let opts = TorusOptions {
        max_events: max_events(&a.common),
        snapshot_times: a.snapshots.clone().unwrap_or_else(|| vec![0.0, horizon]),
    };
    if let Some(tau) = a.tau {
        if !(tau > 0.0) {
            return Err(invalid(format!("tau must be > 0, got {tau}")));
        }
    }
    let effective = json!({
        "m1": m1, "m2": m2, "params": params, "horizon": horizon, "replicas": replicas,
        "observables": obs.iter().map(|g| g.id()).collect::<Vec<_>>(), "seed": seed,
        "options": opts, "tau": a.tau,
    });
    let mut run = Run::start("two-species", &a.common, &effective, seed)?;
    let (p1, p2) = (m1.grid(n)?, m2.grid(n)?);
    let runs = replicate(replicas, seed, jobs(&a.common), |_, s| {
        let c0 = sample_product_poisson(&p1, &p2, derive_seed(s, 0))?;
        match a.tau {
            Some(tau) => simulate_torus_tau(&c0, &params, horizon, tau, derive_seed(s, 1), &opts.snapshot_times),
            None => simulate_torus(&c0, &params, horizon, derive_seed(s, 1), &opts),
        }
    })?;
    if let Some(first) = runs.first() {
        write_snapshots_csv(&first.snapshots, run.file("snapshots.csv")?)?;
    }
    let rows: Vec<_> = runs
        .iter()
        .enumerate()
        .flat_map(|(i, tr)| pairing_rows(&tr.snapshots, &obs, i))
        .collect();
    write_pairings_csv(&rows, run.file("pairings.csv")?)?;
    let summary: Vec<_> = runs
        .iter()
        .map(|tr| json!({ "seed": tr.seed, "status": tr.status, "events": tr.events, "jumps": tr.jumps, "final_time": tr.final_time }))
        .collect();
    run.json("summary.json", &summary)?;
    let truncated = runs.iter().filter(|tr| tr.status == RunStatus::Truncated).count();
    println!(
        "{replicas} replicas, {} events in total",
        runs.iter().map(|t| t.events).sum::<u64>()
    );
    run.finish((truncated > 0).then(|| format!("{truncated} replicas exhausted the event budget")))
}

pub fn pde(a: PdeArgs) -> Result<(), CliError> {
    let path = a.common.config.clone();
    let a = merge(a, path.as_deref())?;
    let (m1, m2) = profiles(&a.profiles)?;
    let p = tilde_params(&a.rates)?;
    let sampled = [&m1, &m2].into_iter().find_map(|m| match m {
        ProfileShape::Samples { values } => Some(values.len()),
        _ => None,
    });
    let grid = a.grid.or(sampled).unwrap_or(256);
    let horizon = required(a.t, "T")?;
    let cfg = match a.dt {
        Some(dt) => SolverConfig::new(dt),
        None => SolverConfig::stable(grid),
    };
    let outputs = a.outputs.clone().unwrap_or_else(|| vec![horizon]);
    let effective = json!({
        "m1": m1, "m2": m2, "rates": p, "grid": grid, "T": horizon, "dt": cfg.dt, "outputs": outputs,
    });
    let mut run = Run::start("pde", &a.common, &effective, seed(&a.common))?;
    let sol = solve(&m1.grid(grid)?, &m2.grid(grid)?, &p, horizon, &cfg, &outputs)?;
    write_solution_csv(&sol.states, run.file("solution.csv")?)?;
    let refine = refinement(&m1, &m2, &p, horizon, grid, cfg.dt)?;
    run.json(
        "refinement.json",
        &json!({
            "refinement": refine, "steps": sol.steps, "clipped": sol.clipped,
            "max_mass_residual": sol.max_mass_residual, "min_value": sol.min_value, "low_min_flag": sol.low_min_flag,
        }),
    )?;
    if sol.clipped > 0 {
        run.record.note(format!("{} negative values clipped", sol.clipped));
    }
    println!(
        "{} steps, max mass residual {:.2e}, refinement change {:.2e}",
        sol.steps, sol.max_mass_residual, refine.max_pointwise_change
    );
    run.finish(None)
}

pub fn hydro_converge(a: ConvergeArgs) -> Result<(), CliError> {
    let path = a.common.config.clone();
    let a = merge(a, path.as_deref())?;
    let (m1, m2) = profiles(&a.profiles)?;
    let spec = ConvergenceSpec {
        m1,
        m2,
        params: tilde_params(&a.rates)?,
        ns: a.ns.clone().unwrap_or_else(|| vec![32, 64, 128]),
        replicas: a.replicas.unwrap_or(50),
        observables: observables(a.observables.as_deref())?,
        times: a.times.clone().unwrap_or_else(|| vec![0.1]),
        master_seed: seed(&a.common),
        pde_grid: a.pde_grid.unwrap_or(256),
        max_events: max_events(&a.common),
        jobs: jobs(&a.common),
    };
    let mut run = Run::start("hydro-converge", &a.common, &spec, spec.master_seed)?;
    let report = convergence_experiment(&spec)?;
    write_convergence_csv(&report, run.file("convergence.csv")?)?;
    write_replica_pairings_csv(&report, &spec, run.file("pairings.csv")?)?;
    run.json(
        "report.json",
        &json!({
            "errors_nonincreasing": report.errors_nonincreasing(),
            "target_refinement_change": report.target_refinement_change,
            "numerics_subordinate": report.numerics_subordinate,
            "pde_clipped": report.pde_clipped, "pde_min": report.pde_min,
        }),
    )?;
    println!(
        "errors nonincreasing in N: {}, PDE error subordinate: {}",
        report.errors_nonincreasing(),
        report.numerics_subordinate
    );
    run.finish(None)
}

pub fn window(a: WindowArgs) -> Result<(), CliError> {
    let path = a.common.config.clone();
    let a = merge(a, path.as_deref())?;
    let (m1, m2) = profiles(&a.profiles)?;
    let spec = WindowSpec {
        m1,
        m2,
        params: tilde_params(&a.rates)?,
        n: a.n.unwrap_or(16),
        a: a.a.unwrap_or(1),
        c_ladder: a.c_ladder.clone().unwrap_or_else(|| vec![2, 4, 8]),
        replicas: a.replicas.unwrap_or(20),
        horizon: a.horizon.unwrap_or(0.05),
        master_seed: seed(&a.common),
        max_events: max_events(&a.common),
        jobs: jobs(&a.common),
    };
    let mut run = Run::start("window", &a.common, &spec, spec.master_seed)?;
    run.record
        .note("finite tori coupled by common random numbers (shared initial draws and per-site event streams)");
    let report = window_experiment(&spec)?;
    write_window_csv(&report, run.file("window.csv")?)?;
    for r in &report.rows {
        println!("C={} discrepancy={:.5} (se {:.5})", r.c, r.mean_discrepancy, r.stderr);
    }
    run.finish(None)
}

pub fn phase_scan(a: PhaseArgs) -> Result<(), CliError> {
    let path = a.common.config.clone();
    let a = merge(a, path.as_deref())?;
    let recoveries = a
        .models
        .clone()
        .unwrap_or_else(|| vec!["irp".into(), "crp".into()])
        .iter()
        .map(|m| m.parse())
        .collect::<Result<Vec<Recovery>, _>>()?;
    let kappas = a
        .kappas
        .clone()
        .unwrap_or_else(|| vec!["inf".into()])
        .iter()
        .map(|k| kappa(Some(k)))
        .collect::<Result<Vec<_>, _>>()?;
    let spec = PhaseSpec {
        recoveries,
        kappas,
        lambdas: a.lambdas.clone().unwrap_or_else(|| vec![0.0, 0.1, 0.2, 0.3, 0.4]),
        phis: a.phis.clone().unwrap_or_else(|| vec![0.0, 0.5, 1.0, 1.5, 2.0]),
        beta: a.beta.unwrap_or(0.0),
        d: a.d.unwrap_or(1),
        horizon: a.horizon.unwrap_or(100.0),
        replicas: a.replicas.unwrap_or(200),
        master_seed: seed(&a.common),
        limits: SimLimits {
            max_events: max_events(&a.common),
            population_cap: cap(a.cap, DEFAULT_POPULATION_CAP),
        },
        jobs: jobs(&a.common),
    };
    let mut run = Run::start("phase-scan", &a.common, &spec, spec.master_seed)?;
    let rows = run_phase_scan(&spec)?;
    write_phase_csv(&rows, run.file("phase.csv")?)?;
    let truncated: usize = rows.iter().map(|r| r.truncated).sum();
    println!("{} grid points", rows.len());
    run.finish((truncated > 0).then(|| format!("{truncated} replicas exhausted the event budget")))
}
