use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use h2_storage::experiments::{
    preset_plans, run_benchmarks, run_sweep, write_sweep_csv, BenchmarkResult, ExperimentPlan, SeedMode,
};
use h2_storage::simulator::{self, write_daily_csv, write_trace_csv, SimConfig};
use h2_storage::solver::{
    audit_policy, policy_slice_rows, read_policy, solve_periodic, write_policy_csv, ConvergenceReport, SolveOptions,
};
use h2_storage::stochastics::{fit_calibration, Calibration, CalibrationInputs};
use h2_storage::{GridResolution, Model, SystemConfig};
use serde::Serialize;

use crate::manifest::RunManifest;
use crate::{ModelArgs, SimArgs, SolveArgs};

/// Raised by `--strict` runs whose solve did not meet the span tolerance.
#[derive(Debug)]
pub struct NotConverged(pub String);

impl std::fmt::Display for NotConverged {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for NotConverged {}

/// A problem with user-supplied input that is not a library error.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for InputError {}

pub fn input_error(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(InputError(msg.into()))
}

pub fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if cause.is::<NotConverged>() {
            return 3;
        }
        if cause.is::<h2_storage::Error>()
            || cause.is::<InputError>()
            || cause.is::<serde_json::Error>()
            || cause.is::<csv::Error>()
            || cause.is::<std::io::Error>()
        {
            return 2;
        }
    }
    1
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn load_config(path: Option<&Path>) -> Result<SystemConfig> {
    match path {
        None => Ok(SystemConfig::base_case()),
        Some(p) => SystemConfig::from_json(&read_text(p)?).with_context(|| format!("in config {}", p.display())),
    }
}

pub fn load_calibration(path: Option<&Path>) -> Result<Calibration> {
    match path {
        None => Ok(Calibration::synthetic()),
        Some(p) => Calibration::from_json(&read_text(p)?).with_context(|| format!("in calibration {}", p.display())),
    }
}

fn resolution(args: &ModelArgs) -> GridResolution {
    let mut r = GridResolution::base_case();
    if let Some(v) = args.dx {
        r.dx = v;
    }
    if let Some(v) = args.dc {
        r.dc = v;
    }
    if let Some(v) = args.c_max {
        r.c_max = v;
    }
    if let Some(v) = args.dj {
        r.dj = v;
    }
    r
}

fn solve_options(args: &SolveArgs) -> Result<SolveOptions> {
    let mut o = SolveOptions::default();
    if let Some(v) = args.epsilon {
        o.epsilon = v;
    }
    if let Some(v) = args.max_iters {
        o.max_iters = v;
    }
    o.fixed_iters = args.iters;
    o.validate()?;
    Ok(o)
}

fn sim_config(args: &SimArgs, base: SimConfig) -> Result<SimConfig> {
    let mut s = base;
    if let Some(v) = args.seed {
        s.seed = v;
    }
    if let Some(v) = args.years {
        s.years = v;
    }
    if let Some(v) = args.warmup {
        s.warmup_years = v;
    }
    if let Some(v) = args.block {
        s.replication_block = v;
    }
    if let Some(v) = args.trace_years {
        s.trace_years = v;
    }
    s.validate()?;
    Ok(s)
}

fn check_convergence(strict: bool, what: &str, report: &ConvergenceReport) -> Result<()> {
    if strict && !report.converged {
        return Err(anyhow::Error::new(NotConverged(format!(
            "{what}: no convergence after {} iterations (span {:.3e})",
            report.iterations, report.span
        ))));
    }
    Ok(())
}

fn json<T: Serialize>(v: &T) -> Result<Vec<u8>> {
    Ok(serde_json::to_vec_pretty(v)?)
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> h2_storage::Result<()>) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

pub struct FitInputs {
    pub prices: Option<PathBuf>,
    pub production: Option<PathBuf>,
    pub consumption: Option<PathBuf>,
    pub reference_capacity: f64,
    pub theoretical_max: Option<f64>,
    pub synthetic: bool,
}

#[derive(Serialize)]
struct PriceFitRow<'a> {
    variant: &'a str,
    phi: f64,
    theta: f64,
    sigma_c: f64,
    std_error: f64,
    stationary: bool,
    used_by_solver: bool,
}

#[derive(Serialize)]
struct DemandRow {
    segment: u8,
    first_day: usize,
    last_day: usize,
    intercept: f64,
    slope: f64,
    sigma_d: f64,
}

pub fn fit(out: &Path, inputs: FitInputs) -> Result<()> {
    let mut manifest = RunManifest::start("fit");
    let cal = if inputs.synthetic {
        Calibration::synthetic()
    } else {
        let need = |p: &Option<PathBuf>, flag: &str| {
            p.clone().ok_or_else(|| input_error(format!("--{flag} is required without --synthetic")))
        };
        let (prices, production, consumption) =
            (need(&inputs.prices, "prices")?, need(&inputs.production, "production")?, need(&inputs.consumption, "consumption")?);
        for p in [&prices, &production, &consumption] {
            manifest.input(Some(p));
        }
        fit_calibration(&CalibrationInputs {
            prices: &prices,
            production: &production,
            consumption: &consumption,
            reference_capacity: inputs.reference_capacity,
            theoretical_max: inputs.theoretical_max,
        })?
    };

    manifest.write(out, "calibration.json", cal.to_json()?.as_bytes())?;

    let mut w = csv::Writer::from_writer(Vec::new());
    for f in &cal.price_fits {
        w.serialize(PriceFitRow {
            variant: f.variant.label(),
            phi: f.params.phi,
            theta: f.params.theta,
            sigma_c: f.params.sigma_c,
            std_error: f.std_error,
            stationary: f.stationary,
            used_by_solver: f.params == cal.price,
        })?;
    }
    if cal.price_fits.is_empty() {
        w.write_record(["variant", "phi", "theta", "sigma_c", "std_error", "stationary", "used_by_solver"])?;
    }
    manifest.write(out, "price_fits.csv", &w.into_inner()?)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    for b in &cal.weekly_beta {
        w.serialize(b)?;
    }
    manifest.write(out, "weekly_beta.csv", &w.into_inner()?)?;

    let d = &cal.demand;
    let mut w = csv::Writer::from_writer(Vec::new());
    for (segment, first_day, last_day, seg) in [(1, 1, d.split_day, d.seg1), (2, d.split_day + 1, 365, d.seg2)] {
        w.serialize(DemandRow {
            segment,
            first_day,
            last_day,
            intercept: seg.intercept,
            slope: seg.slope,
            sigma_d: d.sigma_d,
        })?;
    }
    manifest.write(out, "demand_fit.csv", &w.into_inner()?)?;
    manifest.finish(out)
}

/// Builds the model for a command; returns it with the system config.
fn build_model(manifest: &mut RunManifest, args: &ModelArgs, res: GridResolution) -> Result<(SystemConfig, Model)> {
    manifest.input(args.config.as_deref());
    manifest.input(args.calibration.as_deref());
    manifest.grid = Some(res);
    let cfg = load_config(args.config.as_deref())?;
    let cal = load_calibration(args.calibration.as_deref())?;
    let model = Model::build(&cfg, &cal, res)?;
    Ok((cfg, model))
}

/// Parses `day=1,180 percentiles=25,75` into 0-based days and quantiles.
pub fn parse_slices(text: &str) -> Result<(Vec<usize>, Vec<f64>)> {
    let mut days = None;
    let mut pcts = None;
    for part in text.split_whitespace() {
        let (key, list) = part
            .split_once('=')
            .ok_or_else(|| input_error(format!("policy slice `{part}`: expected key=values")))?;
        let nums = list
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| input_error(format!("policy slice `{part}`: {e}")))?;
        match key {
            "day" | "days" => days = Some(nums),
            "percentile" | "percentiles" => pcts = Some(nums),
            _ => return Err(input_error(format!("policy slice: unknown key `{key}`"))),
        }
    }
    let days = days.ok_or_else(|| input_error("policy slice: missing day=..."))?;
    let pcts = pcts.unwrap_or_else(|| vec![25.0, 75.0]);
    if let Some(d) = days.iter().find(|d| !(**d >= 1.0 && d.fract() == 0.0)) {
        bail!(input_error(format!("policy slice: day {d} is not a positive integer")));
    }
    if let Some(p) = pcts.iter().find(|p| !(**p > 0.0 && **p < 100.0)) {
        bail!(input_error(format!("policy slice: percentile {p} is outside (0, 100)")));
    }
    Ok((days.iter().map(|d| *d as usize - 1).collect(), pcts.iter().map(|p| p / 100.0).collect()))
}

pub fn solve(
    out: &Path,
    args: &ModelArgs,
    solve_args: &SolveArgs,
    stationary: bool,
    slices: Option<&str>,
    export_policy: bool,
) -> Result<()> {
    let mut manifest = RunManifest::start("solve");
    let opts = solve_options(solve_args)?;
    let slices = slices.map(parse_slices).transpose()?;
    let (cfg, seasonal) = build_model(&mut manifest, args, resolution(args))?;
    if let Some((days, _)) = &slices {
        if let Some(d) = days.iter().find(|d| **d >= cfg.periods) {
            bail!(input_error(format!("policy slice: day {} exceeds {} periods", d + 1, cfg.periods)));
        }
    }
    let model = if stationary { seasonal.stationary() } else { seasonal };

    let solution = solve_periodic(&model, &opts)?;
    let violations = audit_policy(&cfg, &solution.policy);
    if violations > 0 {
        bail!("policy audit found {violations} infeasible actions");
    }
    let r = &solution.report;
    log::info!("solve: {} iterations, g = {:.3}, span = {:.3e}", r.iterations, r.g, r.span);

    let mut buf = Vec::new();
    solution.policy.write_to(&mut buf)?;
    manifest.write(out, "policy.bin", &buf)?;
    buf.clear();
    solution.values.write_to(&mut buf)?;
    manifest.write(out, "values.bin", &buf)?;
    manifest.write(out, "convergence.json", &json(r)?)?;

    if let Some((days, qs)) = &slices {
        for &day in days {
            for &q in qs {
                let targets = policy_slice_rows(&model, &[day], &[q]);
                let (_, yi) = targets[0];
                let bytes = csv_bytes(|b| {
                    write_policy_csv(b, &solution.policy, Some(&solution.values), |d, _, y, _| d == day && y == yi)
                        .map(|_| ())
                })?;
                let name = format!("policy_day{}_p{}.csv", day + 1, (q * 100.0).round());
                manifest.write(out, &name, &bytes)?;
            }
        }
    }
    if export_policy {
        let bytes = csv_bytes(|b| {
            write_policy_csv(b, &solution.policy, Some(&solution.values), |_, _, _, _| true).map(|_| ())
        })?;
        manifest.write(out, "policy.csv", &bytes)?;
    }
    manifest.finish(out)?;
    check_convergence(solve_args.strict, "solve", r)
}

pub fn simulate(out: &Path, args: &ModelArgs, sim_args: &SimArgs, policy_path: &Path) -> Result<()> {
    let mut manifest = RunManifest::start("simulate");
    let sim = sim_config(sim_args, SimConfig::default())?;
    manifest.seed = Some(sim.seed);
    manifest.input(Some(policy_path));
    let file = File::open(policy_path).with_context(|| format!("cannot open {}", policy_path.display()))?;
    let policy = read_policy(BufReader::new(file)).with_context(|| format!("in policy {}", policy_path.display()))?;
    let res = policy.grids.resolution;
    for (name, given, stored) in [
        ("dx", args.dx, res.dx),
        ("dc", args.dc, res.dc),
        ("c-max", args.c_max, res.c_max),
        ("dj", args.dj, res.dj),
    ] {
        if let Some(v) = given.filter(|v| (v - stored).abs() > 1e-12) {
            bail!(input_error(format!("--{name} {v} differs from the policy grid ({stored})")));
        }
    }
    let (_, model) = build_model(&mut manifest, args, res)?;

    let result = simulator::simulate(&model, &policy, &sim)?;
    manifest.write(out, "kpi.json", &json(&result.kpi)?)?;
    manifest.write(out, "daily.csv", &csv_bytes(|b| write_daily_csv(b, &result.kpi))?)?;

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["year", "profit"])?;
    for (i, p) in result.yearly_profit.iter().enumerate() {
        w.write_record([(i + 1).to_string(), p.to_string()])?;
    }
    manifest.write(out, "yearly_profit.csv", &w.into_inner()?)?;
    if sim.trace_years > 0 {
        manifest.write(out, "trace.csv", &csv_bytes(|b| write_trace_csv(b, &result.trace))?)?;
    }
    manifest.finish(out)
}

pub fn sweep(
    out: &Path,
    plan_path: Option<&Path>,
    preset: Option<&str>,
    common_seed: bool,
    args: &ModelArgs,
    solve_args: &SolveArgs,
    sim_args: &SimArgs,
) -> Result<()> {
    let mut manifest = RunManifest::start("sweep");
    let mut plans = match (plan_path, preset) {
        (Some(p), _) => {
            manifest.input(Some(p));
            vec![ExperimentPlan::from_json(&read_text(p)?).with_context(|| format!("in plan {}", p.display()))?]
        }
        (None, Some("all")) => preset_plans(),
        (None, Some(name)) => {
            let all = preset_plans();
            let names: Vec<String> = all.iter().map(|p| p.name.clone()).collect();
            vec![all.into_iter().find(|p| p.name == name).ok_or_else(|| {
                input_error(format!("unknown preset `{name}`; available: {}, all", names.join(", ")))
            })?]
        }
        (None, None) => bail!(input_error("one of --plan, --preset or --benchmarks is required")),
    };

    // Command-line flags override the plan file.
    for plan in &mut plans {
        if let Some(p) = &args.config {
            plan.base = load_config(Some(p))?;
        }
        if args.calibration.is_some() {
            plan.calibration = args.calibration.clone();
        }
        plan.resolution = GridResolution {
            dx: args.dx.unwrap_or(plan.resolution.dx),
            dc: args.dc.unwrap_or(plan.resolution.dc),
            c_max: args.c_max.unwrap_or(plan.resolution.c_max),
            dj: args.dj.unwrap_or(plan.resolution.dj),
        };
        let mut solve = plan.solve;
        if let Some(v) = solve_args.epsilon {
            solve.epsilon = v;
        }
        if let Some(v) = solve_args.max_iters {
            solve.max_iters = v;
        }
        if solve_args.iters.is_some() {
            solve.fixed_iters = solve_args.iters;
        }
        plan.solve = solve;
        plan.sim = sim_config(sim_args, plan.sim)?;
        if common_seed {
            plan.seed_mode = SeedMode::Common;
        }
        plan.validate()?;
    }
    manifest.input(args.config.as_deref());
    manifest.seed = plans.first().map(|p| p.sim.seed);
    manifest.grid = plans.first().map(|p| p.resolution);

    let mut failures = Vec::new();
    for plan in &plans {
        let cal = load_calibration(plan.calibration.as_deref())?;
        manifest.input(plan.calibration.as_deref());
        let rows = run_sweep(plan, &cal)?;
        failures.extend(rows.iter().filter(|r| !r.converged).map(|r| format!("{} row {}", r.plan, r.row)));
        manifest.write(out, &format!("{}.csv", plan.name), &csv_bytes(|b| write_sweep_csv(b, &rows))?)?;
        manifest.write(out, &format!("{}.plan.json", plan.name), plan.to_json()?.as_bytes())?;
    }
    manifest.finish(out)?;
    if solve_args.strict && !failures.is_empty() {
        return Err(anyhow::Error::new(NotConverged(format!("no convergence in {}", failures.join(", ")))));
    }
    Ok(())
}

pub fn benchmarks(out: &Path, args: &ModelArgs, solve_args: &SolveArgs, sim_args: &SimArgs) -> Result<()> {
    let mut manifest = RunManifest::start("sweep --benchmarks");
    let opts = solve_options(solve_args)?;
    let sim = sim_config(sim_args, SimConfig::default())?;
    let res = resolution(args);
    manifest.seed = Some(sim.seed);
    manifest.grid = Some(res);
    manifest.input(args.config.as_deref());
    manifest.input(args.calibration.as_deref());
    let cfg = load_config(args.config.as_deref())?;
    let cal = load_calibration(args.calibration.as_deref())?;

    let report = run_benchmarks(&cfg, res, &cal, &opts, &sim)?;
    manifest.write(out, "benchmarks.json", &json(&report)?)?;
    for b in [&report.base, &report.bm1, &report.bm2] {
        manifest.write(out, &format!("{}.kpi.json", b.name), &json(&b.kpi)?)?;
        manifest.write(out, &format!("{}.daily.csv", b.name), &csv_bytes(|w| write_daily_csv(w, &b.kpi))?)?;
    }
    let summary = crate::report::summary_table(&[
        ("base".to_string(), report.base.kpi.clone()),
        ("bm1".to_string(), report.bm1.kpi.clone()),
        ("bm2".to_string(), report.bm2.kpi.clone()),
    ])?;
    manifest.write(out, "summary.csv", &summary)?;
    manifest.finish(out)?;

    let all: [&BenchmarkResult; 3] = [&report.base, &report.bm1, &report.bm2];
    for b in all {
        check_convergence(solve_args.strict, &b.name, &b.convergence)?;
    }
    if report.base.kpi.mean_profit_per_year < report.bm1.kpi.mean_profit_per_year {
        log::warn!("storage does not beat the no-storage benchmark");
    }
    Ok(())
}
