use std::path::PathBuf;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::functional::{derivative_sample, Bracket, Functional};
use crate::pathspace::{read_path_csv, write_path_csv, Path, TimeGrid, WienerGenerator};
use crate::report::{
    convergence_csv, ladder_csv, residuals_csv, strict_local_csv, Check, DerivativeTrace,
    FunctionalRef, LadderReport, RepresentationReport, REPORT_SCHEMA_VERSION,
};
use crate::representation::{
    build_ladder, integrand_from_functional, ito_residual_stats, pairing_check, reconstruct,
    representation_residual, stabilization_check, stop_process, strict_locality_diagnostic,
    theta_independence_check, truncate_integrand, ConvergencePoint, ConvergenceStats,
    ProcessOnGrid, ResidualStats, ThetaFixed, ThetaInfinite, ThetaRule, WienerExit,
};
use crate::stats::{log_log_slope_estimate, Estimate};

use super::config::{ExperimentConfig, ExperimentKind, ThetaSpec};
use super::hedge::hedge_demo;
use super::output::write_run_dir;

/// Environment variable overriding the configured seed.
pub const SEED_ENV: &str = "FITOLAB_SEED";
/// Environment variable setting the worker count.
pub const THREADS_ENV: &str = "FITOLAB_THREADS";

/// Per-invocation settings that are not part of the experiment itself.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Replaces the configured seed.
    pub seed: Option<u64>,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
    /// Replace an existing output directory.
    pub force: bool,
    /// Replaces the configured output directory.
    pub out: Option<PathBuf>,
}

/// A computed run: the report and every file of the run directory, in
/// write order.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifacts {
    pub report: RepresentationReport,
    pub files: Vec<(String, Vec<u8>)>,
}

impl Artifacts {
    pub fn file(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub out_dir: PathBuf,
    pub artifacts: Artifacts,
}

/// Applies overrides, resolves defaults and validates.
pub fn effective_config(config: &ExperimentConfig, opts: &RunOptions) -> Result<ExperimentConfig> {
    let mut c = config.clone();
    if let Some(seed) = opts.seed {
        c.seed = seed;
    }
    if let Some(out) = &opts.out {
        c.output_dir = Some(out.clone());
    }
    c.resolved()
}

/// Runs an experiment and writes its run directory.
///
/// The directory holds `config.json` (the effective configuration without
/// the output location), `report.json` and the experiment's CSV tables. It
/// is staged next to its final location and renamed into place; an existing
/// directory is only replaced with `force`.
pub fn run_experiment(config: &ExperimentConfig, opts: &RunOptions) -> Result<RunOutcome> {
    let config = effective_config(config, opts)?;
    let out_dir = config.output_dir.clone().unwrap_or_else(|| default_out_dir(&config));
    if out_dir.exists() && !opts.force {
        return Err(Error::OutputExists(out_dir.display().to_string()));
    }
    let artifacts = with_threads(opts.threads, || execute(&config))??;
    write_run_dir(&out_dir, &artifacts.files, opts.force)?;
    Ok(RunOutcome { out_dir, artifacts })
}

fn default_out_dir(c: &ExperimentConfig) -> PathBuf {
    let id = c.functional.as_ref().map(|f| f.id.as_str()).unwrap_or("none");
    PathBuf::from("runs").join(format!("{}-{id}-seed{}", c.experiment.as_str(), c.seed))
}

/// Runs `f` on a dedicated pool of `threads` workers.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(Error::Config("threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// Computes a run without touching the output directory. `config` should
/// come from [`ExperimentConfig::resolved`].
pub fn execute(config: &ExperimentConfig) -> Result<Artifacts> {
    let config = config.resolved()?;
    let f = config.functional()?;
    let mut echo = config.clone();
    echo.output_dir = None;
    let mut report = RepresentationReport {
        schema_version: REPORT_SCHEMA_VERSION,
        crate_version: env!("CARGO_PKG_VERSION").to_string(),
        experiment: config.experiment.as_str().to_string(),
        functional: functional_ref(f.as_ref()),
        pair_with: None,
        seed: config.seed,
        config: serde_json::to_value(&echo)?,
        derivatives: None,
        residuals: None,
        convergence: None,
        ladder: None,
        pairing: None,
        strict_local: None,
        hedge: None,
        checks: Vec::new(),
    };
    let mut files = vec![("config.json".to_string(), echo.to_json()?.into_bytes())];
    match config.experiment {
        ExperimentKind::Derive => derive(&config, f.as_ref(), &mut report, &mut files)?,
        ExperimentKind::Represent => represent(&config, f.as_ref(), &mut report, &mut files)?,
        ExperimentKind::ItoCheck => ito_check(&config, f.as_ref(), &mut report, &mut files)?,
        ExperimentKind::Localize => localize(&config, f.as_ref(), &mut report, &mut files)?,
        ExperimentKind::Pairing => pairing(&config, f, &mut report)?,
        ExperimentKind::StrictLocal => strict_local(&config, f.as_ref(), &mut report, &mut files)?,
        ExperimentKind::Hedge => hedge_demo(&config, f.as_ref(), &mut report, &mut files)?,
    }
    files.insert(1, ("report.json".to_string(), report.to_json()?.into_bytes()));
    Ok(Artifacts { report, files })
}

fn functional_ref(f: &dyn Functional) -> FunctionalRef {
    FunctionalRef {
        id: f.id().to_string(),
        params: f.params().to_vec(),
        dim: f.dim(),
    }
}

pub(crate) fn source_for(config: &ExperimentConfig, steps: usize) -> Result<WienerGenerator> {
    let grid = Arc::new(TimeGrid::uniform(config.horizon, steps)?);
    WienerGenerator::new(
        grid,
        config.dim.expect("resolved"),
        config.scenarios.expect("resolved"),
        config.seed,
    )
}

pub(crate) type Files = Vec<(String, Vec<u8>)>;

/// Residual statistics on every configured grid: the finest grid's full
/// statistics and, for a ladder, the convergence of the terminal RMS.
pub(crate) fn residual_ladder(
    config: &ExperimentConfig,
    stats_on: impl Fn(&WienerGenerator) -> Result<ResidualStats>,
) -> Result<(ResidualStats, Option<ConvergenceStats>)> {
    let mut steps = config.steps.as_ref().expect("resolved").as_slice().to_vec();
    steps.sort_unstable();
    steps.dedup();
    let mut points = Vec::with_capacity(steps.len());
    let mut finest = None;
    for &n in &steps {
        let stats = stats_on(&source_for(config, n)?)?;
        points.push(ConvergencePoint {
            steps: n,
            dt: stats.max_dt,
            terminal_rms: stats.terminal_rms,
        });
        finest = Some(stats);
    }
    let convergence = (points.len() >= 2).then(|| {
        let dts: Vec<f64> = points.iter().map(|p| p.dt).collect();
        let rms: Vec<Estimate> = points.iter().map(|p| p.terminal_rms).collect();
        ConvergenceStats {
            slope: log_log_slope_estimate(&dts, &rms),
            points,
        }
    });
    Ok((finest.expect("at least one grid"), convergence))
}

pub(crate) fn zero_check(name: &str, stats: &ResidualStats) -> Check {
    Check::new(
        name,
        Estimate::exact(stats.sup_quantiles.max),
        Some(0.0),
        "every residual exactly 0",
        stats.identically_zero(),
    )
}

pub(crate) fn slope_check(name: &str, conv: &ConvergenceStats, lo: f64, hi: f64) -> Check {
    let band = if hi.is_finite() {
        format!("{lo} <= slope <= {hi}")
    } else {
        format!("slope >= {lo}")
    };
    let s = conv.slope.value;
    Check::new(name, conv.slope, None, band, s >= lo && s <= hi)
}

/// Terminal RMS within `rel` of `target(dt)` on every grid.
pub(crate) fn rms_checks(
    name: &str,
    finest: &ResidualStats,
    conv: Option<&ConvergenceStats>,
    rel: f64,
    target: impl Fn(f64) -> f64,
) -> Vec<Check> {
    let points: Vec<(usize, f64, Estimate)> = match conv {
        Some(c) => c.points.iter().map(|p| (p.steps, p.dt, p.terminal_rms)).collect(),
        None => vec![(finest.steps, finest.max_dt, finest.terminal_rms)],
    };
    points
        .into_iter()
        .map(|(n, dt, rms)| {
            let t = target(dt);
            Check::new(
                format!("{name}-n{n}"),
                rms,
                Some(t),
                format!("|rms - target| <= {rel} target"),
                (rms.value - t).abs() <= rel * t,
            )
        })
        .collect()
}

fn derive(config: &ExperimentConfig, f: &dyn Functional, report: &mut RepresentationReport, files: &mut Files) -> Result<()> {
    let path: Path = match &config.path_csv {
        Some(p) => {
            let file = std::fs::File::open(p)?;
            read_path_csv(std::io::BufReader::new(file))?
        }
        None => source_for(config, config.steps.as_ref().expect("resolved").finest())?.generate(0),
    };
    if path.dim() != f.dim() {
        return Err(Error::Config(format!(
            "path has dimension {}, `{}` needs {}",
            path.dim(),
            f.id(),
            f.dim()
        )));
    }
    let view = path.view();
    let grid = path.grid();
    let d = path.dim();
    let mut values = Vec::with_capacity(grid.len());
    let mut samples = Vec::with_capacity(grid.len());
    let mut max_err: Option<f64> = None;
    for k in 0..grid.len() {
        values.push(f.evaluate(k, &view)?);
        let sample = derivative_sample(f, k, &view, &config.bump)?;
        if let Some(cf) = f.closed_form(k, &view) {
            let cf = cf?;
            let err = cf
                .vertical
                .iter()
                .zip(&sample.vertical)
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            max_err = Some(max_err.unwrap_or(0.0).max(err));
        }
        samples.push(sample);
    }
    let mut header = vec!["t".to_string(), "value".to_string(), "horizontal".to_string()];
    header.extend((1..=d).map(|i| format!("dw{i}")));
    header.extend((1..=d).map(|i| format!("d2w{i}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let table = crate::report::csv_table(
        &header,
        samples.iter().enumerate().map(|(k, s)| {
            let mut row = vec![
                grid.time(k).to_string(),
                values[k].to_string(),
                s.horizontal.map(|h| h.to_string()).unwrap_or_default(),
            ];
            row.extend(s.vertical.iter().map(f64::to_string));
            row.extend((0..d).map(|i| s.vertical2[i * d + i].to_string()));
            row
        }),
    )?;
    let mut path_bytes = Vec::new();
    write_path_csv(&path, &mut path_bytes)?;
    if let Some(err) = max_err {
        report.checks.push(Check::new(
            "vertical-vs-closed-form",
            Estimate::exact(err),
            Some(0.0),
            "max |fd - closed form| <= 1e-6",
            err <= 1e-6,
        ));
    }
    report.derivatives = Some(DerivativeTrace {
        times: grid.times().to_vec(),
        values,
        samples,
        closed_form_max_error: max_err,
    });
    files.push(("derivatives.csv".into(), table));
    files.push(("path.csv".into(), path_bytes));
    Ok(())
}

fn sqrt_2t_dt(horizon: f64) -> impl Fn(f64) -> f64 {
    move |dt| (2.0 * horizon * dt).sqrt()
}

fn represent(config: &ExperimentConfig, f: &dyn Functional, report: &mut RepresentationReport, files: &mut Files) -> Result<()> {
    let (stats, conv) = residual_ladder(config, |src| representation_residual(f, src, &config.bump))?;
    match f.id() {
        "linear" => report.checks.push(zero_check("residual-identically-zero", &stats)),
        "quadratic" | "conditional-square" => report.checks.extend(rms_checks(
            "terminal-rms-vs-sqrt-2-t-dt",
            &stats,
            conv.as_ref(),
            0.2,
            sqrt_2t_dt(config.horizon),
        )),
        "anticipated-average" => {
            let horizon = config.horizon;
            report.checks.extend(rms_checks(
                "terminal-rms-vs-dt-sqrt-t",
                &stats,
                conv.as_ref(),
                0.2,
                move |dt| dt * horizon.sqrt(),
            ));
            if let Some(c) = &conv {
                report.checks.push(slope_check("convergence-slope", c, 0.9, f64::INFINITY));
            }
        }
        _ => {
            if let Some(c) = &conv {
                report.checks.push(slope_check("convergence-slope", c, 0.4, 0.6));
            }
        }
    }
    files.push(("residuals.csv".into(), residuals_csv(&stats)?));
    if let Some(c) = &conv {
        files.push(("convergence.csv".into(), convergence_csv(c)?));
    }
    report.residuals = Some(stats);
    report.convergence = conv;
    Ok(())
}

fn ito_check(config: &ExperimentConfig, f: &dyn Functional, report: &mut RepresentationReport, files: &mut Files) -> Result<()> {
    let (stats, conv) = residual_ladder(config, |src| ito_residual_stats(f, src, &config.ito))?;
    if f.id() == "linear" {
        report.checks.push(zero_check("ito-residual-identically-zero", &stats));
    } else if let Some(c) = &conv {
        let (lo, hi) = match config.ito.bracket {
            Bracket::Expected => (0.4, 0.6),
            Bracket::Realized => (0.8, 1.2),
        };
        report.checks.push(slope_check("ito-residual-slope", c, lo, hi));
    }
    files.push(("residuals.csv".into(), residuals_csv(&stats)?));
    if let Some(c) = &conv {
        files.push(("convergence.csv".into(), convergence_csv(c)?));
    }
    report.residuals = Some(stats);
    report.convergence = conv;
    Ok(())
}

fn theta_rule(spec: ThetaSpec, src: &WienerGenerator) -> Box<dyn ThetaRule> {
    match spec {
        ThetaSpec::Infinite => Box::new(ThetaInfinite),
        ThetaSpec::WienerExit => Box::new(WienerExit::from_source(src)),
        ThetaSpec::Fixed(k) => Box::new(ThetaFixed(k)),
    }
}

fn bitwise_equal(a: &ProcessOnGrid, b: &ProcessOnGrid) -> bool {
    a.values().len() == b.values().len()
        && a.values().iter().zip(b.values()).all(|(x, y)| x.to_bits() == y.to_bits())
}

fn localize(config: &ExperimentConfig, f: &dyn Functional, report: &mut RepresentationReport, files: &mut Files) -> Result<()> {
    let src = source_for(config, config.steps.as_ref().expect("resolved").finest())?;
    let levels = config.levels.as_deref().expect("resolved");
    let m = ProcessOnGrid::from_functional(f, &src)?;
    let phi = integrand_from_functional(f, &src, &config.bump)?;
    let theta = theta_rule(config.theta, &src);
    let compare = theta_rule(config.compare_theta, &src);
    let ladder = build_ladder(&m, levels, theta.as_ref())?;
    let stab = stabilization_check(&phi, &ladder)?;
    let indep = theta_independence_check(&phi, &m, levels, theta.as_ref(), compare.as_ref())?;
    let full = reconstruct(m.initial(), &phi, &src)?;
    let mut identity = Vec::with_capacity(levels.len());
    for l in 0..levels.len() {
        let taus = ladder.taus_at(l);
        let lhs = reconstruct(m.initial(), &truncate_integrand(&phi, &taus)?, &src)?;
        let rhs = stop_process(&full, &taus)?;
        identity.push(bitwise_equal(&lhs, &rhs));
    }
    let fractions: Vec<f64> = stab.iter().map(|s| s.agreement).collect();
    let top = *fractions.last().expect("levels are non-empty");
    report.checks.push(Check::new(
        "stabilization-non-decreasing",
        Estimate::exact(top),
        None,
        "agreement fractions non-decreasing in the level",
        fractions.windows(2).all(|w| w[0] <= w[1]),
    ));
    if f.id() == "quadratic" {
        report.checks.push(Check::new(
            "stabilization-top-level",
            Estimate::exact(top),
            Some(0.999),
            "agreement >= 0.999",
            top >= 0.999,
        ));
    }
    report.checks.push(Check::new(
        "theta-independence",
        Estimate::exact(indep.mismatches as f64),
        Some(0.0),
        "no mismatching stabilized rows",
        indep.passed(),
    ));
    report.checks.push(Check::new(
        "stopped-reconstruction-identity",
        Estimate::exact(identity.iter().filter(|ok| !**ok).count() as f64),
        Some(0.0),
        "bitwise equality at every level",
        identity.iter().all(|ok| *ok),
    ));
    files.push(("ladder.csv".into(), ladder_csv(&stab)?));
    report.ladder = Some(LadderReport {
        theta: theta.name(),
        levels: stab,
        theta_independence: indep,
        stopped_identity: identity,
        singular_scenarios: m.singular_count(),
    });
    Ok(())
}

fn pairing(config: &ExperimentConfig, f: Arc<dyn Functional>, report: &mut RepresentationReport) -> Result<()> {
    let z = config.pair_with.as_ref().expect("validated").build()?;
    let src = source_for(config, config.steps.as_ref().expect("resolved").finest())?;
    let stats = pairing_check(f.clone(), z.clone(), &src, &config.bump)?;
    report.pair_with = Some(functional_ref(z.as_ref()));
    report.checks.push(Check::new(
        "pairing-sides-agree",
        stats.difference,
        Some(0.0),
        "|lhs - rhs| <= 3 se",
        stats.agrees_within(3.0),
    ));
    let t = config.horizon;
    let target = match (f.id(), z.id()) {
        ("linear", "linear") => Some(t),
        ("linear", "quadratic") | ("quadratic", "linear") => Some(0.0),
        ("conditional-square", "conditional-square") | ("quadratic", "quadratic") => Some(2.0 * t * t),
        _ => None,
    };
    if let Some(target) = target {
        report.checks.push(Check::new(
            "pairing-lhs-vs-closed-form",
            stats.lhs,
            Some(target),
            "|lhs - target| <= 3 se",
            stats.lhs.within(target, 3.0),
        ));
    }
    report.pairing = Some(stats);
    Ok(())
}

fn strict_local(config: &ExperimentConfig, f: &dyn Functional, report: &mut RepresentationReport, files: &mut Files) -> Result<()> {
    let src = source_for(config, config.steps.as_ref().expect("resolved").finest())?;
    let levels = config.levels.as_deref().expect("resolved");
    let stats = strict_locality_diagnostic(f, &src, levels)?;
    if let Some(cf) = stats.closed_form_terminal {
        report.checks.push(Check::new(
            "terminal-mean-vs-closed-form",
            stats.terminal,
            Some(cf),
            "|mean - target| <= 3 se",
            stats.terminal.within(cf, 3.0),
        ));
    }
    let gap = stats.initial - stats.terminal.value;
    report.checks.push(Check::new(
        "terminal-mean-below-initial",
        stats.terminal,
        Some(stats.initial),
        "initial - mean > 10 se",
        gap > 10.0 * stats.terminal.se(),
    ));
    for l in &stats.levels {
        report.checks.push(Check::new(
            format!("stopped-mean-level-{}", l.level),
            l.mean,
            Some(stats.initial),
            "|mean - initial| <= 3 se",
            l.mean.within(stats.initial, 3.0),
        ));
    }
    files.push(("strict_local.csv".into(), strict_local_csv(&stats)?));
    report.strict_local = Some(stats);
    Ok(())
}
