//! The JSON run report and its companion CSV tables.
//!
//! A report is fully determined by the effective configuration and seed: it
//! carries no timings, host names or worker counts.

use serde::Serialize;

use crate::error::Result;
use crate::functional::DerivativeSample;
use crate::representation::{
    ConvergenceStats, PairingStats, ResidualStats, StabilizationLevel, StrictLocalStats,
    SupQuantiles, ThetaIndependence,
};
use crate::stats::Estimate;

/// Version of the report layout below.
pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// An acceptance-style check: a statistic, what it was compared with, and
/// the outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: Estimate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    /// Human-readable acceptance band, e.g. `|value - target| <= 3 se`.
    pub band: String,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: Estimate, target: Option<f64>, band: impl Into<String>, passed: bool) -> Self {
        Self {
            name: name.into(),
            value,
            target,
            band: band.into(),
            passed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FunctionalRef {
    pub id: String,
    pub params: Vec<f64>,
    pub dim: usize,
}

/// Derivatives along one path, one entry per grid time.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeTrace {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub samples: Vec<DerivativeSample>,
    /// Largest absolute gap between finite-difference and closed-form
    /// gradients, when the functional has closed forms.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub closed_form_max_error: Option<f64>,
}

/// Ladder section: stabilization per level plus the theta comparison.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LadderReport {
    pub theta: String,
    pub levels: Vec<StabilizationLevel>,
    pub theta_independence: ThetaIndependence,
    /// Per level: does `reconstruct(truncate(phi))` equal the stopped
    /// reconstruction bitwise on every scenario?
    pub stopped_identity: Vec<bool>,
    pub singular_scenarios: usize,
}

/// Hedging section: the price martingale, its hedge ratio, and the
/// replication error `payoff - (M(0) + sum hedge' dW)` at `T`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HedgeReport {
    pub initial_price: f64,
    pub replication_error_rms: Estimate,
    pub replication_error_mean: Estimate,
    pub replication_error_sup: SupQuantiles,
    pub scenarios: usize,
    /// Scenario whose hedge table is written to `hedge.csv`.
    pub sample_scenario: usize,
}

/// Everything a run produces besides the CSV tables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RepresentationReport {
    pub schema_version: u32,
    pub crate_version: String,
    pub experiment: String,
    pub functional: FunctionalRef,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pair_with: Option<FunctionalRef>,
    pub seed: u64,
    /// The effective configuration, identical to the `config.json` echo.
    pub config: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub derivatives: Option<DerivativeTrace>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residuals: Option<ResidualStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub convergence: Option<ConvergenceStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ladder: Option<LadderReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairing: Option<PairingStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub strict_local: Option<StrictLocalStats>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hedge: Option<HedgeReport>,
    pub checks: Vec<Check>,
}

impl RepresentationReport {
    pub fn all_checks_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

/// Serializes `rows` under `header` with the `csv` writer.
pub fn csv_table<I, R>(header: &[&str], rows: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(w.into_inner().map_err(|e| e.into_error())?)
}

/// `t,rms,se` with `se = exact` for identically zero residuals.
pub fn residuals_csv(stats: &ResidualStats) -> Result<Vec<u8>> {
    csv_table(
        &["t", "rms", "se"],
        stats
            .per_t
            .iter()
            .map(|p| [p.t.to_string(), p.rms.to_string(), p.se.to_string()]),
    )
}

/// `level,tau_mean,stab_fraction`.
pub fn ladder_csv(levels: &[StabilizationLevel]) -> Result<Vec<u8>> {
    csv_table(
        &["level", "tau_mean", "stab_fraction"],
        levels
            .iter()
            .map(|l| [l.level.to_string(), l.tau_mean.to_string(), l.agreement.to_string()]),
    )
}

/// `steps,dt,rms,se`.
pub fn convergence_csv(stats: &ConvergenceStats) -> Result<Vec<u8>> {
    csv_table(
        &["steps", "dt", "rms", "se"],
        stats.points.iter().map(|p| {
            [
                p.steps.to_string(),
                p.dt.to_string(),
                p.terminal_rms.value.to_string(),
                p.terminal_rms.std_error.to_string(),
            ]
        }),
    )
}

/// `level,tau_mean,mean,se,excluded` for the stopped means.
pub fn strict_local_csv(stats: &StrictLocalStats) -> Result<Vec<u8>> {
    csv_table(
        &["level", "tau_mean", "mean", "se", "excluded"],
        stats.levels.iter().map(|l| {
            [
                l.level.to_string(),
                l.tau_mean.to_string(),
                l.mean.value.to_string(),
                l.mean.std_error.to_string(),
                l.excluded.to_string(),
            ]
        }),
    )
}
