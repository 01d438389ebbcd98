//! Localization: stopping ladders `tau_n = theta_n ^ inf{|M| >= n} ^ T`,
//! stopped processes, truncated integrands and stabilization diagnostics.
//!
//! Discrete conventions: the hitting index is the first grid index with
//! `|M(t_k)| >= n` (a singular value counts as a crossing), and the interval
//! `[t_k, t_{k+1})` survives truncation iff `k + 1 <= tau`. With these,
//! reconstructing from a truncated integrand equals stopping the
//! reconstruction, bitwise.

use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::par::map_scenarios;
use crate::pathspace::{ScenarioSource, WienerBatch};

use super::process::{IntegrandOnGrid, ProcessOnGrid};

/// First index with `|values[k]| >= level` or a non-finite value; else `N`.
pub fn hitting_index(values: &[f64], level: f64) -> usize {
    values
        .iter()
        .position(|v| !v.is_finite() || v.abs() >= level)
        .unwrap_or(values.len() - 1)
}

/// Per-scenario hitting index of `|M| >= level`, capped at `N`.
pub fn hitting_time(m: &ProcessOnGrid, level: f64) -> Result<Vec<usize>> {
    if !(level > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "hitting level must be positive, got {level}"
        )));
    }
    Ok((0..m.scenarios())
        .map(|s| hitting_index(m.scenario(s), level))
        .collect())
}

/// A localizing sequence `theta_n`: per scenario and level, a grid index or
/// `None` for "never within the horizon".
pub trait ThetaRule: Sync + fmt::Debug {
    fn name(&self) -> String;
    fn theta(&self, scenario: usize, level: f64) -> Option<usize>;
}

/// `theta_n = +infinity`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ThetaInfinite;

impl ThetaRule for ThetaInfinite {
    fn name(&self) -> String {
        "infinite".into()
    }

    fn theta(&self, _: usize, _: f64) -> Option<usize> {
        None
    }
}

/// The same grid index at every level.
#[derive(Debug, Clone, Copy)]
pub struct ThetaFixed(pub usize);

impl ThetaRule for ThetaFixed {
    fn name(&self) -> String {
        format!("fixed:{}", self.0)
    }

    fn theta(&self, _: usize, _: f64) -> Option<usize> {
        Some(self.0)
    }
}

/// `theta_n = inf{t : |W(t)| >= n}` (Euclidean norm), from a stored batch.
#[derive(Debug, Clone)]
pub struct WienerExit {
    // per scenario, running max of |W(t_k)|
    running_max: Vec<Vec<f64>>,
}

impl WienerExit {
    pub fn new(batch: &WienerBatch) -> Self {
        Self::from_source(batch)
    }

    /// Builds the rule from any ensemble, regenerating streamed paths.
    pub fn from_source<S: ScenarioSource + ?Sized>(source: &S) -> Self {
        let running_max = map_scenarios(source.scenarios(), |s| {
            let p = source.path(s);
            let mut m = 0.0f64;
            Ok((0..p.grid().len())
                .map(|k| {
                    let norm = p.row(k).iter().map(|x| x * x).sum::<f64>().sqrt();
                    m = m.max(norm);
                    m
                })
                .collect())
        })
        .expect("running maxima are infallible");
        Self { running_max }
    }
}

impl ThetaRule for WienerExit {
    fn name(&self) -> String {
        "wiener-exit".into()
    }

    fn theta(&self, scenario: usize, level: f64) -> Option<usize> {
        let rm = &self.running_max[scenario];
        let k = rm.partition_point(|&m| m < level);
        (k < rm.len()).then_some(k)
    }
}

/// Stopping indices `tau[s][l]` for every scenario and truncation level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StoppingLadder {
    levels: Vec<f64>,
    theta: String,
    scenarios: usize,
    steps: usize,
    // scenario-major
    tau: Vec<usize>,
}

impl StoppingLadder {
    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn theta_name(&self) -> &str {
        &self.theta
    }

    pub fn scenarios(&self) -> usize {
        self.scenarios
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    #[inline]
    pub fn tau(&self, scenario: usize, level: usize) -> usize {
        self.tau[scenario * self.levels.len() + level]
    }

    /// `tau` of every scenario at one level.
    pub fn taus_at(&self, level: usize) -> Vec<usize> {
        (0..self.scenarios).map(|s| self.tau(s, level)).collect()
    }

    /// Smallest level index `l` with `k + 1 <= tau_l`, i.e. from which on the
    /// interval `[t_k, t_{k+1})` is never truncated.
    pub fn stabilization_index(&self, scenario: usize, k: usize) -> Option<usize> {
        (0..self.levels.len()).find(|&l| k < self.tau(scenario, l))
    }

    /// Mean of `tau_l` in grid indices.
    pub fn tau_mean(&self, level: usize) -> f64 {
        let sum: f64 = (0..self.scenarios).map(|s| self.tau(s, level) as f64).sum();
        sum / self.scenarios as f64
    }

    /// Fraction of `(scenario, k)` cells with `k + 1 <= tau_l`.
    pub fn coverage(&self, level: usize) -> f64 {
        let covered: usize = (0..self.scenarios).map(|s| self.tau(s, level)).sum();
        covered as f64 / (self.scenarios * self.steps) as f64
    }
}

/// `tau_n = min(theta_n, hitting_time(M, n), N)` on every scenario.
///
/// Rejects non-increasing levels, theta rules that decrease with the level,
/// and the degenerate rule with `theta_n = 0` everywhere.
pub fn build_ladder(m: &ProcessOnGrid, levels: &[f64], theta: &dyn ThetaRule) -> Result<StoppingLadder> {
    if levels.is_empty() {
        return Err(Error::InvalidParameter("need at least one truncation level".into()));
    }
    if levels.iter().any(|l| !(l.is_finite() && *l > 0.0)) || levels.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(format!(
            "truncation levels must be positive, finite and strictly increasing: {levels:?}"
        )));
    }
    let steps = m.grid().steps();
    let reject = |reason: String| Error::InvalidThetaRule {
        rule: theta.name(),
        reason,
    };
    let mut tau = Vec::with_capacity(m.scenarios() * levels.len());
    let mut all_zero = true;
    for s in 0..m.scenarios() {
        let mut previous: Option<usize> = Some(0);
        for &level in levels {
            let th = theta.theta(s, level);
            let decreased = match (previous, th) {
                (None, Some(_)) => true,
                (Some(p), Some(t)) => t < p,
                _ => false,
            };
            if decreased {
                return Err(reject(format!(
                    "theta decreases at level {level} in scenario {s}"
                )));
            }
            previous = th;
            all_zero &= th == Some(0);
            let hit = hitting_index(m.scenario(s), level);
            tau.push(th.unwrap_or(usize::MAX).min(hit).min(steps));
        }
    }
    if all_zero {
        return Err(reject("theta is identically zero, so it cannot increase to infinity".into()));
    }
    Ok(StoppingLadder {
        levels: levels.to_vec(),
        theta: theta.name(),
        scenarios: m.scenarios(),
        steps,
        tau,
    })
}

fn check_taus(taus: &[usize], scenarios: usize, steps: usize) -> Result<()> {
    if taus.len() != scenarios {
        return Err(Error::DimensionMismatch {
            expected: scenarios,
            found: taus.len(),
        });
    }
    if let Some(&bad) = taus.iter().find(|&&t| t > steps) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            last: steps,
        });
    }
    Ok(())
}

/// `M_n(t_k) = M(t_{min(k, tau)})`.
pub fn stop_process(m: &ProcessOnGrid, taus: &[usize]) -> Result<ProcessOnGrid> {
    let steps = m.grid().steps();
    check_taus(taus, m.scenarios(), steps)?;
    let mut values = Vec::with_capacity(m.values().len());
    for (s, &tau) in taus.iter().enumerate() {
        let row = m.scenario(s);
        values.extend((0..=steps).map(|k| row[k.min(tau)]));
    }
    ProcessOnGrid::new(m.grid().clone(), m.scenarios(), values)
}

/// Keeps row `k` iff `k + 1 <= tau`, zeroes it otherwise.
pub fn truncate_integrand(phi: &IntegrandOnGrid, taus: &[usize]) -> Result<IntegrandOnGrid> {
    let steps = phi.grid().steps();
    check_taus(taus, phi.scenarios(), steps)?;
    let d = phi.dim();
    let mut rows = phi.rows().to_vec();
    for (s, &tau) in taus.iter().enumerate() {
        let start = (s * steps + tau) * d;
        let end = (s + 1) * steps * d;
        rows[start..end].fill(0.0);
    }
    IntegrandOnGrid::new(phi.grid().clone(), phi.scenarios(), d, rows)
}

fn rows_bitwise_equal(a: &[f64], b: &[f64]) -> bool {
    a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StabilizationLevel {
    pub level: f64,
    pub tau_mean: f64,
    /// Fraction of cells where the truncated row equals the full row bitwise.
    pub agreement: f64,
    /// Fraction of cells with `k + 1 <= tau`.
    pub coverage: f64,
}

/// Agreement of truncated and full integrands at each ladder level.
pub fn stabilization_check(phi: &IntegrandOnGrid, ladder: &StoppingLadder) -> Result<Vec<StabilizationLevel>> {
    if phi.scenarios() != ladder.scenarios() || phi.grid().steps() != ladder.steps() {
        return Err(Error::InvalidParameter(
            "integrand and ladder were built over different ensembles".into(),
        ));
    }
    let steps = ladder.steps();
    let cells = (phi.scenarios() * steps) as f64;
    let zero = vec![0.0; phi.dim()];
    (0..ladder.levels().len())
        .map(|l| {
            let mut agree = 0usize;
            for s in 0..phi.scenarios() {
                let tau = ladder.tau(s, l);
                for k in 0..steps {
                    let full = phi.row(s, k);
                    let truncated: &[f64] = if k < tau { full } else { &zero };
                    agree += rows_bitwise_equal(full, truncated) as usize;
                }
            }
            Ok(StabilizationLevel {
                level: ladder.levels()[l],
                tau_mean: ladder.tau_mean(l),
                agreement: agree as f64 / cells,
                coverage: ladder.coverage(l),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThetaIndependence {
    pub rule_a: String,
    pub rule_b: String,
    /// Cells stabilized at the top level under both ladders.
    pub compared: usize,
    pub stabilized_a: usize,
    pub stabilized_b: usize,
    pub mismatches: usize,
}

impl ThetaIndependence {
    pub fn passed(&self) -> bool {
        self.mismatches == 0
    }
}

/// Compares the stabilized-limit integrands of two theta rules: on every cell
/// stabilized at the top level under both ladders, the truncated rows must
/// agree bitwise.
pub fn theta_independence_check(
    phi: &IntegrandOnGrid,
    m: &ProcessOnGrid,
    levels: &[f64],
    theta_a: &dyn ThetaRule,
    theta_b: &dyn ThetaRule,
) -> Result<ThetaIndependence> {
    let ladder_a = build_ladder(m, levels, theta_a)?;
    let ladder_b = build_ladder(m, levels, theta_b)?;
    let top = levels.len() - 1;
    let tau_a = ladder_a.taus_at(top);
    let tau_b = ladder_b.taus_at(top);
    let limit_a = truncate_integrand(phi, &tau_a)?;
    let limit_b = truncate_integrand(phi, &tau_b)?;
    let steps = ladder_a.steps();
    let mut out = ThetaIndependence {
        rule_a: theta_a.name(),
        rule_b: theta_b.name(),
        compared: 0,
        stabilized_a: 0,
        stabilized_b: 0,
        mismatches: 0,
    };
    for s in 0..phi.scenarios() {
        for k in 0..steps {
            let in_a = k < tau_a[s];
            let in_b = k < tau_b[s];
            out.stabilized_a += in_a as usize;
            out.stabilized_b += in_b as usize;
            if in_a && in_b {
                out.compared += 1;
                if !rows_bitwise_equal(limit_a.row(s, k), limit_b.row(s, k)) {
                    out.mismatches += 1;
                }
            }
        }
    }
    Ok(out)
}
