//! Reconstruction residuals and their convergence under grid refinement.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functional::{
    check_dim, finite, ito_formula_residual, vertical_derivative_into, BumpConfig, Functional,
    ItoCheckOptions,
};
use crate::par::fold_chunks;
use crate::pathspace::{left_point_term, Path, ScenarioSource, TimeGrid, WienerGenerator};
use crate::stats::{log_log_slope_estimate, quantile, Estimate, Moments, Uncertainty};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimePoint {
    pub t: f64,
    pub rms: f64,
    pub se: Uncertainty,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SupQuantiles {
    pub q50: f64,
    pub q90: f64,
    pub q99: f64,
    pub max: f64,
}

/// Residual statistics over an ensemble.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualStats {
    pub steps: usize,
    pub max_dt: f64,
    /// Root-mean-square residual at every grid time.
    pub per_t: Vec<TimePoint>,
    pub terminal_rms: Estimate,
    pub terminal_mean: Estimate,
    /// Quantiles of `sup_k |r(t_k)|` across scenarios.
    pub sup_quantiles: SupQuantiles,
    pub scenarios_used: usize,
    /// Scenarios excluded because the functional was singular on them.
    pub singular_scenarios: usize,
}

impl ResidualStats {
    /// True when every residual of every used scenario is exactly zero.
    pub fn identically_zero(&self) -> bool {
        self.sup_quantiles.max == 0.0
    }
}

struct Partial {
    squares: Vec<Moments>,
    terminal: Moments,
    sups: Vec<f64>,
    singular: usize,
}

impl Partial {
    fn new(len: usize) -> Self {
        Self {
            squares: vec![Moments::default(); len],
            terminal: Moments::default(),
            sups: Vec::new(),
            singular: 0,
        }
    }

    fn merge(&mut self, other: Partial) {
        for (a, b) in self.squares.iter_mut().zip(&other.squares) {
            a.merge(b);
        }
        self.terminal.merge(&other.terminal);
        self.sups.extend(other.sups);
        self.singular += other.singular;
    }
}

/// Runs `residuals` on every scenario (`None` = singular, excluded) and
/// reduces in scenario order.
pub(crate) fn collect_residuals<S, F>(source: &S, residuals: F) -> Result<ResidualStats>
where
    S: ScenarioSource + ?Sized,
    F: Fn(&Path) -> Result<Option<Vec<f64>>> + Sync + Send,
{
    let grid = source.grid().clone();
    let len = grid.len();
    let total = fold_chunks(
        source.scenarios(),
        Partial::new(len),
        |range| {
            let mut part = Partial::new(len);
            for s in range {
                let path = source.path(s);
                match residuals(&path).map_err(|e| e.in_scenario(s))? {
                    None => part.singular += 1,
                    Some(r) => {
                        for (m, x) in part.squares.iter_mut().zip(&r) {
                            m.push(x * x);
                        }
                        part.terminal.push(r[len - 1]);
                        part.sups.push(r.iter().fold(0.0, |a: f64, x| a.max(x.abs())));
                    }
                }
            }
            Ok(part)
        },
        Partial::merge,
    )?;
    let used = total.terminal.n as usize;
    if used == 0 {
        return Err(Error::InvalidParameter(
            "every scenario was singular; no residual statistics".into(),
        ));
    }
    let sup_max = total.sups.iter().fold(0.0, |a: f64, &x| a.max(x));
    let exact = sup_max == 0.0;
    let mark = |e: Estimate| if exact { Estimate::exact(e.value) } else { e };
    let per_t = total
        .squares
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let e = mark(m.root_mean());
            TimePoint {
                t: grid.time(k),
                rms: e.value,
                se: e.std_error,
            }
        })
        .collect();
    Ok(ResidualStats {
        steps: grid.steps(),
        max_dt: grid.max_dt(),
        per_t,
        terminal_rms: mark(total.squares[len - 1].root_mean()),
        terminal_mean: mark(total.terminal.estimate()),
        sup_quantiles: SupQuantiles {
            q50: quantile(&total.sups, 0.5),
            q90: quantile(&total.sups, 0.9),
            q99: quantile(&total.sups, 0.99),
            max: sup_max,
        },
        scenarios_used: used,
        singular_scenarios: total.singular,
    })
}

fn singular_as_none<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::Singular { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// `r(k) = F(t_k) - F(t_0) - sum_{j<k} grad F(t_j)' dW_j` along one path.
pub fn representation_residual_path(f: &dyn Functional, w: &Path, bump: &BumpConfig) -> Result<Vec<f64>> {
    check_dim(f, w.dim())?;
    let view = w.view();
    let d = w.dim();
    let value = |k: usize| finite(f.evaluate(k, &view)?, || format!("evaluating `{}` at {k}", f.id()));
    let start = value(0)?;
    let mut row = vec![0.0; d];
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(w.grid().len());
    out.push(0.0);
    for k in 0..w.grid().steps() {
        vertical_derivative_into(f, k, &view, bump.vertical, bump.scheme, &mut row)?;
        acc += left_point_term(&row, w, k);
        out.push((value(k + 1)? - start) - acc);
    }
    Ok(out)
}

/// Residual of the constructive representation `F(t, W) = F(0, W) + int grad F' dW`
/// over an ensemble. Scenarios on which `F` is singular are counted and excluded.
pub fn representation_residual<S: ScenarioSource + ?Sized>(
    f: &dyn Functional,
    source: &S,
    bump: &BumpConfig,
) -> Result<ResidualStats> {
    check_dim(f, source.dim())?;
    bump.validate()?;
    let claims = f.claims();
    if !(claims.is_martingale || claims.is_strict_local_martingale) {
        return Err(Error::InvalidParameter(format!(
            "`{}` does not claim to be a (local) martingale",
            f.id()
        )));
    }
    collect_residuals(source, |w| singular_as_none(representation_residual_path(f, w, bump)))
}

/// Itô-formula residual statistics over an ensemble.
pub fn ito_residual_stats<S: ScenarioSource + ?Sized>(
    f: &dyn Functional,
    source: &S,
    opts: &ItoCheckOptions,
) -> Result<ResidualStats> {
    check_dim(f, source.dim())?;
    collect_residuals(source, |w| singular_as_none(ito_formula_residual(f, w, opts)))
}

/// Which residual a convergence ladder measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResidualKind {
    Representation(BumpConfig),
    ItoFormula(ItoCheckOptions),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergencePoint {
    pub steps: usize,
    pub dt: f64,
    pub terminal_rms: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceStats {
    pub points: Vec<ConvergencePoint>,
    /// Least-squares slope of `ln rms` against `ln dt`; the standard error
    /// treats the grids as independent ensembles.
    pub slope: Estimate,
}

/// Terminal-residual RMS on uniform grids with each step count in `steps`,
/// with a fresh Wiener ensemble (same seed) per grid.
pub fn convergence_ladder(
    f: &dyn Functional,
    kind: ResidualKind,
    horizon: f64,
    steps: &[usize],
    scenarios: usize,
    seed: u64,
) -> Result<ConvergenceStats> {
    if steps.len() < 2 {
        return Err(Error::InvalidParameter(
            "a convergence ladder needs at least two grids".into(),
        ));
    }
    let mut points = Vec::with_capacity(steps.len());
    for &n in steps {
        let grid = Arc::new(TimeGrid::uniform(horizon, n)?);
        let source = WienerGenerator::new(grid.clone(), f.dim(), scenarios, seed)?;
        let stats = match &kind {
            ResidualKind::Representation(bump) => representation_residual(f, &source, bump)?,
            ResidualKind::ItoFormula(opts) => ito_residual_stats(f, &source, opts)?,
        };
        points.push(ConvergencePoint {
            steps: n,
            dt: grid.max_dt(),
            terminal_rms: stats.terminal_rms,
        });
    }
    let dts: Vec<f64> = points.iter().map(|p| p.dt).collect();
    let rms: Vec<Estimate> = points.iter().map(|p| p.terminal_rms).collect();
    Ok(ConvergenceStats {
        slope: log_log_slope_estimate(&dts, &rms),
        points,
    })
}
