use std::sync::Arc;

use crate::error::{Error, Result};
use crate::functional::{check_dim, finite, vertical_derivative_into, BumpConfig, Functional};
use crate::par::map_scenarios;
use crate::pathspace::{IntegrandRows, ScenarioSource, TimeGrid};

/// Adapted process values `M(t_k)` for every scenario of an ensemble.
///
/// Values after a singular evaluation are `NaN`; the first such index is
/// recorded per scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessOnGrid {
    grid: Arc<TimeGrid>,
    scenarios: usize,
    values: Vec<f64>,
    initial: f64,
    singular: Vec<Option<usize>>,
}

impl ProcessOnGrid {
    /// Builds a process from `scenarios x (N + 1)` row-major values.
    pub fn new(grid: Arc<TimeGrid>, scenarios: usize, values: Vec<f64>) -> Result<Self> {
        if scenarios == 0 || values.len() != scenarios * grid.len() {
            return Err(Error::DimensionMismatch {
                expected: scenarios.max(1) * grid.len(),
                found: values.len(),
            });
        }
        let n = grid.len();
        let singular: Vec<Option<usize>> = values
            .chunks(n)
            .map(|row| row.iter().position(|v| !v.is_finite()))
            .collect();
        let initial = values[0];
        if !initial.is_finite() {
            return Err(Error::NonFinite {
                context: "initial process value".into(),
                value: initial,
            });
        }
        Ok(Self {
            grid,
            scenarios,
            values,
            initial,
            singular,
        })
    }

    /// `M(t_k) = F(t_k, W)` on every scenario. Singular evaluations are
    /// marked; any other failure is returned with its scenario.
    pub fn from_functional<S: ScenarioSource + ?Sized>(f: &dyn Functional, source: &S) -> Result<Self> {
        check_dim(f, source.dim())?;
        let grid = source.grid().clone();
        let n = grid.len();
        let rows = map_scenarios(source.scenarios(), |s| {
            let path = source.path(s);
            let view = path.view();
            let mut row = Vec::with_capacity(n);
            for k in 0..n {
                match f.evaluate(k, &view) {
                    Err(Error::Singular { .. }) if k > 0 => {
                        row.resize(n, f64::NAN);
                        break;
                    }
                    Err(e) => return Err(e.in_scenario(s)),
                    Ok(v) => row.push(
                        finite(v, || format!("evaluating `{}` at grid index {k}", f.id()))
                            .map_err(|e| e.in_scenario(s))?,
                    ),
                }
            }
            Ok(row)
        })?;
        Self::new(grid, source.scenarios(), rows.concat())
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn scenarios(&self) -> usize {
        self.scenarios
    }

    /// `M(t_0)` of the first scenario.
    pub fn initial(&self) -> f64 {
        self.initial
    }

    #[inline]
    pub fn value(&self, s: usize, k: usize) -> f64 {
        self.values[s * self.grid.len() + k]
    }

    pub fn scenario(&self, s: usize) -> &[f64] {
        let n = self.grid.len();
        &self.values[s * n..(s + 1) * n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// First non-finite index of scenario `s`, if any.
    pub fn singular_index(&self, s: usize) -> Option<usize> {
        self.singular[s]
    }

    pub fn singular_count(&self) -> usize {
        self.singular.iter().filter(|s| s.is_some()).count()
    }
}

/// Left-point integrand rows `phi(t_k)`, `k < N`, for every scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrandOnGrid {
    grid: Arc<TimeGrid>,
    scenarios: usize,
    dim: usize,
    rows: Vec<f64>,
}

impl IntegrandOnGrid {
    /// Row-major `scenarios x N x dim` values.
    pub fn new(grid: Arc<TimeGrid>, scenarios: usize, dim: usize, rows: Vec<f64>) -> Result<Self> {
        let expected = scenarios * grid.steps() * dim;
        if dim == 0 || scenarios == 0 || rows.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                found: rows.len(),
            });
        }
        Ok(Self {
            grid,
            scenarios,
            dim,
            rows,
        })
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn scenarios(&self) -> usize {
        self.scenarios
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn row(&self, s: usize, k: usize) -> &[f64] {
        let start = (s * self.grid.steps() + k) * self.dim;
        &self.rows[start..start + self.dim]
    }

    pub fn rows(&self) -> &[f64] {
        &self.rows
    }

    /// Rows of one scenario, usable with [`crate::pathspace::ito_integral`].
    pub fn scenario(&self, s: usize) -> ScenarioIntegrand<'_> {
        let len = self.grid.steps() * self.dim;
        ScenarioIntegrand {
            dim: self.dim,
            rows: &self.rows[s * len..(s + 1) * len],
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ScenarioIntegrand<'a> {
    dim: usize,
    rows: &'a [f64],
}

impl IntegrandRows for ScenarioIntegrand<'_> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn steps(&self) -> usize {
        self.rows.len() / self.dim
    }

    fn row(&self, k: usize) -> &[f64] {
        &self.rows[k * self.dim..(k + 1) * self.dim]
    }
}

/// Row `k` of scenario `p` is the vertical derivative of `F` at `(t_k, W^p)`.
pub fn integrand_from_functional<S: ScenarioSource + ?Sized>(
    f: &dyn Functional,
    source: &S,
    bump: &BumpConfig,
) -> Result<IntegrandOnGrid> {
    check_dim(f, source.dim())?;
    bump.validate()?;
    let grid = source.grid().clone();
    let d = source.dim();
    let steps = grid.steps();
    let rows = map_scenarios(source.scenarios(), |s| {
        let path = source.path(s);
        let view = path.view();
        let mut rows = vec![0.0; steps * d];
        for k in 0..steps {
            let row = &mut rows[k * d..(k + 1) * d];
            match vertical_derivative_into(f, k, &view, bump.vertical, bump.scheme, row) {
                Ok(()) => {}
                Err(Error::Singular { .. }) => {
                    rows[k * d..].fill(f64::NAN);
                    break;
                }
                Err(e) => return Err(e.in_scenario(s)),
            }
        }
        Ok(rows)
    })?;
    IntegrandOnGrid::new(grid, source.scenarios(), d, rows.concat())
}
