use crate::error::{Error, Result};
use crate::par::map_scenarios;
use crate::pathspace::{left_point_term, IntegrandRows, Path, ScenarioSource};

use super::process::{IntegrandOnGrid, ProcessOnGrid};

/// `m0 + sum_{j<k} phi(t_j)' dW_j` for every `k` along one path.
///
/// Entry `k` is bitwise equal to `m0 + ito_integral(phi, w, k)`.
pub fn reconstruct_path<I: IntegrandRows + ?Sized>(m0: f64, phi: &I, w: &Path) -> Result<Vec<f64>> {
    if phi.dim() != w.dim() {
        return Err(Error::DimensionMismatch {
            expected: w.dim(),
            found: phi.dim(),
        });
    }
    let steps = w.grid().steps();
    if phi.steps() < steps {
        return Err(Error::IndexOutOfRange {
            index: steps,
            last: phi.steps(),
        });
    }
    let mut out = Vec::with_capacity(steps + 1);
    let mut acc = 0.0;
    out.push(m0 + acc);
    for k in 0..steps {
        acc += left_point_term(phi.row(k), w, k);
        out.push(m0 + acc);
    }
    Ok(out)
}

/// `M(t_k) = m0 + int_0^{t_k} phi' dW` on every scenario.
pub fn reconstruct<S: ScenarioSource + ?Sized>(
    m0: f64,
    phi: &IntegrandOnGrid,
    source: &S,
) -> Result<ProcessOnGrid> {
    if phi.scenarios() != source.scenarios() {
        return Err(Error::DimensionMismatch {
            expected: source.scenarios(),
            found: phi.scenarios(),
        });
    }
    if phi.grid() != source.grid() && **phi.grid() != **source.grid() {
        return Err(Error::InvalidParameter("integrand and paths use different grids".into()));
    }
    let rows = map_scenarios(source.scenarios(), |s| {
        reconstruct_path(m0, &phi.scenario(s), &source.path(s)).map_err(|e| e.in_scenario(s))
    })?;
    ProcessOnGrid::new(source.grid().clone(), source.scenarios(), rows.concat())
}
