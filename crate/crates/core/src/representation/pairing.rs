use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functional::{check_dim, finite, vertical_derivative_into, BumpConfig, Centered, Functional};
use crate::par::fold_chunks;
use crate::pathspace::ScenarioSource;
use crate::stats::{Estimate, Moments};

/// Both sides of `E[Y(T) Z(T)] = E[int_0^T grad Y' grad Z dt]` for centered
/// martingales, estimated on common scenarios.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairingStats {
    pub y: String,
    pub z: String,
    pub lhs: Estimate,
    pub rhs: Estimate,
    /// Per-scenario `lhs - rhs`; its standard error sets the agreement band.
    pub difference: Estimate,
    pub scenarios: usize,
}

impl PairingStats {
    /// `|lhs - rhs| <= z * se(lhs - rhs)`.
    pub fn agrees_within(&self, z: f64) -> bool {
        self.difference.within(0.0, z)
    }
}

#[derive(Default)]
struct Acc {
    lhs: Moments,
    rhs: Moments,
    diff: Moments,
}

/// Monte Carlo pairing of two martingale functionals. Both are centered by
/// their value at the origin; the right side uses left-point rows and
/// `dt_k` weights.
pub fn pairing_check<S: ScenarioSource + ?Sized>(
    y: Arc<dyn Functional>,
    z: Arc<dyn Functional>,
    source: &S,
    bump: &BumpConfig,
) -> Result<PairingStats> {
    for f in [&y, &z] {
        check_dim(f.as_ref(), source.dim())?;
        if !f.claims().is_martingale {
            return Err(Error::InvalidParameter(format!(
                "`{}` does not claim to be a martingale",
                f.id()
            )));
        }
    }
    bump.validate()?;
    let grid = source.grid().clone();
    let (yid, zid) = (y.id().to_string(), z.id().to_string());
    let yc = Centered::at_origin(y, &grid)?;
    let zc = Centered::at_origin(z, &grid)?;
    let d = source.dim();
    let steps = grid.steps();
    let acc = fold_chunks(
        source.scenarios(),
        Acc::default(),
        |range| {
            let mut acc = Acc::default();
            let mut gy = vec![0.0; d];
            let mut gz = vec![0.0; d];
            for s in range {
                let path = source.path(s);
                let view = path.view();
                let terminal = |f: &Centered| {
                    finite(f.evaluate(steps, &view)?, || format!("evaluating `{}` at T", f.id()))
                };
                let lhs = terminal(&yc)? * terminal(&zc)?;
                let mut rhs = 0.0;
                for k in 0..steps {
                    vertical_derivative_into(&yc, k, &view, bump.vertical, bump.scheme, &mut gy)?;
                    vertical_derivative_into(&zc, k, &view, bump.vertical, bump.scheme, &mut gz)?;
                    let mut dot = 0.0;
                    for i in 0..d {
                        dot += gy[i] * gz[i];
                    }
                    rhs += dot * grid.dt(k);
                }
                acc.lhs.push(lhs);
                acc.rhs.push(rhs);
                acc.diff.push(lhs - rhs);
            }
            Ok(acc)
        },
        |a, b| {
            a.lhs.merge(&b.lhs);
            a.rhs.merge(&b.rhs);
            a.diff.merge(&b.diff);
        },
    )?;
    Ok(PairingStats {
        y: yid,
        z: zid,
        lhs: acc.lhs.estimate(),
        rhs: acc.rhs.estimate(),
        difference: acc.diff.estimate(),
        scenarios: source.scenarios(),
    })
}
