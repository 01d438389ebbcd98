//! Fixed functionals with closed-form derivatives.
//!
//! Time-integrals use the left-point convention `sum_{j<k} w(t_j) dt_j`;
//! off-grid evaluation extends the stopped path flat, so
//! `int_0^t w_{t_k}(s) ds = I_k + (t - t_k) w(t_k)`.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::pathspace::PathView;

use super::{Claims, ClosedForm, Functional};

/// Distance to `-x0` below which the inverse-Bessel functional refuses to evaluate.
pub const INVERSE_BESSEL_GUARD: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct CatalogEntry {
    pub id: &'static str,
    pub formula: &'static str,
    pub dim: usize,
    /// Parameter schema, e.g. `x0: 3 reals, default 1,0,0`.
    pub params: &'static str,
    pub claims: Claims,
    pub notes: &'static str,
}

const MARTINGALE: Claims = Claims {
    is_martingale: true,
    is_strict_local_martingale: false,
    is_c12b: true,
};

static ENTRIES: [CatalogEntry; 8] = [
    CatalogEntry {
        id: "linear",
        formula: "F(t,w) = w(t)",
        dim: 1,
        params: "none",
        claims: MARTINGALE,
        notes: "integrand 1",
    },
    CatalogEntry {
        id: "quadratic",
        formula: "F(t,w) = w(t)^2 - t",
        dim: 1,
        params: "none",
        claims: MARTINGALE,
        notes: "integrand 2 w(t)",
    },
    CatalogEntry {
        id: "conditional-square",
        formula: "F(t,w) = w(t)^2 + (T - t)",
        dim: 1,
        params: "none",
        claims: MARTINGALE,
        notes: "price of the claim W(T)^2; hedge 2 w(t)",
    },
    CatalogEntry {
        id: "exponential",
        formula: "F(t,w) = exp(w(t) - t/2)",
        dim: 1,
        params: "none",
        claims: MARTINGALE,
        notes: "derivatives are unbounded; regularity is asserted, not checked",
    },
    CatalogEntry {
        id: "integral",
        formula: "F(t,w) = int_0^t w(s) ds (left-point sum on the grid)",
        dim: 1,
        params: "none",
        claims: Claims {
            is_martingale: false,
            is_strict_local_martingale: false,
            is_c12b: true,
        },
        notes: "finite variation; vertical derivative 0, horizontal derivative w(t)",
    },
    CatalogEntry {
        id: "anticipated-average",
        formula: "F(t,w) = int_0^t w(s) ds + w(t) (T - t)",
        dim: 1,
        params: "none",
        claims: MARTINGALE,
        notes: "price of int_0^T W ds; hedge T - t",
    },
    CatalogEntry {
        id: "inverse-bessel",
        formula: "F(t,w) = 1 / |x0 + w(t)|",
        dim: 3,
        params: "x0: 3 reals, nonzero, default 1,0,0",
        claims: Claims {
            is_martingale: false,
            is_strict_local_martingale: true,
            is_c12b: false,
        },
        notes: "strict local martingale; errors within 1e-6 of -x0",
    },
    CatalogEntry {
        id: "running-max-to-t",
        formula: "F(t,w) = max_{s<=t} w(s)",
        dim: 1,
        params: "none",
        claims: Claims {
            is_martingale: false,
            is_strict_local_martingale: false,
            is_c12b: false,
        },
        notes: "non-anticipativity fixture only; no smoothness",
    },
];

pub fn catalog_entries() -> &'static [CatalogEntry] {
    &ENTRIES
}

/// Builds a catalog functional from its id and parameter list.
pub fn catalog_functional(id: &str, params: &[f64]) -> Result<Arc<dyn Functional>> {
    let entry = ENTRIES
        .iter()
        .find(|e| e.id == id)
        .ok_or_else(|| Error::UnknownFunctional(id.to_string()))?;
    let kind = match id {
        "linear" => Kind::Linear,
        "quadratic" => Kind::Quadratic,
        "conditional-square" => Kind::ConditionalSquare,
        "exponential" => Kind::Exponential,
        "integral" => Kind::Integral,
        "anticipated-average" => Kind::AnticipatedAverage,
        "running-max-to-t" => Kind::RunningMax,
        "inverse-bessel" => {
            let x0 = match params {
                [] => [1.0, 0.0, 0.0],
                [a, b, c] => [*a, *b, *c],
                _ => {
                    return Err(Error::InvalidParameter(format!(
                        "inverse-bessel takes x0 as 3 reals, got {} values",
                        params.len()
                    )))
                }
            };
            if x0.iter().any(|v| !v.is_finite()) || norm3(&x0) == 0.0 {
                return Err(Error::InvalidParameter(
                    "inverse-bessel anchor x0 must be finite and nonzero".into(),
                ));
            }
            Kind::InverseBessel(x0)
        }
        _ => unreachable!("catalog table and constructor disagree on `{id}`"),
    };
    if !matches!(kind, Kind::InverseBessel(_)) && !params.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "`{id}` takes no parameters, got {}",
            params.len()
        )));
    }
    let params = match kind {
        Kind::InverseBessel(x0) => x0.to_vec(),
        _ => Vec::new(),
    };
    Ok(Arc::new(CatalogFunctional {
        entry,
        kind,
        params,
    }))
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Linear,
    Quadratic,
    ConditionalSquare,
    Exponential,
    Integral,
    AnticipatedAverage,
    InverseBessel([f64; 3]),
    RunningMax,
}

#[derive(Debug)]
struct CatalogFunctional {
    entry: &'static CatalogEntry,
    kind: Kind,
    params: Vec<f64>,
}

fn norm3(x: &[f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

impl CatalogFunctional {
    fn shifted_point(&self, x0: &[f64; 3], k: usize, path: &PathView<'_>) -> Result<([f64; 3], f64)> {
        let x = [
            x0[0] + path.value(k, 0),
            x0[1] + path.value(k, 1),
            x0[2] + path.value(k, 2),
        ];
        let r = norm3(&x);
        if r < INVERSE_BESSEL_GUARD {
            return Err(Error::Singular {
                id: self.entry.id.to_string(),
                k,
                distance: r,
            });
        }
        Ok((x, r))
    }
}

impl Functional for CatalogFunctional {
    fn id(&self) -> &str {
        self.entry.id
    }

    fn params(&self) -> &[f64] {
        &self.params
    }

    fn dim(&self) -> usize {
        self.entry.dim
    }

    fn claims(&self) -> Claims {
        self.entry.claims
    }

    fn evaluate(&self, k: usize, path: &PathView<'_>) -> Result<f64> {
        self.evaluate_frozen(path.grid().time(k), k, path)
    }

    fn evaluate_frozen(&self, t: f64, k: usize, path: &PathView<'_>) -> Result<f64> {
        let horizon = path.grid().horizon();
        let tk = path.grid().time(k);
        let w = || path.value(k, 0);
        Ok(match self.kind {
            Kind::Linear => w(),
            Kind::Quadratic => w() * w() - t,
            Kind::ConditionalSquare => w() * w() + (horizon - t),
            Kind::Exponential => (w() - 0.5 * t).exp(),
            Kind::Integral => path.left_integral(k, 0) + (t - tk) * w(),
            Kind::AnticipatedAverage => {
                path.left_integral(k, 0) + (t - tk) * w() + w() * (horizon - t)
            }
            Kind::InverseBessel(x0) => 1.0 / self.shifted_point(&x0, k, path)?.1,
            Kind::RunningMax => (0..=k).map(|j| path.value(j, 0)).fold(f64::NEG_INFINITY, f64::max),
        })
    }

    fn closed_form(&self, k: usize, path: &PathView<'_>) -> Option<Result<ClosedForm>> {
        let t = path.grid().time(k);
        let horizon = path.grid().horizon();
        let w = path.value(k, 0);
        let scalar = |horizontal: f64, vertical: f64, vertical2: f64| {
            Some(Ok(ClosedForm {
                horizontal,
                vertical: vec![vertical],
                vertical2: vec![vertical2],
            }))
        };
        match self.kind {
            Kind::Linear => scalar(0.0, 1.0, 0.0),
            Kind::Quadratic | Kind::ConditionalSquare => scalar(-1.0, 2.0 * w, 2.0),
            Kind::Exponential => {
                let f = (w - 0.5 * t).exp();
                scalar(-0.5 * f, f, f)
            }
            Kind::Integral => scalar(w, 0.0, 0.0),
            Kind::AnticipatedAverage => scalar(0.0, horizon - t, 0.0),
            Kind::InverseBessel(x0) => Some(self.shifted_point(&x0, k, path).map(|(x, r)| {
                let r3 = r * r * r;
                let r5 = r3 * r * r;
                let vertical = x.iter().map(|xi| -xi / r3).collect();
                let mut vertical2 = vec![0.0; 9];
                for i in 0..3 {
                    for j in 0..3 {
                        let delta = if i == j { 1.0 } else { 0.0 };
                        vertical2[i * 3 + j] = -delta / r3 + 3.0 * x[i] * x[j] / r5;
                    }
                }
                ClosedForm {
                    horizontal: 0.0,
                    vertical,
                    vertical2,
                }
            })),
            Kind::RunningMax => None,
        }
    }
}
