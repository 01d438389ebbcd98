use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pathspace::Path;

use super::derivative::{horizontal_on_view, second_on_view, vertical_derivative_into};
use super::{check_dim, finite, BumpConfig, Functional};

/// Where the derivatives in the Itô expansion come from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DerivativeSource {
    #[default]
    FiniteDifference,
    ClosedForm,
}

/// Discretization of `d[W]` in the second-order term.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Bracket {
    /// `dW_k dW_k'`: local error is third order, terminal residual `O(dt)`.
    #[default]
    Realized,
    /// `I dt_k`: Euler-type expansion, terminal residual `O(dt^1/2)`.
    Expected,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ItoCheckOptions {
    pub bump: BumpConfig,
    pub derivatives: DerivativeSource,
    pub bracket: Bracket,
}

/// Residual of the discrete functional Itô expansion along `w`:
///
/// `r(k) = F(t_k) - F(t_0) - sum_{j<k} [DF dt_j + grad F' dW_j + 1/2 tr(hess F dB_j)]`
///
/// with every derivative taken at the left point `(t_j, w_{t_j})` and
/// `dB_j` chosen by `opts.bracket`.
pub fn ito_formula_residual(f: &dyn Functional, w: &Path, opts: &ItoCheckOptions) -> Result<Vec<f64>> {
    check_dim(f, w.dim())?;
    if !f.claims().is_c12b {
        return Err(Error::InvalidParameter(format!(
            "`{}` does not claim the regularity needed by the functional Itô formula",
            f.id()
        )));
    }
    opts.bump.validate()?;
    let grid = w.grid();
    let d = w.dim();
    let view = w.view();
    let mut gradient = vec![0.0; d];
    let mut hessian = vec![0.0; d * d];
    let mut inc = vec![0.0; d];
    let value = |k: usize| {
        finite(f.evaluate(k, &view)?, || format!("evaluating `{}` at {k}", f.id()))
    };
    let start = value(0)?;
    let mut residual = Vec::with_capacity(grid.len());
    residual.push(0.0);
    let mut acc = 0.0;
    for k in 0..grid.steps() {
        let dt = grid.dt(k);
        let horizontal = match opts.derivatives {
            DerivativeSource::FiniteDifference => {
                let h = opts.bump.horizontal.min(grid.horizon() - grid.time(k));
                vertical_derivative_into(
                    f,
                    k,
                    &view,
                    opts.bump.vertical,
                    opts.bump.scheme,
                    &mut gradient,
                )?;
                second_on_view(f, k, &view, opts.bump.second_order, &mut hessian)?;
                horizontal_on_view(f, k, &view, h)?
            }
            DerivativeSource::ClosedForm => {
                let cf = f.closed_form(k, &view).ok_or_else(|| {
                    Error::InvalidParameter(format!("`{}` has no closed-form derivatives", f.id()))
                })??;
                gradient.copy_from_slice(&cf.vertical);
                hessian.copy_from_slice(&cf.vertical2);
                cf.horizontal
            }
        };
        for (i, x) in inc.iter_mut().enumerate() {
            *x = w.increment(k, i);
        }
        let mut first = horizontal * dt;
        for i in 0..d {
            first += gradient[i] * inc[i];
        }
        let mut second = 0.0;
        for i in 0..d {
            match opts.bracket {
                Bracket::Realized => {
                    for j in 0..d {
                        second += hessian[i * d + j] * inc[i] * inc[j];
                    }
                }
                Bracket::Expected => second += hessian[i * d + i] * dt,
            }
        }
        acc += first + 0.5 * second;
        residual.push((value(k + 1)? - start) - acc);
    }
    Ok(residual)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::functional::catalog_functional;
    use crate::pathspace::{generate_wiener, TimeGrid};

    #[test]
    fn linear_residual_is_identically_zero() {
        let grid = Arc::new(TimeGrid::uniform(1.0, 256).unwrap());
        let batch = generate_wiener(grid, 1, 4, 3).unwrap();
        let f = catalog_functional("linear", &[]).unwrap();
        for p in batch.paths() {
            for bracket in [Bracket::Realized, Bracket::Expected] {
                let opts = ItoCheckOptions {
                    bracket,
                    ..Default::default()
                };
                let r = ito_formula_residual(f.as_ref(), p, &opts).unwrap();
                assert!(r.iter().all(|&x| x == 0.0));
            }
        }
    }

    #[test]
    fn integral_residual_is_exact_with_closed_forms() {
        let grid = Arc::new(TimeGrid::uniform(2.0, 300).unwrap());
        let batch = generate_wiener(grid, 1, 3, 5).unwrap();
        let f = catalog_functional("integral", &[]).unwrap();
        let exact = ItoCheckOptions {
            derivatives: DerivativeSource::ClosedForm,
            ..Default::default()
        };
        for p in batch.paths() {
            let r = ito_formula_residual(f.as_ref(), p, &exact).unwrap();
            assert!(r.iter().all(|&x| x == 0.0));
            let r = ito_formula_residual(f.as_ref(), p, &ItoCheckOptions::default()).unwrap();
            assert!(r.iter().all(|x| x.abs() < 1e-8));
        }
    }

    #[test]
    fn rejects_irregular_functionals() {
        let grid = Arc::new(TimeGrid::uniform(1.0, 8).unwrap());
        let batch = generate_wiener(grid, 1, 1, 1).unwrap();
        let f = catalog_functional("running-max-to-t", &[]).unwrap();
        assert!(ito_formula_residual(f.as_ref(), &batch.paths()[0], &Default::default()).is_err());
    }
}
