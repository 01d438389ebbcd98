use crate::error::{Error, Result};

use super::path::Path;

/// Summation order for left-point stochastic sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Summation {
    /// Plain accumulation in ascending grid index.
    #[default]
    Ascending,
    /// Kahan-Babuska (Neumaier) compensated accumulation, still ascending.
    Compensated,
}

/// Integrand values at the left points `t_0 .. t_{N-1}` of one scenario.
pub trait IntegrandRows {
    fn dim(&self) -> usize;
    fn steps(&self) -> usize;
    fn row(&self, k: usize) -> &[f64];
}

/// A single scenario's integrand stored row-major (`steps x dim`).
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrandPath {
    dim: usize,
    rows: Vec<f64>,
}

impl IntegrandPath {
    pub fn new(dim: usize, rows: Vec<f64>) -> Result<Self> {
        if dim == 0 || !rows.len().is_multiple_of(dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: rows.len(),
            });
        }
        Ok(Self { dim, rows })
    }

    /// Same row at every step.
    pub fn constant(row: &[f64], steps: usize) -> Self {
        Self {
            dim: row.len(),
            rows: row.iter().copied().cycle().take(row.len() * steps).collect(),
        }
    }

    pub fn rows(&self) -> &[f64] {
        &self.rows
    }
}

impl IntegrandRows for IntegrandPath {
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

/// `phi(t_k)' (w(t_{k+1}) - w(t_k))`, coordinates summed in ascending order.
#[inline]
pub(crate) fn left_point_term(row: &[f64], w: &Path, k: usize) -> f64 {
    let mut s = 0.0;
    for (i, &phi) in row.iter().enumerate() {
        s += phi * w.increment(k, i);
    }
    s
}

fn check_shapes<I: IntegrandRows + ?Sized>(integrand: &I, w: &Path, upto: usize) -> Result<()> {
    if integrand.dim() != w.dim() {
        return Err(Error::DimensionMismatch {
            expected: w.dim(),
            found: integrand.dim(),
        });
    }
    w.grid().check_index(upto)?;
    if integrand.steps() < upto {
        return Err(Error::IndexOutOfRange {
            index: upto,
            last: integrand.steps(),
        });
    }
    Ok(())
}

/// Left-point Itô sum `sum_{k<upto} phi(t_k)' dW_k`, ascending in `k`.
pub fn ito_integral<I: IntegrandRows + ?Sized>(integrand: &I, w: &Path, upto: usize) -> Result<f64> {
    ito_integral_with(integrand, w, upto, Summation::Ascending)
}

pub fn ito_integral_with<I: IntegrandRows + ?Sized>(
    integrand: &I,
    w: &Path,
    upto: usize,
    summation: Summation,
) -> Result<f64> {
    check_shapes(integrand, w, upto)?;
    let terms = (0..upto).map(|k| left_point_term(integrand.row(k), w, k));
    Ok(match summation {
        Summation::Ascending => {
            let mut acc = 0.0;
            for t in terms {
                acc += t;
            }
            acc
        }
        Summation::Compensated => {
            let (mut sum, mut comp) = (0.0f64, 0.0f64);
            for t in terms {
                let next = sum + t;
                if sum.abs() >= t.abs() {
                    comp += (sum - next) + t;
                } else {
                    comp += (t - next) + sum;
                }
                sum = next;
            }
            sum + comp
        }
    })
}

/// Realized covariation `sum_{k<upto} dW_k dW_k'`, row-major `d x d`.
pub fn quadratic_variation(w: &Path, upto: usize) -> Result<Vec<f64>> {
    w.grid().check_index(upto)?;
    let d = w.dim();
    let mut out = vec![0.0; d * d];
    let mut inc = vec![0.0; d];
    for k in 0..upto {
        for (i, x) in inc.iter_mut().enumerate() {
            *x = w.increment(k, i);
        }
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] += inc[i] * inc[j];
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::pathspace::TimeGrid;

    fn scalar_path(vals: &[f64]) -> Path {
        let grid = Arc::new(TimeGrid::uniform(1.0, vals.len() - 1).unwrap());
        Path::scalar(grid, vals.to_vec()).unwrap()
    }

    #[test]
    fn deterministic_quadratic_variation() {
        let p = scalar_path(&[0.0, 1.0, 0.0]);
        assert_eq!(quadratic_variation(&p, 2).unwrap(), vec![2.0]);
        assert_eq!(quadratic_variation(&p, 0).unwrap(), vec![0.0]);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let p = scalar_path(&[0.0, 1.0, 0.0]);
        let phi = IntegrandPath::constant(&[1.0, 1.0], 2);
        assert!(matches!(
            ito_integral(&phi, &p, 2),
            Err(Error::DimensionMismatch { .. })
        ));
        let short = IntegrandPath::constant(&[1.0], 1);
        assert!(ito_integral(&short, &p, 2).is_err());
    }

    #[test]
    fn compensated_sum_agrees_closely() {
        let vals: Vec<f64> = (0..200).map(|k| (k as f64 * 0.31).sin() * 0.1).collect();
        let p = scalar_path(&vals);
        let phi = IntegrandPath::new(1, (0..199).map(|k| 1.0 + k as f64 * 1e-3).collect()).unwrap();
        let a = ito_integral(&phi, &p, 199).unwrap();
        let b = ito_integral_with(&phi, &p, 199, Summation::Compensated).unwrap();
        assert!((a - b).abs() < 1e-13);
    }
}
