use serde::Serialize;

use crate::error::{Error, Result};

/// A partition `0 = t_0 < t_1 < ... < t_N = T` of the horizon.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimeGrid {
    times: Vec<f64>,
}

impl TimeGrid {
    /// Validates an explicit partition. Non-uniform grids are accepted.
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least two points, got {}",
                times.len()
            )));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidGrid(format!(
                "first time must be exactly 0, got {}",
                times[0]
            )));
        }
        for (k, pair) in times.windows(2).enumerate() {
            if !pair[1].is_finite() || pair[1] <= pair[0] {
                return Err(Error::InvalidGrid(format!(
                    "times must be finite and strictly increasing (t[{}] = {}, t[{}] = {})",
                    k,
                    pair[0],
                    k + 1,
                    pair[1]
                )));
            }
        }
        Ok(Self { times })
    }

    /// Uniform grid with `steps` intervals on `[0, horizon]`; the last point is exactly `horizon`.
    pub fn uniform(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        if steps == 0 {
            return Err(Error::InvalidGrid("need at least one step".into()));
        }
        let n = steps as f64;
        let times = (0..=steps)
            .map(|k| {
                if k == steps {
                    horizon
                } else {
                    horizon * (k as f64) / n
                }
            })
            .collect();
        Self::new(times)
    }

    /// Number of steps `N`.
    #[inline]
    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    /// Number of grid points `N + 1`.
    #[inline]
    pub fn len(&self) -> usize {
        self.times.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn horizon(&self) -> f64 {
        self.times[self.times.len() - 1]
    }

    #[inline]
    pub fn time(&self, k: usize) -> f64 {
        self.times[k]
    }

    #[inline]
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// `t_{k+1} - t_k`.
    #[inline]
    pub fn dt(&self, k: usize) -> f64 {
        self.times[k + 1] - self.times[k]
    }

    /// Largest step size.
    pub fn max_dt(&self) -> f64 {
        (0..self.steps()).map(|k| self.dt(k)).fold(0.0, f64::max)
    }

    pub(crate) fn check_index(&self, k: usize) -> Result<()> {
        if k > self.steps() {
            Err(Error::IndexOutOfRange {
                index: k,
                last: self.steps(),
            })
        } else {
            Ok(())
        }
    }
}
