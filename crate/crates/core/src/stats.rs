//! Ensemble statistics with standard errors.

use serde::{Serialize, Serializer};

/// Either a Monte Carlo standard error or a marker that the value is exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Uncertainty {
    Exact,
    StdError(f64),
}

impl Serialize for Uncertainty {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Uncertainty::Exact => s.serialize_str("exact"),
            Uncertainty::StdError(se) => s.serialize_f64(*se),
        }
    }
}

impl std::fmt::Display for Uncertainty {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Uncertainty::Exact => f.write_str("exact"),
            Uncertainty::StdError(se) => write!(f, "{se}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: Uncertainty,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self {
            value,
            std_error: Uncertainty::Exact,
        }
    }

    pub fn with_se(value: f64, se: f64) -> Self {
        Self {
            value,
            std_error: Uncertainty::StdError(se),
        }
    }

    /// Standard error, zero when exact.
    pub fn se(&self) -> f64 {
        match self.std_error {
            Uncertainty::Exact => 0.0,
            Uncertainty::StdError(se) => se,
        }
    }

    /// `|value - target| <= z * se`.
    pub fn within(&self, target: f64, z: f64) -> bool {
        (self.value - target).abs() <= z * self.se()
    }
}

/// Running mean and centered second moment (Chan et al. merge).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n as f64 / n as f64;
        self.m2 += other.m2 + delta * delta * (self.n as f64) * (other.n as f64) / n as f64;
        self.n = n;
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }

    pub fn estimate(&self) -> Estimate {
        Estimate::with_se(self.mean, self.std_error())
    }

    /// Treats the pushed values as squares and reports their root mean with
    /// a delta-method standard error.
    pub fn root_mean(&self) -> Estimate {
        let rms = self.mean.max(0.0).sqrt();
        let se = if rms > 0.0 {
            self.std_error() / (2.0 * rms)
        } else {
            0.0
        };
        Estimate::with_se(rms, se)
    }
}

impl FromIterator<f64> for Moments {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut m = Moments::default();
        for x in iter {
            m.push(x);
        }
        m
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    log_log_fit(x, y, None).value
}

/// Least-squares slope of `ln y` on `ln x` with a delta-method standard error
/// from the standard errors of `y`, treating the points as independent.
pub fn log_log_slope_estimate(x: &[f64], y: &[Estimate]) -> Estimate {
    let values: Vec<f64> = y.iter().map(|e| e.value).collect();
    log_log_fit(x, &values, Some(y))
}

fn log_log_fit(x: &[f64], y: &[f64], errors: Option<&[Estimate]>) -> Estimate {
    assert_eq!(x.len(), y.len());
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (a, b) in lx.iter().zip(&ly) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    let slope = sxy / sxx;
    let Some(errors) = errors else {
        return Estimate::exact(slope);
    };
    if errors.iter().all(|e| e.std_error == Uncertainty::Exact) {
        return Estimate::exact(slope);
    }
    let var: f64 = lx
        .iter()
        .zip(y.iter().zip(errors))
        .map(|(a, (v, e))| {
            let w = (a - mx) / sxx;
            let rel = e.se() / v;
            w * w * rel * rel
        })
        .sum();
    Estimate::with_se(slope, var.sqrt())
}

/// Linear-interpolation quantile of unsorted data (`q` in `[0, 1]`).
pub fn quantile(data: &[f64], q: f64) -> f64 {
    if data.is_empty() {
        return f64::NAN;
    }
    let mut sorted = data.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}
