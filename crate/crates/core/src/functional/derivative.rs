//! Finite-difference horizontal and vertical derivatives on stopped paths.
//!
//! Every evaluation happens at the same grid index `k` on the path stopped
//! at `k`; vertical bumps `h e_i 1_[t_k, T]` are applied after stopping.
//! Steps are rounded to the `2^-36` lattice used by the Wiener generator so
//! that bumped lattice values stay exact.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pathspace::{snap_to_lattice, Path, PathView};

use super::{check_dim, finite, Functional};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    OneSided,
    #[default]
    Central,
}

/// How a vertical step is chosen from the current coordinate value `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StepSize {
    /// `max(s, s (1 + |x|))`.
    Hybrid(f64),
    Fixed(f64),
}

impl StepSize {
    pub fn at(&self, x: f64) -> f64 {
        let raw = match *self {
            StepSize::Hybrid(s) => s.max(s * (1.0 + x.abs())),
            StepSize::Fixed(h) => h,
        };
        lattice_step(raw)
    }

    fn validate(&self) -> Result<()> {
        let v = match *self {
            StepSize::Hybrid(s) | StepSize::Fixed(s) => s,
        };
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!("bump size must be positive, got {v}")))
        }
    }
}

fn lattice_step(h: f64) -> f64 {
    let s = snap_to_lattice(h);
    if s > 0.0 {
        s
    } else {
        h
    }
}

/// Step sizes and scheme for the finite-difference operators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BumpConfig {
    /// First-order vertical step.
    pub vertical: StepSize,
    /// Step for the second-order stencils; rounding error scales like
    /// `eps / h^2`, hence a larger default than `vertical`.
    pub second_order: StepSize,
    /// Forward time step for the horizontal derivative (capped at `T - t_k`).
    pub horizontal: f64,
    pub scheme: Scheme,
}

impl Default for BumpConfig {
    fn default() -> Self {
        Self {
            vertical: StepSize::Hybrid(1e-5),
            second_order: StepSize::Hybrid(1e-4),
            horizontal: 1e-5,
            scheme: Scheme::Central,
        }
    }
}

impl BumpConfig {
    pub fn validate(&self) -> Result<()> {
        self.vertical.validate()?;
        self.second_order.validate()?;
        if !(self.horizontal.is_finite() && self.horizontal > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "horizontal step must be positive, got {}",
                self.horizontal
            )));
        }
        Ok(())
    }
}

/// Finite-difference derivatives at one `(t_k, path)` state.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeSample {
    /// `None` at `k = N`, where no forward step exists, and for functionals
    /// without a frozen-path evaluation.
    pub horizontal: Option<f64>,
    pub vertical: Vec<f64>,
    /// Row-major `d x d`, exactly symmetric.
    pub vertical2: Vec<f64>,
    /// First-order vertical step used per coordinate.
    pub steps: Vec<f64>,
    pub scheme: Scheme,
}

// Vertical derivatives ignore constant offsets.
fn derivative_target(mut f: &dyn Functional) -> &dyn Functional {
    while let Some((inner, _)) = f.centering() {
        f = inner;
    }
    f
}

#[inline]
fn eval_at(f: &dyn Functional, k: usize, view: &PathView<'_>) -> Result<f64> {
    let v = f.evaluate(k, view)?;
    finite(v, || format!("evaluating `{}` at grid index {k}", f.id()))
}

fn check_step(h: f64) -> Result<()> {
    if h.is_finite() && h > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("bump size must be positive, got {h}")))
    }
}

/// Vertical gradient at grid index `k` of `view`, written into `out`.
///
/// `center` may carry an already computed `F(t_k, view stopped at k)` for
/// the one-sided scheme.
pub fn vertical_derivative_into(
    f: &dyn Functional,
    k: usize,
    view: &PathView<'_>,
    step: StepSize,
    scheme: Scheme,
    out: &mut [f64],
) -> Result<()> {
    let f = derivative_target(f);
    let base = view.stopped(k);
    let mut center = None;
    for (i, slot) in out.iter_mut().enumerate() {
        let h = step.at(base.value(k, i));
        let up = eval_at(f, k, &base.shifted(k, i, h))?;
        *slot = match scheme {
            Scheme::Central => {
                let down = eval_at(f, k, &base.shifted(k, i, -h))?;
                (up - down) / (2.0 * h)
            }
            Scheme::OneSided => {
                let c = match center {
                    Some(c) => c,
                    None => *center.insert(eval_at(f, k, &base)?),
                };
                (up - c) / h
            }
        };
        finite(*slot, || {
            format!("vertical derivative of `{}` at grid index {k}", f.id())
        })?;
    }
    Ok(())
}

/// `(d_i F(t_k, p))_i` with a fixed step `h`.
pub fn vertical_derivative(
    f: &dyn Functional,
    k: usize,
    p: &Path,
    h: f64,
    scheme: Scheme,
) -> Result<Vec<f64>> {
    check_dim(f, p.dim())?;
    p.grid().check_index(k)?;
    check_step(h)?;
    let mut out = vec![0.0; p.dim()];
    vertical_derivative_into(f, k, &p.view(), StepSize::Fixed(h), scheme, &mut out)?;
    Ok(out)
}

pub(crate) fn horizontal_on_view(
    f: &dyn Functional,
    k: usize,
    view: &PathView<'_>,
    h: f64,
) -> Result<f64> {
    let grid = view.grid();
    let t = grid.time(k);
    if k == grid.steps() || t + h > grid.horizon() {
        return Err(Error::NoForwardRoom {
            k,
            t,
            h,
            horizon: grid.horizon(),
        });
    }
    let frozen = view.stopped(k);
    let ahead = f.evaluate_frozen(t + h, k, &frozen)?;
    let now = f.evaluate_frozen(t, k, &frozen)?;
    finite((ahead - now) / h, || {
        format!("horizontal derivative of `{}` at grid index {k}", f.id())
    })
}

/// Forward difference `(F(t_k + h, p_{t_k}) - F(t_k, p_{t_k})) / h`.
pub fn horizontal_derivative(f: &dyn Functional, k: usize, p: &Path, h: f64) -> Result<f64> {
    check_dim(f, p.dim())?;
    p.grid().check_index(k)?;
    check_step(h)?;
    horizontal_on_view(f, k, &p.view(), h)
}

pub(crate) fn second_on_view(
    f: &dyn Functional,
    k: usize,
    view: &PathView<'_>,
    step: StepSize,
    out: &mut [f64],
) -> Result<()> {
    let f = derivative_target(f);
    let d = view.dim();
    let base = view.stopped(k);
    let steps: Vec<f64> = (0..d).map(|i| step.at(base.value(k, i))).collect();
    let center = eval_at(f, k, &base)?;
    for i in 0..d {
        let h = steps[i];
        let up = eval_at(f, k, &base.shifted(k, i, h))?;
        let down = eval_at(f, k, &base.shifted(k, i, -h))?;
        out[i * d + i] = ((up - 2.0 * center) + down) / (h * h);
        for j in (i + 1)..d {
            let hj = steps[j];
            let pp = eval_at(f, k, &base.shifted(k, i, h).shifted(k, j, hj))?;
            let pm = eval_at(f, k, &base.shifted(k, i, h).shifted(k, j, -hj))?;
            let mp = eval_at(f, k, &base.shifted(k, i, -h).shifted(k, j, hj))?;
            let mm = eval_at(f, k, &base.shifted(k, i, -h).shifted(k, j, -hj))?;
            let mixed = ((pp - pm) - (mp - mm)) / (4.0 * h * hj);
            out[i * d + j] = mixed;
            out[j * d + i] = mixed;
        }
    }
    for v in out.iter() {
        finite(*v, || {
            format!("second vertical derivative of `{}` at grid index {k}", f.id())
        })?;
    }
    Ok(())
}

/// Central second-difference estimate of the vertical Hessian, row-major.
pub fn second_vertical_derivative(f: &dyn Functional, k: usize, p: &Path, h: f64) -> Result<Vec<f64>> {
    check_dim(f, p.dim())?;
    p.grid().check_index(k)?;
    check_step(h)?;
    let mut out = vec![0.0; p.dim() * p.dim()];
    second_on_view(f, k, &p.view(), StepSize::Fixed(h), &mut out)?;
    Ok(out)
}

/// All finite-difference derivatives at `(t_k, view)` under `cfg`.
pub fn derivative_sample(
    f: &dyn Functional,
    k: usize,
    view: &PathView<'_>,
    cfg: &BumpConfig,
) -> Result<DerivativeSample> {
    check_dim(f, view.dim())?;
    view.grid().check_index(k)?;
    cfg.validate()?;
    let d = view.dim();
    let grid = view.grid();
    let horizontal = if k < grid.steps() {
        let h = cfg.horizontal.min(grid.horizon() - grid.time(k));
        match horizontal_on_view(f, k, view, h) {
            Ok(v) => Some(v),
            Err(Error::HorizontalUnsupported(_)) => None,
            Err(e) => return Err(e),
        }
    } else {
        None
    };
    let mut vertical = vec![0.0; d];
    vertical_derivative_into(f, k, view, cfg.vertical, cfg.scheme, &mut vertical)?;
    let mut vertical2 = vec![0.0; d * d];
    second_on_view(f, k, view, cfg.second_order, &mut vertical2)?;
    let steps = (0..d).map(|i| cfg.vertical.at(view.value(k, i))).collect();
    Ok(DerivativeSample {
        horizontal,
        vertical,
        vertical2,
        steps,
        scheme: cfg.scheme,
    })
}
