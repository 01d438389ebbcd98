//! Non-anticipative path functionals and their horizontal and vertical
//! derivatives.
//!
//! A [`Functional`] is evaluated at a grid index `k` on a [`PathView`]; it
//! must only read the view at indices `<= k`. Finite-difference operators
//! evaluate it on stopped, bumped views without copying paths.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::pathspace::{Path, PathView, TimeGrid};

mod anticipation;
mod catalog;
mod derivative;
mod ito_formula;

pub use anticipation::{check_non_anticipativity, AnticipationCheck, AnticipationWitness};
pub use catalog::{catalog_entries, catalog_functional, CatalogEntry};
pub use derivative::{
    derivative_sample, horizontal_derivative, second_vertical_derivative, vertical_derivative,
    vertical_derivative_into, BumpConfig, DerivativeSample, Scheme, StepSize,
};
pub use ito_formula::{ito_formula_residual, Bracket, DerivativeSource, ItoCheckOptions};

/// Membership claims asserted by a functional's author. They are not
/// verified numerically beyond sanity checks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Claims {
    pub is_martingale: bool,
    pub is_strict_local_martingale: bool,
    /// Regular enough for the functional Itô formula.
    pub is_c12b: bool,
}

/// Closed-form derivatives at one `(t_k, path)` state.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedForm {
    pub horizontal: f64,
    pub vertical: Vec<f64>,
    /// Row-major `d x d`.
    pub vertical2: Vec<f64>,
}

pub trait Functional: Send + Sync + fmt::Debug {
    fn id(&self) -> &str;

    fn params(&self) -> &[f64] {
        &[]
    }

    /// Required path dimension.
    fn dim(&self) -> usize;

    fn claims(&self) -> Claims;

    /// `F(t_k, path)`. Must be pure.
    fn evaluate(&self, k: usize, path: &PathView<'_>) -> Result<f64>;

    /// `F(t, path_{t_k})` for `t >= t_k`, i.e. the functional at an off-grid
    /// time with the path frozen at `t_k`. Needed for horizontal derivatives.
    fn evaluate_frozen(&self, t: f64, k: usize, path: &PathView<'_>) -> Result<f64> {
        let _ = (t, k, path);
        Err(Error::HorizontalUnsupported(self.id().to_string()))
    }

    fn closed_form(&self, k: usize, path: &PathView<'_>) -> Option<Result<ClosedForm>> {
        let _ = (k, path);
        None
    }

    /// For `F - c` with a constant `c`: the underlying functional and `c`.
    /// Vertical derivatives are taken on the underlying functional.
    fn centering(&self) -> Option<(&dyn Functional, f64)> {
        None
    }
}

/// Value of `F` at grid index `k` of `path`, checked for finiteness.
pub fn evaluate(f: &dyn Functional, k: usize, path: &Path) -> Result<f64> {
    check_dim(f, path.dim())?;
    path.grid().check_index(k)?;
    finite(f.evaluate(k, &path.view())?, || {
        format!("evaluating `{}` at grid index {k}", f.id())
    })
}

pub(crate) fn check_dim(f: &dyn Functional, dim: usize) -> Result<()> {
    if f.dim() != dim {
        Err(Error::DimensionMismatch {
            expected: f.dim(),
            found: dim,
        })
    } else {
        Ok(())
    }
}

pub(crate) fn finite(v: f64, context: impl FnOnce() -> String) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFinite {
            context: context(),
            value: v,
        })
    }
}

/// `F - F(0, 0)`: the functional shifted so that it starts at zero on paths
/// starting at the origin.
#[derive(Debug, Clone)]
pub struct Centered {
    inner: Arc<dyn Functional>,
    offset: f64,
    id: String,
}

impl Centered {
    /// Centers `inner` by its value at `t_0` on the zero path of `grid`.
    pub fn at_origin(inner: Arc<dyn Functional>, grid: &Arc<TimeGrid>) -> Result<Self> {
        let origin = Path::new(grid.clone(), inner.dim(), vec![0.0; grid.len() * inner.dim()])?;
        let offset = evaluate(inner.as_ref(), 0, &origin)?;
        Ok(Self::with_offset(inner, offset))
    }

    pub fn with_offset(inner: Arc<dyn Functional>, offset: f64) -> Self {
        let id = format!("centered({})", inner.id());
        Self { inner, offset, id }
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }
}

impl Functional for Centered {
    fn id(&self) -> &str {
        &self.id
    }

    fn params(&self) -> &[f64] {
        self.inner.params()
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn claims(&self) -> Claims {
        self.inner.claims()
    }

    fn evaluate(&self, k: usize, path: &PathView<'_>) -> Result<f64> {
        Ok(self.inner.evaluate(k, path)? - self.offset)
    }

    fn evaluate_frozen(&self, t: f64, k: usize, path: &PathView<'_>) -> Result<f64> {
        Ok(self.inner.evaluate_frozen(t, k, path)? - self.offset)
    }

    fn closed_form(&self, k: usize, path: &PathView<'_>) -> Option<Result<ClosedForm>> {
        self.inner.closed_form(k, path)
    }

    fn centering(&self) -> Option<(&dyn Functional, f64)> {
        Some((self.inner.as_ref(), self.offset))
    }
}

type EvalFn = dyn Fn(usize, &PathView<'_>) -> f64 + Send + Sync;
type FrozenFn = dyn Fn(f64, usize, &PathView<'_>) -> f64 + Send + Sync;

/// A user-supplied functional built from closures.
pub struct FnFunctional {
    id: String,
    dim: usize,
    claims: Claims,
    eval: Box<EvalFn>,
    frozen: Option<Box<FrozenFn>>,
}

impl FnFunctional {
    pub fn new(
        id: impl Into<String>,
        dim: usize,
        claims: Claims,
        eval: impl Fn(usize, &PathView<'_>) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            id: id.into(),
            dim,
            claims,
            eval: Box::new(eval),
            frozen: None,
        }
    }

    /// Opts in to horizontal differentiation.
    pub fn with_frozen(
        mut self,
        frozen: impl Fn(f64, usize, &PathView<'_>) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.frozen = Some(Box::new(frozen));
        self
    }
}

impl fmt::Debug for FnFunctional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FnFunctional")
            .field("id", &self.id)
            .field("dim", &self.dim)
            .field("claims", &self.claims)
            .field("horizontal", &self.frozen.is_some())
            .finish()
    }
}

impl Functional for FnFunctional {
    fn id(&self) -> &str {
        &self.id
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn claims(&self) -> Claims {
        self.claims
    }

    fn evaluate(&self, k: usize, path: &PathView<'_>) -> Result<f64> {
        Ok((self.eval)(k, path))
    }

    fn evaluate_frozen(&self, t: f64, k: usize, path: &PathView<'_>) -> Result<f64> {
        match &self.frozen {
            Some(frozen) => Ok(frozen(t, k, path)),
            None => Err(Error::HorizontalUnsupported(self.id.clone())),
        }
    }
}
