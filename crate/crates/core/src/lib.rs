//! Functional Itô calculus on discrete time grids.
//!
//! - [`pathspace`]: time grids, paths, stopping and bumping, seeded Wiener
//!   ensembles and left-point stochastic sums.
//! - [`functional`]: non-anticipative functionals, the built-in catalog and
//!   finite-difference horizontal and vertical derivatives.
//! - [`representation`]: martingale reconstruction from vertical
//!   derivatives, residual statistics, stopping ladders and strict-local
//!   diagnostics.
//! - [`lab`]: JSON-configured experiments and their run directories.
//!
//! ```
//! use fitolab::functional::{catalog_functional, BumpConfig};
//! use fitolab::pathspace::{TimeGrid, WienerGenerator};
//! use fitolab::representation::representation_residual;
//! use std::sync::Arc;
//!
//! let grid = Arc::new(TimeGrid::uniform(1.0, 32)?);
//! let src = WienerGenerator::new(grid, 1, 100, 7)?;
//! let f = catalog_functional("linear", &[])?;
//! let r = representation_residual(f.as_ref(), &src, &BumpConfig::default())?;
//! assert!(r.identically_zero());
//! # Ok::<(), fitolab::Error>(())
//! ```

pub mod error;
pub mod functional;
pub mod lab;
mod par;
pub mod pathspace;
pub mod report;
pub mod representation;
pub mod stats;

pub use error::{Error, ErrorKind, Result};

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/paths.md")]
    mod paths {}
    #[doc = include_str!("../../../book/src/derivatives.md")]
    mod derivatives {}
    #[doc = include_str!("../../../book/src/representation.md")]
    mod representation {}
    #[doc = include_str!("../../../book/src/localization.md")]
    mod localization {}
    #[doc = include_str!("../../../book/src/lab.md")]
    mod lab {}
}
