//! Time grids, sample paths, the stopping and bumping operators, Wiener
//! ensembles and left-point stochastic sums.

mod csv_io;
mod grid;
mod ito;
mod path;
mod wiener;

pub use csv_io::{read_path_csv, write_path_csv};
pub use grid::TimeGrid;
pub use ito::{
    ito_integral, ito_integral_with, quadratic_variation, IntegrandPath, IntegrandRows, Summation,
};
pub(crate) use ito::left_point_term;
pub use path::{bump_path, stop_path, BumpSpec, Path, PathView};
pub use wiener::{generate_wiener, snap_to_lattice, ScenarioSource, WienerBatch, WienerGenerator};
