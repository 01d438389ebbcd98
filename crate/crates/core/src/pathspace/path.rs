use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};

use super::grid::TimeGrid;

/// A vertical perturbation `h e_i 1_[t_k, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BumpSpec {
    /// Grid index `k` of the bump time.
    pub t_index: usize,
    /// Zero-based coordinate.
    pub coord: usize,
    pub magnitude: f64,
}

impl BumpSpec {
    pub fn new(t_index: usize, coord: usize, magnitude: f64) -> Self {
        Self {
            t_index,
            coord,
            magnitude,
        }
    }
}

/// A `d`-dimensional path sampled on a [`TimeGrid`]. Immutable once built.
#[derive(Debug, Clone)]
pub struct Path {
    grid: Arc<TimeGrid>,
    dim: usize,
    // row-major, (N + 1) x dim
    values: Vec<f64>,
    // left-point running integral of each coordinate, same layout as `values`
    running_integral: OnceLock<Vec<f64>>,
}

impl PartialEq for Path {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.grid == other.grid && self.values == other.values
    }
}

impl Path {
    pub fn new(grid: Arc<TimeGrid>, dim: usize, values: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("path dimension must be at least 1".into()));
        }
        if values.len() != grid.len() * dim {
            return Err(Error::DimensionMismatch {
                expected: grid.len() * dim,
                found: values.len(),
            });
        }
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "building a path".into(),
                value: *bad,
            });
        }
        Ok(Self::from_parts(grid, dim, values))
    }

    /// One-dimensional convenience constructor.
    pub fn scalar(grid: Arc<TimeGrid>, values: Vec<f64>) -> Result<Self> {
        Self::new(grid, 1, values)
    }

    pub(crate) fn from_parts(grid: Arc<TimeGrid>, dim: usize, values: Vec<f64>) -> Self {
        Self {
            grid,
            dim,
            values,
            running_integral: OnceLock::new(),
        }
    }

    #[inline]
    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    #[inline]
    pub fn shared_grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Coordinate `i` at grid index `k`.
    #[inline]
    pub fn value(&self, k: usize, i: usize) -> f64 {
        self.values[k * self.dim + i]
    }

    #[inline]
    pub fn row(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `w(t_{k+1}) - w(t_k)` for coordinate `i`.
    #[inline]
    pub fn increment(&self, k: usize, i: usize) -> f64 {
        self.value(k + 1, i) - self.value(k, i)
    }

    /// Unmodified view of the whole path.
    pub fn view(&self) -> PathView<'_> {
        PathView {
            path: self,
            stop: self.grid.steps(),
            bump_at: usize::MAX,
            shifts: [(0, 0.0); 2],
            n_shifts: 0,
        }
    }

    /// `sum_{j<k} w_i(t_j) (t_{j+1} - t_j)` accumulated in ascending `j`.
    pub(crate) fn left_integral(&self, k: usize, i: usize) -> f64 {
        let cache = self.running_integral.get_or_init(|| {
            let d = self.dim;
            let mut out = vec![0.0; self.values.len()];
            for i in 0..d {
                let mut acc = 0.0;
                for j in 0..self.grid.steps() {
                    acc += self.value(j, i) * self.grid.dt(j);
                    out[(j + 1) * d + i] = acc;
                }
            }
            out
        });
        cache[k * self.dim + i]
    }

    /// The path stopped at grid index `k`: `w_k(t_j) = w(t_{min(j,k)})`.
    pub fn stop(&self, k: usize) -> Result<Path> {
        self.grid.check_index(k)?;
        Ok(self.view().stopped(k).to_path())
    }

    /// Adds `h` to coordinate `i` at every grid index `>= t_index`.
    pub fn bump(&self, bump: &BumpSpec) -> Result<Path> {
        self.grid.check_index(bump.t_index)?;
        if bump.coord >= self.dim {
            return Err(Error::CoordinateOutOfRange {
                coord: bump.coord,
                dim: self.dim,
            });
        }
        let mut values = self.values.clone();
        for j in bump.t_index..self.grid.len() {
            values[j * self.dim + bump.coord] += bump.magnitude;
        }
        Ok(Path::from_parts(self.grid.clone(), self.dim, values))
    }
}

/// Stopped path; see [`Path::stop`].
pub fn stop_path(p: &Path, k: usize) -> Result<Path> {
    p.stop(k)
}

/// Vertically bumped path; see [`Path::bump`].
pub fn bump_path(p: &Path, b: &BumpSpec) -> Result<Path> {
    p.bump(b)
}

/// A zero-copy view of a path that is first stopped at `stop` and then
/// shifted by up to two vertical bumps starting at `bump_at`.
///
/// `value(j, i) = w_i(t_{min(j, stop)}) + sum of shifts on i if j >= bump_at`.
#[derive(Debug, Clone, Copy)]
pub struct PathView<'a> {
    path: &'a Path,
    stop: usize,
    bump_at: usize,
    shifts: [(usize, f64); 2],
    n_shifts: u8,
}

impl<'a> PathView<'a> {
    /// Further stop the view at `k` (composes as a minimum).
    pub fn stopped(mut self, k: usize) -> Self {
        self.stop = self.stop.min(k);
        self
    }

    /// Adds `h` to coordinate `coord` from grid index `at` on.
    ///
    /// Panics if two shifts with different start indices are combined or more
    /// than two shifts are requested.
    pub fn shifted(mut self, at: usize, coord: usize, h: f64) -> Self {
        assert!(
            self.n_shifts == 0 || self.bump_at == at,
            "all shifts of a view must start at the same grid index"
        );
        assert!(self.n_shifts < 2, "a view carries at most two shifts");
        self.bump_at = at;
        self.shifts[self.n_shifts as usize] = (coord, h);
        self.n_shifts += 1;
        self
    }

    #[inline]
    pub fn path(&self) -> &'a Path {
        self.path
    }

    #[inline]
    pub fn grid(&self) -> &'a TimeGrid {
        self.path.grid()
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.path.dim
    }

    #[inline]
    pub fn stop_index(&self) -> usize {
        self.stop
    }

    #[inline]
    pub fn value(&self, j: usize, i: usize) -> f64 {
        let mut v = self.path.value(j.min(self.stop), i);
        if j >= self.bump_at {
            for &(c, h) in &self.shifts[..self.n_shifts as usize] {
                if c == i {
                    v += h;
                }
            }
        }
        v
    }

    /// Left-point Riemann sum `sum_{j<k} value(j, i) dt_j`, ascending in `j`.
    ///
    /// Bitwise equal to the direct loop; reuses the path's cached running
    /// integral when neither the stop nor the shifts reach below `k`.
    pub fn left_integral(&self, k: usize, i: usize) -> f64 {
        if k == 0 {
            return 0.0;
        }
        if self.stop >= k - 1 && self.bump_at >= k {
            return self.path.left_integral(k, i);
        }
        let grid = self.grid();
        let mut acc = 0.0;
        for j in 0..k {
            acc += self.value(j, i) * grid.dt(j);
        }
        acc
    }

    /// Copies the view into a fresh path.
    pub fn to_path(&self) -> Path {
        let n = self.grid().len();
        let d = self.dim();
        let mut values = Vec::with_capacity(n * d);
        for j in 0..n {
            for i in 0..d {
                values.push(self.value(j, i));
            }
        }
        Path::from_parts(self.path.grid.clone(), d, values)
    }
}
