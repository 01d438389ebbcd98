//! Wiener path ensembles.
//!
//! Generator contract (version-pinned through `Cargo.lock`):
//!
//! * scenario `s` draws from `ChaCha8Rng::seed_from_u64(seed)` with
//!   `set_stream(s)`, so any scenario can be regenerated on its own and
//!   ensembles are identical for every degree of parallelism;
//! * standard normals come from `rand_distr::StandardNormal` (ziggurat),
//!   consumed step-major then coordinate-minor;
//! * each increment `sqrt(dt_k) z` is rounded to the dyadic lattice
//!   `2^-36`, so path values and their differences are exact in `f64`
//!   (for `|w| < 2^16`) and telescoping sums over increments are bitwise.

use std::borrow::Cow;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};

use super::grid::TimeGrid;
use super::path::Path;

const LATTICE_SCALE: f64 = (1u64 << 36) as f64;

/// Rounds `x` to the nearest multiple of `2^-36`.
#[inline]
pub fn snap_to_lattice(x: f64) -> f64 {
    (x * LATTICE_SCALE).round() / LATTICE_SCALE
}

/// Anything that can hand out scenario paths by index on a shared grid.
pub trait ScenarioSource: Sync {
    fn grid(&self) -> &Arc<TimeGrid>;
    fn dim(&self) -> usize;
    fn scenarios(&self) -> usize;
    fn path(&self, scenario: usize) -> Cow<'_, Path>;
}

/// Lazily generates Wiener scenarios without storing them.
#[derive(Debug, Clone)]
pub struct WienerGenerator {
    grid: Arc<TimeGrid>,
    dim: usize,
    scenarios: usize,
    seed: u64,
}

impl WienerGenerator {
    pub fn new(grid: Arc<TimeGrid>, dim: usize, scenarios: usize, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        if scenarios == 0 {
            return Err(Error::InvalidParameter("scenario count must be at least 1".into()));
        }
        Ok(Self {
            grid,
            dim,
            scenarios,
            seed,
        })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Regenerates scenario `s` from scratch.
    pub fn generate(&self, s: usize) -> Path {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(s as u64);
        let d = self.dim;
        let steps = self.grid.steps();
        let mut values = vec![0.0; (steps + 1) * d];
        for k in 0..steps {
            let scale = self.grid.dt(k).sqrt();
            for i in 0..d {
                let z: f64 = rng.sample(StandardNormal);
                values[(k + 1) * d + i] = values[k * d + i] + snap_to_lattice(scale * z);
            }
        }
        Path::from_parts(self.grid.clone(), d, values)
    }

    /// Materializes every scenario.
    pub fn materialize(&self) -> WienerBatch {
        let paths = (0..self.scenarios)
            .into_par_iter()
            .map(|s| self.generate(s))
            .collect();
        WienerBatch {
            generator: self.clone(),
            paths,
        }
    }
}

impl ScenarioSource for WienerGenerator {
    fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn scenarios(&self) -> usize {
        self.scenarios
    }

    fn path(&self, scenario: usize) -> Cow<'_, Path> {
        Cow::Owned(self.generate(scenario))
    }
}

/// `P` independent Wiener paths on one grid, all starting at zero.
#[derive(Debug, Clone)]
pub struct WienerBatch {
    generator: WienerGenerator,
    paths: Vec<Path>,
}

impl WienerBatch {
    pub fn seed(&self) -> u64 {
        self.generator.seed
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn generator(&self) -> &WienerGenerator {
        &self.generator
    }
}

impl ScenarioSource for WienerBatch {
    fn grid(&self) -> &Arc<TimeGrid> {
        &self.generator.grid
    }

    fn dim(&self) -> usize {
        self.generator.dim
    }

    fn scenarios(&self) -> usize {
        self.paths.len()
    }

    fn path(&self, scenario: usize) -> Cow<'_, Path> {
        Cow::Borrowed(&self.paths[scenario])
    }
}

/// Generates and stores `scenarios` Wiener paths of dimension `dim`.
pub fn generate_wiener(
    grid: Arc<TimeGrid>,
    dim: usize,
    scenarios: usize,
    seed: u64,
) -> Result<WienerBatch> {
    Ok(WienerGenerator::new(grid, dim, scenarios, seed)?.materialize())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paths_start_at_zero_and_live_on_the_lattice() {
        let grid = Arc::new(TimeGrid::uniform(1.0, 64).unwrap());
        let batch = generate_wiener(grid, 2, 16, 7).unwrap();
        for p in batch.paths() {
            assert_eq!(p.row(0), &[0.0, 0.0]);
            assert!(p.values().iter().all(|&v| snap_to_lattice(v) == v));
        }
    }

    #[test]
    fn scenario_regeneration_matches_batch() {
        let grid = Arc::new(TimeGrid::uniform(2.0, 33).unwrap());
        let gen = WienerGenerator::new(grid, 3, 10, 99).unwrap();
        let batch = gen.materialize();
        assert_eq!(gen.generate(6), batch.paths()[6]);
        let again = gen.materialize();
        for (a, b) in batch.paths().iter().zip(again.paths()) {
            assert_eq!(a.values(), b.values());
        }
    }

    #[test]
    fn seeds_and_streams_differ() {
        let grid = Arc::new(TimeGrid::uniform(1.0, 8).unwrap());
        let a = WienerGenerator::new(grid.clone(), 1, 2, 1).unwrap();
        let b = WienerGenerator::new(grid, 1, 2, 2).unwrap();
        assert_ne!(a.generate(0).values(), a.generate(1).values());
        assert_ne!(a.generate(0).values(), b.generate(0).values());
    }

    #[test]
    fn invalid_parameters() {
        let grid = Arc::new(TimeGrid::uniform(1.0, 8).unwrap());
        assert!(generate_wiener(grid.clone(), 0, 5, 1).is_err());
        assert!(generate_wiener(grid, 1, 0, 1).is_err());
    }
}
