use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::pathspace::Path;

use super::{check_dim, Functional};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnticipationWitness {
    pub trial: usize,
    pub k: usize,
    /// `None` when the evaluation failed.
    pub original: Option<f64>,
    pub perturbed: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnticipationCheck {
    pub trials: usize,
    pub witness: Option<AnticipationWitness>,
}

impl AnticipationCheck {
    pub fn passed(&self) -> bool {
        self.witness.is_none()
    }
}

/// Randomized test of `F(t_k, w) = F(t_k, w')` whenever `w` and `w'` agree
/// up to `t_k`. Each trial picks `k < N` and adds Gaussian noise to every row
/// after `k`; values are compared bitwise. Stops at the first counterexample.
pub fn check_non_anticipativity(
    f: &dyn Functional,
    p: &Path,
    trials: usize,
    seed: u64,
) -> Result<AnticipationCheck> {
    check_dim(f, p.dim())?;
    if trials == 0 {
        return Err(Error::InvalidParameter("need at least one trial".into()));
    }
    let steps = p.grid().steps();
    let d = p.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for trial in 0..trials {
        let k = rng.random_range(0..steps);
        let mut values = p.values().to_vec();
        for v in &mut values[(k + 1) * d..] {
            let z: f64 = rng.sample(StandardNormal);
            *v += z;
        }
        let perturbed = Path::new(p.shared_grid().clone(), d, values)?;
        let a = f.evaluate(k, &p.view()).ok();
        let b = f.evaluate(k, &perturbed.view()).ok();
        if a.map(f64::to_bits) != b.map(f64::to_bits) {
            return Ok(AnticipationCheck {
                trials: trial + 1,
                witness: Some(AnticipationWitness {
                    trial,
                    k,
                    original: a,
                    perturbed: b,
                }),
            });
        }
    }
    Ok(AnticipationCheck {
        trials,
        witness: None,
    })
}
