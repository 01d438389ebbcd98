use serde::Serialize;

use crate::error::{Error, Result};
use crate::functional::{check_dim, Functional};
use crate::par::fold_chunks;
use crate::pathspace::ScenarioSource;
use crate::stats::{normal_cdf, Estimate, Moments};

use super::ladder::hitting_index;

/// `E[1 / |x0 + W(t)|]` for a 3-d Wiener process and `|x0| = r0`:
/// `(2 Phi(r0 / sqrt(t)) - 1) / r0`.
pub fn inverse_bessel_mean(r0: f64, t: f64) -> f64 {
    (2.0 * normal_cdf(r0 / t.sqrt()) - 1.0) / r0
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StoppedLevel {
    pub level: f64,
    /// `E[M(T ^ tau_n)]`.
    pub mean: Estimate,
    /// Mean stopping index.
    pub tau_mean: f64,
    /// Scenarios whose stopped value is the singular point itself.
    pub excluded: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrictLocalStats {
    pub functional: String,
    pub initial: f64,
    /// `E[M(T)]` over non-singular scenarios.
    pub terminal: Estimate,
    /// Closed-form `E[M(T)]` when known (inverse-Bessel).
    pub closed_form_terminal: Option<f64>,
    pub levels: Vec<StoppedLevel>,
    pub scenarios: usize,
    pub singular_scenarios: usize,
}

struct Acc {
    terminal: Moments,
    stopped: Vec<Moments>,
    tau_sum: Vec<f64>,
    excluded: Vec<usize>,
    singular: usize,
}

impl Acc {
    fn new(levels: usize) -> Self {
        Self {
            terminal: Moments::default(),
            stopped: vec![Moments::default(); levels],
            tau_sum: vec![0.0; levels],
            excluded: vec![0; levels],
            singular: 0,
        }
    }
}

/// Compares `E[M(T)]` with `E[M(T ^ tau_n)]` for `M(t) = F(t, W)`, where
/// `tau_n` is the first grid index with `|M| >= n`.
///
/// Singular scenarios are excluded from the unstopped mean and kept in the
/// stopped means whenever `tau_n` comes strictly before the singular index.
pub fn strict_locality_diagnostic<S: ScenarioSource + ?Sized>(
    f: &dyn Functional,
    source: &S,
    levels: &[f64],
) -> Result<StrictLocalStats> {
    check_dim(f, source.dim())?;
    let claims = f.claims();
    if !(claims.is_strict_local_martingale || claims.is_martingale) {
        return Err(Error::InvalidParameter(format!(
            "`{}` does not claim to be a local martingale",
            f.id()
        )));
    }
    if levels.iter().any(|l| !(*l > 0.0)) {
        return Err(Error::InvalidParameter("levels must be positive".into()));
    }
    let grid = source.grid().clone();
    let n = grid.len();
    let steps = grid.steps();
    let acc = fold_chunks(
        source.scenarios(),
        Acc::new(levels.len()),
        |range| {
            let mut acc = Acc::new(levels.len());
            let mut m = vec![f64::NAN; n];
            for s in range {
                let path = source.path(s);
                let view = path.view();
                m.fill(f64::NAN);
                let mut singular = false;
                for (k, slot) in m.iter_mut().enumerate() {
                    match f.evaluate(k, &view) {
                        Ok(v) if v.is_finite() => *slot = v,
                        Ok(_) | Err(Error::Singular { .. }) if k > 0 => {
                            singular = true;
                            break;
                        }
                        Ok(v) => {
                            return Err(Error::NonFinite {
                                context: "initial value".into(),
                                value: v,
                            }
                            .in_scenario(s))
                        }
                        Err(e) => return Err(e.in_scenario(s)),
                    }
                }
                if singular {
                    acc.singular += 1;
                } else {
                    acc.terminal.push(m[steps]);
                }
                for (l, &level) in levels.iter().enumerate() {
                    let tau = hitting_index(&m, level);
                    acc.tau_sum[l] += tau as f64;
                    let v = m[tau];
                    if v.is_finite() {
                        acc.stopped[l].push(v);
                    } else {
                        acc.excluded[l] += 1;
                    }
                }
            }
            Ok(acc)
        },
        |a, b| {
            a.terminal.merge(&b.terminal);
            for l in 0..a.stopped.len() {
                a.stopped[l].merge(&b.stopped[l]);
                a.tau_sum[l] += b.tau_sum[l];
                a.excluded[l] += b.excluded[l];
            }
            a.singular += b.singular;
        },
    )?;
    let origin = source.path(0);
    let initial = f.evaluate(0, &origin.view())?;
    let closed_form_terminal = (f.id() == "inverse-bessel").then(|| {
        let r0 = f.params().iter().map(|x| x * x).sum::<f64>().sqrt();
        inverse_bessel_mean(r0, grid.horizon())
    });
    let p = source.scenarios();
    Ok(StrictLocalStats {
        functional: f.id().to_string(),
        initial,
        terminal: acc.terminal.estimate(),
        closed_form_terminal,
        levels: levels
            .iter()
            .enumerate()
            .map(|(l, &level)| StoppedLevel {
                level,
                mean: acc.stopped[l].estimate(),
                tau_mean: acc.tau_sum[l] / p as f64,
                excluded: acc.excluded[l],
            })
            .collect(),
        scenarios: p,
        singular_scenarios: acc.singular,
    })
}
