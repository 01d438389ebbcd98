use std::path::{Path as FsPath, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::{catalog_functional, BumpConfig, Functional, ItoCheckOptions};

/// The only configuration schema version this build understands.
pub const CONFIG_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Derivatives of one functional along one path.
    Derive,
    /// Reconstruction residuals, optionally over a grid ladder.
    Represent,
    /// Stopping ladder, stabilization and theta-independence.
    Localize,
    /// Both sides of the vertical-derivative pairing identity.
    Pairing,
    /// Functional Ito formula residuals.
    ItoCheck,
    /// Unstopped versus stopped means of a local martingale.
    StrictLocal,
    /// Hedge ratios and replication error of a price martingale.
    Hedge,
}

impl ExperimentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::Derive => "derive",
            ExperimentKind::Represent => "represent",
            ExperimentKind::Localize => "localize",
            ExperimentKind::Pairing => "pairing",
            ExperimentKind::ItoCheck => "ito-check",
            ExperimentKind::StrictLocal => "strict-local",
            ExperimentKind::Hedge => "hedge",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FunctionalSpec {
    pub id: String,
    #[serde(default)]
    pub params: Vec<f64>,
}

impl FunctionalSpec {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            params: Vec::new(),
        }
    }

    pub fn build(&self) -> Result<Arc<dyn Functional>> {
        catalog_functional(&self.id, &self.params).map_err(|e| Error::Config(e.to_string()))
    }
}

/// One grid or a ladder of grids, all uniform on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Steps {
    One(usize),
    Ladder(Vec<usize>),
}

impl Steps {
    pub fn as_slice(&self) -> &[usize] {
        match self {
            Steps::One(n) => std::slice::from_ref(n),
            Steps::Ladder(v) => v,
        }
    }

    /// The finest grid, used for single-grid statistics.
    pub fn finest(&self) -> usize {
        self.as_slice().iter().copied().max().unwrap_or(0)
    }
}

/// How `theta_n` is chosen in a stopping ladder.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub enum ThetaSpec {
    /// `theta_n = infinity`.
    #[default]
    Infinite,
    /// First grid index with `|W| >= n`.
    WienerExit,
    /// A fixed grid index at every level.
    Fixed(usize),
}

/// An experiment description. Every field except `schema_version` and
/// `experiment` has a default; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub experiment: ExperimentKind,
    /// Defaults to `inverse-bessel` for `strict-local`; required otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functional: Option<FunctionalSpec>,
    /// Second functional of a `pairing` run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_with: Option<FunctionalSpec>,
    /// Must match the functional's dimension when given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<Steps>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenarios: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub bump: BumpConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<Vec<f64>>,
    #[serde(default)]
    pub theta: ThetaSpec,
    /// Rule compared against `theta` in `localize` runs.
    #[serde(default = "default_compare_theta")]
    pub compare_theta: ThetaSpec,
    #[serde(default)]
    pub ito: ItoCheckOptions,
    /// Path CSV for `derive` runs; without it scenario 0 of the seeded
    /// ensemble is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path_csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

fn default_horizon() -> f64 {
    1.0
}

fn default_compare_theta() -> ThetaSpec {
    ThetaSpec::WienerExit
}

impl ExperimentConfig {
    /// A config of the given kind with every optional field defaulted.
    pub fn new(experiment: ExperimentKind, functional: Option<FunctionalSpec>) -> Self {
        Self {
            schema_version: CONFIG_SCHEMA_VERSION,
            experiment,
            functional,
            pair_with: None,
            dim: None,
            horizon: default_horizon(),
            steps: None,
            scenarios: None,
            seed: 0,
            bump: BumpConfig::default(),
            levels: None,
            theta: ThetaSpec::Infinite,
            compare_theta: default_compare_theta(),
            ito: ItoCheckOptions::default(),
            path_csv: None,
            output_dir: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid config: {e}")))
    }

    /// Reads and parses a config file. Read failures are I/O errors, parse
    /// failures are config errors.
    pub fn load(path: &FsPath) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Fills every defaulted field with its concrete value and validates the
    /// result. Running the resolved config gives the same output as running
    /// the original.
    pub fn resolved(&self) -> Result<Self> {
        let mut c = self.clone();
        if c.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {CONFIG_SCHEMA_VERSION})",
                c.schema_version
            )));
        }
        let strict = c.experiment == ExperimentKind::StrictLocal;
        if c.functional.is_none() && strict {
            c.functional = Some(FunctionalSpec::new("inverse-bessel"));
        }
        let f = c
            .functional
            .as_ref()
            .ok_or_else(|| Error::Config(format!("`{}` needs a functional", c.experiment.as_str())))?
            .build()?;
        if f.id() == "inverse-bessel" {
            c.functional.as_mut().expect("set above").params = f.params().to_vec();
        }
        match c.dim {
            Some(d) if d != f.dim() => {
                return Err(Error::Config(format!(
                    "dim {d} does not match `{}` (dimension {})",
                    f.id(),
                    f.dim()
                )))
            }
            _ => c.dim = Some(f.dim()),
        }
        c.steps.get_or_insert(Steps::One(if strict { 4096 } else { 1024 }));
        c.scenarios.get_or_insert(if strict { 100_000 } else { 10_000 });
        c.levels.get_or_insert_with(|| {
            if strict {
                vec![2.0, 4.0, 8.0]
            } else {
                vec![2.0, 4.0, 8.0, 16.0]
            }
        });
        c.validate(f.as_ref())?;
        Ok(c)
    }

    fn validate(&self, f: &dyn Functional) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(self.horizon.is_finite() && self.horizon > 0.0) {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        let steps = self.steps.as_ref().expect("resolved").as_slice();
        if steps.is_empty() || steps.iter().any(|&n| n < 2) {
            return bad("every grid needs at least 2 steps".into());
        }
        if self.scenarios.expect("resolved") < 1 {
            return bad("scenarios must be at least 1".into());
        }
        let levels = self.levels.as_deref().expect("resolved");
        if levels.is_empty()
            || levels.iter().any(|l| !(l.is_finite() && *l > 0.0))
            || levels.windows(2).any(|w| w[0] >= w[1])
        {
            return bad("levels must be positive and strictly increasing".into());
        }
        if let ThetaSpec::Fixed(k) = self.theta {
            if k > steps.iter().copied().min().unwrap_or(0) {
                return bad(format!("fixed theta index {k} is beyond the grid"));
            }
        }
        self.bump.validate().map_err(|e| Error::Config(e.to_string()))?;
        let claims = f.claims();
        let need = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(format!(
                    "`{}` experiments need {what}; `{}` does not claim it",
                    self.experiment.as_str(),
                    f.id()
                )))
            }
        };
        let local = claims.is_martingale || claims.is_strict_local_martingale;
        match self.experiment {
            ExperimentKind::Derive => {
                if self.path_csv.is_none() && steps.len() != 1 {
                    return bad("`derive` takes a single grid".into());
                }
            }
            ExperimentKind::Represent | ExperimentKind::Localize | ExperimentKind::StrictLocal => {
                need(local, "a (local) martingale")?
            }
            ExperimentKind::Hedge => need(claims.is_martingale, "a martingale")?,
            ExperimentKind::ItoCheck => need(claims.is_c12b, "a C^{1,2}_b functional")?,
            ExperimentKind::Pairing => {
                need(claims.is_martingale, "a martingale")?;
                let z = self
                    .pair_with
                    .as_ref()
                    .ok_or_else(|| Error::Config("`pairing` needs `pair_with`".into()))?
                    .build()?;
                if !z.claims().is_martingale {
                    return bad(format!("`{}` does not claim to be a martingale", z.id()));
                }
                if z.dim() != f.dim() {
                    return bad("paired functionals must share a dimension".into());
                }
            }
        }
        if self.experiment != ExperimentKind::Pairing && self.pair_with.is_some() {
            return bad("`pair_with` is only used by `pairing`".into());
        }
        if self.experiment != ExperimentKind::Derive && self.path_csv.is_some() {
            return bad("`path_csv` is only used by `derive`".into());
        }
        Ok(())
    }

    /// The effective config as pretty JSON, as echoed into run directories.
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn functional(&self) -> Result<Arc<dyn Functional>> {
        self.functional
            .as_ref()
            .ok_or_else(|| Error::Config("no functional configured".into()))?
            .build()
    }
}
