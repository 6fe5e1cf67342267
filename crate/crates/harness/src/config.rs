//! Experiment specifications and their TOML form.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use mixfield::{ScenarioName, Scheme};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    PosRmse,
    DofAodRmse,
    GSweep,
    Tracking,
    SwitchCdf,
    Complexity,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 6] = [
        ExperimentKind::PosRmse,
        ExperimentKind::DofAodRmse,
        ExperimentKind::GSweep,
        ExperimentKind::Tracking,
        ExperimentKind::SwitchCdf,
        ExperimentKind::Complexity,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::PosRmse => "pos-rmse",
            ExperimentKind::DofAodRmse => "dof-aod-rmse",
            ExperimentKind::GSweep => "g-sweep",
            ExperimentKind::Tracking => "tracking",
            ExperimentKind::SwitchCdf => "switch-cdf",
            ExperimentKind::Complexity => "complexity",
        }
    }

    /// Trial count used when neither the command line nor the file sets one.
    pub fn default_trials(self) -> usize {
        match self {
            ExperimentKind::PosRmse | ExperimentKind::DofAodRmse => 50,
            ExperimentKind::Tracking | ExperimentKind::SwitchCdf => 100,
            ExperimentKind::GSweep | ExperimentKind::Complexity => 1,
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = HarnessError;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| HarnessError::Usage(format!("unknown experiment kind {s:?}")))
    }
}

/// Direction of the radial tracking path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    #[default]
    Inbound,
    Outbound,
}

/// Optional knobs; anything left unset takes the preset or experiment default.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    pub tx_power_dbm: Option<f64>,
    pub j1: Option<usize>,
    pub nf_grid: Option<[usize; 3]>,

    pub outer_iters: Option<usize>,
    pub range_steps: Option<usize>,
    pub angle_steps: Option<usize>,
    pub rssi_floor: Option<f64>,
    pub refine_factor: Option<f64>,

    /// UE ranges for the RMSE and compatibility sweeps, meters.
    pub distances: Option<Vec<f64>>,
    /// Height offsets below the array for the compatibility sweep, meters.
    pub height_offsets: Option<Vec<f64>>,
    /// Scenarios compared by the compatibility and switching studies.
    pub scenarios: Option<Vec<ScenarioName>>,

    pub error_threshold: Option<f64>,
    pub error_thresholds: Option<Vec<f64>>,
    pub nf_limit: Option<f64>,
    pub memory_window: Option<usize>,
    pub poly_degree: Option<usize>,
    pub step_period: Option<f64>,
    pub flush_on_switch: Option<bool>,
    pub initial_scheme: Option<Scheme>,
    pub direction: Option<Direction>,
    pub speed: Option<f64>,

    /// Square array sides for the complexity study.
    pub array_sides: Option<Vec<usize>>,
    /// Near-field to far-field beam count ratios for the complexity study.
    pub beam_ratios: Option<Vec<usize>>,
}

/// A fully resolved experiment request.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub kind: ExperimentKind,
    pub scenario: ScenarioName,
    pub trials: usize,
    pub seed: u64,
    pub overrides: Overrides,
}

impl ExperimentSpec {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            scenario: ScenarioName::A,
            trials: kind.default_trials(),
            seed: 1,
            overrides: Overrides::default(),
        }
    }

    /// Thresholds for the adaptive tracking variants.
    pub fn error_thresholds(&self) -> Vec<f64> {
        let o = &self.overrides;
        o.error_thresholds
            .clone()
            .or_else(|| o.error_threshold.map(|t| vec![t]))
            .unwrap_or_else(|| vec![4.0, 2.0])
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(HarnessError::Usage(m.to_string()));
        let o = &self.overrides;
        if self.trials == 0 {
            return bad("trials must be at least 1");
        }
        if let Some(ds) = &o.distances {
            if ds.is_empty() || ds.iter().any(|d| !(*d > 0.0)) {
                return bad("distances must be a non-empty list of positive ranges");
            }
        }
        if let Some(hs) = &o.height_offsets {
            if hs.is_empty() || hs.iter().any(|h| !(h.is_finite() && *h >= 0.0)) {
                return bad("height_offsets must be non-negative");
            }
        }
        if matches!(&o.scenarios, Some(s) if s.is_empty()) {
            return bad("scenarios must not be empty");
        }
        if self.error_thresholds().iter().any(|t| !(*t > 0.0)) {
            return bad("error thresholds must be positive");
        }
        if let Some(sides) = &o.array_sides {
            if sides.is_empty() || sides.contains(&0) {
                return bad("array_sides must be positive");
            }
        }
        if let Some(r) = &o.beam_ratios {
            if r.is_empty() || r.contains(&0) {
                return bad("beam_ratios must be positive");
            }
        }
        if matches!(o.speed, Some(v) if !(v > 0.0)) {
            return bad("speed must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    kind: Option<ExperimentKind>,
    scenario: Option<ScenarioName>,
    trials: Option<usize>,
    seed: Option<u64>,
    #[serde(default)]
    overrides: Overrides,
}

/// Parses a TOML spec. `kind` may be omitted when `expected` supplies it.
pub fn parse_config(text: &str, expected: Option<ExperimentKind>) -> Result<ExperimentSpec> {
    let file: ConfigFile =
        toml::from_str(text).map_err(|e| HarnessError::Usage(format!("config: {e}")))?;
    let kind = match (file.kind, expected) {
        (Some(a), Some(b)) if a != b => {
            return Err(HarnessError::Usage(format!("config is for {a}, not {b}")));
        }
        (Some(k), _) | (None, Some(k)) => k,
        (None, None) => {
            return Err(HarnessError::Usage(
                "config must name an experiment kind".into(),
            ))
        }
    };
    let mut spec = ExperimentSpec::new(kind);
    if let Some(s) = file.scenario {
        spec.scenario = s;
    }
    if let Some(t) = file.trials {
        spec.trials = t;
    }
    if let Some(s) = file.seed {
        spec.seed = s;
    }
    spec.overrides = file.overrides;
    spec.validate()?;
    Ok(spec)
}

pub fn load_config(path: &Path, expected: Option<ExperimentKind>) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| HarnessError::Usage(format!("cannot read {}: {e}", path.display())))?;
    parse_config(&text, expected)
}
