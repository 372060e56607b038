//! Simulation configuration: JSON-backed, strictly validated at load.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::model::{DisturbanceMode, PlantModel};
use crate::network::{self, DropoutSpec};
use crate::numerics::{Mat, SymMatrix};

use super::HarnessError;

/// Plant selection: the embedded experiment plant or explicit matrices.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum PlantSpec {
    Named(String),
    Explicit { a: Vec<Vec<f64>>, b: Vec<f64> },
}

/// State weight Q: identity, a diagonal, or a full matrix.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum WeightSpec {
    Named(String),
    Diag { diag: Vec<f64> },
    Full { full: Vec<Vec<f64>> },
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ControllerChoice {
    L0Omp,
    L1L2Fista,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ControllerKind {
    L0Omp,
    L1L2Fista,
}

impl ControllerKind {
    pub fn label(&self) -> &'static str {
        match self {
            ControllerKind::L0Omp => "l0_omp",
            ControllerKind::L1L2Fista => "l1l2_fista",
        }
    }
}

impl ControllerChoice {
    pub fn kinds(&self) -> Vec<ControllerKind> {
        match self {
            ControllerChoice::L0Omp => vec![ControllerKind::L0Omp],
            ControllerChoice::L1L2Fista => vec![ControllerKind::L1L2Fista],
            ControllerChoice::Both => {
                vec![ControllerKind::L0Omp, ControllerKind::L1L2Fista]
            }
        }
    }
}

/// Dropout selection; the trace variant may reference a 0/1 file.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum DropoutConfig {
    UniformBurst,
    BernoulliCapped {
        p: f64,
    },
    Trace {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        values: Option<Vec<bool>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<PathBuf>,
    },
}

impl DropoutConfig {
    pub fn resolve(&self) -> Result<DropoutSpec, HarnessError> {
        match self {
            DropoutConfig::UniformBurst => Ok(DropoutSpec::UniformBurst),
            DropoutConfig::BernoulliCapped { p } => Ok(DropoutSpec::BernoulliCapped { p: *p }),
            DropoutConfig::Trace { values: Some(v), path: None } => {
                Ok(DropoutSpec::Trace { values: v.clone() })
            }
            DropoutConfig::Trace { values: None, path: Some(p) } => {
                let values = network::read_trace_file(p)?;
                Ok(DropoutSpec::Trace { values })
            }
            DropoutConfig::Trace { .. } => Err(HarnessError::Config(
                "trace dropout needs exactly one of 'values' or 'path'".into(),
            )),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum InitialStateSpec {
    Named(String),
    Explicit { explicit: Vec<f64> },
}

impl Default for InitialStateSpec {
    fn default() -> Self {
        InitialStateSpec::Named("standard_normal".into())
    }
}

impl InitialStateSpec {
    pub fn explicit(&self) -> Option<&[f64]> {
        match self {
            InitialStateSpec::Explicit { explicit } => Some(explicit),
            InitialStateSpec::Named(_) => None,
        }
    }
}

fn default_nu() -> f64 {
    200.0
}

fn default_r() -> f64 {
    2.0
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_true() -> bool {
    true
}

/// Full Monte-Carlo experiment description. Unknown JSON keys are rejected.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub plant: PlantSpec,
    /// Prediction horizon N (packet length and dropout cap).
    pub prediction_horizon: usize,
    pub q: WeightSpec,
    pub controller: ControllerChoice,
    #[serde(default = "default_nu")]
    pub nu: f64,
    #[serde(default = "default_r")]
    pub r: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub xi_scale: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
    pub disturbance_mode: DisturbanceMode,
    /// Disturbance amplitudes to sweep; one output series per value.
    pub w_m: Vec<f64>,
    pub dropout: DropoutConfig,
    pub runs: usize,
    /// Closed-loop simulation length in steps.
    pub horizon: usize,
    pub master_seed: u64,
    #[serde(default)]
    pub initial_state: InitialStateSpec,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    /// Exclude aborted runs from the averages instead of failing hard.
    #[serde(default)]
    pub skip_failed_runs: bool,
    #[serde(default = "default_true")]
    pub emit_plots: bool,
}

impl SimConfig {
    /// The experiment of the reference simulation: embedded 4-state plant,
    /// N = 10, Q = I, ν = 200, r = 2, per-component disturbances with
    /// W_m ∈ {1, 5, 10}, uniform bursts, 200 runs of 300 steps.
    pub fn reference_experiment() -> Self {
        SimConfig {
            plant: PlantSpec::Named("paper_example".into()),
            prediction_horizon: 10,
            q: WeightSpec::Named("identity".into()),
            controller: ControllerChoice::Both,
            nu: 200.0,
            r: 2.0,
            xi_scale: None,
            zeta: None,
            disturbance_mode: DisturbanceMode::PerComponentUniform,
            w_m: vec![1.0, 5.0, 10.0],
            dropout: DropoutConfig::UniformBurst,
            runs: 200,
            horizon: 300,
            master_seed: 12345,
            initial_state: InitialStateSpec::default(),
            out_dir: default_out_dir(),
            skip_failed_runs: false,
            emit_plots: true,
        }
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self, HarnessError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let config: SimConfig =
            serde_json::from_str(&text).map_err(|source| HarnessError::ConfigParse {
                path: path.to_path_buf(),
                source,
            })?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.runs < 1 {
            return Err(HarnessError::Config("runs must be at least 1".into()));
        }
        if self.horizon < 1 {
            return Err(HarnessError::Config("horizon must be at least 1".into()));
        }
        if self.prediction_horizon < 1 {
            return Err(HarnessError::Config(
                "prediction_horizon must be at least 1".into(),
            ));
        }
        if self.w_m.is_empty() {
            return Err(HarnessError::Config("w_m list must not be empty".into()));
        }
        if self.w_m.iter().any(|w| !(*w >= 0.0)) {
            return Err(HarnessError::Config(
                "every w_m must be a nonnegative number".into(),
            ));
        }
        if self.disturbance_mode == DisturbanceMode::None && self.w_m.iter().any(|w| *w != 0.0) {
            return Err(HarnessError::Config(
                "disturbance mode 'none' requires every w_m to be 0".into(),
            ));
        }
        if let PlantSpec::Named(name) = &self.plant {
            if name != "paper_example" {
                return Err(HarnessError::Config(format!(
                    "unknown plant name {name:?}; use \"paper_example\" or explicit matrices"
                )));
            }
        }
        if let WeightSpec::Named(name) = &self.q {
            if name != "identity" {
                return Err(HarnessError::Config(format!(
                    "unknown weight name {name:?}; use \"identity\", a diagonal, or a full matrix"
                )));
            }
        }
        if let InitialStateSpec::Named(name) = &self.initial_state {
            if name != "standard_normal" {
                return Err(HarnessError::Config(format!(
                    "unknown initial state {name:?}; use \"standard_normal\" or an explicit vector"
                )));
            }
        }
        // Build everything once so bad parameters fail at load, not mid-run.
        let plant = self.build_plant(self.w_m[0])?;
        let q = self.build_q(plant.dim())?;
        if q.lambda_min().map_err(crate::model::ModelError::from)? <= 0.0 {
            return Err(HarnessError::Config("Q must be positive definite".into()));
        }
        if let Some(x0) = self.initial_state.explicit() {
            if x0.len() != plant.dim() {
                return Err(HarnessError::Config(format!(
                    "explicit initial state has length {}, plant dimension is {}",
                    x0.len(),
                    plant.dim()
                )));
            }
        }
        let uses_l1l2 = self
            .controller
            .kinds()
            .contains(&ControllerKind::L1L2Fista);
        if uses_l1l2 {
            if !(self.nu > 0.0) {
                return Err(HarnessError::Config(format!(
                    "nu must be positive, got {}",
                    self.nu
                )));
            }
            if !(self.r >= 0.0) {
                return Err(HarnessError::Config(format!(
                    "r must be nonnegative, got {}",
                    self.r
                )));
            }
            if self.r == 0.0 && self.zeta.is_none() {
                return Err(HarnessError::Config(
                    "r = 0 requires an explicit zeta".into(),
                ));
            }
        }
        self.dropout.resolve()?;
        Ok(())
    }

    pub fn build_plant(&self, w_m: f64) -> Result<PlantModel, HarnessError> {
        let plant = match &self.plant {
            PlantSpec::Named(_) => PlantModel::paper_example(w_m, self.disturbance_mode)?,
            PlantSpec::Explicit { a, b } => {
                let n = b.len();
                if a.len() != n || a.iter().any(|row| row.len() != n) {
                    return Err(HarnessError::Config(format!(
                        "plant matrices must be {n}x{n} and {n}x1"
                    )));
                }
                PlantModel::new(
                    Mat::from_rows(a),
                    Mat::column(b),
                    w_m,
                    self.disturbance_mode,
                )?
            }
        };
        Ok(plant)
    }

    pub fn build_q(&self, n: usize) -> Result<SymMatrix, HarnessError> {
        match &self.q {
            WeightSpec::Named(_) => Ok(SymMatrix::identity(n)),
            WeightSpec::Diag { diag } => {
                if diag.len() != n {
                    return Err(HarnessError::Config(format!(
                        "Q diagonal has length {}, expected {n}",
                        diag.len()
                    )));
                }
                Ok(SymMatrix::from_diag(diag))
            }
            WeightSpec::Full { full } => {
                if full.len() != n || full.iter().any(|row| row.len() != n) {
                    return Err(HarnessError::Config(format!("Q must be {n}x{n}")));
                }
                SymMatrix::new(Mat::from_rows(full))
                    .map_err(|e| HarnessError::Config(format!("Q is not symmetric: {e}")))
            }
        }
    }
}
