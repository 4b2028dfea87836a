//! Experiment configuration, read from and written to JSON.

use std::path::{Path, PathBuf};

use ddtrack_core::io::matrix_from_rows;
use ddtrack_core::synthesis::{Backend, ClarabelBackend, MultiplierSearch, SynthesisOptions};
use ddtrack_core::{reference_plant, Error, LtiSystemF64, Result, SystemDocument, TrackingProblemF64};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Plant matrices given inline or as a path to a JSON file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SystemSource {
    Inline(SystemDocument),
    Path(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroReference {
    Zero,
}

/// `"zero"` or the stacked reference `r` of length `p·T_e`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Reference {
    Zero(ZeroReference),
    Values(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seeds {
    /// Historical experiment (initial state and inputs).
    pub data: u64,
    /// Inputs of the recent window.
    pub recent: u64,
    /// Noise injected into the recent outputs.
    pub noise: u64,
    /// Monte-Carlo validation draws.
    pub validation: u64,
}

impl Seeds {
    pub fn set(&mut self, name: &str, value: u64) -> Result<()> {
        match name {
            "data" => self.data = value,
            "recent" => self.recent = value,
            "noise" => self.noise = value,
            "validation" => self.validation = value,
            other => {
                return Err(Error::Parse(format!(
                    "unknown seed `{other}` (expected data, recent, noise or validation)"
                )))
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "snake_case")]
pub enum SolverConfig {
    Clarabel {
        #[serde(default = "default_tolerance")]
        tolerance: f64,
    },
    MultiplierSearch,
}

fn default_tolerance() -> f64 {
    1e-8
}

fn one() -> f64 {
    1.0
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig::Clarabel { tolerance: default_tolerance() }
    }
}

impl SolverConfig {
    pub fn options(&self) -> SynthesisOptions {
        match *self {
            SolverConfig::Clarabel { tolerance } => {
                SynthesisOptions::with_backend(Backend::Clarabel(ClarabelBackend::with_tolerance(tolerance)))
            }
            SolverConfig::MultiplierSearch => {
                SynthesisOptions::with_backend(Backend::MultiplierSearch(MultiplierSearch::default()))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemSource,
    pub t_d: usize,
    pub t_ini: usize,
    pub t_e: usize,
    /// Per-sample noise energy; the recent-window bound is `wᵀw ≤ T_ini·p·ε`.
    pub epsilon: f64,
    /// Bound the injected noise is drawn from, when it differs from `epsilon`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub injected_epsilon: Option<f64>,
    pub q_weight: Vec<Vec<f64>>,
    pub r_weight: Vec<Vec<f64>>,
    pub reference: Reference,
    pub n_samples: usize,
    pub seeds: Seeds,
    #[serde(default = "one")]
    pub input_amplitude: f64,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Receding-horizon runs: per-step noise radius relative to `√(p·ε)`.
    #[serde(default = "one")]
    pub rhc_noise_fraction: f64,
}

impl ExperimentConfig {
    /// The reference experiment: third-order plant, `T_d = 100`, `T_ini = 4`,
    /// `T_e = 20`, `ε = 0.001`, `Q = R = 1`, zero reference, 100 draws.
    pub fn reference() -> Self {
        Self {
            system: SystemSource::Inline(reference_plant::<f64>().to_document()),
            t_d: 100,
            t_ini: 4,
            t_e: 20,
            epsilon: 0.001,
            injected_epsilon: None,
            q_weight: vec![vec![1.0]],
            r_weight: vec![vec![1.0]],
            reference: Reference::Zero(ZeroReference::Zero),
            n_samples: 100,
            seeds: Seeds { data: 1, recent: 2, noise: 3, validation: 4 },
            input_amplitude: 1.0,
            solver: SolverConfig::default(),
            rhc_noise_fraction: 1.0,
        }
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut cfg: Self = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        // relative system paths are resolved against the config's directory
        if let SystemSource::Path(p) = &cfg.system {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    cfg.system = SystemSource::Path(dir.join(p));
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn plant(&self) -> Result<LtiSystemF64> {
        match &self.system {
            SystemSource::Inline(doc) => doc.clone().into_system(),
            SystemSource::Path(p) => LtiSystemF64::from_json_file(p),
        }
    }

    pub fn injected_bound(&self) -> f64 {
        self.injected_epsilon.unwrap_or(self.epsilon)
    }

    /// Checks horizons, weights and bounds against the plant dimensions.
    pub fn validate(&self, plant: &LtiSystemF64) -> Result<()> {
        let (m, p) = (plant.input_dim(), plant.output_dim());
        if self.t_ini == 0 || self.t_e == 0 {
            return Err(Error::Dimension("T_ini and T_e must be at least 1".into()));
        }
        if self.t_ini + self.t_e > self.t_d {
            return Err(Error::Dimension(format!(
                "T_ini + T_e = {} exceeds T_d = {}",
                self.t_ini + self.t_e,
                self.t_d
            )));
        }
        for (name, eps) in [("epsilon", self.epsilon), ("injected_epsilon", self.injected_bound())] {
            if !(eps >= 0.0 && eps.is_finite()) {
                return Err(Error::NoiseModel(format!("{name} must be finite and non-negative, got {eps}")));
            }
        }
        if !(self.input_amplitude >= 0.0 && self.input_amplitude.is_finite()) {
            return Err(Error::Parse(format!("input_amplitude must be non-negative, got {}", self.input_amplitude)));
        }
        let (q, r) = self.weights()?;
        if q.shape() != (p, p) || r.shape() != (m, m) {
            return Err(Error::Cost(format!(
                "Q must be {p}×{p} and R {m}×{m}, got {:?} and {:?}",
                q.shape(),
                r.shape()
            )));
        }
        if let Reference::Values(v) = &self.reference {
            if v.len() != p * self.t_e {
                return Err(Error::Dimension(format!(
                    "reference has {} entries, expected p·T_e = {}",
                    v.len(),
                    p * self.t_e
                )));
            }
        }
        Ok(())
    }

    fn weights(&self) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
        Ok((matrix_from_rows(&self.q_weight)?, matrix_from_rows(&self.r_weight)?))
    }

    pub fn problem(&self, p: usize) -> Result<TrackingProblemF64> {
        let (q, r) = self.weights()?;
        let reference = match &self.reference {
            Reference::Zero(_) => DVector::zeros(p * self.t_e),
            Reference::Values(v) => DVector::from_column_slice(v),
        };
        TrackingProblemF64::new(reference, q, r, self.t_e)
    }
}
