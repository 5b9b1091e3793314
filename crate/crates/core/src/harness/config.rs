//! Experiment configuration: a single TOML file fully determines a run,
//! including every random draw.

use serde::{Deserialize, Serialize};
use std::path::Path;

use super::HarnessError;
use crate::dual::InteractionBudget;

/// A vector-valued field that may instead name a generation mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VectorSpec {
    Values(Vec<f64>),
    Mode(String),
}

/// Scalar broadcast or explicit per-item values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScalarOrVec {
    Scalar(f64),
    Values(Vec<f64>),
}

impl ScalarOrVec {
    pub fn expand(&self, n: usize) -> Result<Vec<f64>, HarnessError> {
        match self {
            ScalarOrVec::Scalar(v) => Ok(vec![*v; n]),
            ScalarOrVec::Values(vs) if vs.len() == n => Ok(vs.clone()),
            ScalarOrVec::Values(vs) => Err(HarnessError::Config(format!(
                "expected {n} entries, got {}",
                vs.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuyerSection {
    /// Explicit coefficients, or "random" for a seeded draw from the
    /// nonnegative part of the initial-radius ball.
    pub a_star: VectorSpec,
    /// Tie-break parameter; drawn uniformly from [mu1, mu2] when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    /// Lower bound applied to every randomly drawn coefficient.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_component: Option<f64>,
    /// Cap on the norm of randomly drawn coefficients (defaults to the
    /// radius certified by the initial ellipsoid).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_norm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeSection {
    pub mu1: f64,
    pub mu2: f64,
    /// Explicit value-continuity constant. Exactly one of `lambda_val` and
    /// `tau_target` must be present.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda_val: Option<f64>,
    /// Calibrate `lambda_val` so the error budget lands at (or just under)
    /// this value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_target: Option<f64>,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibleSection {
    /// "ball" is the only named preset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default = "default_ball_radius")]
    pub radius: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma2: Option<f64>,
}

fn default_ball_radius() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSection {
    /// Explicit medians, or "near-buyer" to center the box on the drawn
    /// coefficients (clamped so the box stays nonnegative and still
    /// contains the coefficients).
    pub p0: VectorSpec,
    /// Half-widths. May be omitted when `floor` is given.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<ScalarOrVec>,
    /// Derive half-widths from the medians instead: `delta_i = p0_i - floor`
    /// (every item's price can drop to the floor).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub floor: Option<f64>,
    /// Enclosing-ball radius; defaults to the half-width norm.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    /// Relative jitter applied to near-buyer medians, in units of the
    /// half-width (or of the median for floor-derived boxes).
    #[serde(default)]
    pub jitter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnerSection {
    pub epsilon: f64,
    pub r_a: f64,
    #[serde(default = "default_outer_cap")]
    pub max_outer_iterations: usize,
    #[serde(default = "default_interaction_cap")]
    pub max_interactions: u64,
    /// "statement" (default), "proof-bound", or an explicit integer count
    /// of interactions per probe.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<BudgetSpec>,
}

fn default_outer_cap() -> usize {
    100_000
}

fn default_interaction_cap() -> u64 {
    u64::MAX
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BudgetSpec {
    Count(u64),
    Name(String),
}

impl BudgetSpec {
    pub fn to_budget(&self) -> Result<InteractionBudget, HarnessError> {
        match self {
            BudgetSpec::Count(k) => Ok(InteractionBudget::Explicit(*k)),
            BudgetSpec::Name(s) => match s.as_str() {
                "statement" => Ok(InteractionBudget::Statement),
                "proof-bound" => Ok(InteractionBudget::ProofBound),
                other => Err(HarnessError::Config(format!(
                    "unknown budget \"{other}\" (expected \"statement\", \"proof-bound\" or a count)"
                ))),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSection {
    #[serde(default = "default_output_dir")]
    pub dir: String,
}

fn default_output_dir() -> String {
    "out".into()
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            dir: default_output_dir(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub n: usize,
    pub seed: u64,
    pub buyer: BuyerSection,
    pub knowledge: KnowledgeSection,
    pub feasible_set: FeasibleSection,
    pub prices: PriceSection,
    pub learner: LearnerSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String, HarnessError> {
        toml::to_string(self).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }
}
