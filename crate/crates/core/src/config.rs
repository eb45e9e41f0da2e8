use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gauss::CovKind;
use crate::optim::AdamConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Bsg,
    Sg,
    /// Gaussian embeddings with spherical covariance.
    W2gS,
    /// Gaussian embeddings with diagonal covariance.
    W2gD,
}

impl ModelKind {
    /// Learning rates tuned per model kind for the large-corpus setting.
    pub fn default_learning_rate(self) -> f64 {
        match self {
            ModelKind::Bsg => 0.00055,
            ModelKind::W2gS => 0.0065,
            ModelKind::W2gD => 0.0015,
            ModelKind::Sg => 0.0015,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Bsg => "bsg",
            ModelKind::Sg => "sg",
            ModelKind::W2gS => "w2g_s",
            ModelKind::W2gD => "w2g_d",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bsg" => Ok(ModelKind::Bsg),
            "sg" => Ok(ModelKind::Sg),
            "w2g_s" | "w2g-s" => Ok(ModelKind::W2gS),
            "w2g_d" | "w2g-d" => Ok(ModelKind::W2gD),
            other => Err(Error::InvalidConfig(format!(
                "unknown model kind {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Hinge on the positive/negative KL gap plus the prior KL.
    Hinge,
    /// Plain KL difference plus the prior KL.
    Soft,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    /// The j-th positive is paired with the j-th negative.
    Aligned,
    /// Every positive is paired with every negative.
    AllPairs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Energy {
    /// log N(μ_a; μ_b, Σ_a + Σ_b).
    ExpectedLikelihood,
    /// −KL(context ‖ word).
    NegatedKl,
}

/// Hyperparameters shared by every trainer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub dim: usize,
    pub hidden: usize,
    pub window: usize,
    pub subsample: f64,
    pub neg_exponent: f64,
    pub negatives_per_positive: usize,
    pub margin: f64,
    /// Windows per optimizer step.
    pub batch_size: usize,
    /// `None` selects [`ModelKind::default_learning_rate`].
    pub learning_rate: Option<f64>,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub epochs: usize,
    pub seed: u64,
    pub objective: Objective,
    pub pairing: Pairing,
    pub cov: CovKind,
    /// Encoder input embeddings are the prior means.
    pub tie_encoder_input: bool,
    /// Context Gaussians are the prior Gaussians.
    pub tie_context: bool,
    pub lowercase: bool,
    pub deterministic: bool,
    pub energy: Energy,
    pub max_mean_norm: f64,
    pub min_var: f64,
    pub max_var: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 100,
            hidden: 100,
            window: 5,
            subsample: 1e-4,
            neg_exponent: 1.0,
            negatives_per_positive: 1,
            margin: 1.0,
            batch_size: 22_000,
            learning_rate: None,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            epochs: 1,
            seed: 0,
            objective: Objective::Hinge,
            pairing: Pairing::Aligned,
            cov: CovKind::Spherical,
            tie_encoder_input: false,
            tie_context: false,
            lowercase: true,
            deterministic: true,
            energy: Energy::ExpectedLikelihood,
            max_mean_norm: 20.0,
            min_var: 1e-3,
            max_var: 10.0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.dim == 0 || self.hidden == 0 {
            return bad("dim and hidden must be >= 1");
        }
        if self.window == 0 {
            return bad("window must be >= 1");
        }
        if !(self.subsample > 0.0) {
            return bad("subsampling threshold must be > 0");
        }
        if !(self.neg_exponent >= 0.0) {
            return bad("negative-sampling exponent must be >= 0");
        }
        if self.negatives_per_positive == 0 {
            return bad("negatives_per_positive must be >= 1");
        }
        if self.pairing == Pairing::Aligned && self.negatives_per_positive != 1 {
            return bad("aligned pairing needs exactly one negative per positive");
        }
        if !(self.margin >= 0.0) {
            return bad("margin must be >= 0");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if let Some(lr) = self.learning_rate {
            if !(lr > 0.0) {
                return bad("learning rate must be > 0");
            }
        }
        if !(0.0..1.0).contains(&self.beta1)
            || !(0.0..1.0).contains(&self.beta2)
            || !(self.epsilon > 0.0)
        {
            return bad("invalid Adam moments");
        }
        if !(self.max_mean_norm > 0.0) || !(self.min_var > 0.0) || !(self.max_var >= self.min_var) {
            return bad("invalid clip bounds");
        }
        Ok(())
    }

    pub fn adam(&self, kind: ModelKind) -> AdamConfig {
        AdamConfig {
            learning_rate: self
                .learning_rate
                .unwrap_or_else(|| kind.default_learning_rate()),
            beta1: self.beta1,
            beta2: self.beta2,
            epsilon: self.epsilon,
        }
    }
}
