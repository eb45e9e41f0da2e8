//! Bayesian Skip-gram: per-word prior Gaussians, per-word context
//! Gaussians and an encoder producing per-occurrence posteriors.

mod elbo;
mod loss;

pub use elbo::{elbo_estimate, reparameterize, ElboEstimate, ELBO_VOCAB_LIMIT};
pub use loss::{window_loss, window_loss_gradients, BsgGrads, LossConfig};

use rand::Rng;

use crate::config::ModelKind;
use crate::corpus::{Corpus, Example, Vocabulary, WordId};
use crate::encoder::EncoderParams;
use crate::error::{Error, Result};
use crate::gauss::{CovKind, Gaussian};
use crate::optim::{GradSet, Parameters};
use crate::real::{Matrix, Real};
use crate::table::GaussTable;
use crate::trainer::{self, TrainReport, Trainable};
use crate::TrainConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct BsgModel<T> {
    pub prior: GaussTable<T>,
    pub context: GaussTable<T>,
    pub enc: EncoderParams<T>,
}

impl<T: Real> BsgModel<T> {
    /// Prior and context means and the input embeddings start uniform in
    /// `±0.5/dim` with unit variances; encoder weights use Glorot-uniform
    /// bounds and zero biases, so initial posteriors sit near N(0, I).
    pub fn init<R: Rng>(vocab_size: usize, cfg: &TrainConfig, rng: &mut R) -> Self {
        let d = cfg.dim;
        let bound = 0.5 / d as f64;
        let prior = GaussTable::init(vocab_size, d, cfg.cov, bound, 0.0, rng);
        let mut context = GaussTable::init(vocab_size, d, cfg.cov, bound, 0.0, rng);
        let mut enc = EncoderParams::init(vocab_size, d, cfg.hidden, cfg.cov, rng);
        if cfg.tie_context {
            context = prior.clone();
        }
        if cfg.tie_encoder_input {
            enc.r = prior.mean.clone();
        }
        BsgModel {
            prior,
            context,
            enc,
        }
    }

    pub fn new(
        prior: GaussTable<T>,
        context: GaussTable<T>,
        enc: EncoderParams<T>,
    ) -> Result<Self> {
        let m = BsgModel {
            prior,
            context,
            enc,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.prior.dim()
    }

    pub fn cov(&self) -> CovKind {
        self.prior.cov
    }

    pub fn vocab_size(&self) -> usize {
        self.prior.len()
    }

    pub fn validate(&self) -> Result<()> {
        self.prior.validate()?;
        self.context.validate()?;
        self.enc.validate()?;
        let n = self.prior.len();
        let d = self.prior.dim();
        for (rows, cols) in [
            (self.context.len(), self.context.dim()),
            (self.enc.vocab_size(), self.enc.dim()),
        ] {
            if rows != n || cols != d {
                return Err(Error::DimensionMismatch {
                    expected: n * d,
                    found: rows * cols,
                });
            }
        }
        if self.context.cov != self.prior.cov || self.enc.cov != self.prior.cov {
            return Err(Error::InvalidConfig(
                "covariance kind differs between prior, context and encoder".into(),
            ));
        }
        Ok(())
    }

    pub fn prior_of(&self, w: WordId) -> Result<Gaussian> {
        self.prior.gaussian(w)
    }

    pub fn context_of(&self, w: WordId) -> Result<Gaussian> {
        self.context.gaussian(w)
    }

    pub fn posterior(&self, center: WordId, contexts: &[WordId]) -> Result<Gaussian> {
        crate::encoder::infer_posterior(&self.enc, center, contexts)
    }

    pub fn cast<U: Real>(&self) -> BsgModel<U> {
        BsgModel {
            prior: self.prior.cast(),
            context: self.context.cast(),
            enc: self.enc.cast(),
        }
    }

    /// Re-establish tied tables after an update.
    pub fn sync_ties(&mut self, cfg: &TrainConfig) {
        if cfg.tie_context {
            self.context = self.prior.clone();
        }
        if cfg.tie_encoder_input {
            self.enc.r = self.prior.mean.clone();
        }
    }
}

impl<T: Real> Parameters<T> for BsgModel<T> {
    fn blocks(&self) -> Vec<&Matrix<T>> {
        vec![
            &self.prior.mean,
            &self.prior.log_var,
            &self.context.mean,
            &self.context.log_var,
            &self.enc.r,
            &self.enc.m,
            &self.enc.u,
            &self.enc.b1,
            &self.enc.w,
            &self.enc.b2,
        ]
    }

    fn blocks_mut(&mut self) -> Vec<&mut Matrix<T>> {
        vec![
            &mut self.prior.mean,
            &mut self.prior.log_var,
            &mut self.context.mean,
            &mut self.context.log_var,
            &mut self.enc.r,
            &mut self.enc.m,
            &mut self.enc.u,
            &mut self.enc.b1,
            &mut self.enc.w,
            &mut self.enc.b2,
        ]
    }
}

impl Trainable for BsgModel<f32> {
    type Grad = BsgGrads;

    fn zero_grad(&self) -> BsgGrads {
        BsgGrads::zeros(self)
    }

    fn accumulate(&self, ex: &Example, cfg: &TrainConfig, grad: &mut BsgGrads) -> Result<f64> {
        loss::accumulate_window(
            self,
            ex.center,
            &ex.positives,
            &ex.negatives,
            &LossConfig::from(cfg),
            grad,
        )
    }

    fn merge(&self, into: &mut BsgGrads, from: BsgGrads) {
        into.absorb(from);
    }

    fn into_grad_set(&self, mut grad: BsgGrads, cfg: &TrainConfig) -> GradSet {
        grad.route_ties(cfg);
        grad.into_grad_set()
    }

    fn post_step(&mut self, cfg: &TrainConfig) {
        self.sync_ties(cfg);
    }
}

/// Initialize a model from `cfg.seed` and train it with mini-batch Adam
/// on the window objective.
pub fn train(
    corpus: &Corpus,
    vocab: &Vocabulary,
    cfg: &TrainConfig,
    telemetry: Option<&mut dyn std::io::Write>,
) -> Result<(BsgModel<f32>, TrainReport)> {
    cfg.validate()?;
    let mut model = BsgModel::<f32>::init(vocab.len(), cfg, &mut trainer::init_rng(cfg.seed));
    let report = trainer::train_model(&mut model, ModelKind::Bsg, corpus, vocab, cfg, telemetry)?;
    Ok((model, report))
}
