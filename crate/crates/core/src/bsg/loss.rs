//! Sampling-free window objective and its exact gradients.
//!
//! For a window with posterior `q = enc(center, positives)`:
//!
//! ```text
//! hinge: Σ_(j,k) max(0, KL[q‖ctx_j] − KL[q‖ctx_k~] + m) + KL[q‖prior_center]
//! soft:  Σ_(j,k)       (KL[q‖ctx_j] − KL[q‖ctx_k~])     + KL[q‖prior_center]
//! ```
//!
//! Every term is a closed-form Gaussian KL, so neither the loss nor its
//! gradient draws random numbers.

use crate::config::{Objective, Pairing};
use crate::corpus::WordId;
use crate::encoder::{self, EncoderGrads};
use crate::error::{Error, Result};
use crate::gauss::{kl_divergence, kl_divergence_grad, Gaussian};
use crate::optim::{BlockGrad, GradSet, SparseRows};
use crate::real::Real;
use crate::TrainConfig;

use super::BsgModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    pub objective: Objective,
    pub margin: f64,
    pub pairing: Pairing,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            objective: Objective::Hinge,
            margin: 1.0,
            pairing: Pairing::Aligned,
        }
    }
}

impl From<&TrainConfig> for LossConfig {
    fn from(c: &TrainConfig) -> Self {
        LossConfig {
            objective: c.objective,
            margin: c.margin,
            pairing: c.pairing,
        }
    }
}

fn check_lengths(positives: &[WordId], negatives: &[WordId], cfg: &LossConfig) -> Result<()> {
    if positives.is_empty() {
        return Err(Error::NoPositives);
    }
    let ok = match cfg.pairing {
        Pairing::Aligned => positives.len() == negatives.len(),
        Pairing::AllPairs => !negatives.is_empty(),
    };
    if !ok {
        return Err(Error::LengthMismatch {
            left: positives.len(),
            right: negatives.len(),
        });
    }
    Ok(())
}

fn check_ids<T: Real>(model: &BsgModel<T>, ids: &[WordId]) -> Result<()> {
    let size = model.vocab_size();
    match ids.iter().find(|&&id| id >= size) {
        Some(&id) => Err(Error::InvalidWordId { id, size }),
        None => Ok(()),
    }
}

/// Visit the (positive, negative) index pairs of a window.
fn for_each_pair(n_pos: usize, n_neg: usize, pairing: Pairing, mut f: impl FnMut(usize, usize)) {
    match pairing {
        Pairing::Aligned => (0..n_pos).for_each(|j| f(j, j)),
        Pairing::AllPairs => {
            for j in 0..n_pos {
                for k in 0..n_neg {
                    f(j, k);
                }
            }
        }
    }
}

/// Combine the per-word KL values into the loss and return the weight
/// each KL term carries in it.
fn combine(
    kl_pos: &[f64],
    kl_neg: &[f64],
    kl_prior: f64,
    cfg: &LossConfig,
) -> (f64, Vec<f64>, Vec<f64>) {
    let mut loss = kl_prior;
    let mut w_pos = vec![0.0; kl_pos.len()];
    let mut w_neg = vec![0.0; kl_neg.len()];
    for_each_pair(kl_pos.len(), kl_neg.len(), cfg.pairing, |j, k| {
        match cfg.objective {
            Objective::Hinge => {
                let arg = kl_pos[j] - kl_neg[k] + cfg.margin;
                // the kink itself takes the inactive branch
                if arg > 0.0 {
                    loss += arg;
                    w_pos[j] += 1.0;
                    w_neg[k] -= 1.0;
                }
            }
            Objective::Soft => {
                loss += kl_pos[j] - kl_neg[k];
                w_pos[j] += 1.0;
                w_neg[k] -= 1.0;
            }
        }
    });
    (loss, w_pos, w_neg)
}

pub fn window_loss<T: Real>(
    model: &BsgModel<T>,
    center: WordId,
    positives: &[WordId],
    negatives: &[WordId],
    cfg: &LossConfig,
) -> Result<f64> {
    check_lengths(positives, negatives, cfg)?;
    check_ids(model, negatives)?;
    let q = model.posterior(center, positives)?;
    let kl_to = |table: &crate::table::GaussTable<T>, w: WordId| -> Result<f64> {
        kl_divergence(&q, &table.gaussian(w)?)
    };
    let kl_pos = positives
        .iter()
        .map(|&c| kl_to(&model.context, c))
        .collect::<Result<Vec<_>>>()?;
    let kl_neg = negatives
        .iter()
        .map(|&c| kl_to(&model.context, c))
        .collect::<Result<Vec<_>>>()?;
    let kl_prior = kl_to(&model.prior, center)?;
    Ok(combine(&kl_pos, &kl_neg, kl_prior, cfg).0)
}

/// Gradients over the prior rows, context rows and encoder parameters.
/// Only rows a window touches are present.
#[derive(Debug, Clone, PartialEq)]
pub struct BsgGrads {
    pub prior_mean: SparseRows,
    pub prior_log_var: SparseRows,
    pub context_mean: SparseRows,
    pub context_log_var: SparseRows,
    pub enc: EncoderGrads,
}

impl BsgGrads {
    pub fn zeros<T: Real>(model: &BsgModel<T>) -> Self {
        let d = model.dim();
        let k = model.cov().width(d);
        BsgGrads {
            prior_mean: SparseRows::new(d),
            prior_log_var: SparseRows::new(k),
            context_mean: SparseRows::new(d),
            context_log_var: SparseRows::new(k),
            enc: EncoderGrads::zeros(&model.enc),
        }
    }

    pub fn absorb(&mut self, other: BsgGrads) {
        self.prior_mean.absorb(other.prior_mean);
        self.prior_log_var.absorb(other.prior_log_var);
        self.context_mean.absorb(other.context_mean);
        self.context_log_var.absorb(other.context_log_var);
        self.enc.r.absorb(other.enc.r);
        for (a, b) in [
            (&mut self.enc.m, other.enc.m),
            (&mut self.enc.u, other.enc.u),
            (&mut self.enc.b1, other.enc.b1),
            (&mut self.enc.w, other.enc.w),
            (&mut self.enc.b2, other.enc.b2),
        ] {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }

    /// Fold gradients of tied tables into the prior table they share.
    pub fn route_ties(&mut self, cfg: &TrainConfig) {
        if cfg.tie_context {
            let d = self.context_mean.width();
            let k = self.context_log_var.width();
            let mean = std::mem::replace(&mut self.context_mean, SparseRows::new(d));
            let lv = std::mem::replace(&mut self.context_log_var, SparseRows::new(k));
            self.prior_mean.absorb(mean);
            self.prior_log_var.absorb(lv);
        }
        if cfg.tie_encoder_input {
            let d = self.enc.r.width();
            let r = std::mem::replace(&mut self.enc.r, SparseRows::new(d));
            self.prior_mean.absorb(r);
        }
    }

    /// Blocks in [`BsgModel`]'s parameter order.
    pub fn into_grad_set(self) -> GradSet {
        GradSet {
            blocks: vec![
                BlockGrad::Rows(self.prior_mean),
                BlockGrad::Rows(self.prior_log_var),
                BlockGrad::Rows(self.context_mean),
                BlockGrad::Rows(self.context_log_var),
                BlockGrad::Rows(self.enc.r),
                BlockGrad::Dense(self.enc.m),
                BlockGrad::Dense(self.enc.u),
                BlockGrad::Dense(self.enc.b1),
                BlockGrad::Dense(self.enc.w),
                BlockGrad::Dense(self.enc.b2),
            ],
        }
    }
}

/// Loss of one window, with its gradient added into `grads`.
pub(crate) fn accumulate_window<T: Real>(
    model: &BsgModel<T>,
    center: WordId,
    positives: &[WordId],
    negatives: &[WordId],
    cfg: &LossConfig,
    grads: &mut BsgGrads,
) -> Result<f64> {
    check_lengths(positives, negatives, cfg)?;
    check_ids(model, negatives)?;
    let fwd = encoder::forward(&model.enc, center, positives)?;
    let q: &Gaussian = &fwd.posterior;

    let pos = positives
        .iter()
        .map(|&c| kl_divergence_grad(q, &model.context.gaussian(c)?))
        .collect::<Result<Vec<_>>>()?;
    let neg = negatives
        .iter()
        .map(|&c| kl_divergence_grad(q, &model.context.gaussian(c)?))
        .collect::<Result<Vec<_>>>()?;
    let prior = kl_divergence_grad(q, &model.prior.gaussian(center)?)?;

    let kl_pos: Vec<f64> = pos.iter().map(|g| g.value).collect();
    let kl_neg: Vec<f64> = neg.iter().map(|g| g.value).collect();
    let (loss, w_pos, w_neg) = combine(&kl_pos, &kl_neg, prior.value, cfg);

    let mut d_mean = prior.d_mean_p.clone();
    let mut d_log_var = prior.d_log_var_p.clone();
    grads.prior_mean.add_row(center, &prior.d_mean_q);
    grads.prior_log_var.add_row(center, &prior.d_log_var_q);

    for (ids, terms, weights) in [(positives, &pos, &w_pos), (negatives, &neg, &w_neg)] {
        for ((&c, g), &w) in ids.iter().zip(terms.iter()).zip(weights.iter()) {
            if w == 0.0 {
                continue;
            }
            d_mean
                .iter_mut()
                .zip(&g.d_mean_p)
                .for_each(|(a, b)| *a += w * b);
            d_log_var
                .iter_mut()
                .zip(&g.d_log_var_p)
                .for_each(|(a, b)| *a += w * b);
            grads.context_mean.add_scaled(c, &g.d_mean_q, w);
            grads.context_log_var.add_scaled(c, &g.d_log_var_q, w);
        }
    }

    encoder::backward_into(
        &model.enc,
        center,
        positives,
        &fwd,
        &d_mean,
        &d_log_var,
        &mut grads.enc,
    )?;
    Ok(loss)
}

pub fn window_loss_gradients<T: Real>(
    model: &BsgModel<T>,
    center: WordId,
    positives: &[WordId],
    negatives: &[WordId],
    cfg: &LossConfig,
) -> Result<(f64, BsgGrads)> {
    let mut grads = BsgGrads::zeros(model);
    let loss = accumulate_window(model, center, positives, negatives, cfg, &mut grads)?;
    Ok((loss, grads))
}
