//! Monte-Carlo estimate of the evidence lower bound with the exact
//! softmax decoder over the whole vocabulary:
//!
//! ```text
//! log p(c_j | z) = log N(z; ctx_j) + log p(c_j) − log Σ_k N(z; ctx_k) p(c_k)
//! ELBO = Σ_j E_q[log p(c_j | z)] − KL[q ‖ prior_center]
//! ```
//!
//! A diagnostic only: training never evaluates it.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::corpus::{Vocabulary, WordId};
use crate::error::{Error, Result};
use crate::gauss::{kl_divergence, log_density, Gaussian};
use crate::real::Real;

use super::BsgModel;

/// Largest vocabulary the exact softmax is evaluated over.
pub const ELBO_VOCAB_LIMIT: usize = 10_000;

/// z = mean + exp(½ log_var) ⊙ eps.
pub fn reparameterize(g: &Gaussian, eps: &[f64]) -> Result<Vec<f64>> {
    if eps.len() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: g.dim(),
            found: eps.len(),
        });
    }
    Ok(eps
        .iter()
        .enumerate()
        .map(|(i, e)| g.mean()[i] + (0.5 * g.log_var_at(i)).exp() * e)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElboEstimate {
    pub value: f64,
    /// Standard error of the Monte-Carlo reconstruction average.
    pub std_err: f64,
    pub reconstruction: f64,
    pub kl: f64,
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

pub fn elbo_estimate<T: Real, R: Rng>(
    model: &BsgModel<T>,
    vocab: &Vocabulary,
    center: WordId,
    contexts: &[WordId],
    n_samples: usize,
    rng: &mut R,
) -> Result<ElboEstimate> {
    let n_vocab = model.vocab_size();
    if n_vocab > ELBO_VOCAB_LIMIT {
        return Err(Error::VocabTooLarge {
            size: n_vocab,
            limit: ELBO_VOCAB_LIMIT,
        });
    }
    if vocab.len() != n_vocab {
        return Err(Error::DimensionMismatch {
            expected: n_vocab,
            found: vocab.len(),
        });
    }
    if n_samples == 0 {
        return Err(Error::InvalidConfig("n_samples must be >= 1".into()));
    }
    let q = model.posterior(center, contexts)?;
    let kl = kl_divergence(&q, &model.prior_of(center)?)?;
    let table: Vec<Gaussian> = (0..n_vocab)
        .map(|w| model.context_of(w))
        .collect::<Result<_>>()?;
    let log_p: Vec<f64> = (0..n_vocab).map(|w| vocab.unigram_prob(w).ln()).collect();

    let d = model.dim();
    let mut scores = vec![0.0; n_vocab];
    let mut eps = vec![0.0; d];
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n_samples {
        eps.iter_mut().for_each(|e| *e = StandardNormal.sample(rng));
        let z = reparameterize(&q, &eps)?;
        for (w, s) in scores.iter_mut().enumerate() {
            *s = log_density(&table[w], &z)? + log_p[w];
        }
        let log_norm = log_sum_exp(&scores);
        let r: f64 = contexts.iter().map(|&c| scores[c] - log_norm).sum();
        sum += r;
        sum_sq += r * r;
    }
    let n = n_samples as f64;
    let mean = sum / n;
    let var = if n_samples > 1 {
        ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(ElboEstimate {
        value: mean - kl,
        std_err: (var / n).sqrt(),
        reconstruction: mean,
        kl,
    })
}
