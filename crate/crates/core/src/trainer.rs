//! Mini-batch Adam training shared by every model kind.
//!
//! Each epoch walks the corpus once, producing examples through
//! [`corpus::for_each_example`]. A batch is split into fixed-size chunks;
//! chunk gradients are computed in parallel against the same parameter
//! snapshot and summed in chunk order, so results do not depend on the
//! number of worker threads.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{ModelKind, TrainConfig};
use crate::corpus::{self, Corpus, Example, StreamConfig, Vocabulary};
use crate::error::{Error, Result};
use crate::optim::{Adam, GradSet, Parameters};

/// Examples per parallel work unit.
const CHUNK: usize = 64;

/// Stream of examples and model initialization draw from separate
/// generators so that every model kind sees the same stream.
pub(crate) fn stream_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

pub(crate) fn init_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(2);
    rng
}

pub trait Trainable: Parameters<f32> + Sync {
    type Grad: Send;

    fn zero_grad(&self) -> Self::Grad;

    /// Add one example's gradient into `grad`; return its loss.
    fn accumulate(&self, ex: &Example, cfg: &TrainConfig, grad: &mut Self::Grad) -> Result<f64>;

    fn merge(&self, into: &mut Self::Grad, from: Self::Grad);

    fn into_grad_set(&self, grad: Self::Grad, cfg: &TrainConfig) -> GradSet;

    /// Runs after every optimizer step (projections, tied copies).
    fn post_step(&mut self, _cfg: &TrainConfig) {}
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epoch_mean_loss: Vec<f64>,
    pub batches: u64,
    pub examples: u64,
    /// FNV-1a digest of every example in stream order.
    pub stream_digest: u64,
}

#[derive(Debug, Clone, Copy)]
struct Fnv(u64);

impl Fnv {
    fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }

    fn word(&mut self, v: u64) {
        for b in v.to_le_bytes() {
            self.0 ^= b as u64;
            self.0 = self.0.wrapping_mul(0x0100_0000_01b3);
        }
    }

    fn example(&mut self, ex: &Example) {
        self.word(ex.center as u64);
        self.word(ex.positives.len() as u64);
        ex.positives.iter().for_each(|&w| self.word(w as u64));
        ex.negatives.iter().for_each(|&w| self.word(w as u64));
    }
}

/// The vocabulary with the configuration's subsampling threshold and
/// negative-sampling exponent.
pub fn configured_vocab(vocab: &Vocabulary, cfg: &TrainConfig) -> Result<Vocabulary> {
    if vocab.subsample_threshold() == cfg.subsample && vocab.neg_exponent() == cfg.neg_exponent {
        return Ok(vocab.clone());
    }
    Vocabulary::from_counts(
        vocab.words().to_vec(),
        vocab.counts().to_vec(),
        cfg.subsample,
        cfg.neg_exponent,
    )
}

/// Visit every example of `epochs` passes over the corpus, in the order
/// all trainers consume them.
pub fn for_each_training_example<F>(
    corpus: &Corpus,
    vocab: &Vocabulary,
    cfg: &TrainConfig,
    mut f: F,
) -> Result<()>
where
    F: FnMut(usize, Example) -> Result<()>,
{
    let vocab = configured_vocab(vocab, cfg)?;
    let stream = StreamConfig {
        window: cfg.window,
        negatives_per_positive: cfg.negatives_per_positive,
        lowercase: cfg.lowercase,
    };
    let mut rng = stream_rng(cfg.seed);
    for epoch in 0..cfg.epochs {
        corpus::for_each_example(corpus, &vocab, &stream, &mut rng, |ex| f(epoch, ex))?;
    }
    Ok(())
}

struct Loop<'a, 't, M: Trainable> {
    model: &'a mut M,
    cfg: &'a TrainConfig,
    adam: Adam,
    telemetry: Option<&'t mut dyn Write>,
    batches: u64,
    examples: u64,
}

impl<M: Trainable> Loop<'_, '_, M> {
    fn step(&mut self, batch: &[Example]) -> Result<f64> {
        let model: &M = self.model;
        let cfg = self.cfg;
        let parts: Vec<Result<(f64, M::Grad)>> = batch
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut g = model.zero_grad();
                let mut loss = 0.0;
                for ex in chunk {
                    loss += model.accumulate(ex, cfg, &mut g)?;
                }
                Ok((loss, g))
            })
            .collect();
        let mut total = model.zero_grad();
        let mut loss = 0.0;
        for part in parts {
            let (l, g) = part?;
            loss += l;
            model.merge(&mut total, g);
        }
        let mean_loss = loss / batch.len() as f64;
        if !mean_loss.is_finite() {
            let norms = model.param_norms();
            return Err(Error::Numerical(format!(
                "non-finite loss {mean_loss} at batch {}; parameter norms {norms:?}",
                self.batches
            )));
        }
        let mut grad = model.into_grad_set(total, cfg);
        grad.scale(1.0 / batch.len() as f64);
        self.adam.step(self.model, &grad);
        self.model.post_step(cfg);
        if !self.model.all_finite() {
            return Err(Error::Numerical(format!(
                "non-finite parameters after batch {}; parameter norms {:?}",
                self.batches,
                self.model.param_norms()
            )));
        }
        self.examples += batch.len() as u64;
        if let Some(out) = self.telemetry.as_mut() {
            writeln!(out, "{},{},{}", self.batches, mean_loss, self.examples)?;
        }
        self.batches += 1;
        Ok(loss)
    }
}

/// Train `model` in place.
pub fn train_model<M: Trainable>(
    model: &mut M,
    kind: ModelKind,
    corpus: &Corpus,
    vocab: &Vocabulary,
    cfg: &TrainConfig,
    telemetry: Option<&mut dyn Write>,
) -> Result<TrainReport> {
    cfg.validate()?;
    let adam = Adam::new(cfg.adam(kind), &*model);
    let mut telemetry = telemetry;
    if let Some(out) = telemetry.as_mut() {
        writeln!(out, "batch_index,loss,examples_seen")?;
    }
    let mut lp = Loop {
        model,
        cfg,
        adam,
        telemetry,
        batches: 0,
        examples: 0,
    };
    let mut digest = Fnv::new();
    let mut epoch_loss = vec![0.0; cfg.epochs];
    let mut epoch_count = vec![0u64; cfg.epochs];
    let mut batch: Vec<Example> = Vec::with_capacity(cfg.batch_size.min(1 << 16));
    let mut batch_epoch = 0;

    for_each_training_example(corpus, vocab, cfg, |epoch, ex| {
        if epoch != batch_epoch && !batch.is_empty() {
            epoch_loss[batch_epoch] += lp.step(&batch)?;
            epoch_count[batch_epoch] += batch.len() as u64;
            batch.clear();
        }
        batch_epoch = epoch;
        digest.example(&ex);
        batch.push(ex);
        if batch.len() == cfg.batch_size {
            epoch_loss[epoch] += lp.step(&batch)?;
            epoch_count[epoch] += batch.len() as u64;
            batch.clear();
        }
        Ok(())
    })?;
    if !batch.is_empty() {
        epoch_loss[batch_epoch] += lp.step(&batch)?;
        epoch_count[batch_epoch] += batch.len() as u64;
    }
    if let Some(out) = lp.telemetry.as_mut() {
        out.flush()?;
    }
    Ok(TrainReport {
        epoch_mean_loss: epoch_loss
            .iter()
            .zip(&epoch_count)
            .map(|(l, &n)| if n == 0 { f64::NAN } else { l / n as f64 })
            .collect(),
        batches: lp.batches,
        examples: lp.examples,
        stream_digest: digest.0,
    })
}
