use rand::Rng;

use crate::corpus::{Example, WordId};
use crate::error::{Error, Result};
use crate::optim::{BlockGrad, GradSet, Parameters, SparseRows};
use crate::real::{dot, Matrix, Real};
use crate::trainer::Trainable;
use crate::TrainConfig;

/// Skip-gram with negative sampling: input vectors for center words,
/// output vectors for context words.
#[derive(Debug, Clone, PartialEq)]
pub struct SgModel<T> {
    pub input: Matrix<T>,
    pub output: Matrix<T>,
}

impl<T: Real> SgModel<T> {
    /// Input vectors uniform in `±0.5/dim`, output vectors zero.
    pub fn init<R: Rng>(vocab_size: usize, dim: usize, rng: &mut R) -> Self {
        SgModel {
            input: Matrix::uniform(vocab_size, dim, 0.5 / dim as f64, rng),
            output: Matrix::zeros(vocab_size, dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.input.cols()
    }

    pub fn vocab_size(&self) -> usize {
        self.input.rows()
    }

    pub fn validate(&self) -> Result<()> {
        if self.input.rows() != self.output.rows() || self.input.cols() != self.output.cols() {
            return Err(Error::DimensionMismatch {
                expected: self.input.len(),
                found: self.output.len(),
            });
        }
        Ok(())
    }

    pub fn cast<U: Real>(&self) -> SgModel<U> {
        SgModel {
            input: self.input.cast(),
            output: self.output.cast(),
        }
    }
}

impl<T: Real> Parameters<T> for SgModel<T> {
    fn blocks(&self) -> Vec<&Matrix<T>> {
        vec![&self.input, &self.output]
    }

    fn blocks_mut(&mut self) -> Vec<&mut Matrix<T>> {
        vec![&mut self.input, &mut self.output]
    }
}

/// log σ(x) without overflow.
pub(crate) fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Negatives must be a non-empty whole multiple of the positives.
pub(crate) fn check_counts(positives: &[WordId], negatives: &[WordId]) -> Result<()> {
    if positives.is_empty() {
        return Err(Error::NoPositives);
    }
    if negatives.is_empty() || negatives.len() % positives.len() != 0 {
        return Err(Error::LengthMismatch {
            left: positives.len(),
            right: negatives.len(),
        });
    }
    Ok(())
}

fn check_ids(size: usize, ids: impl IntoIterator<Item = WordId>) -> Result<()> {
    for id in ids {
        if id >= size {
            return Err(Error::InvalidWordId { id, size });
        }
    }
    Ok(())
}

/// −Σ_j log σ(u_{c_j}·v_w) − Σ_k log σ(−u_{c̃_k}·v_w).
pub fn sg_window_loss<T: Real>(
    model: &SgModel<T>,
    center: WordId,
    positives: &[WordId],
    negatives: &[WordId],
) -> Result<f64> {
    sg_accumulate(model, center, positives, negatives, None)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgGrads {
    pub input: SparseRows,
    pub output: SparseRows,
}

impl SgGrads {
    pub fn zeros(dim: usize) -> Self {
        SgGrads {
            input: SparseRows::new(dim),
            output: SparseRows::new(dim),
        }
    }

    pub fn into_grad_set(self) -> GradSet {
        GradSet {
            blocks: vec![BlockGrad::Rows(self.input), BlockGrad::Rows(self.output)],
        }
    }
}

pub fn sg_window_loss_gradients<T: Real>(
    model: &SgModel<T>,
    center: WordId,
    positives: &[WordId],
    negatives: &[WordId],
) -> Result<(f64, SgGrads)> {
    let mut g = SgGrads::zeros(model.dim());
    let loss = sg_accumulate(model, center, positives, negatives, Some(&mut g))?;
    Ok((loss, g))
}

fn sg_accumulate<T: Real>(
    model: &SgModel<T>,
    center: WordId,
    positives: &[WordId],
    negatives: &[WordId],
    mut grads: Option<&mut SgGrads>,
) -> Result<f64> {
    check_counts(positives, negatives)?;
    check_ids(
        model.vocab_size(),
        std::iter::once(center)
            .chain(positives.iter().copied())
            .chain(negatives.iter().copied()),
    )?;
    let v = model.input.row_f64(center);
    let mut d_v = vec![0.0; v.len()];
    let mut loss = 0.0;
    let terms = positives
        .iter()
        .map(|&c| (c, 1.0))
        .chain(negatives.iter().map(|&c| (c, -1.0)));
    for (c, sign) in terms {
        let u = model.output.row_f64(c);
        let s = dot(&u, &v);
        loss -= log_sigmoid(sign * s);
        if let Some(g) = grads.as_deref_mut() {
            // d/ds −log σ(sign·s) = −sign·σ(−sign·s)
            let gs = -sign * sigmoid(-sign * s);
            d_v.iter_mut().zip(&u).for_each(|(a, b)| *a += gs * b);
            g.output.add_scaled(c, &v, gs);
        }
    }
    if let Some(g) = grads {
        g.input.add_row(center, &d_v);
    }
    Ok(loss)
}

impl Trainable for SgModel<f32> {
    type Grad = SgGrads;

    fn zero_grad(&self) -> SgGrads {
        SgGrads::zeros(self.dim())
    }

    fn accumulate(&self, ex: &Example, _cfg: &TrainConfig, grad: &mut SgGrads) -> Result<f64> {
        sg_accumulate(self, ex.center, &ex.positives, &ex.negatives, Some(grad))
    }

    fn merge(&self, into: &mut SgGrads, from: SgGrads) {
        into.input.absorb(from.input);
        into.output.absorb(from.output);
    }

    fn into_grad_set(&self, grad: SgGrads, _cfg: &TrainConfig) -> GradSet {
        grad.into_grad_set()
    }
}
