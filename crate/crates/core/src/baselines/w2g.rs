use rand::Rng;

use crate::config::Energy;
use crate::corpus::{Example, WordId};
use crate::error::{Error, Result};
use crate::gauss::{kl_divergence_grad, CovKind, Gaussian};
use crate::optim::{BlockGrad, GradSet, Parameters, SparseRows};
use crate::real::{Matrix, Real};
use crate::table::GaussTable;
use crate::trainer::Trainable;
use crate::TrainConfig;

use super::sg::check_counts;

/// Gaussian word embeddings: one Gaussian per word, shared between the
/// center and context roles.
#[derive(Debug, Clone, PartialEq)]
pub struct W2gModel<T> {
    pub table: GaussTable<T>,
    pub energy: Energy,
    pub max_mean_norm: f64,
    pub min_var: f64,
    pub max_var: f64,
}

impl<T: Real> W2gModel<T> {
    /// Means uniform in `±0.5/dim`, unit variances.
    pub fn init<R: Rng>(vocab_size: usize, cov: CovKind, cfg: &TrainConfig, rng: &mut R) -> Self {
        let table = GaussTable::init(vocab_size, cfg.dim, cov, 0.5 / cfg.dim as f64, 0.0, rng);
        let mut m = W2gModel {
            table,
            energy: cfg.energy,
            max_mean_norm: cfg.max_mean_norm,
            min_var: cfg.min_var,
            max_var: cfg.max_var,
        };
        m.clip();
        m
    }

    pub fn dim(&self) -> usize {
        self.table.dim()
    }

    pub fn cov(&self) -> CovKind {
        self.table.cov
    }

    pub fn vocab_size(&self) -> usize {
        self.table.len()
    }

    pub fn validate(&self) -> Result<()> {
        self.table.validate()
    }

    pub fn cast<U: Real>(&self) -> W2gModel<U> {
        W2gModel {
            table: self.table.cast(),
            energy: self.energy,
            max_mean_norm: self.max_mean_norm,
            min_var: self.min_var,
            max_var: self.max_var,
        }
    }

    /// Every mean within the norm bound and every variance within range.
    pub fn within_bounds(&self) -> bool {
        let (lo, hi) = (self.min_var.ln(), self.max_var.ln());
        let means =
            (0..self.vocab_size()).all(|w| row_norm(self.table.mean.row(w)) <= self.max_mean_norm);
        let vars = self.table.log_var.as_slice().iter().all(|v| {
            let v = v.to_f64();
            v >= lo && v <= hi
        });
        means && vars
    }

    /// Project onto the clip bounds in place.
    pub fn clip(&mut self) {
        let cm = self.max_mean_norm;
        for w in 0..self.table.len() {
            let row = self.table.mean.row_mut(w);
            let n = row_norm(row);
            if n <= cm {
                continue;
            }
            let orig: Vec<f64> = row.iter().map(|v| v.to_f64()).collect();
            let mut s = cm / n;
            loop {
                row.iter_mut()
                    .zip(&orig)
                    .for_each(|(r, o)| *r = T::from_f64(o * s));
                if row_norm(row) <= cm {
                    break;
                }
                s *= 1.0 - 1e-7;
            }
        }
        let (lo, hi) = (self.min_var.ln(), self.max_var.ln());
        for v in self.table.log_var.as_mut_slice() {
            let x = v.to_f64();
            if x < lo || x > hi {
                let mut c = T::from_f64(x.clamp(lo, hi));
                // storage rounding may land just outside the range
                if c.to_f64() < lo {
                    c = T::from_f64(lo + lo.abs().max(1.0) * 1e-6);
                } else if c.to_f64() > hi {
                    c = T::from_f64(hi - hi.abs().max(1.0) * 1e-6);
                }
                *v = c;
            }
        }
    }
}

/// Clipped copy of `model`.
pub fn clip_params<T: Real>(model: &W2gModel<T>) -> W2gModel<T> {
    let mut m = model.clone();
    m.clip();
    m
}

fn row_norm<T: Real>(row: &[T]) -> f64 {
    row.iter().map(|v| v.to_f64().powi(2)).sum::<f64>().sqrt()
}

impl<T: Real> Parameters<T> for W2gModel<T> {
    fn blocks(&self) -> Vec<&Matrix<T>> {
        vec![&self.table.mean, &self.table.log_var]
    }

    fn blocks_mut(&mut self) -> Vec<&mut Matrix<T>> {
        vec![&mut self.table.mean, &mut self.table.log_var]
    }
}

/// Energy with its gradient with respect to both arguments.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyGrad {
    pub value: f64,
    pub d_mean_a: Vec<f64>,
    pub d_log_var_a: Vec<f64>,
    pub d_mean_b: Vec<f64>,
    pub d_log_var_b: Vec<f64>,
}

/// Compatibility of `a` (word) and `b` (context); larger is more compatible.
pub fn w2g_energy(a: &Gaussian, b: &Gaussian, kind: Energy) -> Result<f64> {
    Ok(w2g_energy_grad(a, b, kind)?.value)
}

pub fn w2g_energy_grad(a: &Gaussian, b: &Gaussian, kind: Energy) -> Result<EnergyGrad> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    match kind {
        Energy::ExpectedLikelihood => Ok(expected_likelihood(a, b)),
        Energy::NegatedKl => {
            let g = kl_divergence_grad(b, a)?;
            let neg = |v: Vec<f64>| v.into_iter().map(|x| -x).collect::<Vec<_>>();
            Ok(EnergyGrad {
                value: -g.value,
                d_mean_a: neg(g.d_mean_q),
                d_log_var_a: neg(g.d_log_var_q),
                d_mean_b: neg(g.d_mean_p),
                d_log_var_b: neg(g.d_log_var_p),
            })
        }
    }
}

fn expected_likelihood(a: &Gaussian, b: &Gaussian) -> EnergyGrad {
    let d = a.dim();
    let sa = matches!(a.kind(), CovKind::Spherical);
    let sb = matches!(b.kind(), CovKind::Spherical);
    let mut g = EnergyGrad {
        value: 0.0,
        d_mean_a: vec![0.0; d],
        d_log_var_a: vec![0.0; a.log_var().len()],
        d_mean_b: vec![0.0; d],
        d_log_var_b: vec![0.0; b.log_var().len()],
    };
    let mut acc = 0.0;
    for i in 0..d {
        let (va, vb) = (a.var_at(i), b.var_at(i));
        let s = va + vb;
        let delta = a.mean()[i] - b.mean()[i];
        acc += (2.0 * std::f64::consts::PI).ln() + s.ln() + delta * delta / s;
        g.d_mean_a[i] = -delta / s;
        g.d_mean_b[i] = delta / s;
        let d_s = -0.5 * (1.0 / s - delta * delta / (s * s));
        g.d_log_var_a[if sa { 0 } else { i }] += d_s * va;
        g.d_log_var_b[if sb { 0 } else { i }] += d_s * vb;
    }
    g.value = -0.5 * acc;
    g
}

#[derive(Debug, Clone, PartialEq)]
pub struct W2gGrads {
    pub mean: SparseRows,
    pub log_var: SparseRows,
}

impl W2gGrads {
    pub fn zeros(dim: usize, cov: CovKind) -> Self {
        W2gGrads {
            mean: SparseRows::new(dim),
            log_var: SparseRows::new(cov.width(dim)),
        }
    }

    pub fn into_grad_set(self) -> GradSet {
        GradSet {
            blocks: vec![BlockGrad::Rows(self.mean), BlockGrad::Rows(self.log_var)],
        }
    }
}

/// Σ_j max(0, margin − E(w, c_j) + E(w, c̃_j)); with several negatives per
/// positive, positive j is paired with each of its own block of negatives.
pub fn w2g_window_loss<T: Real>(
    model: &W2gModel<T>,
    center: WordId,
    positives: &[WordId],
    negatives: &[WordId],
    margin: f64,
) -> Result<f64> {
    w2g_accumulate(model, center, positives, negatives, margin, None)
}

pub fn w2g_window_loss_gradients<T: Real>(
    model: &W2gModel<T>,
    center: WordId,
    positives: &[WordId],
    negatives: &[WordId],
    margin: f64,
) -> Result<(f64, W2gGrads)> {
    let mut g = W2gGrads::zeros(model.dim(), model.cov());
    let loss = w2g_accumulate(model, center, positives, negatives, margin, Some(&mut g))?;
    Ok((loss, g))
}

fn add_energy(g: &mut W2gGrads, center: WordId, ctx: WordId, e: &EnergyGrad, scale: f64) {
    g.mean.add_scaled(center, &e.d_mean_a, scale);
    g.log_var.add_scaled(center, &e.d_log_var_a, scale);
    g.mean.add_scaled(ctx, &e.d_mean_b, scale);
    g.log_var.add_scaled(ctx, &e.d_log_var_b, scale);
}

fn w2g_accumulate<T: Real>(
    model: &W2gModel<T>,
    center: WordId,
    positives: &[WordId],
    negatives: &[WordId],
    margin: f64,
    mut grads: Option<&mut W2gGrads>,
) -> Result<f64> {
    check_counts(positives, negatives)?;
    let size = model.vocab_size();
    for &id in std::iter::once(&center).chain(positives).chain(negatives) {
        if id >= size {
            return Err(Error::InvalidWordId { id, size });
        }
    }
    let per = negatives.len() / positives.len();
    let w = model.table.gaussian(center)?;
    let mut loss = 0.0;
    for (j, &c) in positives.iter().enumerate() {
        let pos = w2g_energy_grad(&w, &model.table.gaussian(c)?, model.energy)?;
        for &n in &negatives[j * per..(j + 1) * per] {
            let neg = w2g_energy_grad(&w, &model.table.gaussian(n)?, model.energy)?;
            let h = margin - pos.value + neg.value;
            if h <= 0.0 {
                continue;
            }
            loss += h;
            if let Some(g) = grads.as_deref_mut() {
                add_energy(g, center, c, &pos, -1.0);
                add_energy(g, center, n, &neg, 1.0);
            }
        }
    }
    Ok(loss)
}

impl Trainable for W2gModel<f32> {
    type Grad = W2gGrads;

    fn zero_grad(&self) -> W2gGrads {
        W2gGrads::zeros(self.dim(), self.cov())
    }

    fn accumulate(&self, ex: &Example, cfg: &TrainConfig, grad: &mut W2gGrads) -> Result<f64> {
        w2g_accumulate(
            self,
            ex.center,
            &ex.positives,
            &ex.negatives,
            cfg.margin,
            Some(grad),
        )
    }

    fn merge(&self, into: &mut W2gGrads, from: W2gGrads) {
        into.mean.absorb(from.mean);
        into.log_var.absorb(from.log_var);
    }

    fn into_grad_set(&self, grad: W2gGrads, _cfg: &TrainConfig) -> GradSet {
        grad.into_grad_set()
    }

    fn post_step(&mut self, _cfg: &TrainConfig) {
        self.clip();
    }
}
