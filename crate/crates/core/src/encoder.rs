//! Inference network mapping a center word and its context words to a
//! posterior Gaussian.
//!
//! Every context word is paired with the center word, the concatenated
//! input embeddings pass through a shared linear layer and a ReLU, and the
//! results are summed:
//!
//! ```text
//! h      = Σ_j relu(M [R[c_j]; R[w]])
//! mean   = U h + b1
//! logvar = W h + b2
//! ```
//!
//! `W`/`b2` have one row for spherical posteriors and `dim` rows for
//! diagonal ones.

use rand::Rng;

use crate::corpus::WordId;
use crate::error::{Error, Result};
use crate::gauss::{CovKind, Gaussian};
use crate::optim::{BlockGrad, GradSet, Parameters, SparseRows};
use crate::real::{Matrix, Real};

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams<T> {
    pub cov: CovKind,
    /// Input embeddings, `|V| × dim`.
    pub r: Matrix<T>,
    /// Hidden layer, `hidden × 2·dim`.
    pub m: Matrix<T>,
    /// Mean head, `dim × hidden`.
    pub u: Matrix<T>,
    pub b1: Matrix<T>,
    /// Log-variance head, `k × hidden` with `k` = 1 or `dim`.
    pub w: Matrix<T>,
    pub b2: Matrix<T>,
}

fn glorot<T: Real, R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Matrix<T> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Matrix::uniform(rows, cols, bound, rng)
}

impl<T: Real> EncoderParams<T> {
    pub fn init<R: Rng>(
        vocab_size: usize,
        dim: usize,
        hidden: usize,
        cov: CovKind,
        rng: &mut R,
    ) -> Self {
        let k = cov.width(dim);
        EncoderParams {
            cov,
            r: Matrix::uniform(vocab_size, dim, 0.5 / dim as f64, rng),
            m: glorot(hidden, 2 * dim, rng),
            u: glorot(dim, hidden, rng),
            b1: Matrix::zeros(1, dim),
            w: glorot(k, hidden, rng),
            b2: Matrix::zeros(1, k),
        }
    }

    pub fn zeros(vocab_size: usize, dim: usize, hidden: usize, cov: CovKind) -> Self {
        let k = cov.width(dim);
        EncoderParams {
            cov,
            r: Matrix::zeros(vocab_size, dim),
            m: Matrix::zeros(hidden, 2 * dim),
            u: Matrix::zeros(dim, hidden),
            b1: Matrix::zeros(1, dim),
            w: Matrix::zeros(k, hidden),
            b2: Matrix::zeros(1, k),
        }
    }

    pub fn dim(&self) -> usize {
        self.r.cols()
    }

    pub fn hidden(&self) -> usize {
        self.m.rows()
    }

    pub fn vocab_size(&self) -> usize {
        self.r.rows()
    }

    /// Check every shape against `dim`, `hidden` and the covariance kind.
    pub fn validate(&self) -> Result<()> {
        let d = self.dim();
        let h = self.hidden();
        let k = self.cov.width(d);
        let shapes = [
            (&self.m, h, 2 * d),
            (&self.u, d, h),
            (&self.b1, 1, d),
            (&self.w, k, h),
            (&self.b2, 1, k),
        ];
        if h == 0 {
            return Err(Error::InvalidConfig(
                "encoder hidden size must be >= 1".into(),
            ));
        }
        for (m, rows, cols) in shapes {
            if m.rows() != rows || m.cols() != cols {
                return Err(Error::DimensionMismatch {
                    expected: rows * cols,
                    found: m.rows() * m.cols(),
                });
            }
        }
        Ok(())
    }

    pub fn cast<U: Real>(&self) -> EncoderParams<U> {
        EncoderParams {
            cov: self.cov,
            r: self.r.cast(),
            m: self.m.cast(),
            u: self.u.cast(),
            b1: self.b1.cast(),
            w: self.w.cast(),
            b2: self.b2.cast(),
        }
    }
}

/// Intermediate values of a forward pass, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    pub posterior: Gaussian,
    hidden: Vec<f64>,
    /// Pre-activation `M x_j` per context word.
    pre: Vec<Vec<f64>>,
}

impl Forward {
    pub fn hidden(&self) -> &[f64] {
        &self.hidden
    }
}

fn check_inputs<T: Real>(
    params: &EncoderParams<T>,
    center: WordId,
    contexts: &[WordId],
) -> Result<()> {
    if contexts.is_empty() {
        return Err(Error::EmptyContext);
    }
    let size = params.vocab_size();
    for &id in std::iter::once(&center).chain(contexts) {
        if id >= size {
            return Err(Error::InvalidWordId { id, size });
        }
    }
    Ok(())
}

fn input(params: &EncoderParams<impl Real>, center: WordId, context: WordId) -> Vec<f64> {
    let mut x = params.r.row_f64(context);
    x.extend(params.r.row(center).iter().map(|v| v.to_f64()));
    x
}

pub fn forward<T: Real>(
    params: &EncoderParams<T>,
    center: WordId,
    contexts: &[WordId],
) -> Result<Forward> {
    check_inputs(params, center, contexts)?;
    let hdim = params.hidden();
    let mut hidden = vec![0.0; hdim];
    let mut pre = Vec::with_capacity(contexts.len());
    for &c in contexts {
        let x = input(params, center, c);
        let mut a = vec![0.0; hdim];
        params.m.mat_vec_acc(&x, &mut a);
        for (h, &ai) in hidden.iter_mut().zip(&a) {
            if ai > 0.0 {
                *h += ai;
            }
        }
        pre.push(a);
    }
    let mut mean = params.b1.row_f64(0);
    params.u.mat_vec_acc(&hidden, &mut mean);
    let mut log_var = params.b2.row_f64(0);
    params.w.mat_vec_acc(&hidden, &mut log_var);
    let posterior = Gaussian::new(mean, log_var, params.cov)?;
    Ok(Forward {
        posterior,
        hidden,
        pre,
    })
}

pub fn infer_posterior<T: Real>(
    params: &EncoderParams<T>,
    center: WordId,
    contexts: &[WordId],
) -> Result<Gaussian> {
    forward(params, center, contexts).map(|f| f.posterior)
}

/// Gradients of a scalar loss with respect to every encoder parameter.
/// Input embeddings are row-sparse.
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderGrads {
    pub r: SparseRows,
    pub m: Vec<f64>,
    pub u: Vec<f64>,
    pub b1: Vec<f64>,
    pub w: Vec<f64>,
    pub b2: Vec<f64>,
}

impl EncoderGrads {
    pub fn zeros<T: Real>(params: &EncoderParams<T>) -> Self {
        EncoderGrads {
            r: SparseRows::new(params.dim()),
            m: vec![0.0; params.m.len()],
            u: vec![0.0; params.u.len()],
            b1: vec![0.0; params.b1.len()],
            w: vec![0.0; params.w.len()],
            b2: vec![0.0; params.b2.len()],
        }
    }

    /// Blocks in the order of [`EncoderParams`]' parameters.
    pub fn into_grad_set(self) -> GradSet {
        GradSet {
            blocks: vec![
                BlockGrad::Rows(self.r),
                BlockGrad::Dense(self.m),
                BlockGrad::Dense(self.u),
                BlockGrad::Dense(self.b1),
                BlockGrad::Dense(self.w),
                BlockGrad::Dense(self.b2),
            ],
        }
    }
}

impl<T: Real> Parameters<T> for EncoderParams<T> {
    fn blocks(&self) -> Vec<&Matrix<T>> {
        vec![&self.r, &self.m, &self.u, &self.b1, &self.w, &self.b2]
    }

    fn blocks_mut(&mut self) -> Vec<&mut Matrix<T>> {
        vec![
            &mut self.r,
            &mut self.m,
            &mut self.u,
            &mut self.b1,
            &mut self.w,
            &mut self.b2,
        ]
    }
}

/// Accumulate into `grads` the backward pass of a forward pass `fwd`
/// given upstream gradients with respect to the posterior mean and stored
/// log-variance.
pub fn backward_into<T: Real>(
    params: &EncoderParams<T>,
    center: WordId,
    contexts: &[WordId],
    fwd: &Forward,
    d_mean: &[f64],
    d_log_var: &[f64],
    grads: &mut EncoderGrads,
) -> Result<()> {
    let d = params.dim();
    let hdim = params.hidden();
    let k = params.cov.width(d);
    if d_mean.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: d_mean.len(),
        });
    }
    if d_log_var.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            found: d_log_var.len(),
        });
    }
    let h = &fwd.hidden;

    for (i, &g) in d_mean.iter().enumerate() {
        grads.b1[i] += g;
        for (j, &hj) in h.iter().enumerate() {
            grads.u[i * hdim + j] += g * hj;
        }
    }
    for (i, &g) in d_log_var.iter().enumerate() {
        grads.b2[i] += g;
        for (j, &hj) in h.iter().enumerate() {
            grads.w[i * hdim + j] += g * hj;
        }
    }

    let mut d_hidden = vec![0.0; hdim];
    params.u.mat_t_vec_acc(d_mean, &mut d_hidden);
    params.w.mat_t_vec_acc(d_log_var, &mut d_hidden);

    let mut d_pre = vec![0.0; hdim];
    let mut d_x = vec![0.0; 2 * d];
    for (&c, a) in contexts.iter().zip(&fwd.pre) {
        for ((dp, &ai), &dh) in d_pre.iter_mut().zip(a).zip(&d_hidden) {
            *dp = if ai > 0.0 { dh } else { 0.0 };
        }
        if d_pre.iter().all(|&v| v == 0.0) {
            continue;
        }
        let x = input(params, center, c);
        for (r, &dp) in d_pre.iter().enumerate() {
            if dp == 0.0 {
                continue;
            }
            let row = &mut grads.m[r * 2 * d..(r + 1) * 2 * d];
            for (g, xi) in row.iter_mut().zip(&x) {
                *g += dp * xi;
            }
        }
        d_x.iter_mut().for_each(|v| *v = 0.0);
        params.m.mat_t_vec_acc(&d_pre, &mut d_x);
        grads.r.add_row(c, &d_x[..d]);
        grads.r.add_row(center, &d_x[d..]);
    }
    Ok(())
}

/// Backward pass from scratch: recomputes the forward pass.
pub fn encoder_backward<T: Real>(
    params: &EncoderParams<T>,
    center: WordId,
    contexts: &[WordId],
    d_mean: &[f64],
    d_log_var: &[f64],
) -> Result<EncoderGrads> {
    let fwd = forward(params, center, contexts)?;
    let mut grads = EncoderGrads::zeros(params);
    backward_into(
        params, center, contexts, &fwd, d_mean, d_log_var, &mut grads,
    )?;
    Ok(grads)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// d = 2, hidden = 2, diagonal posterior, three-word vocabulary.
    pub(crate) fn fixture() -> EncoderParams<f64> {
        EncoderParams {
            cov: CovKind::Diagonal,
            r: Matrix::from_vec(3, 2, vec![1.0, 0.0, 0.0, 1.0, 1.0, -1.0]),
            m: Matrix::from_vec(2, 4, vec![1.0, 0.0, 1.0, 0.0, 0.0, -1.0, 0.0, 2.0]),
            u: Matrix::from_vec(2, 2, vec![1.0, 0.0, 1.0, 1.0]),
            b1: Matrix::from_vec(1, 2, vec![0.5, 0.0]),
            w: Matrix::from_vec(2, 2, vec![0.0, 1.0, -1.0, 0.0]),
            b2: Matrix::from_vec(1, 2, vec![0.0, 1.0]),
        }
    }

    #[test]
    fn hand_computed_posterior() {
        // center = word 0 (R = [1,0]); contexts = words 1 ([0,1]) and 2 ([1,-1])
        // x1 = [0,1,1,0]:  M x1 = [0+1, -1+0]   = [1, -1]  -> relu [1, 0]
        // x2 = [1,-1,1,0]: M x2 = [1+1, 1+0]    = [2, 1]   -> relu [2, 1]
        // h = [3, 1]; mean = U h + b1 = [3 + 0.5, 3 + 1] = [3.5, 4]
        // logvar = W h + b2 = [1 + 0, -3 + 1] = [1, -2]
        let q = infer_posterior(&fixture(), 0, &[1, 2]).unwrap();
        assert_eq!(q.mean(), [3.5, 4.0]);
        assert_eq!(q.log_var(), [1.0, -2.0]);
    }

    #[test]
    fn zero_network_gives_standard_normal() {
        let p = EncoderParams::<f64>::zeros(4, 3, 5, CovKind::Spherical);
        let q = infer_posterior(&p, 1, &[0, 2, 3]).unwrap();
        assert_eq!(q, Gaussian::standard(3, CovKind::Spherical));
    }

    #[test]
    fn empty_context_rejected() {
        assert!(matches!(
            infer_posterior(&fixture(), 0, &[]),
            Err(Error::EmptyContext)
        ));
    }

    #[test]
    fn context_order_irrelevant_and_duplicates_add_a_term() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = EncoderParams::<f64>::init(6, 4, 5, CovKind::Diagonal, &mut rng);
        let a = forward(&p, 0, &[1, 2, 3]).unwrap();
        let b = forward(&p, 0, &[3, 1, 2]).unwrap();
        assert_eq!(a.hidden(), b.hidden());
        let single = forward(&p, 0, &[2]).unwrap();
        let dup = forward(&p, 0, &[1, 2, 3, 2]).unwrap();
        for i in 0..5 {
            assert!((dup.hidden()[i] - a.hidden()[i] - single.hidden()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let g = encoder_backward(&fixture(), 0, &[1, 2], &[0.0, 0.0], &[0.0, 0.0]).unwrap();
        assert!(g
            .m
            .iter()
            .chain(&g.u)
            .chain(&g.w)
            .chain(&g.b1)
            .chain(&g.b2)
            .all(|&v| v == 0.0));
        assert!(g.r.is_empty());
    }

    #[test]
    fn dead_unit_blocks_gradient() {
        // in the fixture, hidden unit 1 is dead for context word 1
        let p = fixture();
        let g = encoder_backward(&p, 0, &[1], &[1.0, 1.0], &[1.0, 1.0]).unwrap();
        // row 1 of M only receives gradient through unit 1
        assert!(g.m[4..8].iter().all(|&v| v == 0.0));
        assert!(g.m[0..4].iter().any(|&v| v != 0.0));
    }

    #[test]
    fn untouched_rows_have_no_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = EncoderParams::<f64>::init(10, 3, 4, CovKind::Spherical, &mut rng);
        let g = encoder_backward(&p, 2, &[4, 7], &[1.0, -1.0, 0.5], &[0.3]).unwrap();
        let touched: Vec<usize> = g.r.touched().collect();
        assert!(touched.iter().all(|r| [2, 4, 7].contains(r)));
    }

    #[test]
    fn upstream_shape_checked() {
        assert!(encoder_backward(&fixture(), 0, &[1], &[1.0], &[1.0, 1.0]).is_err());
    }
}
