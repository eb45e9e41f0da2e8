use rand::Rng;

use crate::corpus::WordId;
use crate::error::{Error, Result};
use crate::gauss::{CovKind, Gaussian};
use crate::real::{Matrix, Real};

/// One Gaussian per vocabulary word: a `|V| × dim` mean table and a
/// `|V| × k` log-variance table (`k` = 1 spherical, `dim` diagonal).
#[derive(Debug, Clone, PartialEq)]
pub struct GaussTable<T> {
    pub cov: CovKind,
    pub mean: Matrix<T>,
    pub log_var: Matrix<T>,
}

impl<T: Real> GaussTable<T> {
    pub fn new(cov: CovKind, mean: Matrix<T>, log_var: Matrix<T>) -> Result<Self> {
        let t = GaussTable { cov, mean, log_var };
        t.validate()?;
        Ok(t)
    }

    /// Means uniform in `±mean_bound`, all log-variances `log_var`.
    pub fn init<R: Rng>(
        n: usize,
        dim: usize,
        cov: CovKind,
        mean_bound: f64,
        log_var: f64,
        rng: &mut R,
    ) -> Self {
        let k = cov.width(dim);
        GaussTable {
            cov,
            mean: Matrix::uniform(n, dim, mean_bound, rng),
            log_var: Matrix::from_vec(n, k, vec![T::from_f64(log_var); n * k]),
        }
    }

    pub fn len(&self) -> usize {
        self.mean.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.mean.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.mean.cols()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.cov.width(self.dim());
        if self.log_var.rows() != self.mean.rows() || self.log_var.cols() != k {
            return Err(Error::DimensionMismatch {
                expected: self.mean.rows() * k,
                found: self.log_var.len(),
            });
        }
        Ok(())
    }

    pub fn gaussian(&self, w: WordId) -> Result<Gaussian> {
        Gaussian::new(self.mean.row_f64(w), self.log_var.row_f64(w), self.cov)
    }

    pub fn mean_row(&self, w: WordId) -> Vec<f64> {
        self.mean.row_f64(w)
    }

    pub fn cast<U: Real>(&self) -> GaussTable<U> {
        GaussTable {
            cov: self.cov,
            mean: self.mean.cast(),
            log_var: self.log_var.cast(),
        }
    }

    /// Every row has finite parameters and a positive, finite variance.
    pub fn all_valid(&self) -> bool {
        self.mean.all_finite()
            && self.log_var.as_slice().iter().all(|v| {
                let e = v.to_f64().exp();
                e > 0.0 && e.is_finite()
            })
    }
}
