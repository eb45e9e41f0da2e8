//! Gaussian densities with spherical or diagonal covariance, and the
//! closed-form quantities used throughout: KL divergence, log-density,
//! cosine of means and log-determinant.
//!
//! The stored covariance parameter is always the log-variance. A spherical
//! Gaussian keeps a single shared value; every function treats it exactly
//! like a diagonal Gaussian whose coordinates are all equal.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::real::{dot, norm};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovKind {
    Spherical,
    Diagonal,
}

impl CovKind {
    /// Number of stored log-variance values for dimension `dim`.
    pub fn width(self, dim: usize) -> usize {
        match self {
            CovKind::Spherical => 1,
            CovKind::Diagonal => dim,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CovKind::Spherical => "spherical",
            CovKind::Diagonal => "diagonal",
        }
    }
}

impl std::str::FromStr for CovKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spherical" => Ok(CovKind::Spherical),
            "diagonal" => Ok(CovKind::Diagonal),
            other => Err(Error::InvalidConfig(format!(
                "unknown covariance kind {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gaussian {
    mean: Vec<f64>,
    log_var: Vec<f64>,
    kind: CovKind,
}

impl Gaussian {
    pub fn spherical(mean: Vec<f64>, log_var: f64) -> Result<Self> {
        Self::new(mean, vec![log_var], CovKind::Spherical)
    }

    pub fn diagonal(mean: Vec<f64>, log_var: Vec<f64>) -> Result<Self> {
        Self::new(mean, log_var, CovKind::Diagonal)
    }

    /// Standard normal N(0, I) in `dim` dimensions.
    pub fn standard(dim: usize, kind: CovKind) -> Self {
        Gaussian {
            mean: vec![0.0; dim],
            log_var: vec![0.0; kind.width(dim)],
            kind,
        }
    }

    pub fn new(mean: Vec<f64>, log_var: Vec<f64>, kind: CovKind) -> Result<Self> {
        let want = kind.width(mean.len());
        if log_var.len() != want {
            return Err(Error::DimensionMismatch {
                expected: want,
                found: log_var.len(),
            });
        }
        if mean.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numerical("non-finite mean".into()));
        }
        // exp(log_var) must be positive and finite
        if log_var
            .iter()
            .any(|v| !v.is_finite() || v.exp() == 0.0 || !v.exp().is_finite())
        {
            return Err(Error::Numerical(
                "log-variance gives a non-positive or infinite variance".into(),
            ));
        }
        Ok(Gaussian {
            mean,
            log_var,
            kind,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn kind(&self) -> CovKind {
        self.kind
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    /// Stored log-variance: one value (spherical) or `dim` values (diagonal).
    pub fn log_var(&self) -> &[f64] {
        &self.log_var
    }

    #[inline]
    pub fn log_var_at(&self, i: usize) -> f64 {
        match self.kind {
            CovKind::Spherical => self.log_var[0],
            CovKind::Diagonal => self.log_var[i],
        }
    }

    #[inline]
    pub fn var_at(&self, i: usize) -> f64 {
        self.log_var_at(i).exp()
    }

    /// The same density with an explicit per-coordinate log-variance.
    pub fn to_diagonal(&self) -> Gaussian {
        Gaussian {
            mean: self.mean.clone(),
            log_var: (0..self.dim()).map(|i| self.log_var_at(i)).collect(),
            kind: CovKind::Diagonal,
        }
    }
}

fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// D_KL[p ‖ q] = ½ Σ_d [σp²/σq² + (μq−μp)²/σq² − 1 + log σq² − log σp²].
pub fn kl_divergence(p: &Gaussian, q: &Gaussian) -> Result<f64> {
    check_dims(p.dim(), q.dim())?;
    let mut acc = 0.0;
    for i in 0..p.dim() {
        let (lp, lq) = (p.log_var_at(i), q.log_var_at(i));
        let diff = q.mean[i] - p.mean[i];
        acc += (lp - lq).exp() + diff * diff * (-lq).exp() - 1.0 + lq - lp;
    }
    Ok(0.5 * acc)
}

/// Partial derivatives of `D_KL[p ‖ q]` with respect to every parameter of
/// both arguments. Log-variance gradients have the stored width of each
/// argument (a spherical argument receives the sum over coordinates).
#[derive(Debug, Clone, PartialEq)]
pub struct KlGrad {
    pub value: f64,
    pub d_mean_p: Vec<f64>,
    pub d_log_var_p: Vec<f64>,
    pub d_mean_q: Vec<f64>,
    pub d_log_var_q: Vec<f64>,
}

pub fn kl_divergence_grad(p: &Gaussian, q: &Gaussian) -> Result<KlGrad> {
    check_dims(p.dim(), q.dim())?;
    let d = p.dim();
    let mut g = KlGrad {
        value: 0.0,
        d_mean_p: vec![0.0; d],
        d_log_var_p: vec![0.0; p.log_var.len()],
        d_mean_q: vec![0.0; d],
        d_log_var_q: vec![0.0; q.log_var.len()],
    };
    let sp = matches!(p.kind, CovKind::Spherical);
    let sq = matches!(q.kind, CovKind::Spherical);
    let mut acc = 0.0;
    for i in 0..d {
        let (lp, lq) = (p.log_var_at(i), q.log_var_at(i));
        let ratio = (lp - lq).exp();
        let inv_q = (-lq).exp();
        let diff = p.mean[i] - q.mean[i];
        let maha = diff * diff * inv_q;
        acc += ratio + maha - 1.0 + lq - lp;

        g.d_mean_p[i] = diff * inv_q;
        g.d_mean_q[i] = -diff * inv_q;
        g.d_log_var_p[if sp { 0 } else { i }] += 0.5 * (ratio - 1.0);
        g.d_log_var_q[if sq { 0 } else { i }] += 0.5 * (1.0 - ratio - maha);
    }
    g.value = 0.5 * acc;
    Ok(g)
}

/// Exact log-density of a diagonal Gaussian at `z`.
pub fn log_density(g: &Gaussian, z: &[f64]) -> Result<f64> {
    check_dims(g.dim(), z.len())?;
    let mut acc = 0.0;
    for (i, zi) in z.iter().enumerate() {
        let lv = g.log_var_at(i);
        let diff = zi - g.mean[i];
        acc += (2.0 * PI).ln() + lv + diff * diff * (-lv).exp();
    }
    Ok(-0.5 * acc)
}

pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64> {
    check_dims(u.len(), v.len())?;
    let (nu, nv) = (norm(u), norm(v));
    if nu == 0.0 || nv == 0.0 {
        return Err(Error::ZeroVector);
    }
    Ok((dot(u, v) / (nu * nv)).clamp(-1.0, 1.0))
}

/// log det Σ = Σ_d log σ_d².
pub fn log_det_cov(g: &Gaussian) -> f64 {
    match g.kind {
        CovKind::Spherical => g.dim() as f64 * g.log_var[0],
        CovKind::Diagonal => g.log_var.iter().sum(),
    }
}
