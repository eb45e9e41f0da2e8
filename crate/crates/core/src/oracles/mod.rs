//! Brute-force references for the analytic code paths, and synthetic
//! corpora with known sense structure. Nothing here calls the closed-form
//! routines it is meant to check.

pub mod gradcheck;
mod quadrature;
mod synth;

pub use quadrature::{
    gauss_hermite, kl_quadrature_oracle, marginal_loglik_oracle, mass_oracle, ORACLE_MAX_DIM,
    ORACLE_VOCAB_LIMIT,
};
pub use synth::{
    indicator_name, synth_corpus, SenseTag, SynthCorpus, SynthSpec, SynthWord, WordRole,
};

use rand::Rng;

use crate::bsg::BsgModel;
use crate::config::TrainConfig;
use crate::corpus::Vocabulary;
use crate::error::Result;
use crate::gauss::{CovKind, Gaussian};
use crate::optim::Parameters;

/// Gaussian with means in ±2 and log-variances in ±1.5.
pub fn random_gaussian<R: Rng>(rng: &mut R, dim: usize, cov: CovKind) -> Gaussian {
    let mean = (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
    let log_var = (0..cov.width(dim))
        .map(|_| rng.gen_range(-1.5..1.5))
        .collect();
    Gaussian::new(mean, log_var, cov).expect("widths match")
}

/// A BSG model with every parameter drawn uniformly, over a vocabulary
/// `w0..` with random counts.
pub fn random_bsg_model<R: Rng>(
    rng: &mut R,
    vocab_size: usize,
    dim: usize,
    hidden: usize,
    cov: CovKind,
) -> Result<(BsgModel<f64>, Vocabulary)> {
    let cfg = TrainConfig {
        dim,
        hidden,
        cov,
        ..Default::default()
    };
    let mut model = BsgModel::<f64>::init(vocab_size, &cfg, rng);
    let bounds = [1.0, 1.0, 1.0, 1.0, 1.0, 0.5, 0.5, 0.5, 0.2, 0.5];
    for (m, b) in model.blocks_mut().into_iter().zip(bounds) {
        for v in m.as_mut_slice() {
            *v = rng.gen_range(-b..=b);
        }
    }
    let words = (0..vocab_size).map(|i| format!("w{i}")).collect();
    let counts = (0..vocab_size).map(|_| rng.gen_range(1..100)).collect();
    let vocab = Vocabulary::from_counts(words, counts, cfg.subsample, cfg.neg_exponent)?;
    Ok((model, vocab))
}

/// Central differences (f(x + h·e_i) − f(x − h·e_i)) / 2h.
pub fn finite_diff_grad<F: FnMut(&[f64]) -> f64>(mut f: F, x: &[f64], h: f64) -> Vec<f64> {
    let mut p = x.to_vec();
    (0..x.len())
        .map(|i| {
            p[i] = x[i] + h;
            let up = f(&p);
            p[i] = x[i] - h;
            let down = f(&p);
            p[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// max_i |a_i − b_i| / max(|a_i|, |b_i|, floor).
pub fn max_relative_error(a: &[f64], b: &[f64], floor: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadratic_gradient() {
        let x = [0.5, -1.25, 3.0];
        let g = finite_diff_grad(|p| p.iter().map(|v| v * v).sum(), &x, 1e-5);
        for (gi, xi) in g.iter().zip(&x) {
            assert!((gi - 2.0 * xi).abs() < 1e-8);
        }
    }

    #[test]
    fn constant_gradient() {
        assert_eq!(finite_diff_grad(|_| 4.0, &[1.0, 2.0], 1e-3), vec![0.0, 0.0]);
    }
}
