use crate::bsg::BsgModel;
use crate::corpus::{Vocabulary, WordId};
use crate::error::{Error, Result};
use crate::gauss::Gaussian;
use crate::real::Real;

/// Largest vocabulary the marginal-likelihood oracle enumerates.
pub const ORACLE_VOCAB_LIMIT: usize = 200;
/// Largest latent dimension the quadrature oracles accept.
pub const ORACLE_MAX_DIM: usize = 2;

/// Orthonormal Hermite recurrence at `x`: (p_n, p_{n-1}, log scale), with
/// the true values equal to the returned ones times exp(scale).
fn hermite_pair(n: usize, x: f64) -> (f64, f64, f64) {
    const PIM4: f64 = 0.751_125_544_464_942_5;
    const BIG: f64 = 1e150;
    let (mut p1, mut p2, mut scale) = (PIM4, 0.0, 0.0);
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = x * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
        if p1.abs() > BIG {
            p1 /= BIG;
            p2 /= BIG;
            scale += BIG.ln();
        }
    }
    (p1, p2, scale)
}

/// Nodes (descending) and weights of `n`-point Gauss–Hermite quadrature
/// for the weight exp(−x²). Positive roots are bracketed by a sign scan,
/// bisected, then polished with one Newton step.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    let nf = n as f64;
    let half = n / 2;
    let top = (2.0 * nf + 1.0).sqrt() + 1.0;
    let mut step = 0.1 * std::f64::consts::PI / (2.0 * nf + 1.0).sqrt();
    let brackets = loop {
        let mut found = Vec::with_capacity(half);
        let mut a = 0.5 * step;
        let mut fa = hermite_pair(n, a).0;
        while a < top {
            let b = a + step;
            let fb = hermite_pair(n, b).0;
            if fa.signum() != fb.signum() {
                found.push((a, b));
            }
            (a, fa) = (b, fb);
        }
        if found.len() == half {
            break found;
        }
        step *= 0.5;
    };
    let mut roots: Vec<f64> = brackets
        .into_iter()
        .map(|(mut a, mut b)| {
            let sa = hermite_pair(n, a).0.signum();
            for _ in 0..200 {
                let m = 0.5 * (a + b);
                if m <= a || m >= b {
                    break;
                }
                if hermite_pair(n, m).0.signum() == sa {
                    a = m;
                } else {
                    b = m;
                }
            }
            let z = 0.5 * (a + b);
            let (p1, p2, _) = hermite_pair(n, z);
            let z1 = z - p1 / ((2.0 * nf).sqrt() * p2);
            if (z1 - z).abs() < (b - a).max(1e-15) * 4.0 {
                z1
            } else {
                z
            }
        })
        .collect();
    roots.sort_by(|a, b| b.total_cmp(a));
    let weight = |z: f64| {
        let (_, p2, scale) = hermite_pair(n, z);
        (-(nf.ln()) - 2.0 * (p2.abs().ln() + scale)).exp()
    };
    let mut x = Vec::with_capacity(n);
    x.extend(roots.iter().copied());
    if n % 2 == 1 {
        x.push(0.0);
    }
    x.extend(roots.iter().rev().map(|r| -r));
    let w = x.iter().map(|&z| weight(z)).collect();
    (x, w)
}

fn check_oracle_dim(d: usize) -> Result<()> {
    if d == 0 || d > ORACLE_MAX_DIM {
        return Err(Error::Unsupported(format!(
            "quadrature oracle needs latent dimension 1 or 2, got {d}"
        )));
    }
    Ok(())
}

fn check_nodes(nodes: usize) -> Result<()> {
    if nodes < 16 {
        return Err(Error::InvalidConfig(format!(
            "quadrature needs at least 16 nodes, got {nodes}"
        )));
    }
    Ok(())
}

/// Diagonal Gaussian read coordinate-wise: (means, variances).
fn coords(g: &Gaussian) -> (Vec<f64>, Vec<f64>) {
    let v = (0..g.dim()).map(|i| g.log_var_at(i).exp()).collect();
    (g.mean().to_vec(), v)
}

fn log_normal(x: &[f64], mean: &[f64], var: &[f64]) -> f64 {
    x.iter()
        .zip(mean)
        .zip(var)
        .map(|((x, m), v)| -0.5 * ((2.0 * std::f64::consts::PI * v).ln() + (x - m).powi(2) / v))
        .sum()
}

/// Tensor-product grid for E_{N(mean, diag var)}[f]: points and
/// normalized weights (summing to one).
fn grid(mean: &[f64], var: &[f64], nodes: usize) -> Vec<(Vec<f64>, f64)> {
    let (x, w) = gauss_hermite(nodes);
    let norm = std::f64::consts::PI.sqrt();
    let axis: Vec<Vec<(f64, f64)>> = mean
        .iter()
        .zip(var)
        .map(|(m, v)| {
            let s = (2.0 * v).sqrt();
            x.iter()
                .zip(&w)
                .map(|(xi, wi)| (m + s * xi, wi / norm))
                .collect()
        })
        .collect();
    let mut pts: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 1.0)];
    for a in &axis {
        pts = pts
            .into_iter()
            .flat_map(|(p, pw)| {
                a.iter().map(move |&(xi, wi)| {
                    let mut q = p.clone();
                    q.push(xi);
                    (q, pw * wi)
                })
            })
            .collect();
    }
    pts
}

/// ∫ p log(p/q) by quadrature under p.
pub fn kl_quadrature_oracle(p: &Gaussian, q: &Gaussian, nodes: usize) -> Result<f64> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            expected: p.dim(),
            found: q.dim(),
        });
    }
    check_oracle_dim(p.dim())?;
    check_nodes(nodes)?;
    let (mp, vp) = coords(p);
    let (mq, vq) = coords(q);
    Ok(grid(&mp, &vp, nodes)
        .iter()
        .map(|(z, w)| w * (log_normal(z, &mp, &vp) - log_normal(z, &mq, &vq)))
        .sum())
}

/// Probability mass of `g` integrated by quadrature; one up to rounding.
pub fn mass_oracle(g: &Gaussian, nodes: usize) -> Result<f64> {
    check_oracle_dim(g.dim())?;
    check_nodes(nodes)?;
    let (m, v) = coords(g);
    Ok(grid(&m, &v, nodes).iter().map(|(_, w)| w).sum())
}

fn log_sum_exp(xs: impl Iterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.collect();
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// log ∫ Π_j p(c_j | z) p(z | center) dz with the softmax decoder
/// p(c | z) ∝ N(z; context_c) p(c), integrated under the center's prior.
/// Softmax crossings make the integrand far from Gaussian, so convergence
/// in `nodes` is slower than for the KL oracle; 256 nodes in 1-D are
/// accurate to about 1e-9 on small random models.
pub fn marginal_loglik_oracle<T: Real>(
    model: &BsgModel<T>,
    vocab: &Vocabulary,
    center: WordId,
    contexts: &[WordId],
    nodes: usize,
) -> Result<f64> {
    let n = model.vocab_size();
    if n > ORACLE_VOCAB_LIMIT {
        return Err(Error::VocabTooLarge {
            size: n,
            limit: ORACLE_VOCAB_LIMIT,
        });
    }
    if vocab.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: vocab.len(),
        });
    }
    check_oracle_dim(model.dim())?;
    check_nodes(nodes)?;
    for &w in std::iter::once(&center).chain(contexts) {
        if w >= n {
            return Err(Error::InvalidWordId { id: w, size: n });
        }
    }
    let d = model.dim();
    let row = |m: &crate::real::Matrix<T>, w: usize| -> Vec<f64> {
        m.row(w).iter().map(|v| v.to_f64()).collect()
    };
    let vars = |lv: Vec<f64>| -> Vec<f64> {
        if lv.len() == 1 {
            vec![lv[0].exp(); d]
        } else {
            lv.iter().map(|v| v.exp()).collect()
        }
    };
    let prior_mean = row(&model.prior.mean, center);
    let prior_var = vars(row(&model.prior.log_var, center));
    let ctx: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
        .map(|w| {
            (
                row(&model.context.mean, w),
                vars(row(&model.context.log_var, w)),
            )
        })
        .collect();
    let total: f64 = vocab.counts().iter().map(|&c| c as f64).sum();
    let log_p: Vec<f64> = vocab
        .counts()
        .iter()
        .map(|&c| (c as f64 / total).ln())
        .collect();

    let terms = grid(&prior_mean, &prior_var, nodes)
        .into_iter()
        .filter(|(_, w)| *w > 0.0)
        .map(|(z, w)| {
            let scores: Vec<f64> = ctx
                .iter()
                .zip(&log_p)
                .map(|((m, v), lp)| log_normal(&z, m, v) + lp)
                .collect();
            let log_norm = log_sum_exp(scores.iter().copied());
            w.ln() + contexts.iter().map(|&c| scores[c] - log_norm).sum::<f64>()
        });
    Ok(log_sum_exp(terms))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss::CovKind;

    #[test]
    fn hermite_rule_integrates_moments() {
        for n in [16, 17, 64, 128, 256, 301] {
            let (x, w) = gauss_hermite(n);
            let pi = std::f64::consts::PI;
            let m0: f64 = w.iter().sum();
            let m2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
            let m4: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
            assert!((m0 - pi.sqrt()).abs() < 1e-13, "n={n} m0={m0}");
            assert!((m2 - pi.sqrt() / 2.0).abs() < 1e-13);
            assert!((m4 - 3.0 * pi.sqrt() / 4.0).abs() < 1e-12);
        }
    }

    #[test]
    fn kl_oracle_fixtures() {
        let s = |m: f64, v: f64| Gaussian::spherical(vec![m], v.ln()).unwrap();
        assert!(
            kl_quadrature_oracle(&s(0.3, 2.0), &s(0.3, 2.0), 64)
                .unwrap()
                .abs()
                <= 1e-9
        );
        assert!((kl_quadrature_oracle(&s(0.0, 1.0), &s(1.0, 1.0), 64).unwrap() - 0.5).abs() < 1e-8);
        assert!(
            (kl_quadrature_oracle(&s(0.0, 4.0), &s(0.0, 1.0), 64).unwrap()
                - 0.806_852_819_440_054_7)
                .abs()
                < 1e-6
        );
        let three = Gaussian::standard(3, CovKind::Diagonal);
        assert!(kl_quadrature_oracle(&three, &three, 64).is_err());
        assert!(kl_quadrature_oracle(&s(0.0, 1.0), &s(0.0, 1.0), 8).is_err());
    }

    #[test]
    fn mass_is_one() {
        let g = Gaussian::diagonal(vec![1.0, -3.0], vec![0.5, -1.0]).unwrap();
        assert!((mass_oracle(&g, 32).unwrap() - 1.0).abs() < 1e-13);
    }
}
