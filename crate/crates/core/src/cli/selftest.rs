use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::bsg::elbo_estimate;
use crate::error::Result;
use crate::gauss::{kl_divergence, CovKind};
use crate::oracles::gradcheck::{check_bsg_window, check_encoder, check_sg, check_w2g, GradCheck};
use crate::oracles::{
    kl_quadrature_oracle, marginal_loglik_oracle, mass_oracle, random_bsg_model, random_gaussian,
};

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn cov_of(rng: &mut ChaCha8Rng) -> CovKind {
    if rng.gen_bool(0.5) {
        CovKind::Spherical
    } else {
        CovKind::Diagonal
    }
}

fn kl_suite(n: usize) -> Result<SuiteResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst: f64 = 0.0;
    let mut mass: f64 = 0.0;
    for _ in 0..n {
        let dim = rng.gen_range(1..=2);
        let cov = cov_of(&mut rng);
        let p = random_gaussian(&mut rng, dim, cov);
        let q = random_gaussian(&mut rng, dim, cov);
        worst = worst.max((kl_divergence(&p, &q)? - kl_quadrature_oracle(&p, &q, 32)?).abs());
        mass = mass.max((mass_oracle(&p, 32)? - 1.0).abs());
    }
    Ok(SuiteResult {
        name: "kl-quadrature",
        passed: worst <= 1e-6 && mass <= 1e-12,
        detail: format!(
            "{n} pairs, max |closed - quadrature| {worst:.3e}, max |mass - 1| {mass:.3e}"
        ),
    })
}

fn grad_suite(n: u64) -> Result<SuiteResult> {
    let mut worst: Option<GradCheck> = None;
    for seed in 0..n {
        for check in [check_bsg_window, check_encoder, check_sg, check_w2g] {
            let r = check(seed)?;
            if worst
                .as_ref()
                .map_or(true, |w| r.max_rel_err > w.max_rel_err)
            {
                worst = Some(r);
            }
        }
    }
    let w = worst.expect("at least one check");
    Ok(SuiteResult {
        name: "gradients",
        passed: w.max_rel_err <= 1e-4,
        detail: format!(
            "{} configurations, worst {:.3e} ({})",
            4 * n,
            w.max_rel_err,
            w.label
        ),
    })
}

fn elbo_suite(n: usize, samples: usize) -> Result<SuiteResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut slack = f64::INFINITY;
    let mut held = 0;
    for _ in 0..n {
        let v = rng.gen_range(2..=50);
        let (model, vocab) = random_bsg_model(&mut rng, v, 1, 4, CovKind::Spherical)?;
        let center = rng.gen_range(0..v);
        let n_ctx = rng.gen_range(1..=4);
        let ctx: Vec<usize> = (0..n_ctx).map(|_| rng.gen_range(0..v)).collect();
        let bound = marginal_loglik_oracle(&model, &vocab, center, &ctx, 256)?;
        let est = elbo_estimate(&model, &vocab, center, &ctx, samples, &mut rng)?;
        let s = bound + 3.0 * est.std_err - est.value;
        slack = slack.min(s);
        held += (s >= 0.0) as usize;
    }
    Ok(SuiteResult {
        name: "elbo-bound",
        passed: held == n,
        detail: format!(
            "{held}/{n} models with ELBO <= log-marginal + 3 stderr, min slack {slack:.3e}"
        ),
    })
}

/// Run every oracle suite, printing one line per suite.
pub fn selftest(quick: bool, out: &mut dyn Write) -> Result<Vec<SuiteResult>> {
    let (pairs, seeds, models, samples) = if quick {
        (100, 5, 3, 10_000)
    } else {
        (1000, 25, 20, 100_000)
    };
    let results = vec![
        kl_suite(pairs)?,
        grad_suite(seeds)?,
        elbo_suite(models, samples)?,
    ];
    for r in &results {
        writeln!(
            out,
            "{}\t{}\t{}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        )?;
    }
    Ok(results)
}
