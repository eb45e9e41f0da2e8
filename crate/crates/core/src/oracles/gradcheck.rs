//! Analytic gradients against central finite differences on random small
//! 64-bit models.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::baselines::{
    sg_window_loss, sg_window_loss_gradients, w2g_energy, w2g_window_loss,
    w2g_window_loss_gradients, SgModel, W2gModel,
};
use crate::bsg::{window_loss, window_loss_gradients, BsgModel, LossConfig};
use crate::config::{Energy, Objective, Pairing, TrainConfig};
use crate::corpus::WordId;
use crate::encoder::{encoder_backward, infer_posterior, EncoderParams};
use crate::error::Result;
use crate::gauss::{kl_divergence, CovKind};
use crate::optim::{flatten_grad, Parameters};
use crate::real::Real;

use super::{finite_diff_grad, max_relative_error};

pub const CHECK_VOCAB: usize = 20;
pub const CHECK_DIM: usize = 4;
const CHECK_HIDDEN: usize = 5;
const STEP: f64 = 1e-5;
/// Gradient entries smaller than this are compared absolutely.
pub const REL_FLOOR: f64 = 1e-4;
/// Hinge arguments closer than this to zero are redrawn.
const KINK_GUARD: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheck {
    pub max_rel_err: f64,
    pub n_params: usize,
    pub label: String,
}

fn cov_of(rng: &mut ChaCha8Rng) -> CovKind {
    if rng.gen_bool(0.5) {
        CovKind::Spherical
    } else {
        CovKind::Diagonal
    }
}

fn ids(rng: &mut ChaCha8Rng, n: usize) -> Vec<WordId> {
    (0..n).map(|_| rng.gen_range(0..CHECK_VOCAB)).collect()
}

/// Overwrite every block with uniform values in `±bounds[block]`.
fn randomize<T: Real, P: Parameters<T>>(model: &mut P, bounds: &[f64], rng: &mut ChaCha8Rng) {
    for (m, &b) in model.blocks_mut().into_iter().zip(bounds) {
        for v in m.as_mut_slice() {
            *v = T::from_f64(rng.gen_range(-b..=b));
        }
    }
}

const ENCODER_BOUNDS: [f64; 6] = [1.0, 0.5, 0.5, 0.5, 0.2, 0.5];

fn compare<P: Parameters<f64> + Clone>(
    model: &P,
    analytic: Vec<f64>,
    mut loss: impl FnMut(&P) -> f64,
    label: String,
) -> GradCheck {
    let x = model.to_flat();
    let mut probe = model.clone();
    let numeric = finite_diff_grad(
        |p| {
            probe.set_flat(p);
            loss(&probe)
        },
        &x,
        STEP,
    );
    GradCheck {
        max_rel_err: max_relative_error(&analytic, &numeric, REL_FLOOR),
        n_params: x.len(),
        label,
    }
}

/// One random BSG window-loss configuration.
pub fn check_bsg_window(seed: u64) -> Result<GradCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let cov = cov_of(&mut rng);
        let pairing = if rng.gen_bool(0.5) {
            Pairing::Aligned
        } else {
            Pairing::AllPairs
        };
        let npp = if pairing == Pairing::Aligned {
            1
        } else {
            rng.gen_range(1..=3)
        };
        let objective = if rng.gen_bool(0.7) {
            Objective::Hinge
        } else {
            Objective::Soft
        };
        let lc = LossConfig {
            objective,
            margin: rng.gen_range(0.1..2.0),
            pairing,
        };
        let cfg = TrainConfig {
            dim: CHECK_DIM,
            hidden: CHECK_HIDDEN,
            cov,
            ..Default::default()
        };
        let mut model = BsgModel::<f64>::init(CHECK_VOCAB, &cfg, &mut rng);
        randomize(
            &mut model,
            &[1.0, 1.0, 1.0, 1.0, 1.0, 0.5, 0.5, 0.5, 0.2, 0.5],
            &mut rng,
        );
        let center = rng.gen_range(0..CHECK_VOCAB);
        let n_pos = rng.gen_range(1..=4);
        let pos = ids(&mut rng, n_pos);
        let neg = ids(&mut rng, n_pos * npp);
        if objective == Objective::Hinge {
            let q = model.posterior(center, &pos)?;
            let kl = |w| kl_divergence(&q, &model.context_of(w)?);
            let kp = pos.iter().map(|&w| kl(w)).collect::<Result<Vec<_>>>()?;
            let kn = neg.iter().map(|&w| kl(w)).collect::<Result<Vec<_>>>()?;
            let near = match pairing {
                Pairing::Aligned => kp
                    .iter()
                    .zip(&kn)
                    .any(|(a, b)| (a - b + lc.margin).abs() < KINK_GUARD),
                Pairing::AllPairs => kp
                    .iter()
                    .any(|a| kn.iter().any(|b| (a - b + lc.margin).abs() < KINK_GUARD)),
            };
            if near {
                continue;
            }
        }
        let (_, g) = window_loss_gradients(&model, center, &pos, &neg, &lc)?;
        let analytic = flatten_grad(&model, &g.into_grad_set());
        let label = format!("bsg {cov:?} {objective:?} {pairing:?} npp={npp} positives={n_pos}");
        return Ok(compare(
            &model,
            analytic,
            |m| window_loss(m, center, &pos, &neg, &lc).unwrap_or(f64::NAN),
            label,
        ));
    }
}

/// Encoder backward pass for a random linear function of its outputs.
pub fn check_encoder(seed: u64) -> Result<GradCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cov = cov_of(&mut rng);
    let mut enc = EncoderParams::<f64>::init(CHECK_VOCAB, CHECK_DIM, CHECK_HIDDEN, cov, &mut rng);
    randomize(&mut enc, &ENCODER_BOUNDS, &mut rng);
    let center = rng.gen_range(0..CHECK_VOCAB);
    let n_ctx = rng.gen_range(1..=5);
    let ctx = ids(&mut rng, n_ctx);
    let a: Vec<f64> = (0..CHECK_DIM).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let b: Vec<f64> = (0..cov.width(CHECK_DIM))
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    let g = encoder_backward(&enc, center, &ctx, &a, &b)?;
    let analytic = flatten_grad(&enc, &g.into_grad_set());
    let objective = |e: &EncoderParams<f64>| match infer_posterior(e, center, &ctx) {
        Ok(q) => {
            let m: f64 = q.mean().iter().zip(&a).map(|(x, y)| x * y).sum();
            let l: f64 = q.log_var().iter().zip(&b).map(|(x, y)| x * y).sum();
            m + l
        }
        Err(_) => f64::NAN,
    };
    Ok(compare(
        &enc,
        analytic,
        objective,
        format!("encoder {cov:?} contexts={n_ctx}"),
    ))
}

pub fn check_sg(seed: u64) -> Result<GradCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut model = SgModel::<f64>::init(CHECK_VOCAB, CHECK_DIM, &mut rng);
    randomize(&mut model, &[1.0, 1.0], &mut rng);
    let center = rng.gen_range(0..CHECK_VOCAB);
    let n_pos = rng.gen_range(1..=4);
    let npp = rng.gen_range(1..=3);
    let pos = ids(&mut rng, n_pos);
    let neg = ids(&mut rng, n_pos * npp);
    let (_, g) = sg_window_loss_gradients(&model, center, &pos, &neg)?;
    let analytic = flatten_grad(&model, &g.into_grad_set());
    Ok(compare(
        &model,
        analytic,
        |m| sg_window_loss(m, center, &pos, &neg).unwrap_or(f64::NAN),
        format!("sg positives={n_pos} npp={npp}"),
    ))
}

pub fn check_w2g(seed: u64) -> Result<GradCheck> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let cov = cov_of(&mut rng);
        let energy = if rng.gen_bool(0.5) {
            Energy::ExpectedLikelihood
        } else {
            Energy::NegatedKl
        };
        let cfg = TrainConfig {
            dim: CHECK_DIM,
            energy,
            ..Default::default()
        };
        let mut model = W2gModel::<f64>::init(CHECK_VOCAB, cov, &cfg, &mut rng);
        randomize(&mut model, &[1.0, 1.0], &mut rng);
        let margin = rng.gen_range(0.1..2.0);
        let center = rng.gen_range(0..CHECK_VOCAB);
        let n_pos = rng.gen_range(1..=4);
        let npp = rng.gen_range(1..=3);
        let pos = ids(&mut rng, n_pos);
        let neg = ids(&mut rng, n_pos * npp);
        let w = model.table.gaussian(center)?;
        let e = |c| w2g_energy(&w, &model.table.gaussian(c)?, energy);
        let mut near = false;
        for (j, &c) in pos.iter().enumerate() {
            let ep = e(c)?;
            for &n in &neg[j * npp..(j + 1) * npp] {
                near |= (margin - ep + e(n)?).abs() < KINK_GUARD;
            }
        }
        if near {
            continue;
        }
        let (_, g) = w2g_window_loss_gradients(&model, center, &pos, &neg, margin)?;
        let analytic = flatten_grad(&model, &g.into_grad_set());
        return Ok(compare(
            &model,
            analytic,
            |m| w2g_window_loss(m, center, &pos, &neg, margin).unwrap_or(f64::NAN),
            format!("w2g {cov:?} {energy:?} positives={n_pos} npp={npp}"),
        ));
    }
}
