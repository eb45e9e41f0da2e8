//! Comparison models trained on the same example stream as BSG.

mod sg;
mod w2g;

pub use sg::{sg_window_loss, sg_window_loss_gradients, SgGrads, SgModel};
pub use w2g::{
    clip_params, w2g_energy, w2g_energy_grad, w2g_window_loss, w2g_window_loss_gradients,
    EnergyGrad, W2gGrads, W2gModel,
};

use std::io::Write;

use crate::config::ModelKind;
use crate::corpus::{Corpus, Vocabulary};
use crate::error::{Error, Result};
use crate::gauss::CovKind;
use crate::trainer::{self, TrainReport};
use crate::TrainConfig;

#[derive(Debug, Clone, PartialEq)]
pub enum BaselineModel {
    Sg(SgModel<f32>),
    W2g(W2gModel<f32>),
}

pub fn train_baseline(
    kind: ModelKind,
    corpus: &Corpus,
    vocab: &Vocabulary,
    cfg: &TrainConfig,
    telemetry: Option<&mut dyn Write>,
) -> Result<(BaselineModel, TrainReport)> {
    cfg.validate()?;
    let mut rng = trainer::init_rng(cfg.seed);
    match kind {
        ModelKind::Sg => {
            let mut m = SgModel::<f32>::init(vocab.len(), cfg.dim, &mut rng);
            let r = trainer::train_model(&mut m, kind, corpus, vocab, cfg, telemetry)?;
            Ok((BaselineModel::Sg(m), r))
        }
        ModelKind::W2gS | ModelKind::W2gD => {
            let cov = if kind == ModelKind::W2gS {
                CovKind::Spherical
            } else {
                CovKind::Diagonal
            };
            let mut m = W2gModel::<f32>::init(vocab.len(), cov, cfg, &mut rng);
            let r = trainer::train_model(&mut m, kind, corpus, vocab, cfg, telemetry)?;
            Ok((BaselineModel::W2g(m), r))
        }
        ModelKind::Bsg => Err(Error::InvalidConfig("bsg is not a baseline".into())),
    }
}
