#![allow(dead_code)]

use bsg::baselines::{train_baseline, BaselineModel};
use bsg::cli::{AnyModel, ModelBundle};
use bsg::corpus::{Corpus, VocabConfig, Vocabulary};
use bsg::oracles::{synth_corpus, SynthSpec};
use bsg::{ModelKind, TrainConfig};

pub fn small_config(kind: ModelKind) -> TrainConfig {
    TrainConfig {
        dim: 3,
        hidden: 4,
        window: 2,
        subsample: 1.0,
        batch_size: 32,
        epochs: 1,
        seed: 7,
        cov: if kind == ModelKind::W2gD {
            bsg::CovKind::Diagonal
        } else {
            bsg::CovKind::Spherical
        },
        ..Default::default()
    }
}

pub fn small_corpus() -> (Corpus, Vocabulary) {
    let corpus = synth_corpus(&SynthSpec::polysemy(3_000, 4))
        .unwrap()
        .to_corpus();
    let vcfg = VocabConfig {
        subsample: 1.0,
        ..Default::default()
    };
    let vocab = corpus.count(true).unwrap().finish(&vcfg).unwrap();
    (corpus, vocab)
}

pub fn train_any(
    kind: ModelKind,
    corpus: &Corpus,
    vocab: &Vocabulary,
    cfg: &TrainConfig,
) -> AnyModel {
    match kind {
        ModelKind::Bsg => AnyModel::Bsg(bsg::bsg::train(corpus, vocab, cfg, None).unwrap().0),
        _ => match train_baseline(kind, corpus, vocab, cfg, None).unwrap().0 {
            BaselineModel::Sg(m) => AnyModel::Sg(m),
            BaselineModel::W2g(m) => AnyModel::W2g(m),
        },
    }
}

pub fn trained(kind: ModelKind) -> ModelBundle {
    let (corpus, vocab) = small_corpus();
    let cfg = small_config(kind);
    let model = train_any(kind, &corpus, &vocab, &cfg);
    ModelBundle::new(kind, vocab, cfg, model).unwrap()
}
