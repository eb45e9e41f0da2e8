use std::fmt::Write as _;

use crate::corpus::{Vocabulary, WordId};
use crate::error::{Error, Result};
use crate::gauss::{cosine, kl_divergence, log_det_cov};

use super::metrics::{best_f1_threshold, gap, pearson, spearman};
use super::{EntailmentPair, LexsubInstance, SimilarityPair, WordModel};

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityReport {
    pub rho: f64,
    pub n_used: usize,
    pub n_oov: usize,
}

/// Spearman correlation between gold scores and cosine of the means.
pub fn eval_similarity<M: WordModel + ?Sized>(
    model: &M,
    pairs: &[SimilarityPair],
) -> Result<SimilarityReport> {
    let (mut pred, mut gold) = (Vec::new(), Vec::new());
    let mut n_oov = 0;
    for p in pairs {
        match (model.lookup(&p.word1), model.lookup(&p.word2)) {
            (Some(a), Some(b)) => {
                pred.push(cosine(&model.mean(a), &model.mean(b))?);
                gold.push(p.gold);
            }
            _ => n_oov += 1,
        }
    }
    if pred.is_empty() {
        return Err(Error::NoUsablePairs { n_oov });
    }
    Ok(SimilarityReport {
        rho: spearman(&pred, &gold)?,
        n_used: pred.len(),
        n_oov,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EntailMeasure {
    /// −KL[prior_w1 ‖ prior_w2].
    NegKl,
    /// Cosine of the means.
    Cosine,
}

impl std::str::FromStr for EntailMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "neg_kl" | "kl" => Ok(EntailMeasure::NegKl),
            "cosine" | "cosine_mean" => Ok(EntailMeasure::Cosine),
            other => Err(Error::InvalidConfig(format!("unknown measure {other:?}"))),
        }
    }
}

pub fn entailment_score<M: WordModel + ?Sized>(
    model: &M,
    w1: WordId,
    w2: WordId,
    measure: EntailMeasure,
) -> Result<f64> {
    match measure {
        EntailMeasure::NegKl => Ok(-kl_divergence(&model.prior(w1)?, &model.prior(w2)?)?),
        EntailMeasure::Cosine => cosine(&model.mean(w1), &model.mean(w2)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredPair {
    pub word1: String,
    pub word2: String,
    pub score: f64,
    pub label: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntailmentReport {
    pub f1: f64,
    pub threshold: f64,
    pub n_oov: usize,
    pub scores: Vec<ScoredPair>,
}

pub fn eval_entailment<M: WordModel + ?Sized>(
    model: &M,
    pairs: &[EntailmentPair],
    measure: EntailMeasure,
) -> Result<EntailmentReport> {
    let mut scores = Vec::new();
    let mut n_oov = 0;
    for p in pairs {
        match (model.lookup(&p.word1), model.lookup(&p.word2)) {
            (Some(a), Some(b)) => scores.push(ScoredPair {
                word1: p.word1.clone(),
                word2: p.word2.clone(),
                score: entailment_score(model, a, b, measure)?,
                label: p.label,
            }),
            _ => n_oov += 1,
        }
    }
    if scores.is_empty() {
        return Err(Error::NoUsablePairs { n_oov });
    }
    let s: Vec<f64> = scores.iter().map(|p| p.score).collect();
    let l: Vec<bool> = scores.iter().map(|p| p.label).collect();
    let (threshold, f1) = best_f1_threshold(&s, &l)?;
    Ok(EntailmentReport {
        f1,
        threshold,
        n_oov,
        scores,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HistBin {
    pub lo: f64,
    pub hi: f64,
    pub positive: usize,
    pub negative: usize,
}

/// Equal-width histogram of scores split by label.
pub fn score_histogram(scores: &[ScoredPair], bins: usize) -> Vec<HistBin> {
    if scores.is_empty() || bins == 0 {
        return Vec::new();
    }
    let lo = scores.iter().map(|p| p.score).fold(f64::INFINITY, f64::min);
    let hi = scores
        .iter()
        .map(|p| p.score)
        .fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo {
        (hi - lo) / bins as f64
    } else {
        1.0
    };
    let mut out: Vec<HistBin> = (0..bins)
        .map(|b| HistBin {
            lo: lo + b as f64 * width,
            hi: lo + (b + 1) as f64 * width,
            positive: 0,
            negative: 0,
        })
        .collect();
    for p in scores {
        let b = (((p.score - lo) / width) as usize).min(bins - 1);
        if p.label {
            out[b].positive += 1;
        } else {
            out[b].negative += 1;
        }
    }
    out
}

pub fn histogram_csv(bins: &[HistBin]) -> String {
    let mut s = String::from("bin_lo,bin_hi,positive,negative\n");
    for b in bins {
        let _ = writeln!(s, "{},{},{},{}", b.lo, b.hi, b.positive, b.negative);
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionReport {
    pub accuracy: f64,
    pub n_used: usize,
    pub n_oov: usize,
}

/// True when `w1` is predicted to entail `w2`: the narrower Gaussian sits
/// inside the broader one, so KL from it is the smaller direction.
pub fn predicts_forward<M: WordModel + ?Sized>(model: &M, w1: WordId, w2: WordId) -> Result<bool> {
    let (p1, p2) = (model.prior(w1)?, model.prior(w2)?);
    Ok(kl_divergence(&p1, &p2)? <= kl_divergence(&p2, &p1)?)
}

fn direction_accuracy<F>(pairs: &[EntailmentPair], mut predict: F) -> Result<DirectionReport>
where
    F: FnMut(&EntailmentPair) -> Result<Option<bool>>,
{
    let gold: Vec<&EntailmentPair> = pairs.iter().filter(|p| p.label).collect();
    if gold.is_empty() {
        return Err(Error::EmptyInput);
    }
    let (mut correct, mut used, mut n_oov) = (0, 0, 0);
    for p in gold {
        match predict(p)? {
            Some(forward) => {
                used += 1;
                correct += forward as usize;
            }
            None => n_oov += 1,
        }
    }
    if used == 0 {
        return Err(Error::NoUsablePairs { n_oov });
    }
    Ok(DirectionReport {
        accuracy: correct as f64 / used as f64,
        n_used: used,
        n_oov,
    })
}

/// Fraction of gold pairs whose direction is recovered from prior KL.
pub fn eval_directionality<M: WordModel + ?Sized>(
    model: &M,
    pairs: &[EntailmentPair],
) -> Result<DirectionReport> {
    direction_accuracy(pairs, |p| {
        match (model.lookup(&p.word1), model.lookup(&p.word2)) {
            (Some(a), Some(b)) => predicts_forward(model, a, b).map(Some),
            _ => Ok(None),
        }
    })
}

/// The rarer word entails the more frequent one.
pub fn frequency_direction_baseline(
    vocab: &Vocabulary,
    pairs: &[EntailmentPair],
) -> Result<DirectionReport> {
    direction_accuracy(pairs, |p| {
        Ok(match (vocab.id(&p.word1), vocab.id(&p.word2)) {
            (Some(a), Some(b)) => Some(vocab.count(a) <= vocab.count(b)),
            _ => None,
        })
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedCandidate {
    pub word: String,
    /// `None` for out-of-vocabulary candidates, which rank last.
    pub score: Option<f64>,
}

fn context_ids<M: WordModel + ?Sized>(
    model: &M,
    inst: &LexsubInstance,
    window: usize,
) -> Vec<WordId> {
    let i = inst.target_index;
    let lo = i.saturating_sub(window);
    let hi = (i + window).min(inst.context_tokens.len().saturating_sub(1));
    (lo..=hi)
        .filter(|&k| k != i)
        .filter_map(|k| model.lookup(&inst.context_tokens[k]))
        .collect()
}

/// Sort scored candidates by `key` (stable), then append OOV ones.
fn finish_ranking(
    scored: Vec<(usize, Option<f64>)>,
    inst: &LexsubInstance,
    ascending: bool,
) -> Vec<RankedCandidate> {
    let (mut known, unknown): (Vec<_>, Vec<_>) = scored.into_iter().partition(|(_, s)| s.is_some());
    known.sort_by(|a, b| {
        let (x, y) = (a.1.unwrap(), b.1.unwrap());
        if ascending {
            x.total_cmp(&y)
        } else {
            y.total_cmp(&x)
        }
    });
    known
        .into_iter()
        .chain(unknown)
        .map(|(i, score)| RankedCandidate {
            word: inst.candidates[i].clone(),
            score,
        })
        .collect()
}

/// Candidates ordered by KL[q ‖ prior_s] ascending, where q is the
/// posterior of the target in its window.
pub fn lexsub_rank<M: WordModel + ?Sized>(
    model: &M,
    inst: &LexsubInstance,
    window: usize,
) -> Result<Vec<RankedCandidate>> {
    inst.validate()?;
    let target = model
        .lookup(&inst.target)
        .ok_or_else(|| Error::OutOfVocabulary(inst.target.clone()))?;
    let ids: Vec<Option<WordId>> = inst.candidates.iter().map(|c| model.lookup(c)).collect();
    if ids.iter().all(Option::is_none) {
        return Err(Error::AllCandidatesOov);
    }
    let q = model.posterior(target, &context_ids(model, inst, window))?;
    let scored = ids
        .iter()
        .enumerate()
        .map(|(i, id)| match id {
            Some(s) => Ok((i, Some(kl_divergence(&q, &model.prior(*s)?)?))),
            None => Ok((i, None)),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(finish_ranking(scored, inst, true))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CosineCombo {
    Add,
    Mult,
}

impl std::str::FromStr for CosineCombo {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "add" => Ok(CosineCombo::Add),
            "mult" => Ok(CosineCombo::Mult),
            other => Err(Error::InvalidConfig(format!(
                "unknown combination {other:?}"
            ))),
        }
    }
}

/// Context-sensitive cosine scoring of substitutes over point embeddings.
pub fn add_mult_baseline<M: WordModel + ?Sized>(
    model: &M,
    inst: &LexsubInstance,
    window: usize,
    mode: CosineCombo,
) -> Result<Vec<RankedCandidate>> {
    inst.validate()?;
    let target = model
        .lookup(&inst.target)
        .ok_or_else(|| Error::OutOfVocabulary(inst.target.clone()))?;
    let ids: Vec<Option<WordId>> = inst.candidates.iter().map(|c| model.lookup(c)).collect();
    if ids.iter().all(Option::is_none) {
        return Err(Error::AllCandidatesOov);
    }
    let t = model.mean(target);
    let ctx: Vec<Vec<f64>> = context_ids(model, inst, window)
        .into_iter()
        .map(|c| model.mean(c))
        .collect();
    let n = (ctx.len() + 1) as f64;
    let scored = ids
        .iter()
        .enumerate()
        .map(|(i, id)| {
            let Some(s) = id else { return Ok((i, None)) };
            let s = model.mean(*s);
            let cosines = std::iter::once(cosine(&s, &t)).chain(ctx.iter().map(|c| cosine(&s, c)));
            let score = match mode {
                CosineCombo::Add => cosines.sum::<Result<f64>>()? / n,
                CosineCombo::Mult => {
                    let mut prod = 1.0;
                    for c in cosines {
                        prod *= (c? + 1.0) / 2.0;
                    }
                    prod.powf(1.0 / n)
                }
            };
            Ok((i, Some(score)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(finish_ranking(scored, inst, false))
}

/// GAP of a ranking; gold words missing from the candidate list still
/// count in the ideal ranking.
pub fn ranking_gap(ranking: &[RankedCandidate], inst: &LexsubInstance) -> Result<f64> {
    let ranked: Vec<f64> = ranking
        .iter()
        .map(|c| inst.gold_weights.get(&c.word).copied().unwrap_or(0.0))
        .collect();
    let gold: Vec<f64> = inst.gold_weights.values().copied().collect();
    gap(&ranked, &gold)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LexsubReport {
    pub mean_gap: f64,
    pub n_scored: usize,
    pub n_skipped: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LexsubMethod {
    Kl,
    Cosine(CosineCombo),
}

pub fn eval_lexsub<M: WordModel + ?Sized>(
    model: &M,
    instances: &[LexsubInstance],
    window: usize,
    method: LexsubMethod,
) -> Result<LexsubReport> {
    let (mut total, mut n, mut skipped) = (0.0, 0, 0);
    for inst in instances {
        let ranking = match method {
            LexsubMethod::Kl => lexsub_rank(model, inst, window),
            LexsubMethod::Cosine(mode) => add_mult_baseline(model, inst, window, mode),
        };
        match ranking {
            Ok(r) => {
                total += ranking_gap(&r, inst)?;
                n += 1;
            }
            Err(Error::OutOfVocabulary(_) | Error::AllCandidatesOov | Error::EmptyContext) => {
                skipped += 1
            }
            Err(e) => return Err(e),
        }
    }
    if n == 0 {
        return Err(Error::NoUsablePairs { n_oov: skipped });
    }
    Ok(LexsubReport {
        mean_gap: total / n as f64,
        n_scored: n,
        n_skipped: skipped,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogdetRow {
    pub word: String,
    pub log_count: f64,
    pub log_det: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogdetReport {
    pub rows: Vec<LogdetRow>,
    /// `None` when the correlation is undefined.
    pub pearson: Option<f64>,
}

impl LogdetReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("word,log_count,log_det\n");
        for r in &self.rows {
            let _ = writeln!(s, "{},{},{}", r.word, r.log_count, r.log_det);
        }
        match self.pearson {
            Some(r) => {
                let _ = writeln!(s, "# pearson,{r}");
            }
            None => s.push_str("# pearson,undefined\n"),
        }
        s
    }
}

/// Log-determinant of every prior against log frequency.
pub fn logdet_frequency_report<M: WordModel + ?Sized>(
    model: &M,
    vocab: &Vocabulary,
) -> Result<LogdetReport> {
    if model.vocab_size() != vocab.len() {
        return Err(Error::DimensionMismatch {
            expected: vocab.len(),
            found: model.vocab_size(),
        });
    }
    let rows = (0..vocab.len())
        .map(|w| {
            Ok(LogdetRow {
                word: vocab.word(w).to_string(),
                log_count: (vocab.count(w) as f64).ln(),
                log_det: log_det_cov(&model.prior(w)?),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let xs: Vec<f64> = rows.iter().map(|r| r.log_count).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.log_det).collect();
    Ok(LogdetReport {
        pearson: pearson(&xs, &ys).ok(),
        rows,
    })
}
