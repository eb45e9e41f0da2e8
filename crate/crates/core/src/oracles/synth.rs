use std::io::Write;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WordRole {
    /// One sense per occurrence, drawn from two or more groups.
    Polysemous,
    /// Occurs in the contexts of every group of its hyponyms.
    Hypernym,
    Plain,
}

/// A target word and the sense groups whose indicators surround it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthWord {
    pub name: String,
    pub role: WordRole,
    pub groups: Vec<usize>,
    pub weights: Vec<f64>,
}

/// Layout of a synthetic corpus. Every target occurrence is a segment of
/// `context_per_side` indicator words of one sense group, the target, and
/// `context_per_side` more indicators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_groups: usize,
    pub indicators_per_group: usize,
    pub context_per_side: usize,
    pub n_fillers: usize,
    /// Probability that an indicator slot holds a filler word instead.
    pub filler_rate: f64,
    pub words: Vec<SynthWord>,
    pub n_docs: usize,
    pub tokens_per_doc: usize,
    pub seed: u64,
}

pub fn indicator_name(group: usize, i: usize) -> String {
    format!("g{group}i{i}")
}

fn filler_name(i: usize) -> String {
    format!("f{i}")
}

impl SynthSpec {
    /// Two polysemous words with two senses each, mixed evenly.
    pub fn polysemy(total_tokens: usize, seed: u64) -> Self {
        let word = |name: &str, a, b| SynthWord {
            name: name.into(),
            role: WordRole::Polysemous,
            groups: vec![a, b],
            weights: vec![0.5, 0.5],
        };
        SynthSpec {
            n_groups: 4,
            indicators_per_group: 8,
            context_per_side: 3,
            n_fillers: 20,
            filler_rate: 0.1,
            words: vec![word("kiwi", 0, 1), word("bank", 2, 3)],
            n_docs: (total_tokens / 100).max(1),
            tokens_per_doc: 100,
            seed,
        }
    }

    /// `n_hyper` hypernyms over `per` hyponyms each; every hyponym owns one
    /// group and its hypernym covers all of them.
    pub fn hypernymy(n_hyper: usize, per: usize, total_tokens: usize, seed: u64) -> Self {
        let mut words = Vec::new();
        for h in 0..n_hyper {
            let groups: Vec<usize> = (h * per..(h + 1) * per).collect();
            for &g in &groups {
                words.push(SynthWord {
                    name: format!("hypo{g}"),
                    role: WordRole::Plain,
                    groups: vec![g],
                    weights: vec![1.0],
                });
            }
            words.push(SynthWord {
                name: format!("hyper{h}"),
                role: WordRole::Hypernym,
                weights: vec![1.0 / per as f64; per],
                groups,
            });
        }
        SynthSpec {
            n_groups: n_hyper * per,
            indicators_per_group: 6,
            context_per_side: 3,
            n_fillers: 20,
            filler_rate: 0.1,
            words,
            n_docs: (total_tokens / 100).max(1),
            tokens_per_doc: 100,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.n_groups == 0 || self.indicators_per_group == 0 || self.words.is_empty() {
            return bad("synthetic corpus needs groups, indicators and target words".into());
        }
        if self.tokens_per_doc < 2 * self.context_per_side + 1 {
            return bad("tokens_per_doc shorter than one segment".into());
        }
        if !(0.0..=1.0).contains(&self.filler_rate)
            || (self.filler_rate > 0.0 && self.n_fillers == 0)
        {
            return bad("invalid filler settings".into());
        }
        for w in &self.words {
            if w.groups.is_empty() || w.groups.len() != w.weights.len() {
                return bad(format!(
                    "word {:?}: groups and weights differ in length",
                    w.name
                ));
            }
            if let Some(g) = w.groups.iter().find(|&&g| g >= self.n_groups) {
                return bad(format!("word {:?}: group {g} out of range", w.name));
            }
            if w.weights.iter().any(|&x| !(x >= 0.0))
                || (w.weights.iter().sum::<f64>() - 1.0).abs() > 1e-9
            {
                return bad(format!(
                    "word {:?}: weights must be non-negative and sum to 1",
                    w.name
                ));
            }
            if matches!(w.role, WordRole::Polysemous | WordRole::Hypernym) && w.groups.len() < 2 {
                return bad(format!("word {:?}: needs at least two groups", w.name));
            }
        }
        Ok(())
    }

    pub fn indicators(&self, group: usize) -> Vec<String> {
        (0..self.indicators_per_group)
            .map(|i| indicator_name(group, i))
            .collect()
    }
}

/// A tagged target occurrence. `position` counts tokens across the whole
/// corpus; `doc` and `offset` locate it within its document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SenseTag {
    pub position: usize,
    pub doc: usize,
    pub offset: usize,
    pub word: String,
    pub group: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub docs: Vec<Vec<String>>,
    pub tags: Vec<SenseTag>,
}

impl SynthCorpus {
    pub fn n_tokens(&self) -> usize {
        self.docs.iter().map(Vec::len).sum()
    }

    pub fn lines(&self) -> Vec<String> {
        self.docs.iter().map(|d| d.join(" ")).collect()
    }

    pub fn to_corpus(&self) -> Corpus {
        Corpus::Memory(self.lines())
    }

    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        for l in self.lines() {
            writeln!(out, "{l}")?;
        }
        Ok(())
    }

    /// `position<TAB>word<TAB>true_group` per tagged occurrence.
    pub fn write_sidecar<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "position\tword\ttrue_group")?;
        for t in &self.tags {
            writeln!(out, "{}\t{}\t{}", t.position, t.word, t.group)?;
        }
        Ok(())
    }

    /// Tokens within `window` of a tag, excluding the tag itself.
    pub fn window_of(&self, tag: &SenseTag, window: usize) -> Vec<String> {
        let doc = &self.docs[tag.doc];
        let lo = tag.offset.saturating_sub(window);
        let hi = (tag.offset + window).min(doc.len() - 1);
        (lo..=hi)
            .filter(|&k| k != tag.offset)
            .map(|k| doc[k].clone())
            .collect()
    }
}

/// Generate documents and sense tags from `spec`; deterministic in its seed.
pub fn synth_corpus(spec: &SynthSpec) -> Result<SynthCorpus> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let senses: Vec<WeightedIndex<f64>> = spec
        .words
        .iter()
        .map(|w| WeightedIndex::new(&w.weights).map_err(|e| Error::InvalidConfig(e.to_string())))
        .collect::<Result<_>>()?;
    let seg = 2 * spec.context_per_side + 1;
    let mut docs = Vec::with_capacity(spec.n_docs);
    let mut tags = Vec::new();
    let mut position = 0;
    for d in 0..spec.n_docs {
        let mut doc: Vec<String> = Vec::with_capacity(spec.tokens_per_doc);
        while doc.len() + seg <= spec.tokens_per_doc {
            let wi = rng.gen_range(0..spec.words.len());
            let word = &spec.words[wi];
            let group = word.groups[senses[wi].sample(&mut rng)];
            let slot = |rng: &mut ChaCha8Rng| {
                if spec.filler_rate > 0.0 && rng.gen_bool(spec.filler_rate) {
                    filler_name(rng.gen_range(0..spec.n_fillers))
                } else {
                    indicator_name(group, rng.gen_range(0..spec.indicators_per_group))
                }
            };
            for _ in 0..spec.context_per_side {
                doc.push(slot(&mut rng));
            }
            tags.push(SenseTag {
                position: position + doc.len(),
                doc: d,
                offset: doc.len(),
                word: word.name.clone(),
                group,
            });
            doc.push(word.name.clone());
            for _ in 0..spec.context_per_side {
                doc.push(slot(&mut rng));
            }
        }
        position += doc.len();
        docs.push(doc);
    }
    Ok(SynthCorpus { docs, tags })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_group() {
        let spec = SynthSpec {
            n_groups: 1,
            words: vec![SynthWord {
                name: "w".into(),
                role: WordRole::Plain,
                groups: vec![0],
                weights: vec![1.0],
            }],
            ..SynthSpec::polysemy(2_000, 1)
        };
        let c = synth_corpus(&spec).unwrap();
        assert!(!c.tags.is_empty());
        assert!(c.tags.iter().all(|t| t.group == 0));
    }

    #[test]
    fn even_mixing() {
        let spec = SynthSpec::polysemy(10_000 * 7 * 2, 5);
        let c = synth_corpus(&spec).unwrap();
        let kiwi: Vec<&SenseTag> = c.tags.iter().filter(|t| t.word == "kiwi").collect();
        assert!(kiwi.len() >= 9_000);
        let first = kiwi.iter().filter(|t| t.group == 0).count() as f64 / kiwi.len() as f64;
        assert!((first - 0.5).abs() <= 0.02, "{first}");
    }

    #[test]
    fn deterministic() {
        let spec = SynthSpec::hypernymy(2, 3, 3_000, 9);
        assert_eq!(synth_corpus(&spec).unwrap(), synth_corpus(&spec).unwrap());
        let other = SynthSpec {
            seed: 10,
            ..spec.clone()
        };
        assert_ne!(synth_corpus(&spec).unwrap(), synth_corpus(&other).unwrap());
    }

    #[test]
    fn tags_point_at_targets() {
        let c = synth_corpus(&SynthSpec::polysemy(5_000, 2)).unwrap();
        let flat: Vec<&String> = c.docs.iter().flatten().collect();
        for t in &c.tags {
            assert_eq!(c.docs[t.doc][t.offset], t.word);
            assert_eq!(*flat[t.position], t.word);
            assert_eq!(c.window_of(t, 3).len(), 6);
        }
        let mut side = Vec::new();
        c.write_sidecar(&mut side).unwrap();
        assert_eq!(
            String::from_utf8(side).unwrap().lines().count(),
            c.tags.len() + 1
        );
    }

    #[test]
    fn rejects_monosemous_polysemy() {
        let mut spec = SynthSpec::polysemy(1_000, 0);
        spec.words[0].groups = vec![0];
        spec.words[0].weights = vec![1.0];
        assert!(synth_corpus(&spec).is_err());
    }
}
