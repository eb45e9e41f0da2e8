//! Corpus machinery shared by every trainer: tokenization, vocabulary
//! construction, frequent-word subsampling, context windows and negative
//! sampling.
//!
//! A corpus is plain UTF-8 text with one document per line. Windows never
//! cross a line boundary. Out-of-vocabulary tokens are dropped before
//! subsampling and windowing.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub type WordId = usize;

/// Whitespace tokenization with optional lowercasing.
pub fn tokenize(line: &str, lowercase: bool) -> Vec<String> {
    line.split_whitespace()
        .map(|t| {
            if lowercase {
                t.to_lowercase()
            } else {
                t.to_string()
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct VocabConfig {
    pub max_size: usize,
    pub min_count: u64,
    /// Subsampling threshold `t`.
    pub subsample: f64,
    pub neg_exponent: f64,
}

impl Default for VocabConfig {
    fn default() -> Self {
        VocabConfig {
            max_size: 280_000,
            min_count: 1,
            subsample: 1e-4,
            neg_exponent: 1.0,
        }
    }
}

impl VocabConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_size < 1 {
            return Err(Error::InvalidConfig("max_size must be >= 1".into()));
        }
        if self.min_count < 1 {
            return Err(Error::InvalidConfig("min_count must be >= 1".into()));
        }
        if !(self.subsample > 0.0) {
            return Err(Error::InvalidConfig(
                "subsampling threshold must be > 0".into(),
            ));
        }
        if !(self.neg_exponent >= 0.0) || !self.neg_exponent.is_finite() {
            return Err(Error::InvalidConfig(
                "negative-sampling exponent must be >= 0".into(),
            ));
        }
        Ok(())
    }
}

/// Token counts in first-seen order. Counters built over consecutive
/// shards and merged in shard order equal a single pass over the whole
/// stream.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct VocabCounter {
    index: HashMap<String, usize>,
    words: Vec<String>,
    counts: Vec<u64>,
}

impl VocabCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, token: &str) {
        match self.index.get(token) {
            Some(&i) => self.counts[i] += 1,
            None => {
                self.index.insert(token.to_string(), self.words.len());
                self.words.push(token.to_string());
                self.counts.push(1);
            }
        }
    }

    pub fn add_count(&mut self, token: &str, n: u64) {
        match self.index.get(token) {
            Some(&i) => self.counts[i] += n,
            None => {
                self.index.insert(token.to_string(), self.words.len());
                self.words.push(token.to_string());
                self.counts.push(n);
            }
        }
    }

    /// Append a counter built over a later shard.
    pub fn merge(&mut self, other: VocabCounter) {
        for (w, c) in other.words.into_iter().zip(other.counts) {
            self.add_count(&w, c);
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn finish(self, cfg: &VocabConfig) -> Result<Vocabulary> {
        cfg.validate()?;
        if self.words.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut order: Vec<usize> = (0..self.words.len())
            .filter(|&i| self.counts[i] >= cfg.min_count)
            .collect();
        // stable sort keeps first-seen order among equal counts
        order.sort_by(|&a, &b| self.counts[b].cmp(&self.counts[a]));
        order.truncate(cfg.max_size);
        if order.is_empty() {
            return Err(Error::EmptyVocabulary {
                min_count: cfg.min_count,
            });
        }
        let words = order.iter().map(|&i| self.words[i].clone()).collect();
        let counts = order.iter().map(|&i| self.counts[i]).collect();
        Vocabulary::from_counts(words, counts, cfg.subsample, cfg.neg_exponent)
    }
}

#[derive(Debug, Clone)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    unigram_prob: Vec<f64>,
    keep_prob: Vec<f64>,
    subsample: f64,
    neg_exponent: f64,
    index: HashMap<String, WordId>,
    negatives: WeightedIndex<f64>,
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.words == other.words
            && self.counts == other.counts
            && self.subsample == other.subsample
            && self.neg_exponent == other.neg_exponent
    }
}

impl Vocabulary {
    /// Build from words already in id order with their counts.
    pub fn from_counts(
        words: Vec<String>,
        counts: Vec<u64>,
        subsample: f64,
        neg_exponent: f64,
    ) -> Result<Self> {
        if words.len() != counts.len() {
            return Err(Error::DimensionMismatch {
                expected: words.len(),
                found: counts.len(),
            });
        }
        if words.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        if counts.iter().any(|&c| c == 0) {
            return Err(Error::format("vocabulary", "word with zero count"));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::format("vocabulary", format!("duplicate word {w:?}")));
            }
        }
        let total: u64 = counts.iter().sum();
        let unigram_prob: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
        let keep_prob = unigram_prob
            .iter()
            .map(|&f| keep_probability(f, subsample))
            .collect();
        let weights: Vec<f64> = unigram_prob.iter().map(|&p| p.powf(neg_exponent)).collect();
        let negatives = WeightedIndex::new(&weights)
            .map_err(|e| Error::InvalidConfig(format!("negative-sampling distribution: {e}")))?;
        Ok(Vocabulary {
            words,
            counts,
            unigram_prob,
            keep_prob,
            subsample,
            neg_exponent,
            index,
            negatives,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<WordId> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: WordId) -> &str {
        &self.words[id]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn count(&self, id: WordId) -> u64 {
        self.counts[id]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn unigram_prob(&self, id: WordId) -> f64 {
        self.unigram_prob[id]
    }

    pub fn keep_prob(&self, id: WordId) -> f64 {
        self.keep_prob[id]
    }

    pub fn subsample_threshold(&self) -> f64 {
        self.subsample
    }

    pub fn neg_exponent(&self) -> f64 {
        self.neg_exponent
    }

    pub fn check_id(&self, id: WordId) -> Result<()> {
        if id >= self.len() {
            return Err(Error::InvalidWordId {
                id,
                size: self.len(),
            });
        }
        Ok(())
    }

    /// Map tokens to ids, dropping out-of-vocabulary ones.
    pub fn encode<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<WordId> {
        tokens.iter().filter_map(|t| self.id(t.as_ref())).collect()
    }

    /// TSV lines `word<TAB>count` in id order (descending count).
    pub fn write_tsv<W: Write>(&self, mut out: W) -> Result<()> {
        for (w, c) in self.words.iter().zip(&self.counts) {
            writeln!(out, "{w}\t{c}")?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn save_tsv(&self, path: &Path) -> Result<()> {
        self.write_tsv(BufWriter::new(
            File::create(path).map_err(|e| Error::at_path(path, e))?,
        ))
    }

    pub fn read_tsv<R: BufRead>(input: R, subsample: f64, neg_exponent: f64) -> Result<Self> {
        let mut words = Vec::new();
        let mut counts = Vec::new();
        for (n, line) in input.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let (w, c) = line.split_once('\t').ok_or_else(|| {
                Error::format(format!("line {}", n + 1), "expected word<TAB>count")
            })?;
            let c: u64 = c.trim().parse().map_err(|_| {
                Error::format(format!("line {}", n + 1), format!("bad count {c:?}"))
            })?;
            words.push(w.to_string());
            counts.push(c);
        }
        Self::from_counts(words, counts, subsample, neg_exponent)
    }

    pub fn load_tsv(path: &Path, subsample: f64, neg_exponent: f64) -> Result<Self> {
        Self::read_tsv(
            BufReader::new(File::open(path).map_err(|e| Error::at_path(path, e))?),
            subsample,
            neg_exponent,
        )
    }

    pub(crate) fn negative_distribution(&self) -> &WeightedIndex<f64> {
        &self.negatives
    }
}

/// min(1, sqrt(t / f)).
pub fn keep_probability(freq: f64, t: f64) -> f64 {
    if freq <= t {
        1.0
    } else {
        (t / freq).sqrt().min(1.0)
    }
}

pub fn build_vocabulary<I, S>(tokens: I, cfg: &VocabConfig) -> Result<Vocabulary>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut counter = VocabCounter::new();
    for t in tokens {
        counter.add(t.as_ref());
    }
    counter.finish(cfg)
}

/// Keep each token independently with its word's keep probability.
pub fn subsample_stream<R: Rng>(tokens: &[WordId], vocab: &Vocabulary, rng: &mut R) -> Vec<WordId> {
    tokens
        .iter()
        .copied()
        .filter(|&w| {
            let p = vocab.keep_prob(w);
            p >= 1.0 || rng.gen::<f64>() < p
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Window {
    pub center: WordId,
    pub contexts: Vec<WordId>,
}

/// One window per position with at least one context token: up to
/// `window_size` tokens on each side, truncated at the document edges.
pub fn extract_windows(tokens: &[WordId], window_size: usize) -> Vec<Window> {
    let n = tokens.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let lo = i.saturating_sub(window_size);
        let hi = (i + window_size + 1).min(n);
        let contexts: Vec<WordId> = tokens[lo..i]
            .iter()
            .chain(&tokens[i + 1..hi])
            .copied()
            .collect();
        if !contexts.is_empty() {
            out.push(Window {
                center: tokens[i],
                contexts,
            });
        }
    }
    out
}

/// `k` i.i.d. draws from the unigram distribution raised to the
/// vocabulary's negative-sampling exponent.
pub fn sample_negatives<R: Rng>(vocab: &Vocabulary, k: usize, rng: &mut R) -> Vec<WordId> {
    let dist = vocab.negative_distribution();
    (0..k).map(|_| dist.sample(rng)).collect()
}

/// Where documents come from.
#[derive(Debug, Clone)]
pub enum Corpus {
    File(PathBuf),
    Memory(Vec<String>),
}

impl Corpus {
    /// Visit each document in order. Invalid UTF-8 is reported with its
    /// byte offset in the file.
    pub fn for_each_doc<F>(&self, mut f: F) -> Result<()>
    where
        F: FnMut(&str) -> Result<()>,
    {
        match self {
            Corpus::Memory(docs) => {
                for d in docs {
                    f(d)?;
                }
                Ok(())
            }
            Corpus::File(path) => {
                let mut reader =
                    BufReader::new(File::open(path).map_err(|e| Error::at_path(path, e))?);
                let mut buf = Vec::new();
                let mut offset = 0u64;
                loop {
                    buf.clear();
                    let n = reader.read_until(b'\n', &mut buf)?;
                    if n == 0 {
                        break;
                    }
                    let line = std::str::from_utf8(&buf).map_err(|e| Error::InvalidUtf8 {
                        offset: offset + e.valid_up_to() as u64,
                    })?;
                    f(line.trim_end_matches(['\n', '\r']))?;
                    offset += n as u64;
                }
                Ok(())
            }
        }
    }

    /// Count tokens over the whole corpus. Documents are counted in
    /// parallel shards and merged in order, so the result does not depend
    /// on the number of threads.
    pub fn count(&self, lowercase: bool) -> Result<VocabCounter> {
        const SHARD: usize = 4096;
        let mut total = VocabCounter::new();
        let mut pending: Vec<String> = Vec::with_capacity(SHARD * 8);
        let flush = |pending: &mut Vec<String>, total: &mut VocabCounter| {
            let shards: Vec<VocabCounter> = pending
                .par_chunks(SHARD)
                .map(|docs| {
                    let mut c = VocabCounter::new();
                    for d in docs {
                        for t in d.split_whitespace() {
                            if lowercase {
                                c.add(&t.to_lowercase());
                            } else {
                                c.add(t);
                            }
                        }
                    }
                    c
                })
                .collect();
            for s in shards {
                total.merge(s);
            }
            pending.clear();
        };
        self.for_each_doc(|doc| {
            pending.push(doc.to_string());
            if pending.len() >= SHARD * 8 {
                flush(&mut pending, &mut total);
            }
            Ok(())
        })?;
        flush(&mut pending, &mut total);
        if total.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        Ok(total)
    }
}

/// One prediction task: a center word, its observed context words and the
/// sampled negative words paired with them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub center: WordId,
    pub positives: Vec<WordId>,
    pub negatives: Vec<WordId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StreamConfig {
    pub window: usize,
    pub negatives_per_positive: usize,
    pub lowercase: bool,
}

/// Produce the epoch's examples in corpus order: encode, subsample,
/// window, then draw negatives per window. Every model kind consumes this
/// stream, so equal seeds give equal streams.
pub fn for_each_example<R, F>(
    corpus: &Corpus,
    vocab: &Vocabulary,
    cfg: &StreamConfig,
    rng: &mut R,
    mut f: F,
) -> Result<()>
where
    R: Rng,
    F: FnMut(Example) -> Result<()>,
{
    corpus.for_each_doc(|doc| {
        let ids = vocab.encode(&tokenize(doc, cfg.lowercase));
        let kept = subsample_stream(&ids, vocab, rng);
        for w in extract_windows(&kept, cfg.window) {
            let negatives =
                sample_negatives(vocab, w.contexts.len() * cfg.negatives_per_positive, rng);
            f(Example {
                center: w.center,
                positives: w.contexts,
                negatives,
            })?;
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(max_size: usize) -> VocabConfig {
        VocabConfig {
            max_size,
            min_count: 1,
            subsample: 1e-4,
            neg_exponent: 1.0,
        }
    }

    #[test]
    fn counts_and_unigram() {
        let v = build_vocabulary(["a", "a", "b"], &cfg(10)).unwrap();
        assert_eq!(v.words(), ["a", "b"]);
        assert_eq!(v.counts(), [2, 1]);
        assert!((v.unigram_prob(0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((v.unigram_prob(1) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn frequency_cutoff() {
        let v = build_vocabulary(["a", "a", "b"], &cfg(1)).unwrap();
        assert_eq!(v.words(), ["a"]);
        assert_eq!(v.unigram_prob(0), 1.0);
    }

    #[test]
    fn min_count_and_ties() {
        let mut c = cfg(10);
        c.min_count = 2;
        let v = build_vocabulary("x y y z z x w".split(' '), &c).unwrap();
        // x, y, z tie on 2; first-seen order is kept
        assert_eq!(v.words(), ["x", "y", "z"]);
    }

    #[test]
    fn empty_corpus() {
        let none: [&str; 0] = [];
        assert!(matches!(
            build_vocabulary(none, &cfg(10)),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn keep_prob_formula() {
        assert!((keep_probability(1e-2, 1e-4) - 0.1).abs() < 1e-15);
        assert_eq!(keep_probability(1e-4, 1e-4), 1.0);
        assert_eq!(keep_probability(1e-6, 1e-4), 1.0);
    }

    #[test]
    fn subsample_identity_and_empty() {
        let mut c = cfg(10);
        c.subsample = 1.0;
        let v = build_vocabulary(["a", "b", "a"], &c).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let toks = vec![0, 1, 0, 0, 1];
        assert_eq!(subsample_stream(&toks, &v, &mut rng), toks);
        assert!(subsample_stream(&[], &v, &mut rng).is_empty());
    }

    #[test]
    fn subsample_rate() {
        // word "a" has unigram 0.99 -> choose t so keep = 0.1
        let mut counter = VocabCounter::new();
        counter.add_count("a", 99);
        counter.add_count("b", 1);
        let mut c = cfg(10);
        c.subsample = 0.99 * 0.01;
        let v = counter.finish(&c).unwrap();
        assert!((v.keep_prob(0) - 0.1).abs() < 1e-12);
        let toks = vec![0; 100_000];
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let kept = subsample_stream(&toks, &v, &mut rng).len() as f64 / 1e5;
        assert!((0.09..=0.11).contains(&kept), "{kept}");
    }

    #[test]
    fn window_fixtures() {
        let w = extract_windows(&[0, 1, 2], 1);
        assert_eq!(
            w,
            vec![
                Window {
                    center: 0,
                    contexts: vec![1]
                },
                Window {
                    center: 1,
                    contexts: vec![0, 2]
                },
                Window {
                    center: 2,
                    contexts: vec![1]
                },
            ]
        );
        assert!(extract_windows(&[7], 5).is_empty());
        let w = extract_windows(&[0, 1, 2, 3], 2);
        assert_eq!(w[1].contexts, vec![0, 2, 3]);
    }

    #[test]
    fn negative_sampling_distribution() {
        let mut counter = VocabCounter::new();
        counter.add_count("a", 3);
        counter.add_count("b", 1);
        let v = counter.clone().finish(&cfg(10)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let draws = sample_negatives(&v, 100_000, &mut rng);
        let pa = draws.iter().filter(|&&w| w == 0).count() as f64 / 1e5;
        assert!((pa - 0.75).abs() <= 0.01, "{pa}");

        let mut c = cfg(10);
        c.neg_exponent = 0.0;
        let v = counter.finish(&c).unwrap();
        let draws = sample_negatives(&v, 100_000, &mut rng);
        let pa = draws.iter().filter(|&&w| w == 0).count() as f64 / 1e5;
        assert!((pa - 0.5).abs() <= 0.01, "{pa}");

        let single = build_vocabulary(["z"], &cfg(10)).unwrap();
        assert!(sample_negatives(&single, 50, &mut rng)
            .iter()
            .all(|&w| w == 0));
    }

    #[test]
    fn tsv_roundtrip() {
        let v = build_vocabulary("the cat sat on the mat the end".split(' '), &cfg(10)).unwrap();
        let mut buf = Vec::new();
        v.write_tsv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("the\t3\n"));
        let back = Vocabulary::read_tsv(&buf[..], 1e-4, 1.0).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn invalid_utf8_reports_offset() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.txt");
        std::fs::write(&path, b"ok line\nab\xffcd\n").unwrap();
        let err = Corpus::File(path).count(true).unwrap_err();
        assert!(matches!(err, Error::InvalidUtf8 { offset: 10 }), "{err}");
    }

    #[test]
    fn windows_do_not_cross_documents() {
        let docs = vec!["a b".to_string(), "c d".to_string()];
        let corpus = Corpus::Memory(docs);
        let mut c = cfg(10);
        c.subsample = 1.0;
        let v = corpus.count(true).unwrap().finish(&c).unwrap();
        let sc = StreamConfig {
            window: 5,
            negatives_per_positive: 1,
            lowercase: true,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut seen = Vec::new();
        for_each_example(&corpus, &v, &sc, &mut rng, |ex| {
            seen.push((ex.center, ex.positives));
            Ok(())
        })
        .unwrap();
        let (a, b, cc, d) = (
            v.id("a").unwrap(),
            v.id("b").unwrap(),
            v.id("c").unwrap(),
            v.id("d").unwrap(),
        );
        assert_eq!(
            seen,
            vec![(a, vec![b]), (b, vec![a]), (cc, vec![d]), (d, vec![cc])]
        );
    }

    proptest! {
        #[test]
        fn counting_is_chunking_invariant(tokens in prop::collection::vec(0u8..6, 1..200), cut in 0usize..200) {
            let toks: Vec<String> = tokens.iter().map(|t| format!("w{t}")).collect();
            let cut = cut.min(toks.len());
            let mut whole = VocabCounter::new();
            toks.iter().for_each(|t| whole.add(t));
            let mut left = VocabCounter::new();
            toks[..cut].iter().for_each(|t| left.add(t));
            let mut right = VocabCounter::new();
            toks[cut..].iter().for_each(|t| right.add(t));
            left.merge(right);
            prop_assert_eq!(left, whole);
        }

        #[test]
        fn window_contexts_within_distance(tokens in prop::collection::vec(0usize..5, 0..40), win in 1usize..6) {
            let windows = extract_windows(&tokens, win);
            if tokens.len() < 2 {
                prop_assert!(windows.is_empty());
            } else {
                prop_assert_eq!(windows.len(), tokens.len());
            }
            for (i, w) in windows.iter().enumerate() {
                prop_assert!(!w.contexts.is_empty() && w.contexts.len() <= 2 * win);
                let lo = i.saturating_sub(win);
                let hi = (i + win + 1).min(tokens.len());
                prop_assert_eq!(w.contexts.len(), hi - lo - 1);
            }
        }

        #[test]
        fn vocab_invariants(tokens in prop::collection::vec(0u8..30, 1..300), max_size in 1usize..40, min_count in 1u64..4) {
            let toks: Vec<String> = tokens.iter().map(|t| format!("w{t}")).collect();
            let c = VocabConfig { max_size, min_count, subsample: 1e-3, neg_exponent: 0.75 };
            match build_vocabulary(&toks, &c) {
                Ok(v) => {
                    prop_assert!(v.len() <= max_size);
                    let s: f64 = (0..v.len()).map(|i| v.unigram_prob(i)).sum();
                    prop_assert!((s - 1.0).abs() < 1e-9);
                    for i in 0..v.len() {
                        prop_assert!(v.count(i) >= min_count);
                        prop_assert_eq!(v.id(v.word(i)), Some(i));
                        let f = v.unigram_prob(i);
                        let want = if f <= 1e-3 { 1.0 } else { (1e-3 / f).sqrt() };
                        prop_assert_eq!(v.keep_prob(i), want);
                        if i > 0 { prop_assert!(v.count(i - 1) >= v.count(i)); }
                    }
                }
                Err(Error::EmptyVocabulary { .. }) => {}
                Err(e) => prop_assert!(false, "{e}"),
            }
        }
    }
}
