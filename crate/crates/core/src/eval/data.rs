use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityPair {
    pub word1: String,
    pub word2: String,
    pub gold: f64,
}

/// `word1` entails `word2` when `label` is true.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntailmentPair {
    pub word1: String,
    pub word2: String,
    pub label: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LexsubInstance {
    pub target: String,
    pub target_index: usize,
    pub context_tokens: Vec<String>,
    pub candidates: Vec<String>,
    pub gold_weights: BTreeMap<String, f64>,
}

impl LexsubInstance {
    pub fn validate(&self) -> Result<()> {
        match self.context_tokens.get(self.target_index) {
            Some(t) if *t == self.target => {}
            Some(t) => {
                return Err(Error::format(
                    format!("target_index {}", self.target_index),
                    format!("token {t:?} is not the target {:?}", self.target),
                ))
            }
            None => {
                return Err(Error::format(
                    format!("target_index {}", self.target_index),
                    format!("out of range for {} tokens", self.context_tokens.len()),
                ))
            }
        }
        if self
            .gold_weights
            .values()
            .any(|w| !(w.is_finite() && *w >= 0.0))
        {
            return Err(Error::format(
                "gold_weights",
                "weights must be finite and non-negative",
            ));
        }
        if !self.gold_weights.values().any(|&w| w > 0.0) {
            return Err(Error::NoPositiveGold);
        }
        Ok(())
    }
}

fn tsv_rows<R: BufRead>(input: R) -> impl Iterator<Item = Result<(usize, Vec<String>)>> {
    input
        .lines()
        .enumerate()
        .filter_map(|(i, line)| match line {
            Err(e) => Some(Err(e.into())),
            Ok(l) => {
                let l = l.trim_end_matches('\r');
                if l.trim().is_empty() || l.starts_with('#') {
                    None
                } else {
                    Some(Ok((i + 1, l.split('\t').map(str::to_string).collect())))
                }
            }
        })
}

fn three_fields(line: usize, fields: Vec<String>) -> Result<(String, String, String)> {
    let n = fields.len();
    let mut it = fields.into_iter();
    match (it.next(), it.next(), it.next(), n) {
        (Some(a), Some(b), Some(c), 3) => Ok((a, b, c)),
        _ => Err(Error::format(
            format!("line {line}"),
            format!("expected 3 tab-separated fields, found {n}"),
        )),
    }
}

/// `word1<TAB>word2<TAB>score` per line.
pub fn read_similarity<R: BufRead>(input: R) -> Result<Vec<SimilarityPair>> {
    tsv_rows(input)
        .map(|row| {
            let (line, fields) = row?;
            let (word1, word2, score) = three_fields(line, fields)?;
            let gold: f64 = score
                .trim()
                .parse()
                .ok()
                .filter(|g: &f64| g.is_finite())
                .ok_or_else(|| {
                    Error::format(format!("line {line}"), format!("invalid score {score:?}"))
                })?;
            Ok(SimilarityPair { word1, word2, gold })
        })
        .collect()
}

/// `word1<TAB>word2<TAB>label` per line, label 0 or 1.
pub fn read_entailment<R: BufRead>(input: R) -> Result<Vec<EntailmentPair>> {
    tsv_rows(input)
        .map(|row| {
            let (line, fields) = row?;
            let (word1, word2, label) = three_fields(line, fields)?;
            let label = match label.trim() {
                "1" => true,
                "0" => false,
                other => {
                    return Err(Error::format(
                        format!("line {line}"),
                        format!("label must be 0 or 1, found {other:?}"),
                    ))
                }
            };
            Ok(EntailmentPair {
                word1,
                word2,
                label,
            })
        })
        .collect()
}

/// One JSON object per non-empty line.
pub fn read_lexsub<R: BufRead>(input: R) -> Result<Vec<LexsubInstance>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let inst: LexsubInstance = serde_json::from_str(&line)
            .map_err(|e| Error::format(format!("line {}", i + 1), e.to_string()))?;
        inst.validate()
            .map_err(|e| Error::format(format!("line {}", i + 1), e.to_string()))?;
        out.push(inst);
    }
    Ok(out)
}

pub fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).map_err(|e| Error::at_path(path, e))?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn similarity_rows() {
        let pairs =
            read_similarity("tiger\tcat\t7.35\n\n# note\nbook\tpaper\t7.46\n".as_bytes()).unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[1].word2, "paper");
        assert_eq!(pairs[0].gold, 7.35);
        let err = read_similarity("a\tb\n".as_bytes())
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 1"), "{err}");
        assert!(read_similarity("a\tb\tNaN\n".as_bytes()).is_err());
    }

    #[test]
    fn entailment_rows() {
        let pairs = read_entailment("kiwi\tfruit\t1\nfruit\tkiwi\t0\n".as_bytes()).unwrap();
        assert!(pairs[0].label && !pairs[1].label);
        let err = read_entailment("a\tb\tyes\n".as_bytes())
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 1"));
    }

    #[test]
    fn lexsub_rows() {
        let line = r#"{"target":"bright","target_index":1,"context_tokens":["a","bright","boy"],"candidates":["smart","shiny"],"gold_weights":{"smart":3}}"#;
        let v = read_lexsub(format!("{line}\n").as_bytes()).unwrap();
        assert_eq!(v[0].gold_weights["smart"], 3.0);
        let bad = line.replace("\"target_index\":1", "\"target_index\":0");
        assert!(read_lexsub(bad.as_bytes()).is_err());
        let none = line.replace("\"smart\":3", "\"smart\":0");
        assert!(read_lexsub(none.as_bytes()).is_err());
    }
}
