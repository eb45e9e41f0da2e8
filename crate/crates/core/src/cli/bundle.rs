//! Model files. Two encodings of the same section list:
//!
//! * text: a `#BSG-MODEL <version>` line, then `#SECTION <name> [rows cols]`
//!   headers followed by their lines, then `#END`; floats carry 17
//!   significant digits;
//! * binary: magic `BSG1`, a little-endian `u32` version, then sections of
//!   `u32` name length, name, `u64` payload length, payload.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::baselines::{SgModel, W2gModel};
use crate::bsg::BsgModel;
use crate::config::{ModelKind, TrainConfig};
use crate::corpus::{Vocabulary, WordId};
use crate::encoder::EncoderParams;
use crate::error::{Error, Result};
use crate::eval::WordModel;
use crate::gauss::{cosine, kl_divergence, CovKind, Gaussian};
use crate::real::Matrix;
use crate::table::GaussTable;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"BSG1";
const TEXT_MAGIC: &str = "#BSG-MODEL";

#[derive(Debug, Clone, PartialEq)]
pub enum AnyModel {
    Bsg(BsgModel<f32>),
    Sg(SgModel<f32>),
    W2g(W2gModel<f32>),
}

/// A trained model with everything needed to use it again.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelBundle {
    pub kind: ModelKind,
    pub vocab: Vocabulary,
    pub config: TrainConfig,
    pub model: AnyModel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SaveMode {
    Text,
    Binary,
}

impl std::str::FromStr for SaveMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(SaveMode::Text),
            "binary" => Ok(SaveMode::Binary),
            other => Err(Error::InvalidConfig(format!(
                "unknown model format {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Header {
    kind: ModelKind,
    cov: CovKind,
    dim: usize,
    hidden: usize,
    vocab_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
enum Body {
    Json(String),
    Vocab(Vec<(String, u64)>),
    Matrix(Matrix<f32>),
}

#[derive(Debug, Clone, PartialEq)]
struct Section {
    name: String,
    body: Body,
}

fn matrix_names(kind: ModelKind) -> &'static [&'static str] {
    match kind {
        ModelKind::Bsg => &[
            "prior.mean",
            "prior.log_var",
            "context.mean",
            "context.log_var",
            "encoder.R",
            "encoder.M",
            "encoder.U",
            "encoder.b1",
            "encoder.W",
            "encoder.b2",
        ],
        ModelKind::Sg => &["input", "output"],
        ModelKind::W2gS | ModelKind::W2gD => &["table.mean", "table.log_var"],
    }
}

impl ModelBundle {
    pub fn new(
        kind: ModelKind,
        vocab: Vocabulary,
        config: TrainConfig,
        model: AnyModel,
    ) -> Result<Self> {
        let b = ModelBundle {
            kind,
            vocab,
            config,
            model,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn dim(&self) -> usize {
        match &self.model {
            AnyModel::Bsg(m) => m.dim(),
            AnyModel::Sg(m) => m.dim(),
            AnyModel::W2g(m) => m.dim(),
        }
    }

    pub fn cov(&self) -> CovKind {
        match &self.model {
            AnyModel::Bsg(m) => m.cov(),
            AnyModel::Sg(_) => CovKind::Spherical,
            AnyModel::W2g(m) => m.cov(),
        }
    }

    fn model_vocab_size(&self) -> usize {
        match &self.model {
            AnyModel::Bsg(m) => m.vocab_size(),
            AnyModel::Sg(m) => m.vocab_size(),
            AnyModel::W2g(m) => m.vocab_size(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let kind_ok = matches!(
            (&self.model, self.kind),
            (AnyModel::Bsg(_), ModelKind::Bsg)
                | (AnyModel::Sg(_), ModelKind::Sg)
                | (AnyModel::W2g(_), ModelKind::W2gS | ModelKind::W2gD)
        );
        if !kind_ok {
            return Err(Error::format(
                "header",
                "model kind does not match parameters",
            ));
        }
        match &self.model {
            AnyModel::Bsg(m) => m.validate()?,
            AnyModel::Sg(m) => m.validate()?,
            AnyModel::W2g(m) => m.validate()?,
        }
        if self.model_vocab_size() != self.vocab.len() {
            return Err(Error::DimensionMismatch {
                expected: self.vocab.len(),
                found: self.model_vocab_size(),
            });
        }
        Ok(())
    }

    fn hidden(&self) -> usize {
        match &self.model {
            AnyModel::Bsg(m) => m.enc.hidden(),
            _ => 0,
        }
    }

    fn matrices(&self) -> Vec<&Matrix<f32>> {
        match &self.model {
            AnyModel::Bsg(m) => vec![
                &m.prior.mean,
                &m.prior.log_var,
                &m.context.mean,
                &m.context.log_var,
                &m.enc.r,
                &m.enc.m,
                &m.enc.u,
                &m.enc.b1,
                &m.enc.w,
                &m.enc.b2,
            ],
            AnyModel::Sg(m) => vec![&m.input, &m.output],
            AnyModel::W2g(m) => vec![&m.table.mean, &m.table.log_var],
        }
    }

    fn sections(&self) -> Result<Vec<Section>> {
        let header = Header {
            kind: self.kind,
            cov: self.cov(),
            dim: self.dim(),
            hidden: self.hidden(),
            vocab_size: self.vocab.len(),
        };
        let mut out = vec![
            Section {
                name: "header".into(),
                body: Body::Json(json(&header)?),
            },
            Section {
                name: "config".into(),
                body: Body::Json(json(&self.config)?),
            },
            Section {
                name: "vocabulary".into(),
                body: Body::Vocab(
                    self.vocab
                        .words()
                        .iter()
                        .cloned()
                        .zip(self.vocab.counts().iter().copied())
                        .collect(),
                ),
            },
        ];
        for (name, m) in matrix_names(self.kind).iter().zip(self.matrices()) {
            out.push(Section {
                name: name.to_string(),
                body: Body::Matrix(m.clone()),
            });
        }
        Ok(out)
    }

    fn from_sections(sections: Vec<Section>) -> Result<Self> {
        let take = |name: &str| -> Result<Body> {
            sections
                .iter()
                .find(|s| s.name == name)
                .map(|s| s.body.clone())
                .ok_or_else(|| Error::format(format!("section {name}"), "missing section"))
        };
        let json_of = |name: &str, body: Body| -> Result<String> {
            match body {
                Body::Json(s) => Ok(s),
                _ => Err(Error::format(format!("section {name}"), "expected JSON")),
            }
        };
        let header: Header = serde_json::from_str(&json_of("header", take("header")?)?)
            .map_err(|e| Error::format("section header", e.to_string()))?;
        let config: TrainConfig = serde_json::from_str(&json_of("config", take("config")?)?)
            .map_err(|e| Error::format("section config", e.to_string()))?;
        let entries = match take("vocabulary")? {
            Body::Vocab(v) => v,
            _ => {
                return Err(Error::format(
                    "section vocabulary",
                    "expected word<TAB>count rows",
                ))
            }
        };
        if entries.len() != header.vocab_size {
            return Err(Error::format(
                "section vocabulary",
                format!(
                    "{} entries, header says {}",
                    entries.len(),
                    header.vocab_size
                ),
            ));
        }
        let (words, counts): (Vec<String>, Vec<u64>) = entries.into_iter().unzip();
        let vocab = Vocabulary::from_counts(words, counts, config.subsample, config.neg_exponent)?;

        let (n, d, h) = (header.vocab_size, header.dim, header.hidden);
        let k = header.cov.width(d);
        let mat = |name: &str, rows: usize, cols: usize| -> Result<Matrix<f32>> {
            match take(name)? {
                Body::Matrix(m) if m.rows() == rows && m.cols() == cols => Ok(m),
                Body::Matrix(m) => Err(Error::format(
                    format!("section {name}"),
                    format!("shape {}x{}, expected {rows}x{cols}", m.rows(), m.cols()),
                )),
                _ => Err(Error::format(
                    format!("section {name}"),
                    "expected a matrix",
                )),
            }
        };
        let model = match header.kind {
            ModelKind::Bsg => {
                let prior = GaussTable::new(
                    header.cov,
                    mat("prior.mean", n, d)?,
                    mat("prior.log_var", n, k)?,
                )?;
                let context = GaussTable::new(
                    header.cov,
                    mat("context.mean", n, d)?,
                    mat("context.log_var", n, k)?,
                )?;
                let enc = EncoderParams {
                    cov: header.cov,
                    r: mat("encoder.R", n, d)?,
                    m: mat("encoder.M", h, 2 * d)?,
                    u: mat("encoder.U", d, h)?,
                    b1: mat("encoder.b1", 1, d)?,
                    w: mat("encoder.W", k, h)?,
                    b2: mat("encoder.b2", 1, k)?,
                };
                AnyModel::Bsg(BsgModel::new(prior, context, enc)?)
            }
            ModelKind::Sg => AnyModel::Sg(SgModel {
                input: mat("input", n, d)?,
                output: mat("output", n, d)?,
            }),
            ModelKind::W2gS | ModelKind::W2gD => AnyModel::W2g(W2gModel {
                table: GaussTable::new(
                    header.cov,
                    mat("table.mean", n, d)?,
                    mat("table.log_var", n, k)?,
                )?,
                energy: config.energy,
                max_mean_norm: config.max_mean_norm,
                min_var: config.min_var,
                max_var: config.max_var,
            }),
        };
        ModelBundle::new(header.kind, vocab, config, model)
    }

    pub fn write<W: Write>(&self, out: W, mode: SaveMode) -> Result<()> {
        let sections = self.sections()?;
        match mode {
            SaveMode::Text => write_text(out, &sections),
            SaveMode::Binary => write_binary(out, &sections),
        }
    }

    pub fn save(&self, path: &Path, mode: SaveMode) -> Result<()> {
        let mut out = BufWriter::new(File::create(path).map_err(|e| Error::at_path(path, e))?);
        self.write(&mut out, mode)?;
        out.flush()?;
        Ok(())
    }

    /// Decode either encoding, detected from the leading bytes.
    pub fn read<R: Read>(mut input: R) -> Result<Self> {
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes)?;
        let sections = if bytes.starts_with(MAGIC) {
            read_binary(&bytes)?
        } else if bytes.starts_with(TEXT_MAGIC.as_bytes()) {
            read_text(&bytes)?
        } else {
            return Err(Error::format("byte 0", "not a model file (unknown magic)"));
        };
        Self::from_sections(sections)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::read(BufReader::new(
            File::open(path).map_err(|e| Error::at_path(path, e))?,
        ))
    }

    fn lookup_id(&self, word: &str) -> Option<WordId> {
        if self.config.lowercase {
            self.vocab.id(&word.to_lowercase())
        } else {
            self.vocab.id(word)
        }
    }

    pub fn require_id(&self, word: &str) -> Result<WordId> {
        self.lookup_id(word)
            .ok_or_else(|| Error::OutOfVocabulary(word.to_string()))
    }
}

fn json<T: Serialize>(v: &T) -> Result<String> {
    serde_json::to_string(v).map_err(|e| Error::format("json", e.to_string()))
}

impl WordModel for ModelBundle {
    fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    fn lookup(&self, word: &str) -> Option<WordId> {
        self.lookup_id(word)
    }

    fn word(&self, id: WordId) -> &str {
        self.vocab.word(id)
    }

    fn mean(&self, id: WordId) -> Vec<f64> {
        match &self.model {
            AnyModel::Bsg(m) => m.prior.mean_row(id),
            AnyModel::Sg(m) => m.input.row_f64(id),
            AnyModel::W2g(m) => m.table.mean_row(id),
        }
    }

    fn prior(&self, id: WordId) -> Result<Gaussian> {
        match &self.model {
            AnyModel::Bsg(m) => m.prior_of(id),
            AnyModel::W2g(m) => m.table.gaussian(id),
            AnyModel::Sg(_) => Err(Error::Unsupported(
                "skip-gram vectors have no variance".into(),
            )),
        }
    }

    fn posterior(&self, center: WordId, contexts: &[WordId]) -> Result<Gaussian> {
        match &self.model {
            AnyModel::Bsg(m) => m.posterior(center, contexts),
            _ => Err(Error::Unsupported("no encoder".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NearestMeasure {
    CosineMean,
    NegKl,
}

impl std::str::FromStr for NearestMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine_mean" | "cosine" => Ok(NearestMeasure::CosineMean),
            "neg_kl" | "kl" => Ok(NearestMeasure::NegKl),
            other => Err(Error::InvalidConfig(format!("unknown measure {other:?}"))),
        }
    }
}

/// Top `k` other words by descending score; ties keep word-id order.
/// Words whose cosine is undefined (zero mean) are skipped.
pub fn nearest<M: WordModel + ?Sized>(
    model: &M,
    word: &str,
    k: usize,
    measure: NearestMeasure,
) -> Result<Vec<(String, f64)>> {
    if k == 0 {
        return Err(Error::InvalidConfig("k must be >= 1".into()));
    }
    let q = model
        .lookup(word)
        .ok_or_else(|| Error::OutOfVocabulary(word.to_string()))?;
    let mut scored = Vec::with_capacity(model.vocab_size());
    match measure {
        NearestMeasure::CosineMean => {
            let qm = model.mean(q);
            for w in (0..model.vocab_size()).filter(|&w| w != q) {
                match cosine(&qm, &model.mean(w)) {
                    Ok(s) => scored.push((w, s)),
                    Err(Error::ZeroVector) => {}
                    Err(e) => return Err(e),
                }
            }
        }
        NearestMeasure::NegKl => {
            let qg = model.prior(q)?;
            for w in (0..model.vocab_size()).filter(|&w| w != q) {
                scored.push((w, -kl_divergence(&qg, &model.prior(w)?)?));
            }
        }
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1));
    Ok(scored
        .into_iter()
        .take(k)
        .map(|(w, s)| (model.word(w).to_string(), s))
        .collect())
}

/// Posterior of `tokens[target_index]` given the in-vocabulary tokens
/// within `window` positions of it.
pub fn infer<M: WordModel + ?Sized>(
    model: &M,
    tokens: &[String],
    target_index: usize,
    window: usize,
) -> Result<Gaussian> {
    let target = tokens.get(target_index).ok_or_else(|| {
        Error::InvalidConfig(format!(
            "target index {target_index} out of range for {} tokens",
            tokens.len()
        ))
    })?;
    let center = model
        .lookup(target)
        .ok_or_else(|| Error::OutOfVocabulary(target.clone()))?;
    let lo = target_index.saturating_sub(window);
    let hi = (target_index + window).min(tokens.len() - 1);
    let contexts: Vec<WordId> = (lo..=hi)
        .filter(|&i| i != target_index)
        .filter_map(|i| model.lookup(&tokens[i]))
        .collect();
    model.posterior(center, &contexts)
}

fn fmt_f32(v: f32) -> String {
    format!("{:.16e}", v as f64)
}

fn write_text<W: Write>(mut out: W, sections: &[Section]) -> Result<()> {
    writeln!(out, "{TEXT_MAGIC} {FORMAT_VERSION}")?;
    for s in sections {
        match &s.body {
            Body::Json(j) => {
                writeln!(out, "#SECTION {}", s.name)?;
                writeln!(out, "{j}")?;
            }
            Body::Vocab(v) => {
                writeln!(out, "#SECTION {} {}", s.name, v.len())?;
                for (w, c) in v {
                    writeln!(out, "{w}\t{c}")?;
                }
            }
            Body::Matrix(m) => {
                writeln!(out, "#SECTION {} {} {}", s.name, m.rows(), m.cols())?;
                for r in 0..m.rows() {
                    let line: Vec<String> = m.row(r).iter().map(|&v| fmt_f32(v)).collect();
                    writeln!(out, "{}", line.join(" "))?;
                }
            }
        }
    }
    writeln!(out, "#END")?;
    Ok(())
}

fn read_text(bytes: &[u8]) -> Result<Vec<Section>> {
    let text = std::str::from_utf8(bytes).map_err(|e| Error::InvalidUtf8 {
        offset: e.valid_up_to() as u64,
    })?;
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l)).peekable();
    let (_, first) = lines
        .next()
        .ok_or_else(|| Error::format("line 1", "empty file"))?;
    let version: u32 = first
        .strip_prefix(TEXT_MAGIC)
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(|| Error::format("line 1", "malformed model header"))?;
    if version != FORMAT_VERSION {
        return Err(Error::Version {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let mut sections = Vec::new();
    loop {
        let Some((ln, line)) = lines.next() else {
            let last = sections
                .last()
                .map_or("header".to_string(), |s: &Section| s.name.clone());
            return Err(Error::format(
                "end of file",
                format!("truncated after section {last}: missing #END"),
            ));
        };
        if line == "#END" {
            return Ok(sections);
        }
        let mut parts = line
            .strip_prefix("#SECTION ")
            .ok_or_else(|| Error::format(format!("line {ln}"), "expected #SECTION"))?
            .split(' ');
        let name = parts.next().unwrap_or_default().to_string();
        let dims: Vec<usize> = parts
            .map(|p| {
                p.parse()
                    .map_err(|_| Error::format(format!("line {ln}"), format!("bad size {p:?}")))
            })
            .collect::<Result<_>>()?;
        let mut body_line = |what: &str| -> Result<(usize, &str)> {
            match lines.peek() {
                Some((_, l)) if !l.starts_with('#') => Ok(lines.next().unwrap()),
                _ => Err(Error::format(
                    format!("section {name}"),
                    format!("truncated: missing {what}"),
                )),
            }
        };
        let body = match dims.as_slice() {
            [] => Body::Json(body_line("JSON body")?.1.to_string()),
            [n] => {
                let mut v = Vec::with_capacity(*n);
                for i in 0..*n {
                    let (ln, l) = body_line(&format!("vocabulary row {} of {n}", i + 1))?;
                    let (w, c) = l.split_once('\t').ok_or_else(|| {
                        Error::format(format!("line {ln}"), "expected word<TAB>count")
                    })?;
                    let c = c.parse().map_err(|_| {
                        Error::format(format!("line {ln}"), format!("bad count {c:?}"))
                    })?;
                    v.push((w.to_string(), c));
                }
                Body::Vocab(v)
            }
            [rows, cols] => {
                let mut data = Vec::with_capacity(rows * cols);
                for r in 0..*rows {
                    let (ln, l) = body_line(&format!("row {} of {rows}", r + 1))?;
                    let before = data.len();
                    for tok in l.split(' ').filter(|t| !t.is_empty()) {
                        let v: f64 = tok.parse().map_err(|_| {
                            Error::format(format!("line {ln}"), format!("bad number {tok:?}"))
                        })?;
                        data.push(v as f32);
                    }
                    if data.len() - before != *cols {
                        return Err(Error::format(
                            format!("line {ln}"),
                            format!("{} values, expected {cols}", data.len() - before),
                        ));
                    }
                }
                Body::Matrix(Matrix::from_vec(*rows, *cols, data))
            }
            _ => {
                return Err(Error::format(
                    format!("line {ln}"),
                    "too many section sizes",
                ))
            }
        };
        sections.push(Section { name, body });
    }
}

fn write_binary<W: Write>(mut out: W, sections: &[Section]) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&FORMAT_VERSION.to_le_bytes())?;
    for s in sections {
        let mut payload = Vec::new();
        match &s.body {
            Body::Json(j) => {
                payload.push(0u8);
                payload.extend_from_slice(j.as_bytes());
            }
            Body::Vocab(v) => {
                payload.push(1u8);
                payload.extend_from_slice(&(v.len() as u64).to_le_bytes());
                for (w, c) in v {
                    payload.extend_from_slice(&(w.len() as u32).to_le_bytes());
                    payload.extend_from_slice(w.as_bytes());
                    payload.extend_from_slice(&c.to_le_bytes());
                }
            }
            Body::Matrix(m) => {
                payload.push(2u8);
                payload.extend_from_slice(&(m.rows() as u64).to_le_bytes());
                payload.extend_from_slice(&(m.cols() as u64).to_le_bytes());
                for v in m.as_slice() {
                    payload.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        out.write_all(&(s.name.len() as u32).to_le_bytes())?;
        out.write_all(s.name.as_bytes())?;
        out.write_all(&(payload.len() as u64).to_le_bytes())?;
        out.write_all(&payload)?;
    }
    Ok(())
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    what: String,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::format(
                format!("byte {}", self.pos),
                format!(
                    "truncated {}: need {n} bytes, {} left",
                    self.what,
                    self.bytes.len() - self.pos
                ),
            ));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn len(&mut self) -> Result<usize> {
        let at = self.pos;
        usize::try_from(self.u64()?)
            .map_err(|_| Error::format(format!("byte {at}"), "length overflows"))
    }

    fn string(&mut self, n: usize) -> Result<String> {
        let at = self.pos;
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|_| Error::format(format!("byte {at}"), "invalid UTF-8"))
    }
}

fn read_binary(bytes: &[u8]) -> Result<Vec<Section>> {
    let mut c = Cursor {
        bytes,
        pos: 4,
        what: "header".into(),
    };
    let version = c.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::Version {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let mut sections = Vec::new();
    while c.pos < bytes.len() {
        c.what = format!(
            "section name after {}",
            sections
                .last()
                .map_or("header", |s: &Section| s.name.as_str())
        );
        let n = c.u32()? as usize;
        let name = c.string(n)?;
        c.what = format!("section {name}");
        let len = c.len()?;
        let start = c.pos;
        let payload = c.take(len)?;
        let mut p = Cursor {
            bytes: payload,
            pos: 0,
            what: format!("section {name}"),
        };
        let bad = |m: &str| Error::format(format!("byte {start}"), format!("section {name}: {m}"));
        let body = match p.take(1)?[0] {
            0 => Body::Json(p.string(len - 1)?),
            1 => {
                let n = p.len()?;
                let mut v = Vec::with_capacity(n.min(1 << 20));
                for _ in 0..n {
                    let k = p.u32()? as usize;
                    let w = p.string(k)?;
                    v.push((w, p.u64()?));
                }
                Body::Vocab(v)
            }
            2 => {
                let (rows, cols) = (p.len()?, p.len()?);
                let count = rows
                    .checked_mul(cols)
                    .ok_or_else(|| bad("matrix size overflows"))?;
                if p.bytes.len() - p.pos != count * 4 {
                    return Err(bad("matrix payload length does not match its shape"));
                }
                let data = p
                    .take(count * 4)?
                    .chunks_exact(4)
                    .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
                    .collect();
                Body::Matrix(Matrix::from_vec(rows, cols, data))
            }
            t => return Err(bad(&format!("unknown section type {t}"))),
        };
        sections.push(Section { name, body });
    }
    Ok(sections)
}
