//! Binary model files, text embedding export and encoded-vector files.
//!
//! Model file layout (little-endian):
//!
//! ```text
//! "SRT1" | u8 kind | u32 version | u32 vocab size | u32 ndims | u32 dims[ndims]
//! | u32 config length | config JSON
//! | per vocab entry: u32 token length | token bytes | u64 count
//! | f32 parameter blocks
//! | u32 CRC32 of everything before it
//! ```
//!
//! Parameter blocks by kind, each row-major:
//!
//! * FastSent (dims `[d]`): source `V×d`, target `V×d`.
//! * SDAE (dims `[dw, dh]`): embeddings `(V+1)×dw`; encoder weights
//!   `4dh×(dw+dh)` then bias `4dh`; decoder weights and bias likewise;
//!   output `(V+1)×dh`; output bias `V+1`.
//! * CBOW / SkipGram (dims `[d]`): input `V×d`, output `V×d`.
//! * TFIDF (dims `[n]`): idf weights, length `n`.

use std::fs;
use std::io::{BufRead, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::baselines::{EmbeddingMode, TfidfConfig, TfidfModel, WordEmbeddingConfig, WordEmbeddingModel};
use crate::corpus::Vocabulary;
use crate::encoder::{Encoding, SentenceEncoder};
use crate::error::{Error, ModelFileError, Result};
use crate::fastsent::{FastSentConfig, FastSentModel};
use crate::numeric::{Matrix, SentenceRepresentation, SparseVector};
use crate::sdae::lstm::LstmParams;
use crate::sdae::{SdaeConfig, Seq2SeqModel};

pub const MAGIC: &[u8; 4] = b"SRT1";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum ModelKind {
    FastSent = 1,
    Sdae = 2,
    Cbow = 3,
    Skipgram = 4,
    Tfidf = 5,
}

impl ModelKind {
    pub fn from_byte(b: u8) -> std::result::Result<Self, ModelFileError> {
        Ok(match b {
            1 => ModelKind::FastSent,
            2 => ModelKind::Sdae,
            3 => ModelKind::Cbow,
            4 => ModelKind::Skipgram,
            5 => ModelKind::Tfidf,
            other => return Err(ModelFileError::UnknownKind(other)),
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::FastSent => "fastsent",
            ModelKind::Sdae => "sdae",
            ModelKind::Cbow => "cbow",
            ModelKind::Skipgram => "skipgram",
            ModelKind::Tfidf => "tfidf",
        }
    }
}

/// Any model that can live in a model file.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyModel {
    FastSent(FastSentModel),
    Sdae(Seq2SeqModel),
    WordEmbedding(WordEmbeddingModel),
    Tfidf(TfidfModel),
}

impl AnyModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            AnyModel::FastSent(_) => ModelKind::FastSent,
            AnyModel::Sdae(_) => ModelKind::Sdae,
            AnyModel::WordEmbedding(m) => match m.config.mode {
                EmbeddingMode::Cbow => ModelKind::Cbow,
                EmbeddingMode::Skipgram => ModelKind::Skipgram,
            },
            AnyModel::Tfidf(_) => ModelKind::Tfidf,
        }
    }

    pub fn vocab(&self) -> &Vocabulary {
        match self {
            AnyModel::FastSent(m) => &m.vocab,
            AnyModel::Sdae(m) => &m.vocab,
            AnyModel::WordEmbedding(m) => &m.vocab,
            AnyModel::Tfidf(m) => &m.vocab,
        }
    }

    /// The word-level matrix exported by `export-text`, with one token per row.
    pub fn word_vectors(&self) -> Result<(Vec<&str>, &Matrix<f32>)> {
        let tokens: Vec<&str> = self.vocab().tokens().iter().map(String::as_str).collect();
        match self {
            AnyModel::FastSent(m) => Ok((tokens, &m.source)),
            AnyModel::WordEmbedding(m) => Ok((tokens, &m.input)),
            AnyModel::Sdae(m) => {
                let mut tokens = tokens;
                tokens.push("<s>");
                Ok((tokens, &m.embeddings))
            }
            AnyModel::Tfidf(_) => Err(Error::InvalidArgument("TFIDF models have no word vectors".into())),
        }
    }

    pub fn config_json(&self) -> serde_json::Value {
        let v = match self {
            AnyModel::FastSent(m) => serde_json::to_value(&m.config),
            AnyModel::Sdae(m) => serde_json::to_value(&m.config),
            AnyModel::WordEmbedding(m) => serde_json::to_value(&m.config),
            AnyModel::Tfidf(m) => serde_json::to_value(&m.config),
        };
        v.expect("configs serialize to JSON")
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = Writer::default();
        w.buf.extend_from_slice(MAGIC);
        w.buf.push(self.kind() as u8);
        w.u32(FORMAT_VERSION);
        w.u32(self.vocab().len() as u32);
        let dims: Vec<usize> = match self {
            AnyModel::FastSent(m) => vec![m.dim()],
            AnyModel::Sdae(m) => vec![m.config.word_dim, m.config.hidden_dim],
            AnyModel::WordEmbedding(m) => vec![m.dim()],
            AnyModel::Tfidf(m) => vec![m.n_features()],
        };
        w.u32(dims.len() as u32);
        dims.iter().for_each(|&d| w.u32(d as u32));
        match self {
            AnyModel::FastSent(m) => w.json(&m.config)?,
            AnyModel::Sdae(m) => w.json(&m.config)?,
            AnyModel::WordEmbedding(m) => w.json(&m.config)?,
            AnyModel::Tfidf(m) => w.json(&m.config)?,
        }
        for (token, &count) in self.vocab().tokens().iter().zip(self.vocab().counts()) {
            w.u32(token.len() as u32);
            w.buf.extend_from_slice(token.as_bytes());
            w.buf.extend_from_slice(&count.to_le_bytes());
        }
        match self {
            AnyModel::FastSent(m) => {
                w.floats(m.source.as_slice());
                w.floats(m.target.as_slice());
            }
            AnyModel::Sdae(m) => {
                w.floats(m.embeddings.as_slice());
                for lstm in [&m.encoder, &m.decoder] {
                    w.floats(lstm.weights.as_slice());
                    w.floats(&lstm.bias);
                }
                w.floats(m.output.as_slice());
                w.floats(&m.output_bias);
            }
            AnyModel::WordEmbedding(m) => {
                w.floats(m.input.as_slice());
                w.floats(m.output.as_slice());
            }
            AnyModel::Tfidf(m) => w.floats(&m.idf),
        }
        let crc = crc32fast::hash(&w.buf);
        w.u32(crc);
        Ok(w.buf)
    }

    /// Checks run in order: magic, kind and version, structural length
    /// (truncation), checksum, then content.
    pub fn from_bytes(data: &[u8]) -> Result<Self> {
        if data.len() < 4 || &data[..4] != MAGIC {
            return Err(ModelFileError::BadMagic.into());
        }
        let mut r = Reader { data, pos: 4 };
        let kind = ModelKind::from_byte(r.u8()?)?;
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(ModelFileError::UnsupportedVersion(version).into());
        }
        let vocab_size = r.u32()? as usize;
        let ndims = r.u32()? as usize;
        let expected_dims = if kind == ModelKind::Sdae { 2 } else { 1 };
        if ndims != expected_dims {
            return Err(ModelFileError::Malformed(format!("{} model with {ndims} dims", kind.name())).into());
        }
        let dims = (0..ndims).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let config_len = r.u32()? as usize;
        let config = r.bytes(config_len)?;
        let mut entries = Vec::with_capacity(vocab_size.min(r.remaining() / 12));
        for _ in 0..vocab_size {
            let len = r.u32()? as usize;
            let token = r.bytes(len)?;
            let count = u64::from_le_bytes(r.bytes(8)?.try_into().expect("8 bytes"));
            entries.push((token, count));
        }

        let (v, d0) = (vocab_size, dims[0]);
        let block_sizes: Vec<usize> = match kind {
            ModelKind::FastSent | ModelKind::Cbow | ModelKind::Skipgram => vec![v * d0, v * d0],
            ModelKind::Sdae => {
                let (dw, dh) = (d0, dims[1]);
                vec![
                    (v + 1) * dw,
                    4 * dh * (dw + dh),
                    4 * dh,
                    4 * dh * (dw + dh),
                    4 * dh,
                    (v + 1) * dh,
                    v + 1,
                ]
            }
            ModelKind::Tfidf => vec![d0],
        };
        let mut blocks = Vec::with_capacity(block_sizes.len());
        for n in block_sizes {
            blocks.push(r.floats(n)?);
        }
        let body_end = r.pos;
        let stored = r.u32()?;
        if r.remaining() != 0 {
            return Err(ModelFileError::Malformed(format!("{} trailing bytes", r.remaining())).into());
        }
        let computed = crc32fast::hash(&data[..body_end]);
        if stored != computed {
            return Err(ModelFileError::ChecksumMismatch { stored, computed }.into());
        }

        let entries = entries
            .into_iter()
            .map(|(t, c)| {
                String::from_utf8(t.to_vec())
                    .map(|t| (t, c))
                    .map_err(|_| ModelFileError::Malformed("vocabulary token is not UTF-8".into()))
            })
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let vocab =
            Vocabulary::from_counts(entries).map_err(|e| ModelFileError::Malformed(format!("vocabulary: {e}")))?;
        let mut blocks = blocks.into_iter();
        let mut next = || blocks.next().expect("block count fixed by kind");
        let model = match kind {
            ModelKind::FastSent => {
                let config: FastSentConfig = parse_config(config)?;
                check_dim(config.train.dim, d0)?;
                AnyModel::FastSent(FastSentModel::from_parts(
                    vocab,
                    config,
                    Matrix::from_vec(v, d0, next())?,
                    Matrix::from_vec(v, d0, next())?,
                )?)
            }
            ModelKind::Cbow | ModelKind::Skipgram => {
                let config: WordEmbeddingConfig = parse_config(config)?;
                check_dim(config.train.dim, d0)?;
                let mode = if kind == ModelKind::Cbow {
                    EmbeddingMode::Cbow
                } else {
                    EmbeddingMode::Skipgram
                };
                if config.mode != mode {
                    return Err(ModelFileError::Malformed("config mode disagrees with model kind".into()).into());
                }
                AnyModel::WordEmbedding(WordEmbeddingModel::from_parts(
                    vocab,
                    config,
                    Matrix::from_vec(v, d0, next())?,
                    Matrix::from_vec(v, d0, next())?,
                )?)
            }
            ModelKind::Sdae => {
                let config: SdaeConfig = parse_config(config)?;
                let (dw, dh) = (d0, dims[1]);
                check_dim(config.word_dim, dw)?;
                check_dim(config.hidden_dim, dh)?;
                let embeddings = Matrix::from_vec(v + 1, dw, next())?;
                let mut lstm = || -> Result<LstmParams<f32>> {
                    Ok(LstmParams {
                        weights: Matrix::from_vec(4 * dh, dw + dh, next())?,
                        bias: next(),
                        input: dw,
                        hidden: dh,
                    })
                };
                let encoder = lstm()?;
                let decoder = lstm()?;
                AnyModel::Sdae(Seq2SeqModel {
                    embeddings,
                    encoder,
                    decoder,
                    output: Matrix::from_vec(v + 1, dh, next())?,
                    output_bias: next(),
                    vocab,
                    config,
                })
            }
            ModelKind::Tfidf => {
                let config: TfidfConfig = parse_config(config)?;
                if d0 > v || d0 > config.max_features {
                    return Err(ModelFileError::Malformed("more TFIDF features than vocabulary".into()).into());
                }
                AnyModel::Tfidf(TfidfModel {
                    vocab,
                    idf: next(),
                    config,
                })
            }
        };
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let data = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&data)
    }
}

fn check_dim(config: usize, header: usize) -> Result<()> {
    if config != header {
        return Err(ModelFileError::Malformed(format!("config dim {config} but header dim {header}")).into());
    }
    Ok(())
}

fn parse_config<C: DeserializeOwned>(bytes: &[u8]) -> Result<C> {
    serde_json::from_slice(bytes).map_err(|e| ModelFileError::Malformed(format!("config: {e}")).into())
}

impl SentenceEncoder for AnyModel {
    fn dim(&self) -> usize {
        match self {
            AnyModel::FastSent(m) => m.dim(),
            AnyModel::Sdae(m) => SentenceEncoder::dim(m),
            AnyModel::WordEmbedding(m) => m.dim(),
            AnyModel::Tfidf(m) => m.n_features(),
        }
    }

    fn encode(&self, text: &str) -> Encoding {
        match self {
            AnyModel::FastSent(m) => m.encode(text),
            AnyModel::Sdae(m) => m.encode(text),
            AnyModel::WordEmbedding(m) => m.encode(text),
            AnyModel::Tfidf(m) => m.encode(text),
        }
    }
}

impl From<FastSentModel> for AnyModel {
    fn from(m: FastSentModel) -> Self {
        AnyModel::FastSent(m)
    }
}

impl From<Seq2SeqModel> for AnyModel {
    fn from(m: Seq2SeqModel) -> Self {
        AnyModel::Sdae(m)
    }
}

impl From<WordEmbeddingModel> for AnyModel {
    fn from(m: WordEmbeddingModel) -> Self {
        AnyModel::WordEmbedding(m)
    }
}

impl From<TfidfModel> for AnyModel {
    fn from(m: TfidfModel) -> Self {
        AnyModel::Tfidf(m)
    }
}

#[derive(Default)]
struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }

    fn floats(&mut self, xs: &[f32]) {
        self.buf.reserve(xs.len() * 4);
        for x in xs {
            self.buf.extend_from_slice(&x.to_le_bytes());
        }
    }

    fn json<C: Serialize>(&mut self, config: &C) -> Result<()> {
        let text = serde_json::to_vec(config).map_err(|e| Error::InvalidArgument(format!("config: {e}")))?;
        self.u32(text.len() as u32);
        self.buf.extend_from_slice(&text);
        Ok(())
    }
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.data.len() - self.pos
    }

    fn bytes(&mut self, n: usize) -> Result<&'a [u8]> {
        if n > self.remaining() {
            return Err(ModelFileError::Truncated {
                offset: self.pos,
                needed: n,
            }
            .into());
        }
        let out = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.bytes(1)?[0])
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes(4)?.try_into().expect("4 bytes")))
    }

    fn floats(&mut self, n: usize) -> Result<Vec<f32>> {
        let len = n.checked_mul(4).ok_or(ModelFileError::Malformed("block size overflows".into()))?;
        let raw = self.bytes(len)?;
        Ok(raw
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect())
    }
}

/// Standard text embedding format: `rows dim`, then `token v1 v2 …` per row.
pub fn write_text_embeddings<W: Write>(tokens: &[&str], matrix: &Matrix<f32>, w: W) -> Result<()> {
    if tokens.len() != matrix.rows() {
        return Err(Error::DimensionMismatch {
            expected: matrix.rows(),
            actual: tokens.len(),
        });
    }
    let mut w = BufWriter::new(w);
    writeln!(w, "{} {}", matrix.rows(), matrix.cols()).map_err(Error::Stream)?;
    for (i, token) in tokens.iter().enumerate() {
        write!(w, "{token}").map_err(Error::Stream)?;
        for v in matrix.row(i) {
            write!(w, " {v}").map_err(Error::Stream)?;
        }
        writeln!(w).map_err(Error::Stream)?;
    }
    w.flush().map_err(Error::Stream)
}

pub fn read_text_embeddings<R: BufRead>(r: R) -> Result<(Vec<String>, Matrix<f32>)> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse("line 1", "missing header"))?
        .map_err(Error::Stream)?;
    let mut parts = header.split_whitespace().map(str::parse::<usize>);
    let (rows, dim) = match (parts.next(), parts.next(), parts.next()) {
        (Some(Ok(r)), Some(Ok(d)), None) => (r, d),
        _ => return Err(Error::parse("line 1", "expected `rows dim`")),
    };
    let mut tokens = Vec::with_capacity(rows);
    let mut data = Vec::with_capacity(rows.saturating_mul(dim).min(1 << 26));
    for (i, line) in lines.enumerate() {
        let line = line.map_err(Error::Stream)?;
        if line.trim().is_empty() {
            continue;
        }
        let loc = format!("line {}", i + 2);
        let mut fields = line.split(' ');
        let token = fields.next().unwrap_or_default().to_string();
        let before = data.len();
        for f in fields.filter(|f| !f.is_empty()) {
            data.push(f.parse::<f32>().map_err(|e| Error::parse(&loc, e.to_string()))?);
        }
        if data.len() - before != dim {
            return Err(Error::parse(&loc, format!("expected {dim} values, found {}", data.len() - before)));
        }
        tokens.push(token);
    }
    if tokens.len() != rows {
        return Err(Error::parse("header", format!("declares {rows} rows, found {}", tokens.len())));
    }
    Ok((tokens, Matrix::from_vec(rows, dim, data)?))
}

/// Encoded vectors. Dense: `u32 count | u32 dim | f32 rows`. Sparse:
/// `u32 count | u32 dim`, then per vector `u32 nnz` and `(u32 index, f32
/// value)` pairs.
pub fn write_encodings<W: Write>(encodings: &[Encoding], dim: usize, w: W) -> Result<()> {
    let mut w = BufWriter::new(w);
    let mut put = |b: &[u8]| w.write_all(b).map_err(Error::Stream);
    put(&(encodings.len() as u32).to_le_bytes())?;
    put(&(dim as u32).to_le_bytes())?;
    for e in encodings {
        if e.repr.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: e.repr.dim(),
            });
        }
        match &e.repr {
            SentenceRepresentation::Dense(v) => {
                for x in v {
                    put(&x.to_le_bytes())?;
                }
            }
            SentenceRepresentation::Sparse(s) => {
                put(&(s.nnz() as u32).to_le_bytes())?;
                for &(i, x) in &s.entries {
                    put(&i.to_le_bytes())?;
                    put(&x.to_le_bytes())?;
                }
            }
        }
    }
    w.flush().map_err(Error::Stream)
}

pub fn read_encodings<R: Read>(mut r: R, sparse: bool) -> Result<Vec<SentenceRepresentation>> {
    let mut data = Vec::new();
    r.read_to_end(&mut data).map_err(Error::Stream)?;
    let mut r = Reader { data: &data, pos: 0 };
    let count = r.u32()? as usize;
    let dim = r.u32()? as usize;
    let mut out = Vec::with_capacity(count.min(r.remaining()));
    for _ in 0..count {
        if sparse {
            let nnz = r.u32()? as usize;
            let mut entries = Vec::with_capacity(nnz.min(r.remaining() / 8));
            for _ in 0..nnz {
                let i = r.u32()?;
                let x = f32::from_bits(r.u32()?);
                entries.push((i, x));
            }
            out.push(SentenceRepresentation::Sparse(SparseVector { dim, entries }));
        } else {
            out.push(SentenceRepresentation::Dense(r.floats(dim)?));
        }
    }
    Ok(out)
}
