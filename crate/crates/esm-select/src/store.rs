//! Little-endian binary formats for embeddings (`ESEB`), labels (`ESLB`),
//! pseudo-labels (`ESPL`), token sets (`ESTS`) and ESMs (`ESMW`).
//!
//! Every file is `magic[4] | version u32 | header | payload | u32 len | JSON`.
//! A zero metadata length stands for empty metadata. Header sizes are checked
//! against the file length before any payload is allocated, and writes go
//! through a temporary file in the destination directory that is renamed
//! into place, so a failed write never leaves a partial file.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use esm_select_core::{EmbeddingMatrix, Esm, EsmMeta, LabelData, PseudoLabelMatrix, TokenSet};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub const VERSION: u32 = 1;

pub const MATRIX_MAGIC: [u8; 4] = *b"ESEB";
pub const LABELS_MAGIC: [u8; 4] = *b"ESLB";
pub const PSEUDO_MAGIC: [u8; 4] = *b"ESPL";
pub const TOKENS_MAGIC: [u8; 4] = *b"ESTS";
pub const ESM_MAGIC: [u8; 4] = *b"ESMW";

const DTYPE_F32: u8 = 0;
const DTYPE_U32: u8 = 1;
const KIND_CLASSIFICATION: u8 = 0;
const KIND_REGRESSION: u8 = 1;
/// Decode buffer size; bounds transient memory above the payload itself.
const CHUNK_BYTES: usize = 1 << 16;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("unrecognized format: expected magic {expected:?}, found {found:?}")]
    UnrecognizedFormat { expected: String, found: String },
    #[error("unsupported version {0} (this build reads version {VERSION})")]
    UnsupportedVersion(u32),
    #[error("short read: {needed} more bytes declared, {available} available")]
    ShortRead { needed: u64, available: u64 },
    #[error("unsupported {field} code {code}")]
    UnsupportedCode { field: &'static str, code: u8 },
    #[error("{0} trailing bytes after metadata")]
    TrailingBytes(u64),
    #[error("invalid metadata: {0}")]
    Metadata(#[from] serde_json::Error),
    #[error(transparent)]
    Invalid(#[from] esm_select_core::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = StoreError> = std::result::Result<T, E>;

#[derive(Debug, Default, PartialEq, Serialize, Deserialize)]
struct ModelMeta {
    #[serde(default)]
    model_id: String,
}

#[derive(Debug, Default, PartialEq, Serialize, Deserialize)]
struct TokenizerMeta {
    #[serde(default)]
    tokenizer_id: String,
}

#[derive(Debug, Default, PartialEq, Serialize, Deserialize)]
struct EmptyMeta {}

struct Writer<W: Write> {
    inner: W,
}

impl<W: Write> Writer<W> {
    fn header(&mut self, magic: [u8; 4]) -> io::Result<()> {
        self.inner.write_all(&magic)?;
        self.u32(VERSION)
    }

    fn code(&mut self, code: u8) -> io::Result<()> {
        self.inner.write_all(&[code, 0, 0, 0])
    }

    fn u32(&mut self, v: u32) -> io::Result<()> {
        self.inner.write_all(&v.to_le_bytes())
    }

    fn u64(&mut self, v: usize) -> io::Result<()> {
        self.inner.write_all(&(v as u64).to_le_bytes())
    }

    fn f32s(&mut self, values: &[f32]) -> io::Result<()> {
        for chunk in values.chunks(CHUNK_BYTES / 4) {
            let bytes: Vec<u8> = chunk.iter().flat_map(|v| v.to_le_bytes()).collect();
            self.inner.write_all(&bytes)?;
        }
        Ok(())
    }

    fn u32s(&mut self, values: &[u32]) -> io::Result<()> {
        for chunk in values.chunks(CHUNK_BYTES / 4) {
            let bytes: Vec<u8> = chunk.iter().flat_map(|v| v.to_le_bytes()).collect();
            self.inner.write_all(&bytes)?;
        }
        Ok(())
    }

    /// `Default` metadata is written as a zero-length block.
    fn metadata<T: Serialize + Default + PartialEq>(&mut self, meta: &T) -> Result<()> {
        let json = if *meta == T::default() { Vec::new() } else { serde_json::to_vec(meta)? };
        let len = u32::try_from(json.len()).map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "metadata exceeds 4 GiB"))?;
        self.u32(len)?;
        self.inner.write_all(&json)?;
        Ok(())
    }
}

/// Writes through a temporary sibling file that replaces `path` on success.
fn write_atomic(path: &Path, body: impl FnOnce(&mut Writer<BufWriter<&mut File>>) -> Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = Writer { inner: BufWriter::new(tmp.as_file_mut()) };
        body(&mut w)?;
        w.inner.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

struct Reader<R: Read> {
    inner: R,
    remaining: u64,
}

impl Reader<BufReader<File>> {
    fn open(path: &Path, magic: [u8; 4]) -> Result<Self> {
        let file = File::open(path)?;
        let remaining = file.metadata()?.len();
        let mut r = Reader { inner: BufReader::new(file), remaining };
        r.expect_header(magic)?;
        Ok(r)
    }
}

impl<R: Read> Reader<R> {
    fn expect_header(&mut self, magic: [u8; 4]) -> Result<()> {
        self.reserve(4)?;
        let mut found = [0u8; 4];
        self.bytes(&mut found)?;
        if found != magic {
            return Err(StoreError::UnrecognizedFormat {
                expected: String::from_utf8_lossy(&magic).into_owned(),
                found: String::from_utf8_lossy(&found).into_owned(),
            });
        }
        self.reserve(4)?;
        let version = self.u32()?;
        if version != VERSION {
            return Err(StoreError::UnsupportedVersion(version));
        }
        Ok(())
    }

    /// Fails unless at least `needed` unread bytes remain.
    fn reserve(&self, needed: u64) -> Result<()> {
        if needed > self.remaining {
            return Err(StoreError::ShortRead { needed, available: self.remaining });
        }
        Ok(())
    }

    fn bytes(&mut self, buf: &mut [u8]) -> Result<()> {
        self.reserve(buf.len() as u64)?;
        self.inner.read_exact(buf).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => StoreError::ShortRead { needed: buf.len() as u64, available: 0 },
            _ => StoreError::Io(e),
        })?;
        self.remaining -= buf.len() as u64;
        Ok(())
    }

    fn code(&mut self, field: &'static str, allowed: &[u8]) -> Result<u8> {
        let mut b = [0u8; 4];
        self.bytes(&mut b)?;
        if !allowed.contains(&b[0]) {
            return Err(StoreError::UnsupportedCode { field, code: b[0] });
        }
        Ok(b[0])
    }

    fn u32(&mut self) -> Result<u32> {
        let mut b = [0u8; 4];
        self.bytes(&mut b)?;
        Ok(u32::from_le_bytes(b))
    }

    fn u64(&mut self) -> Result<u64> {
        let mut b = [0u8; 8];
        self.bytes(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }

    /// Byte size of `count` 4-byte words plus the metadata length field,
    /// checked against the remaining file size.
    fn reserve_words(&self, count: u64) -> Result<usize> {
        let needed = count.checked_mul(4).and_then(|b| b.checked_add(4)).unwrap_or(u64::MAX);
        self.reserve(needed)?;
        usize::try_from(count).map_err(|_| StoreError::ShortRead { needed, available: self.remaining })
    }

    fn words<T>(&mut self, count: usize, decode: fn([u8; 4]) -> T) -> Result<Vec<T>> {
        let mut out = Vec::with_capacity(count);
        let mut buf = vec![0u8; CHUNK_BYTES.min(count * 4)];
        let mut left = count * 4;
        while left > 0 {
            let take = left.min(buf.len());
            self.bytes(&mut buf[..take])?;
            out.extend(buf[..take].chunks_exact(4).map(|c| decode([c[0], c[1], c[2], c[3]])));
            left -= take;
        }
        Ok(out)
    }

    fn metadata<T: DeserializeOwned + Default>(&mut self) -> Result<T> {
        let len = u64::from(self.u32()?);
        self.reserve(len)?;
        let meta = if len == 0 {
            T::default()
        } else {
            let mut json = vec![0u8; len as usize];
            self.bytes(&mut json)?;
            serde_json::from_slice(&json)?
        };
        if self.remaining != 0 {
            return Err(StoreError::TrailingBytes(self.remaining));
        }
        Ok(meta)
    }
}

pub fn write_matrix(m: &EmbeddingMatrix, path: &Path) -> Result<()> {
    write_atomic(path, |w| {
        w.header(MATRIX_MAGIC)?;
        w.code(DTYPE_F32)?;
        w.u64(m.rows())?;
        w.u64(m.cols())?;
        w.f32s(m.data())?;
        w.metadata(&ModelMeta { model_id: m.model_id().into() })
    })
}

pub fn read_matrix(path: &Path) -> Result<EmbeddingMatrix> {
    let mut r = Reader::open(path, MATRIX_MAGIC)?;
    r.code("dtype", &[DTYPE_F32])?;
    let (n, d) = (r.u64()?, r.u64()?);
    let count = r.reserve_words(n.saturating_mul(d))?;
    let data = r.words(count, f32::from_le_bytes)?;
    let meta: ModelMeta = r.metadata()?;
    Ok(EmbeddingMatrix::new(n as usize, d as usize, data, meta.model_id)?)
}

/// `ESLB`: kind (0 classification, 1 regression), `n`, then the number of
/// classes `K` with `n` u32 ids, or the column count `m` with `n x m` f32.
pub fn write_labels(labels: &LabelData, path: &Path) -> Result<()> {
    write_atomic(path, |w| {
        w.header(LABELS_MAGIC)?;
        match labels {
            LabelData::Classification { ids, num_classes } => {
                w.code(KIND_CLASSIFICATION)?;
                w.u64(ids.len())?;
                w.u64(*num_classes as usize)?;
                w.u32s(ids)?;
            }
            LabelData::Regression { rows, cols, values } => {
                w.code(KIND_REGRESSION)?;
                w.u64(*rows)?;
                w.u64(*cols)?;
                w.f32s(values)?;
            }
        }
        w.metadata(&EmptyMeta {})
    })
}

pub fn read_labels(path: &Path) -> Result<LabelData> {
    let mut r = Reader::open(path, LABELS_MAGIC)?;
    let kind = r.code("label kind", &[KIND_CLASSIFICATION, KIND_REGRESSION])?;
    let (n, m) = (r.u64()?, r.u64()?);
    let labels = if kind == KIND_CLASSIFICATION {
        let count = r.reserve_words(n)?;
        let ids = r.words(count, u32::from_le_bytes)?;
        let k = u32::try_from(m).map_err(|_| esm_select_core::Error::InvalidLabels(format!("{m} classes")))?;
        LabelData::classification(ids, k)?
    } else {
        let count = r.reserve_words(n.saturating_mul(m))?;
        let values = r.words(count, f32::from_le_bytes)?;
        LabelData::regression(n as usize, m as usize, values)?
    };
    let _: EmptyMeta = r.metadata()?;
    Ok(labels)
}

pub fn write_pseudo(p: &PseudoLabelMatrix, path: &Path) -> Result<()> {
    write_atomic(path, |w| {
        w.header(PSEUDO_MAGIC)?;
        w.code(DTYPE_F32)?;
        w.u64(p.rows())?;
        w.u64(p.classes())?;
        w.f32s(p.data())?;
        w.metadata(&ModelMeta { model_id: p.model_id().into() })
    })
}

/// Rows must sum to one within the core tolerance; values are kept as stored.
pub fn read_pseudo(path: &Path) -> Result<PseudoLabelMatrix> {
    let mut r = Reader::open(path, PSEUDO_MAGIC)?;
    r.code("dtype", &[DTYPE_F32])?;
    let (n, z) = (r.u64()?, r.u64()?);
    let count = r.reserve_words(n.saturating_mul(z))?;
    let data = r.words(count, f32::from_le_bytes)?;
    let meta: ModelMeta = r.metadata()?;
    Ok(PseudoLabelMatrix::new(n as usize, z as usize, data, meta.model_id)?)
}

/// `ESTS`: dtype u32, count, ascending ids.
pub fn write_tokenset(t: &TokenSet, path: &Path) -> Result<()> {
    write_atomic(path, |w| {
        w.header(TOKENS_MAGIC)?;
        w.code(DTYPE_U32)?;
        w.u64(t.len())?;
        w.u32s(t.ids())?;
        w.metadata(&TokenizerMeta { tokenizer_id: t.tokenizer_id().into() })
    })
}

pub fn read_tokenset(path: &Path) -> Result<TokenSet> {
    let mut r = Reader::open(path, TOKENS_MAGIC)?;
    r.code("dtype", &[DTYPE_U32])?;
    let count = r.u64()?;
    let count = r.reserve_words(count)?;
    let ids = r.words(count, u32::from_le_bytes)?;
    let meta: TokenizerMeta = r.metadata()?;
    Ok(TokenSet::new(ids, meta.tokenizer_id)?)
}

/// `ESMW`: `d_in`, `d_out`, row-major weight, bias, training metadata.
pub fn write_esm(esm: &Esm, path: &Path) -> Result<()> {
    write_atomic(path, |w| {
        w.header(ESM_MAGIC)?;
        w.u64(esm.d_in())?;
        w.u64(esm.d_out())?;
        w.f32s(esm.weight())?;
        w.f32s(esm.bias())?;
        w.metadata(&esm.meta)
    })
}

pub fn read_esm(path: &Path) -> Result<Esm> {
    let mut r = Reader::open(path, ESM_MAGIC)?;
    let (d_in, d_out) = (r.u64()?, r.u64()?);
    let count = r.reserve_words(d_in.saturating_mul(d_out).saturating_add(d_out))?;
    let mut weight = r.words(count, f32::from_le_bytes)?;
    let bias = weight.split_off(count - d_out as usize);
    let meta: EsmMeta = r.metadata()?;
    Ok(Esm::new(d_in as usize, d_out as usize, weight, bias, meta)?)
}

/// Size in bytes of an `ESMW` file with empty metadata.
pub fn esm_file_size(d_in: usize, d_out: usize) -> u64 {
    (4 + 4 + 8 + 8 + 4 * (d_out * d_in + d_out) + 4) as u64
}
