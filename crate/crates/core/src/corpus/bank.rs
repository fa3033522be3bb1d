//! The STEB embedding bank.
//!
//! Byte layout, all integers little-endian:
//!
//! ```text
//! offset  size  field
//! 0       4     magic "STEB"
//! 4       2     format version (u16, currently 1)
//! 6       16    d_sentence, d_past, d_future, d_global (u32 each)
//! 22      8     document count (u64)
//! 30      ...   document records, back to back
//!
//! record:
//!         4     doc_id byte length (u32)
//!         k     doc_id, UTF-8
//!         16    vector counts: sentence, past, future, global (u32 each)
//!         ...   f32 values: sentence rows, then past, future, global
//! ```
//!
//! Values are stored as `f32` and widened to `f64` on load. Records built in
//! memory are rounded through `f32` on construction, so a write/read cycle
//! reproduces the bank exactly.

use std::fs;
use std::path::Path;

use indexmap::IndexMap;

use crate::error::{Error, Result};
use crate::numeric::Tensor;

pub const BANK_MAGIC: &[u8; 4] = b"STEB";
pub const BANK_VERSION: u16 = 1;
const HEADER_LEN: usize = 30;

/// Node role a bank vector belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeRole {
    Sentence,
    Past,
    Future,
    Global,
}

impl NodeRole {
    pub const ALL: [NodeRole; 4] = [NodeRole::Sentence, NodeRole::Past, NodeRole::Future, NodeRole::Global];

    pub fn name(self) -> &'static str {
        match self {
            NodeRole::Sentence => "sentence",
            NodeRole::Past => "past",
            NodeRole::Future => "future",
            NodeRole::Global => "global",
        }
    }
}

/// Per-role vector widths.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BankDims {
    pub sentence: usize,
    pub past: usize,
    pub future: usize,
    pub global: usize,
}

impl BankDims {
    pub fn uniform(dim: usize) -> Self {
        Self {
            sentence: dim,
            past: dim,
            future: dim,
            global: dim,
        }
    }

    pub fn get(&self, role: NodeRole) -> usize {
        match role {
            NodeRole::Sentence => self.sentence,
            NodeRole::Past => self.past,
            NodeRole::Future => self.future,
            NodeRole::Global => self.global,
        }
    }
}

/// Initial embeddings for one document, one row per vector.
#[derive(Clone, Debug, PartialEq)]
pub struct BankRecord {
    sentence: Tensor,
    past: Tensor,
    future: Tensor,
    global: Tensor,
}

fn quantize(t: Tensor) -> Tensor {
    let shape = t.shape().to_vec();
    let data = t.into_data().into_iter().map(|v| v as f32 as f64).collect();
    Tensor::new(shape, data).expect("shape preserved")
}

impl BankRecord {
    /// Each argument is a `[count, width]` matrix. Values are rounded to `f32`.
    pub fn new(sentence: Tensor, past: Tensor, future: Tensor, global: Tensor) -> Result<Self> {
        for (role, t) in NodeRole::ALL.iter().zip([&sentence, &past, &future, &global]) {
            if t.shape().len() != 2 {
                return Err(Error::shape(
                    "bank_record",
                    format!("{} vectors must be a matrix, got {:?}", role.name(), t.shape()),
                ));
            }
        }
        Ok(Self {
            sentence: quantize(sentence),
            past: quantize(past),
            future: quantize(future),
            global: quantize(global),
        })
    }

    pub fn vectors(&self, role: NodeRole) -> &Tensor {
        match role {
            NodeRole::Sentence => &self.sentence,
            NodeRole::Past => &self.past,
            NodeRole::Future => &self.future,
            NodeRole::Global => &self.global,
        }
    }

    pub fn count(&self, role: NodeRole) -> usize {
        self.vectors(role).shape()[0]
    }

    pub fn width(&self, role: NodeRole) -> usize {
        self.vectors(role).shape()[1]
    }

    pub fn total_vectors(&self) -> usize {
        NodeRole::ALL.iter().map(|&r| self.count(r)).sum()
    }

    /// Checks the record against a document of `n` sentences and the bank widths.
    pub fn check_against(&self, doc_id: &str, n: usize, dims: &BankDims) -> Result<()> {
        for role in NodeRole::ALL {
            let expected = if role == NodeRole::Global { 1 } else { n };
            if self.count(role) != expected {
                return Err(Error::BankMismatch {
                    doc_id: doc_id.to_string(),
                    msg: format!(
                        "{} vectors: expected {expected}, found {}",
                        role.name(),
                        self.count(role)
                    ),
                });
            }
            if self.width(role) != dims.get(role) {
                return Err(Error::BankMismatch {
                    doc_id: doc_id.to_string(),
                    msg: format!(
                        "{} width {} differs from bank width {}",
                        role.name(),
                        self.width(role),
                        dims.get(role)
                    ),
                });
            }
        }
        Ok(())
    }
}

/// Per-document initial embeddings keyed by `doc_id`, in insertion order.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingBank {
    dims: BankDims,
    records: IndexMap<String, BankRecord>,
}

impl EmbeddingBank {
    pub fn new(dims: BankDims) -> Self {
        Self {
            dims,
            records: IndexMap::new(),
        }
    }

    pub fn dims(&self) -> BankDims {
        self.dims
    }

    /// Adds a record whose widths must equal the bank widths.
    pub fn insert(&mut self, doc_id: impl Into<String>, record: BankRecord) -> Result<()> {
        let doc_id = doc_id.into();
        for role in NodeRole::ALL {
            if record.width(role) != self.dims.get(role) {
                return Err(Error::BankMismatch {
                    doc_id,
                    msg: format!(
                        "{} width {} differs from bank width {}",
                        role.name(),
                        record.width(role),
                        self.dims.get(role)
                    ),
                });
            }
        }
        if self.records.contains_key(&doc_id) {
            return Err(Error::DuplicateDoc(doc_id));
        }
        self.records.insert(doc_id, record);
        Ok(())
    }

    pub fn get(&self, doc_id: &str) -> Option<&BankRecord> {
        self.records.get(doc_id)
    }

    pub fn record(&self, doc_id: &str) -> Result<&BankRecord> {
        self.get(doc_id)
            .ok_or_else(|| Error::MissingDocument(doc_id.to_string()))
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BankRecord)> {
        self.records.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN);
        out.extend_from_slice(BANK_MAGIC);
        out.extend_from_slice(&BANK_VERSION.to_le_bytes());
        for role in NodeRole::ALL {
            out.extend_from_slice(&(self.dims.get(role) as u32).to_le_bytes());
        }
        out.extend_from_slice(&(self.records.len() as u64).to_le_bytes());
        for (id, rec) in &self.records {
            out.extend_from_slice(&(id.len() as u32).to_le_bytes());
            out.extend_from_slice(id.as_bytes());
            for role in NodeRole::ALL {
                out.extend_from_slice(&(rec.count(role) as u32).to_le_bytes());
            }
            for role in NodeRole::ALL {
                for &v in rec.vectors(role).data() {
                    out.extend_from_slice(&(v as f32).to_le_bytes());
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        let magic = r.take(4, "magic")?;
        if magic != BANK_MAGIC {
            return Err(r.error_at(0, format!("bad magic {magic:?}, expected \"STEB\"")));
        }
        let version = r.u16("version")?;
        if version != BANK_VERSION {
            return Err(r.error_at(4, format!("unsupported version {version}")));
        }
        let dims = BankDims {
            sentence: r.u32("d_sentence")? as usize,
            past: r.u32("d_past")? as usize,
            future: r.u32("d_future")? as usize,
            global: r.u32("d_global")? as usize,
        };
        let count = r.u64("document count")?;
        let mut bank = EmbeddingBank::new(dims);
        for _ in 0..count {
            let start = r.pos;
            let id_len = r.u32("doc_id length")? as usize;
            let id_bytes = r.take(id_len, "doc_id")?;
            let doc_id = std::str::from_utf8(id_bytes)
                .map_err(|_| r.error_at(start + 4, "doc_id is not UTF-8".into()))?
                .to_string();
            let mut counts = [0usize; 4];
            for c in &mut counts {
                *c = r.u32("vector count")? as usize;
            }
            let mut parts = Vec::with_capacity(4);
            for (role, &n) in NodeRole::ALL.iter().zip(&counts) {
                let width = dims.get(*role);
                let len = n
                    .checked_mul(width)
                    .and_then(|k| k.checked_mul(4))
                    .ok_or_else(|| r.error_at(r.pos, "vector count overflows".into()))?;
                let raw = r.take(len, role.name())?;
                let data = raw
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
                    .collect();
                parts.push(Tensor::matrix(n, width, data)?);
            }
            let global = parts.pop().expect("four parts");
            let future = parts.pop().expect("four parts");
            let past = parts.pop().expect("four parts");
            let sentence = parts.pop().expect("four parts");
            let record = BankRecord {
                sentence,
                past,
                future,
                global,
            };
            if bank.records.contains_key(&doc_id) {
                return Err(r.error_at(start, format!("duplicate doc_id `{doc_id}`")));
            }
            bank.records.insert(doc_id, record);
        }
        if r.pos != bytes.len() {
            return Err(r.error_at(r.pos, format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(bank)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn error_at(&self, offset: usize, msg: String) -> Error {
        Error::BankFormat {
            offset: offset as u64,
            msg,
        }
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(self.error_at(
                self.pos,
                format!(
                    "truncated while reading {what}: need {n} bytes, {} left",
                    self.bytes.len() - self.pos
                ),
            )),
        }
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        let b = self.take(2, what)?;
        Ok(u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.take(4, what)?;
        Ok(u32::from_le_bytes(b.try_into().expect("4 bytes")))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        let b = self.take(8, what)?;
        Ok(u64::from_le_bytes(b.try_into().expect("8 bytes")))
    }
}

pub fn write_bank(bank: &EmbeddingBank, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, bank.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn read_bank(path: impl AsRef<Path>) -> Result<EmbeddingBank> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    EmbeddingBank::from_bytes(&bytes)
}
