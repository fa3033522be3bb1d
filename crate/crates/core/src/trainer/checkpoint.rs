//! The STCK checkpoint.
//!
//! Little-endian layout:
//!
//! ```text
//! "STCK" magic, u16 version (1)
//! u32 length + UTF-8 training config (key=value lines)
//! 4 × u32 bank widths (sentence, past, future, global)
//! u32 epoch (1-based), u8 has_val_tau, f64 val_tau
//! u64 Adam step, 4 × f64 (lr, beta1, beta2, eps)
//! u32 parameter count, then per parameter:
//!     u32 length + UTF-8 name, u32 rank, rank × u64 extents,
//!     f64 values, f64 first moments, f64 second moments
//! ```

use std::fs;
use std::path::Path;

use crate::corpus::{BankDims, NodeRole};
use crate::error::{Error, Result};
use crate::graph::GraphConfig;
use crate::model::ModelParams;
use crate::numeric::{AdamConfig, AdamState, Tensor};
use crate::trainer::TrainConfig;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"STCK";
pub const CHECKPOINT_VERSION: u16 = 1;

/// Model and optimizer state at the epoch with the best validation τ.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub config: TrainConfig,
    pub params: ModelParams,
    pub adam: AdamState,
    /// 1-based epoch the snapshot was taken after.
    pub epoch: usize,
    pub val_tau: Option<f64>,
}

impl Checkpoint {
    /// Fails if a requested ablation disagrees with the one the model was trained under.
    /// `None` fields are not checked.
    pub fn check_ablation(&self, use_csk: Option<bool>, use_global: Option<bool>, merge: Option<bool>) -> Result<()> {
        let g: GraphConfig = self.params.graph;
        let mut diffs = Vec::new();
        if use_csk.is_some_and(|v| v != g.use_csk) {
            diffs.push(format!("use_csk (checkpoint: {})", g.use_csk));
        }
        if use_global.is_some_and(|v| v != g.use_global) {
            diffs.push(format!("use_global (checkpoint: {})", g.use_global));
        }
        if merge.is_some_and(|v| v != g.merge_csk_relations) {
            diffs.push(format!("merge_csk_relations (checkpoint: {})", g.merge_csk_relations));
        }
        if diffs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "checkpoint/flag ablation mismatch: {}",
                diffs.join(", ")
            )))
        }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        let text = self.config.to_text();
        out.extend_from_slice(&(text.len() as u32).to_le_bytes());
        out.extend_from_slice(text.as_bytes());
        for role in NodeRole::ALL {
            out.extend_from_slice(&(self.params.bank.get(role) as u32).to_le_bytes());
        }
        out.extend_from_slice(&(self.epoch as u32).to_le_bytes());
        out.push(u8::from(self.val_tau.is_some()));
        out.extend_from_slice(&self.val_tau.unwrap_or(0.0).to_le_bytes());
        out.extend_from_slice(&self.adam.step.to_le_bytes());
        let a = self.adam.config;
        for v in [a.lr, a.beta1, a.beta2, a.eps] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        let named = self.params.named();
        out.extend_from_slice(&(named.len() as u32).to_le_bytes());
        for (i, (name, t)) in named.iter().enumerate() {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(t.shape().len() as u32).to_le_bytes());
            for &d in t.shape() {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for source in [t, &self.adam.first[i], &self.adam.second[i]] {
                for v in source.data() {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != CHECKPOINT_MAGIC {
            return Err(r.fail_at(0, "bad magic, expected \"STCK\""));
        }
        let version = u16::from_le_bytes(r.array()?);
        if version != CHECKPOINT_VERSION {
            return Err(r.fail_at(4, &format!("unsupported version {version}")));
        }
        let text_len = r.u32()? as usize;
        let text_at = r.pos;
        let text = std::str::from_utf8(r.take(text_len)?)
            .map_err(|_| r.fail_at(text_at, "config is not UTF-8"))?;
        let config = TrainConfig::from_text(text).map_err(|e| r.fail_at(text_at, &e.to_string()))?;
        let bank = BankDims {
            sentence: r.u32()? as usize,
            past: r.u32()? as usize,
            future: r.u32()? as usize,
            global: r.u32()? as usize,
        };
        let epoch = r.u32()? as usize;
        let has_tau = r.take(1)?[0] != 0;
        let tau = f64::from_le_bytes(r.array()?);
        let step = u64::from_le_bytes(r.array()?);
        let mut hyper = [0.0; 4];
        for h in &mut hyper {
            *h = f64::from_le_bytes(r.array()?);
        }

        let mut params = ModelParams::init(bank, config.d_in, config.d_h, config.graph, 0);
        let expected = params.names();
        let count = r.u32()? as usize;
        if count != expected.len() {
            return Err(r.fail(&format!(
                "{count} parameters stored, configuration implies {}",
                expected.len()
            )));
        }
        let mut first = Vec::with_capacity(count);
        let mut second = Vec::with_capacity(count);
        for (name, slot) in expected.iter().zip(params.tensors_mut()) {
            let at = r.pos;
            let len = r.u32()? as usize;
            let stored = std::str::from_utf8(r.take(len)?).map_err(|_| r.fail_at(at, "name is not UTF-8"))?;
            if stored != name {
                return Err(r.fail_at(at, &format!("expected parameter `{name}`, found `{stored}`")));
            }
            let rank = r.u32()? as usize;
            let mut shape = Vec::with_capacity(rank);
            for _ in 0..rank {
                shape.push(u64::from_le_bytes(r.array()?) as usize);
            }
            if shape != slot.shape() {
                return Err(r.fail_at(
                    at,
                    &format!("`{name}` has shape {shape:?}, expected {:?}", slot.shape()),
                ));
            }
            *slot = r.tensor(&shape)?;
            first.push(r.tensor(&shape)?);
            second.push(r.tensor(&shape)?);
        }
        if r.pos != bytes.len() {
            return Err(r.fail(&format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        let adam = AdamState {
            config: AdamConfig {
                lr: hyper[0],
                beta1: hyper[1],
                beta2: hyper[2],
                eps: hyper[3],
            },
            step,
            first,
            second,
        };
        Ok(Self {
            config,
            params,
            adam,
            epoch,
            val_tau: has_tau.then_some(tau),
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn fail_at(&self, offset: usize, msg: &str) -> Error {
        Error::CheckpointFormat {
            offset: offset as u64,
            msg: msg.to_string(),
        }
    }

    fn fail(&self, msg: &str) -> Error {
        self.fail_at(self.pos, msg)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(self.fail(&format!(
                "truncated: need {n} bytes, {} left",
                self.bytes.len() - self.pos
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn array<const N: usize>(&mut self) -> Result<[u8; N]> {
        Ok(self.take(N)?.try_into().expect("exact length"))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.array()?))
    }

    fn tensor(&mut self, shape: &[usize]) -> Result<Tensor> {
        let count: usize = shape.iter().product();
        let raw = self.take(count * 8)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        Tensor::new(shape.to_vec(), data)
    }
}
