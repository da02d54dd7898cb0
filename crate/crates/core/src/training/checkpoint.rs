use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::autodiff::{ParamSet, Tensor};
use crate::data::{LangTag, Mode, Vocabulary};
use crate::model::{ModelDims, ModelParams};

use super::CheckpointError;

const MAGIC: &[u8; 8] = b"MSEGCKPT";
pub const FORMAT_VERSION: u32 = 1;
const DIGEST_LEN: usize = 32;

/// Provenance of a stored model.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointMeta {
    pub mode: Mode,
    pub m: usize,
    pub seed: u64,
    pub epoch: usize,
    pub dev_accuracy: f64,
    /// Languages of an xling model, in tag order.
    pub langs: Vec<LangTag>,
}

/// A trained model together with everything needed to apply it.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub vocab: Vocabulary,
    pub model: ModelParams,
    pub meta: CheckpointMeta,
}

impl CheckpointMeta {
    fn to_map(&self, dims: ModelDims) -> BTreeMap<&'static str, String> {
        let langs: Vec<&str> = self.langs.iter().map(|l| l.code()).collect();
        BTreeMap::from([
            ("mode", self.mode.to_string()),
            ("m", self.m.to_string()),
            ("seed", self.seed.to_string()),
            ("epoch", self.epoch.to_string()),
            // Display of f64 is the shortest string that parses back exactly.
            ("dev_accuracy", self.dev_accuracy.to_string()),
            ("langs", langs.join(",")),
            ("embed", dims.embed.to_string()),
            ("hidden", dims.hidden.to_string()),
            ("attention", dims.attention.to_string()),
        ])
    }
}

struct Writer(Vec<u8>);

impl Writer {
    fn u32(&mut self, v: u32) {
        self.0.extend_from_slice(&v.to_le_bytes());
    }

    fn str(&mut self, s: &str) {
        self.u32(s.len() as u32);
        self.0.extend_from_slice(s.as_bytes());
    }
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer(Vec::new());
        w.0.extend_from_slice(MAGIC);
        w.u32(FORMAT_VERSION);
        let meta = self.meta.to_map(self.model.dims());
        w.u32(meta.len() as u32);
        for (k, v) in &meta {
            w.str(k);
            w.str(v);
        }
        let spellings = self.vocab.spellings();
        w.u32(spellings.len() as u32);
        for s in &spellings {
            w.str(s);
        }
        let params = self.model.params();
        w.u32(params.len() as u32);
        for (name, t) in params.iter() {
            w.str(name);
            w.u32(t.shape().len() as u32);
            for &d in t.shape() {
                w.0.extend_from_slice(&(d as u64).to_le_bytes());
            }
            for v in t.data() {
                w.0.extend_from_slice(&v.to_le_bytes());
            }
        }
        let digest = Sha256::digest(&w.0);
        w.0.extend_from_slice(&digest);
        w.0
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, CheckpointError> {
        if bytes.len() < MAGIC.len() + 4 || &bytes[..MAGIC.len()] != MAGIC {
            return Err(CheckpointError::NotACheckpoint);
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != FORMAT_VERSION {
            return Err(CheckpointError::Version {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        if bytes.len() < 12 + DIGEST_LEN {
            return Err(CheckpointError::Integrity);
        }
        let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
        if Sha256::digest(body).as_slice() != digest {
            return Err(CheckpointError::Integrity);
        }
        let mut r = Reader { buf: body, pos: 12 };

        let mut meta = BTreeMap::new();
        for _ in 0..r.u32()? {
            let k = r.str()?;
            let v = r.str()?;
            meta.insert(k, v);
        }
        let field = |key: &str| -> Result<&str, CheckpointError> {
            meta.get(key)
                .map(String::as_str)
                .ok_or_else(|| CheckpointError::Malformed(format!("missing metadata `{key}`")))
        };
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CheckpointError> {
            v.parse()
                .map_err(|_| CheckpointError::Malformed(format!("bad metadata `{key}`: {v}")))
        }
        let langs = match field("langs")? {
            "" => Vec::new(),
            s => s
                .split(',')
                .map(|l| num::<LangTag>("langs", l))
                .collect::<Result<_, _>>()?,
        };
        let dims = ModelDims {
            embed: num("embed", field("embed")?)?,
            hidden: num("hidden", field("hidden")?)?,
            attention: num("attention", field("attention")?)?,
        };
        let meta = CheckpointMeta {
            mode: num("mode", field("mode")?)?,
            m: num("m", field("m")?)?,
            seed: num("seed", field("seed")?)?,
            epoch: num("epoch", field("epoch")?)?,
            dev_accuracy: num("dev_accuracy", field("dev_accuracy")?)?,
            langs,
        };

        let n = r.u32()? as usize;
        let spellings = (0..n).map(|_| r.str()).collect::<Result<Vec<_>, _>>()?;
        let vocab = Vocabulary::from_spellings(&spellings)
            .map_err(|e| CheckpointError::Malformed(format!("vocabulary: {e}")))?;

        let mut params = ParamSet::new();
        for _ in 0..r.u32()? {
            let name = r.str()?;
            let ndim = r.u32()? as usize;
            let shape = (0..ndim)
                .map(|_| r.u64().map(|d| d as usize))
                .collect::<Result<Vec<_>, _>>()?;
            let len = shape.iter().try_fold(1usize, |a, &d| a.checked_mul(d));
            let len = len.ok_or_else(|| CheckpointError::Malformed(format!("shape of `{name}`")))?;
            let raw = r.take(len.checked_mul(8).ok_or(CheckpointError::Integrity)?)?;
            let data = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect();
            let tensor = Tensor::new(shape, data)
                .map_err(|e| CheckpointError::Malformed(e.to_string()))?;
            if params.id_of(&name).is_some() {
                return Err(CheckpointError::Malformed(format!("duplicate array `{name}`")));
            }
            params.add(name, tensor);
        }
        if r.pos != body.len() {
            return Err(CheckpointError::Malformed("trailing bytes".into()));
        }
        let model = ModelParams::from_params(dims, vocab.len(), vocab.output_size(), params)
            .map_err(|e| CheckpointError::Malformed(e.to_string()))?;
        Ok(Checkpoint { vocab, model, meta })
    }

    /// Writes to a temporary sibling file and renames it into place.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), CheckpointError> {
        let path = path.as_ref();
        let io = |source| CheckpointError::Io {
            path: path.to_path_buf(),
            source,
        };
        let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
        tmp_name.push(format!(".tmp{}", std::process::id()));
        let tmp = path.with_file_name(tmp_name);
        let mut f = fs::File::create(&tmp).map_err(io)?;
        f.write_all(&self.to_bytes()).map_err(io)?;
        f.sync_all().map_err(io)?;
        drop(f);
        fs::rename(&tmp, path).map_err(|e| {
            let _ = fs::remove_file(&tmp);
            io(e)
        })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, CheckpointError> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|source| CheckpointError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_bytes(&bytes)
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], CheckpointError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or(CheckpointError::Malformed("unexpected end of data".into()))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, CheckpointError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, CheckpointError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn str(&mut self) -> Result<String, CheckpointError> {
        let n = self.u32()? as usize;
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|_| CheckpointError::Malformed("invalid UTF-8".into()))
    }
}
