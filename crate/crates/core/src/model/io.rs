//! Binary model file: `ADNM`, u32 version, u32 config length + JSON config,
//! u32 tensor count, then per tensor: u32 name length + UTF-8 name, u32 rank,
//! u64 dims, f64 values. All integers and floats little-endian.

use std::fs;
use std::path::Path;

use super::{ModelConfig, ModelError, ModelParams};
use crate::scalar::Scalar;
use crate::tensor::{ParamStore, Tensor};

pub const MAGIC: &[u8; 4] = b"ADNM";
pub const FORMAT_VERSION: u32 = 1;

pub fn to_bytes<T: Scalar>(params: &ModelParams<T>, config: &ModelConfig) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    let json = serde_json::to_vec(config).expect("config serializes");
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&(params.store.len() as u32).to_le_bytes());
    for p in params.store.iter() {
        out.extend_from_slice(&(p.name.len() as u32).to_le_bytes());
        out.extend_from_slice(p.name.as_bytes());
        out.extend_from_slice(&(p.value.ndim() as u32).to_le_bytes());
        for &d in p.value.shape() {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        for v in p.value.data() {
            out.extend_from_slice(&v.as_f64().to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ModelError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| ModelError::CorruptFile(format!("unexpected end of file at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, ModelError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, ModelError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, ModelError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn from_bytes<T: Scalar>(bytes: &[u8]) -> Result<(ModelParams<T>, ModelConfig), ModelError> {
    let corrupt = |m: &str| ModelError::CorruptFile(m.to_string());
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4).map_err(|_| corrupt("missing magic"))? != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(ModelError::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let len = r.u32()? as usize;
    let config: ModelConfig =
        serde_json::from_slice(r.take(len)?).map_err(|e| ModelError::CorruptFile(format!("config: {e}")))?;
    let count = r.u32()?;
    let mut store = ParamStore::new();
    for _ in 0..count {
        let len = r.u32()? as usize;
        let name = std::str::from_utf8(r.take(len)?).map_err(|_| corrupt("tensor name is not UTF-8"))?;
        if store.contains(name) {
            return Err(corrupt("duplicate tensor name"));
        }
        let rank = r.u32()? as usize;
        if rank == 0 || rank > 8 {
            return Err(corrupt("bad tensor rank"));
        }
        let shape = (0..rank)
            .map(|_| r.u64().map(|d| d as usize))
            .collect::<Result<Vec<_>, _>>()?;
        let n = shape
            .iter()
            .try_fold(1usize, |a, &d| a.checked_mul(d))
            .filter(|&n| n > 0 && n <= (bytes.len() - r.pos) / 8)
            .ok_or_else(|| corrupt("bad tensor shape"))?;
        let data = (0..n).map(|_| r.f64().map(T::lit)).collect::<Result<Vec<_>, _>>()?;
        let t = Tensor::new(shape, data).map_err(|e| ModelError::CorruptFile(e.to_string()))?;
        store.insert(name, t);
    }
    if r.pos != bytes.len() {
        return Err(corrupt("trailing bytes"));
    }
    let expected: ModelParams<T> = ModelParams::init(&config);
    for p in expected.store.iter() {
        match store.by_name(&p.name) {
            Some(q) if q.value.shape() == p.value.shape() => {}
            _ => {
                return Err(ModelError::CorruptFile(format!(
                    "tensor {} missing or misshapen",
                    p.name
                )))
            }
        }
    }
    if store.len() != expected.store.len() {
        return Err(corrupt("unexpected tensors for config"));
    }
    Ok((ModelParams { store }, config))
}

pub fn save<T: Scalar>(params: &ModelParams<T>, config: &ModelConfig, path: &Path) -> Result<(), ModelError> {
    fs::write(path, to_bytes(params, config)).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load<T: Scalar>(path: &Path) -> Result<(ModelParams<T>, ModelConfig), ModelError> {
    let bytes = fs::read(path).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    from_bytes(&bytes)
}
