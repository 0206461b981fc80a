//! `UAFW` weights container: magic, format version, JSON configuration,
//! then every parameter in traversal order as name, kind, shape and
//! little-endian `f64` degrees of freedom.

use std::fs;
use std::path::Path;

use lmd_autodiff::Tensor;
use num_complex::Complex64;

use crate::config::UafnoConfig;
use crate::error::{Error, Result};
use crate::model::Model;

const MAGIC: &[u8; 4] = b"UAFW";
const VERSION: u32 = 1;

pub fn to_bytes(model: &Model) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    let cfg = serde_json::to_vec(model.config()).expect("configuration serializes");
    out.extend_from_slice(&(cfg.len() as u32).to_le_bytes());
    out.extend_from_slice(&cfg);
    out.extend_from_slice(&(model.params().len() as u32).to_le_bytes());
    for (spec, p) in model.specs().iter().zip(model.params()) {
        out.extend_from_slice(&(spec.name.len() as u16).to_le_bytes());
        out.extend_from_slice(spec.name.as_bytes());
        out.push(p.is_complex() as u8);
        out.push(p.shape().len() as u8);
        for &d in p.shape() {
            out.extend_from_slice(&(d as u64).to_le_bytes());
        }
        out.extend_from_slice(&p.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Format(format!("truncated at byte {}", self.at)))?;
        let s = &self.buf[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn from_bytes(buf: &[u8]) -> Result<Model> {
    let mut r = Reader { buf, at: 0 };
    if r.take(4)? != MAGIC {
        return Err(Error::Format("missing UAFW magic".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = r.u32()? as usize;
    let config: UafnoConfig =
        serde_json::from_slice(r.take(n)?).map_err(|e| Error::Format(format!("configuration: {e}")))?;
    let specs = crate::model::param_specs(&config)?;
    let count = r.u32()? as usize;
    if count != specs.len() {
        return Err(Error::Incompatible(format!(
            "file holds {count} tensors, configuration needs {}",
            specs.len()
        )));
    }
    let mut params = Vec::with_capacity(count);
    for spec in &specs {
        let len = r.u16()? as usize;
        let name = std::str::from_utf8(r.take(len)?).map_err(|_| Error::Format("tensor name is not UTF-8".into()))?;
        if name != spec.name {
            return Err(Error::Incompatible(format!("expected tensor {}, found {name}", spec.name)));
        }
        let complex = match r.u8()? {
            0 => false,
            1 => true,
            k => return Err(Error::Format(format!("{name}: unknown tensor kind {k}"))),
        };
        let ndim = r.u8()? as usize;
        let shape = (0..ndim).map(|_| r.u64().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        let count: usize = shape.iter().product();
        let dof = if complex { 2 * count } else { count };
        let raw = r.take(dof.checked_mul(8).ok_or_else(|| Error::Format(format!("{name}: shape overflow")))?)?;
        let vals: Vec<f64> = raw.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        let t = if complex {
            let z = vals.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect();
            Tensor::complex(&shape, z)?
        } else {
            Tensor::real(&shape, vals)?
        };
        params.push(t);
    }
    if r.at != buf.len() {
        return Err(Error::Format(format!("{} trailing bytes", buf.len() - r.at)));
    }
    Model::from_parts(config, params)
}

pub fn save_weights(model: &Model, path: &Path) -> Result<()> {
    fs::write(path, to_bytes(model)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_weights(path: &Path) -> Result<Model> {
    let buf = fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    from_bytes(&buf)
}

/// Load weights and require their configuration to equal `expected`.
pub fn load_weights_for(path: &Path, expected: &UafnoConfig) -> Result<Model> {
    let m = load_weights(path)?;
    if m.config() != expected {
        return Err(Error::Incompatible(format!(
            "{} was saved for {:?}, expected {:?}",
            path.display(),
            m.config(),
            expected
        )));
    }
    Ok(m)
}
