//! Binary snapshot files.
//!
//! Layout (little-endian): `b"PFLD"`, `u32` version (1), `u32` nx, `u32` ny,
//! `u32` field count (3), `f64` time in seconds, `u64` step, then three
//! row-major `ny x nx` blocks of `f64` in the order phi, cA, cB.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::state::FieldState;

pub const MAGIC: &[u8; 4] = b"PFLD";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: usize = 4 + 4 * 4 + 8 + 8;
const N_FIELDS: u32 = 3;

/// Header fields of a snapshot, readable without touching the payload.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnapshotHeader {
    pub nx: usize,
    pub ny: usize,
    pub time: f64,
    pub step: u64,
}

pub fn encode_snapshot(state: &FieldState) -> Vec<u8> {
    let (ny, nx) = state.shape();
    let mut buf = Vec::with_capacity(HEADER_LEN + 3 * nx * ny * 8);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(nx as u32).to_le_bytes());
    buf.extend_from_slice(&(ny as u32).to_le_bytes());
    buf.extend_from_slice(&N_FIELDS.to_le_bytes());
    buf.extend_from_slice(&state.time.to_le_bytes());
    buf.extend_from_slice(&state.step.to_le_bytes());
    for field in state.fields() {
        // iter() walks logical row-major order regardless of memory layout
        for v in field.iter() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    buf
}

fn u32_at(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap())
}

fn u64_at(bytes: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(bytes[at..at + 8].try_into().unwrap())
}

pub fn decode_header(bytes: &[u8]) -> Result<SnapshotHeader> {
    if bytes.len() < 4 || &bytes[0..4] != MAGIC {
        return Err(Error::Format {
            field: "magic",
            reason: "bad magic".into(),
        });
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format {
            field: "header",
            reason: format!("truncated: {} of {HEADER_LEN} header bytes", bytes.len()),
        });
    }
    let version = u32_at(bytes, 4);
    if version != VERSION {
        return Err(Error::Format {
            field: "version",
            reason: format!("unsupported version {version}"),
        });
    }
    let nx = u32_at(bytes, 8) as usize;
    let ny = u32_at(bytes, 12) as usize;
    if nx == 0 || ny == 0 {
        return Err(Error::Format {
            field: "dimensions",
            reason: format!("empty grid {nx}x{ny}"),
        });
    }
    let n_fields = u32_at(bytes, 16);
    if n_fields != N_FIELDS {
        return Err(Error::Format {
            field: "n_fields",
            reason: format!("expected {N_FIELDS}, found {n_fields}"),
        });
    }
    let time = f64::from_le_bytes(bytes[20..28].try_into().unwrap());
    let step = u64_at(bytes, 28);
    Ok(SnapshotHeader { nx, ny, time, step })
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<FieldState> {
    let h = decode_header(bytes)?;
    let n = h.nx * h.ny;
    let expected = HEADER_LEN + 3 * n * 8;
    if bytes.len() < expected {
        return Err(Error::Format {
            field: "payload",
            reason: format!("truncated: {} bytes, header promises {expected}", bytes.len()),
        });
    }
    if bytes.len() > expected {
        return Err(Error::Format {
            field: "payload",
            reason: format!("{} trailing bytes", bytes.len() - expected),
        });
    }
    let block = |k: usize| -> Array2<f64> {
        let start = HEADER_LEN + k * n * 8;
        let vals: Vec<f64> = bytes[start..start + n * 8]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Array2::from_shape_vec((h.ny, h.nx), vals).expect("length checked above")
    };
    FieldState::new(block(0), block(1), block(2), h.time, h.step)
}

pub fn write_snapshot(state: &FieldState, path: &Path) -> Result<()> {
    let bytes = encode_snapshot(state);
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(&bytes).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_snapshot(path: &Path) -> Result<FieldState> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_snapshot(&bytes).map_err(|e| e.in_file(path))
}

pub fn read_snapshot_header(path: &Path) -> Result<SnapshotHeader> {
    use std::io::Read;
    let mut f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut buf = vec![0u8; HEADER_LEN];
    let mut got = 0;
    while got < HEADER_LEN {
        let n = f.read(&mut buf[got..]).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        got += n;
    }
    decode_header(&buf[..got]).map_err(|e| e.in_file(path))
}

/// Conventional file name for the snapshot at `step`.
pub fn snapshot_file_name(step: u64) -> String {
    format!("snap_{step:010}.pfld")
}

/// All `*.pfld` files in `dir`, sorted by (step, name).
pub fn list_snapshots(dir: &Path) -> Result<Vec<(SnapshotHeader, std::path::PathBuf)>> {
    let rd = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut out = Vec::new();
    for entry in rd {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let p = entry.path();
        if p.extension().and_then(|e| e.to_str()) == Some("pfld") {
            let h = read_snapshot_header(&p)?;
            out.push((h, p));
        }
    }
    out.sort_by(|a, b| a.0.step.cmp(&b.0.step).then_with(|| a.1.cmp(&b.1)));
    Ok(out)
}
