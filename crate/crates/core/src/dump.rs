//! Binary field dumps.
//!
//! Layout: magic `DZK1`, then `nx, ny, nz` as little-endian `u64`, then
//! `lx, ly, lz` as little-endian `f64`, then `nx*ny*nz` interleaved
//! `(re, im)` little-endian `f64` pairs in z-fastest order.

use std::io::{Read, Write};

use num_complex::Complex64;

use crate::error::{DzkError, Result};
use crate::field::ScalarField;
use crate::grid::{Axis, Grid3};

pub const MAGIC: &[u8; 4] = b"DZK1";

pub fn write_field<W: Write>(mut w: W, f: &ScalarField) -> Result<()> {
    let g = f.grid();
    w.write_all(MAGIC)?;
    for a in Axis::ALL {
        w.write_all(&(g.n(a) as u64).to_le_bytes())?;
    }
    for a in Axis::ALL {
        w.write_all(&g.length(a).to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(16 * g.size());
    for z in f.values() {
        buf.extend_from_slice(&z.re.to_le_bytes());
        buf.extend_from_slice(&z.im.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_field<R: Read>(mut r: R) -> Result<ScalarField> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| DzkError::MalformedDump("truncated header".into()))?;
    if &magic != MAGIC {
        return Err(DzkError::MalformedDump(format!("bad magic {magic:?}")));
    }
    let mut word = [0u8; 8];
    let mut n = [0usize; 3];
    for v in n.iter_mut() {
        r.read_exact(&mut word)
            .map_err(|_| DzkError::MalformedDump("truncated header".into()))?;
        *v = usize::try_from(u64::from_le_bytes(word))
            .map_err(|_| DzkError::MalformedDump("size overflow".into()))?;
    }
    let mut len = [0f64; 3];
    for v in len.iter_mut() {
        r.read_exact(&mut word)
            .map_err(|_| DzkError::MalformedDump("truncated header".into()))?;
        *v = f64::from_le_bytes(word);
    }
    let grid = Grid3::new(n[0], n[1], n[2], len[0], len[1], len[2])?;
    let mut bytes = vec![0u8; 16 * grid.size()];
    r.read_exact(&mut bytes)
        .map_err(|_| DzkError::MalformedDump("truncated payload".into()))?;
    let values = bytes
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            Complex64::new(re, im)
        })
        .collect();
    ScalarField::new(&grid, values)
}
