//! Field snapshots on disk.
//!
//! Binary layout (little endian): 32-byte header `b"KGF1"`, `n: u32`,
//! `N: u64`, `L: f64`, 8 zero bytes; then `N^n` f64 values in row-major order
//! (last axis fastest).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Field, Grid};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"KGF1";
const HEADER_LEN: usize = 32;

pub fn write_binary_to(field: &Field, mut w: impl Write) -> Result<()> {
    let g = field.grid();
    let mut header = [0u8; HEADER_LEN];
    header[0..4].copy_from_slice(MAGIC);
    header[4..8].copy_from_slice(&(g.dim() as u32).to_le_bytes());
    header[8..16].copy_from_slice(&(g.points() as u64).to_le_bytes());
    header[16..24].copy_from_slice(&g.length().to_le_bytes());
    w.write_all(&header)?;
    for x in field.values() {
        w.write_all(&x.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_binary(field: &Field, path: impl AsRef<Path>) -> Result<()> {
    write_binary_to(field, BufWriter::new(File::create(path)?))
}

pub fn read_binary_from(mut r: impl Read) -> Result<Field> {
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header)?;
    if &header[0..4] != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let dim = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let points = u64::from_le_bytes(header[8..16].try_into().unwrap()) as usize;
    let length = f64::from_le_bytes(header[16..24].try_into().unwrap());
    let grid = Grid::new(dim, length, points).map_err(|e| Error::Format(e.to_string()))?;
    let mut bytes = vec![0u8; grid.len() * 8];
    r.read_exact(&mut bytes).map_err(|_| Error::Format("truncated payload".into()))?;
    let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Field::from_values(grid, values)
}

pub fn read_binary(path: impl AsRef<Path>) -> Result<Field> {
    read_binary_from(BufReader::new(File::open(path)?))
}

/// `x,u` rows for one-dimensional fields.
pub fn write_csv_1d(field: &Field, path: impl AsRef<Path>) -> Result<()> {
    let g = field.grid();
    if g.dim() != 1 {
        return Err(Error::Precondition("CSV export is only defined for n = 1".into()));
    }
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "x,u")?;
    for (i, u) in field.values().iter().enumerate() {
        writeln!(w, "{:.16e},{:.16e}", g.coordinate(i), u)?;
    }
    w.flush()?;
    Ok(())
}
