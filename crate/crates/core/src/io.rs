//! `FLD1` little-endian field files.
//!
//! Layout: magic `FLD1`, version `u32 = 1`, `n_x n_y n_z` as `u32`,
//! `l_x l_y l_z alpha` as `f64`, then `n_x*n_y*n_z` `f64` values, x fastest.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{GridSpec, RealField};

pub const MAGIC: [u8; 4] = *b"FLD1";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: u64 = 4 + 4 + 12 + 32;

pub fn write_field<W: Write>(field: &RealField, mut w: W) -> Result<()> {
    let g = field.grid();
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for n in g.n() {
        let n = u32::try_from(n).map_err(|_| Error::invalid("axis too long for FLD1"))?;
        w.write_all(&n.to_le_bytes())?;
    }
    for l in g.lengths() {
        w.write_all(&l.to_le_bytes())?;
    }
    w.write_all(&g.alpha().to_le_bytes())?;
    for v in field.values() {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

struct Cursor<R> {
    inner: R,
    offset: u64,
}

impl<R: Read> Cursor<R> {
    fn take<const N: usize>(&mut self, what: &str) -> Result<[u8; N]> {
        let mut buf = [0u8; N];
        self.inner.read_exact(&mut buf).map_err(|e| {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                Error::Format {
                    offset: self.offset,
                    message: format!("truncated file while reading {what}"),
                }
            } else {
                Error::Io(e)
            }
        })?;
        self.offset += N as u64;
        Ok(buf)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take::<4>(what)?))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take::<8>(what)?))
    }
}

pub fn read_field<R: Read>(r: R) -> Result<RealField> {
    let mut c = Cursor { inner: r, offset: 0 };
    let magic = c.take::<4>("magic")?;
    if magic != MAGIC {
        return Err(Error::Format {
            offset: 0,
            message: format!("bad magic bytes {magic:02x?}, expected \"FLD1\""),
        });
    }
    let version = c.u32("version")?;
    if version != VERSION {
        return Err(Error::Format {
            offset: 4,
            message: format!("unsupported version {version}"),
        });
    }
    let mut n = [0usize; 3];
    for slot in n.iter_mut() {
        *slot = c.u32("dimensions")? as usize;
    }
    let mut l = [0.0; 3];
    for slot in l.iter_mut() {
        *slot = c.f64("box lengths")?;
    }
    let alpha = c.f64("alpha")?;
    let grid = GridSpec::new(n, l, alpha).map_err(|e| Error::Format {
        offset: 8,
        message: format!("invalid header: {e}"),
    })?;
    let mut values = Vec::with_capacity(grid.len());
    for _ in 0..grid.len() {
        values.push(c.f64("values")?);
    }
    let mut extra = [0u8; 1];
    if c.inner.read(&mut extra)? != 0 {
        return Err(Error::Format {
            offset: c.offset,
            message: "trailing bytes after field values".into(),
        });
    }
    RealField::new(grid, values).map_err(|e| match e {
        Error::NonFinite { index, value } => Error::Format {
            offset: HEADER_LEN + 8 * index as u64,
            message: format!("non-finite value {value}"),
        },
        other => other,
    })
}

pub fn save_field(field: &RealField, path: impl AsRef<Path>) -> Result<()> {
    write_field(field, BufWriter::new(File::create(path)?))
}

pub fn load_field(path: impl AsRef<Path>) -> Result<RealField> {
    read_field(BufReader::new(File::open(path)?))
}
