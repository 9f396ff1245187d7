//! Binary table cache.
//!
//! Layout, all integers little-endian:
//!
//! | bytes | field                         |
//! |-------|-------------------------------|
//! | 8     | magic `PINLAB\0\0`            |
//! | 4     | format version (u32, = 1)     |
//! | 4     | table kind (u32)              |
//! | 8     | law hash (u64)                |
//! | 8     | n_max (u64)                   |
//! | 8     | value count (u64)             |
//! | 8·k   | values (f64)                  |

use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::walks::{KernelTable, StepLaw};

pub const MAGIC: [u8; 8] = *b"PINLAB\0\0";
pub const VERSION: u32 = 1;
/// Environment variable naming the cache directory.
pub const CACHE_ENV: &str = "PINLAB_CACHE_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u32)]
pub enum TableKind {
    ReturnProbabilities = 1,
    DickmanGrid = 2,
    NoiseGrid = 3,
}

impl TableKind {
    fn from_u32(x: u32) -> Result<Self> {
        match x {
            1 => Ok(Self::ReturnProbabilities),
            2 => Ok(Self::DickmanGrid),
            3 => Ok(Self::NoiseGrid),
            _ => Err(Error::Format(format!("unknown table kind {x}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Header {
    pub kind: TableKind,
    pub law_hash: u64,
    pub n_max: u64,
}

pub fn write_table<W: Write>(mut w: W, header: &Header, values: &[f64]) -> Result<()> {
    w.write_all(&MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(header.kind as u32).to_le_bytes())?;
    w.write_all(&header.law_hash.to_le_bytes())?;
    w.write_all(&header.n_max.to_le_bytes())?;
    w.write_all(&(values.len() as u64).to_le_bytes())?;
    let mut buf = Vec::with_capacity(8 * values.len());
    for v in values {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

pub fn read_table<R: Read>(mut r: R) -> Result<(Header, Vec<f64>)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let kind = TableKind::from_u32(read_u32(&mut r)?)?;
    let law_hash = read_u64(&mut r)?;
    let n_max = read_u64(&mut r)?;
    let count = read_u64(&mut r)? as usize;
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    if bytes.len() != 8 * count {
        return Err(Error::Format(format!("expected {count} values, found {} bytes", bytes.len())));
    }
    let values = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    Ok((Header { kind, law_hash, n_max }, values))
}

/// The directory named by `PINLAB_CACHE_DIR`, if set and non-empty.
pub fn cache_dir() -> Option<PathBuf> {
    std::env::var_os(CACHE_ENV).filter(|s| !s.is_empty()).map(PathBuf::from)
}

pub fn kernel_path(dir: &Path, law: &StepLaw, n_max: usize) -> PathBuf {
    dir.join(format!("p0-{:016x}-{n_max}.bin", law.hash()))
}

impl KernelTable {
    /// p_n(0) and the quadrature error (appended as the last value).
    pub fn save<W: Write>(&self, w: W) -> Result<()> {
        let mut v = self.p0.clone();
        v.push(self.quad_error);
        write_table(w, &Header { kind: TableKind::ReturnProbabilities, law_hash: self.law_hash, n_max: self.n_max as u64 }, &v)
    }

    pub fn load<R: Read>(r: R, law: &StepLaw, k_max: usize) -> Result<Self> {
        let (h, mut v) = read_table(r)?;
        if h.kind != TableKind::ReturnProbabilities {
            return Err(Error::Format(format!("expected return probabilities, found {:?}", h.kind)));
        }
        if h.law_hash != law.hash() {
            return Err(Error::Format(format!("law hash {:016x} does not match {:016x}", h.law_hash, law.hash())));
        }
        if v.len() != h.n_max as usize + 2 {
            return Err(Error::Format("value count does not match n_max".into()));
        }
        let err = v.pop().unwrap();
        Ok(Self::from_p0(h.law_hash, v, k_max.min(h.n_max as usize), err))
    }

    /// Loads from the cache directory when possible, otherwise builds and
    /// stores. Without a cache directory this is [`KernelTable::build_with`].
    pub fn cached(law: &StepLaw, n_max: usize, k_max: usize) -> Result<Self> {
        let Some(dir) = cache_dir() else {
            return Self::build_with(law, n_max, k_max);
        };
        let path = kernel_path(&dir, law, n_max);
        if let Ok(f) = std::fs::File::open(&path) {
            if let Ok(t) = Self::load(std::io::BufReader::new(f), law, k_max) {
                return Ok(t);
            }
        }
        let t = Self::build_with(law, n_max, k_max)?;
        std::fs::create_dir_all(&dir)?;
        let tmp = path.with_extension("tmp");
        t.save(std::io::BufWriter::new(std::fs::File::create(&tmp)?))?;
        std::fs::rename(tmp, &path)?;
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_table_round_trips() {
        let law = StepLaw::default_law();
        let t = KernelTable::build(&law, 300).unwrap();
        let mut buf = vec![];
        t.save(&mut buf).unwrap();
        assert_eq!(&buf[..8], b"PINLAB\0\0");
        assert_eq!(buf.len(), 40 + 8 * 302);
        let back = KernelTable::load(&buf[..], &law, 300).unwrap();
        assert_eq!(back.p0, t.p0);
        assert_eq!(back.k, t.k);
        let other = StepLaw::new("simple", vec![(-1, 0.5), (1, 0.5)]).unwrap();
        assert!(KernelTable::load(&buf[..], &other, 300).is_err());
        assert!(KernelTable::load(&buf[..buf.len() - 3], &law, 300).is_err());
        buf[0] = b'X';
        assert!(read_table(&buf[..]).is_err());
    }

    #[test]
    fn cache_directory_is_used() {
        let dir = tempfile::tempdir().unwrap();
        std::env::set_var(CACHE_ENV, dir.path());
        let law = StepLaw::default_law();
        let a = KernelTable::cached(&law, 200, 200).unwrap();
        assert!(kernel_path(dir.path(), &law, 200).exists());
        let b = KernelTable::cached(&law, 200, 100).unwrap();
        std::env::remove_var(CACHE_ENV);
        assert_eq!(a.p0, b.p0);
        assert_eq!(b.k_max(), 100);
    }
}
