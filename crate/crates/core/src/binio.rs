//! Little-endian flat binary helpers for the on-disk caches.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;

use crate::error::{Error, Result};

pub(crate) struct BinWriter {
    path: PathBuf,
    inner: BufWriter<File>,
}

impl BinWriter {
    pub fn create(path: &Path) -> Result<Self> {
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
            }
        }
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        Ok(BinWriter {
            path: path.to_path_buf(),
            inner: BufWriter::new(file),
        })
    }

    pub fn bytes(&mut self, b: &[u8]) -> Result<()> {
        self.inner.write_all(b).map_err(|e| Error::io(&self.path, e))
    }

    pub fn u8(&mut self, v: u8) -> Result<()> {
        self.bytes(&[v])
    }

    pub fn u64(&mut self, v: u64) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn f64(&mut self, v: f64) -> Result<()> {
        self.bytes(&v.to_le_bytes())
    }

    pub fn f64s<'a>(&mut self, vals: impl IntoIterator<Item = &'a f64>) -> Result<()> {
        for v in vals {
            self.f64(*v)?;
        }
        Ok(())
    }

    pub fn complexes<'a>(&mut self, vals: impl IntoIterator<Item = &'a Complex64>) -> Result<()> {
        for z in vals {
            self.f64(z.re)?;
            self.f64(z.im)?;
        }
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush().map_err(|e| Error::io(&self.path, e))
    }
}

pub(crate) struct BinReader {
    path: PathBuf,
    inner: BufReader<File>,
    offset: u64,
}

impl BinReader {
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(BinReader {
            path: path.to_path_buf(),
            inner: BufReader::new(file),
            offset: 0,
        })
    }

    pub fn bytes(&mut self, buf: &mut [u8]) -> Result<()> {
        self.inner.read_exact(buf).map_err(|e| {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                Error::Ingest {
                    path: self.path.clone(),
                    offset: self.offset,
                    reason: format!("truncated: expected {} more bytes", buf.len()),
                }
            } else {
                Error::io(&self.path, e)
            }
        })?;
        self.offset += buf.len() as u64;
        Ok(())
    }

    pub fn u8(&mut self) -> Result<u8> {
        let mut b = [0u8; 1];
        self.bytes(&mut b)?;
        Ok(b[0])
    }

    pub fn u64(&mut self) -> Result<u64> {
        let mut b = [0u8; 8];
        self.bytes(&mut b)?;
        Ok(u64::from_le_bytes(b))
    }

    pub fn f64(&mut self) -> Result<f64> {
        let mut b = [0u8; 8];
        self.bytes(&mut b)?;
        Ok(f64::from_le_bytes(b))
    }

    pub fn f64s(&mut self, count: usize) -> Result<Vec<f64>> {
        (0..count).map(|_| self.f64()).collect()
    }

    pub fn complexes(&mut self, count: usize) -> Result<Vec<Complex64>> {
        (0..count)
            .map(|_| Ok(Complex64::new(self.f64()?, self.f64()?)))
            .collect()
    }

    /// Fails unless the file has been consumed completely.
    pub fn expect_eof(&mut self) -> Result<()> {
        let mut probe = [0u8; 1];
        match self.inner.read(&mut probe) {
            Ok(0) => Ok(()),
            Ok(_) => Err(Error::Ingest {
                path: self.path.clone(),
                offset: self.offset,
                reason: "trailing bytes after payload".into(),
            }),
            Err(e) => Err(Error::io(&self.path, e)),
        }
    }
}

/// Hex-encoded SHA-256 of `bytes`.
pub fn sha256_hex(bytes: &[u8]) -> String {
    use sha2::Digest;
    sha2::Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
