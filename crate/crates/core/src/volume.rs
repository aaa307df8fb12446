//! Raw volume files: a flat array of samples, x fastest, with the element
//! type and byte order given out of band.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{GridDims, ScalarField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Dtype {
    U8,
    U16,
    F32,
    F64,
}

impl Dtype {
    pub fn size(self) -> usize {
        match self {
            Dtype::U8 => 1,
            Dtype::U16 => 2,
            Dtype::F32 => 4,
            Dtype::F64 => 8,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Dtype::U8 => "u8",
            Dtype::U16 => "u16",
            Dtype::F32 => "f32",
            Dtype::F64 => "f64",
        }
    }
}

impl fmt::Display for Dtype {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VolumeSpec {
    pub path: PathBuf,
    pub dims: GridDims,
    pub dtype: Dtype,
    pub big_endian: bool,
}

impl VolumeSpec {
    pub fn new(path: impl Into<PathBuf>, dims: GridDims, dtype: Dtype) -> Self {
        VolumeSpec {
            path: path.into(),
            dims,
            dtype,
            big_endian: false,
        }
    }

    pub fn expected_len(&self) -> u64 {
        self.dims.num_vertices() as u64 * self.dtype.size() as u64
    }

    /// Reads and decodes the file, checking its size first.
    pub fn read(&self) -> Result<ScalarField> {
        let meta = fs::metadata(&self.path)
            .map_err(|e| Error::Io(format!("{}: {e}", self.path.display())))?;
        if meta.len() != self.expected_len() {
            return Err(Error::FileSize {
                path: self.path.display().to_string(),
                expected: self.expected_len(),
                actual: meta.len(),
            });
        }
        let bytes =
            fs::read(&self.path).map_err(|e| Error::Io(format!("{}: {e}", self.path.display())))?;
        let values = decode(&bytes, self.dtype, self.big_endian)?;
        ScalarField::new(self.dims, values)
    }
}

/// Decodes raw samples into `f64`.
pub fn decode(bytes: &[u8], dtype: Dtype, big_endian: bool) -> Result<Vec<f64>> {
    let size = dtype.size();
    if !bytes.len().is_multiple_of(size) {
        return Err(Error::Io(format!(
            "{} bytes is not a whole number of {dtype} samples",
            bytes.len()
        )));
    }
    macro_rules! conv {
        ($t:ty) => {
            bytes
                .chunks_exact(size)
                .map(|c| {
                    let a = c.try_into().unwrap();
                    (if big_endian {
                        <$t>::from_be_bytes(a)
                    } else {
                        <$t>::from_le_bytes(a)
                    }) as f64
                })
                .collect()
        };
    }
    Ok(match dtype {
        Dtype::U8 => bytes.iter().map(|&b| b as f64).collect(),
        Dtype::U16 => conv!(u16),
        Dtype::F32 => conv!(f32),
        Dtype::F64 => conv!(f64),
    })
}

/// Encodes samples. Integer types round and saturate.
pub fn encode(values: &[f64], dtype: Dtype, big_endian: bool) -> Vec<u8> {
    let mut out = Vec::with_capacity(values.len() * dtype.size());
    macro_rules! put {
        ($x:expr) => {
            if big_endian {
                out.extend_from_slice(&$x.to_be_bytes())
            } else {
                out.extend_from_slice(&$x.to_le_bytes())
            }
        };
    }
    for &v in values {
        match dtype {
            Dtype::U8 => out.push(v.round() as u8),
            Dtype::U16 => put!(v.round() as u16),
            Dtype::F32 => put!(v as f32),
            Dtype::F64 => put!(v),
        }
    }
    out
}

pub fn write_volume(path: &Path, values: &[f64], dtype: Dtype, big_endian: bool) -> Result<()> {
    fs::write(path, encode(values, dtype, big_endian))
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
