//! `.fvecs` / `.bvecs` / `.ivecs` readers and writers.
//!
//! Each record is a little-endian `i32` dimension followed by that many values:
//! 4-byte floats (fvecs), 1-byte unsigned ints (bvecs), or 4-byte signed ints
//! (ivecs). All records in a file share one dimension.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use super::{VectorSet, Vectors};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VecsFormat {
    Fvecs,
    Bvecs,
    Ivecs,
}

impl VecsFormat {
    fn value_width(self) -> usize {
        match self {
            VecsFormat::Bvecs => 1,
            VecsFormat::Fvecs | VecsFormat::Ivecs => 4,
        }
    }

    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        path.extension()?.to_str()?.parse().ok()
    }
}

impl FromStr for VecsFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "fvecs" => Ok(VecsFormat::Fvecs),
            "bvecs" => Ok(VecsFormat::Bvecs),
            "ivecs" => Ok(VecsFormat::Ivecs),
            other => Err(Error::param(format!("unknown vector format {other:?}"))),
        }
    }
}

fn format_err(offset: usize, reason: impl Into<String>) -> Error {
    Error::Format {
        offset: offset as u64,
        reason: reason.into(),
    }
}

/// Walks the records of a vecs buffer, handing each record's value bytes to `sink`.
fn parse_records(
    bytes: &[u8],
    width: usize,
    mut sink: impl FnMut(&[u8]),
) -> Result<usize> {
    let mut offset = 0usize;
    let mut dim: Option<usize> = None;
    while offset < bytes.len() {
        let header = bytes
            .get(offset..offset + 4)
            .ok_or_else(|| format_err(offset, "truncated dimension header"))?;
        let d = i32::from_le_bytes(header.try_into().unwrap());
        if d <= 0 {
            return Err(format_err(offset, format!("non-positive dimension {d}")));
        }
        let d = d as usize;
        match dim {
            None => dim = Some(d),
            Some(first) if first != d => {
                return Err(format_err(
                    offset,
                    format!("dimension {d} differs from first record's {first}"),
                ))
            }
            _ => {}
        }
        let body_start = offset + 4;
        let body = bytes
            .get(body_start..body_start + d * width)
            .ok_or_else(|| format_err(offset, "record ends before its declared dimension"))?;
        sink(body);
        offset = body_start + d * width;
    }
    dim.ok_or_else(|| format_err(0, "file contains no records"))
}

/// Loads a vector file; bvecs and ivecs values are widened to `f32`.
pub fn load_vecs(path: impl AsRef<Path>, format: VecsFormat) -> Result<VectorSet> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut values = Vec::new();
    let dim = parse_records(&bytes, format.value_width(), |body| match format {
        VecsFormat::Fvecs => values.extend(
            body.chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap())),
        ),
        VecsFormat::Bvecs => values.extend(body.iter().map(|&b| b as f32)),
        VecsFormat::Ivecs => values.extend(
            body.chunks_exact(4)
                .map(|c| i32::from_le_bytes(c.try_into().unwrap()) as f32),
        ),
    })?;
    VectorSet::new(dim, values)
}

/// Loads an ivecs file as integer rows (ground-truth ids).
pub fn load_ivecs(path: impl AsRef<Path>) -> Result<Vec<Vec<i32>>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut rows = Vec::new();
    parse_records(&bytes, 4, |body| {
        rows.push(
            body.chunks_exact(4)
                .map(|c| i32::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        )
    })?;
    Ok(rows)
}

pub fn write_fvecs<V: Vectors + ?Sized>(path: impl AsRef<Path>, set: &V) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let d = (set.dim() as i32).to_le_bytes();
    (|| -> std::io::Result<()> {
        for id in 0..set.len() {
            out.write_all(&d)?;
            for v in set.row(id as u32) {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        out.flush()
    })()
    .map_err(|e| Error::io(path, e))
}

pub fn write_ivecs(path: impl AsRef<Path>, rows: &[Vec<i32>]) -> Result<()> {
    let path = path.as_ref();
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    (|| -> std::io::Result<()> {
        for row in rows {
            out.write_all(&(row.len() as i32).to_le_bytes())?;
            for v in row {
                out.write_all(&v.to_le_bytes())?;
            }
        }
        out.flush()
    })()
    .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(bytes: &[u8]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(bytes).unwrap();
        f
    }

    #[test]
    fn fvecs_single_record() {
        let mut b = 2i32.to_le_bytes().to_vec();
        b.extend(1.0f32.to_le_bytes());
        b.extend(2.0f32.to_le_bytes());
        let f = write(&b);
        let set = load_vecs(f.path(), VecsFormat::Fvecs).unwrap();
        assert_eq!((set.len(), set.dim()), (1, 2));
        assert_eq!(set.row(0), &[1.0, 2.0]);
    }

    #[test]
    fn bvecs_widening() {
        let mut b = 4i32.to_le_bytes().to_vec();
        b.extend([0u8, 1, 2, 255]);
        let f = write(&b);
        let set = load_vecs(f.path(), VecsFormat::Bvecs).unwrap();
        assert_eq!(set.row(0), &[0.0, 1.0, 2.0, 255.0]);
    }

    #[test]
    fn truncated_record_reports_offset() {
        let mut b = 2i32.to_le_bytes().to_vec();
        b.extend(1.0f32.to_le_bytes());
        b.extend(2.0f32.to_le_bytes());
        b.extend(2i32.to_le_bytes());
        b.extend(1.0f32.to_le_bytes());
        let f = write(&b);
        match load_vecs(f.path(), VecsFormat::Fvecs) {
            Err(Error::Format { offset, .. }) => assert_eq!(offset, 12),
            other => panic!("expected format error, got {other:?}"),
        }
    }

    #[test]
    fn inconsistent_and_nonpositive_dims() {
        let mut b = 1i32.to_le_bytes().to_vec();
        b.extend(1.0f32.to_le_bytes());
        b.extend(2i32.to_le_bytes());
        b.extend([0u8; 8]);
        let f = write(&b);
        assert!(matches!(
            load_vecs(f.path(), VecsFormat::Fvecs),
            Err(Error::Format { offset: 8, .. })
        ));
        let f = write(&0i32.to_le_bytes());
        assert!(matches!(
            load_vecs(f.path(), VecsFormat::Fvecs),
            Err(Error::Format { offset: 0, .. })
        ));
        let f = write(&[]);
        assert!(load_vecs(f.path(), VecsFormat::Fvecs).is_err());
    }

    #[test]
    fn writers_round_trip() {
        let set = VectorSet::new(3, vec![1.0, -2.5, 3.0, 0.0, 0.5, 9.0]).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        write_fvecs(f.path(), &set).unwrap();
        assert_eq!(load_vecs(f.path(), VecsFormat::Fvecs).unwrap(), set);

        let rows = vec![vec![1, 2, 3], vec![-4, 5, 6]];
        write_ivecs(f.path(), &rows).unwrap();
        assert_eq!(load_ivecs(f.path()).unwrap(), rows);
        let widened = load_vecs(f.path(), VecsFormat::Ivecs).unwrap();
        assert_eq!(widened.row(1), &[-4.0, 5.0, 6.0]);
    }

    #[test]
    fn format_from_extension() {
        assert_eq!(
            VecsFormat::from_path(Path::new("a/b.BVECS")),
            Some(VecsFormat::Bvecs)
        );
        assert_eq!(VecsFormat::from_path(Path::new("x.txt")), None);
    }
}
