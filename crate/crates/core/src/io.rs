//! Tensor serialization.
//!
//! Binary container, all integers little-endian:
//!
//! ```text
//! "INJT" | version: u32 | field: u8 (0 real, 1 complex) | n: u8 | dims: u32 × n
//! entries: (re: f64, im: f64) × Π dims, row-major
//! ```
//!
//! The JSON form `{"field", "shape", "re", "im"}` is meant for small tensors;
//! `im` is omitted for real tensors.

use std::io::{Read, Write};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::scalar::Field;
use crate::tensor::{DenseTensor, TensorData};
use crate::{Error, Result};

pub const MAGIC: &[u8; 4] = b"INJT";
pub const VERSION: u32 = 1;

/// Writes the binary container.
pub fn write_binary<W: Write>(t: &DenseTensor, mut w: W) -> Result<()> {
    if t.order() > u8::MAX as usize {
        return Err(Error::Capacity(format!(
            "order {} does not fit the container header",
            t.order()
        )));
    }
    let mut buf = Vec::with_capacity(10 + 4 * t.order() + 16 * t.len());
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.push(match t.field() {
        Field::Real => 0,
        Field::Complex => 1,
    });
    buf.push(t.order() as u8);
    for &d in t.shape() {
        let d =
            u32::try_from(d).map_err(|_| Error::Capacity(format!("dimension {d} exceeds u32")))?;
        buf.extend_from_slice(&d.to_le_bytes());
    }
    match t.data() {
        TensorData::Real(v) => {
            for &x in v {
                buf.extend_from_slice(&x.to_le_bytes());
                buf.extend_from_slice(&0f64.to_le_bytes());
            }
        }
        TensorData::Complex(v) => {
            for z in v {
                buf.extend_from_slice(&z.re.to_le_bytes());
                buf.extend_from_slice(&z.im.to_le_bytes());
            }
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

/// Reads the binary container.
pub fn read_binary<R: Read>(mut r: R) -> Result<DenseTensor> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let mut cur = Cursor {
        bytes: &bytes,
        pos: 0,
    };
    if cur.take(4)? != MAGIC {
        return Err(Error::Format("missing INJT magic".into()));
    }
    let version = u32::from_le_bytes(cur.take(4)?.try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported container version {version}"
        )));
    }
    let field = match cur.take(1)?[0] {
        0 => Field::Real,
        1 => Field::Complex,
        other => return Err(Error::Format(format!("unknown field tag {other}"))),
    };
    let n = cur.take(1)?[0] as usize;
    let shape: Vec<usize> = (0..n)
        .map(|_| Ok(u32::from_le_bytes(cur.take(4)?.try_into().expect("4 bytes")) as usize))
        .collect::<Result<_>>()?;
    let len = shape
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Format("tensor size overflows".into()))?;
    let payload = len
        .checked_mul(16)
        .ok_or_else(|| Error::Format("tensor size overflows".into()))?;
    if cur.remaining() != payload {
        return Err(Error::Format(format!(
            "expected {payload} payload bytes for shape {shape:?}, found {}",
            cur.remaining()
        )));
    }
    let mut pairs = Vec::with_capacity(len);
    for _ in 0..len {
        let re = f64::from_le_bytes(cur.take(8)?.try_into().expect("8 bytes"));
        let im = f64::from_le_bytes(cur.take(8)?.try_into().expect("8 bytes"));
        pairs.push(Complex64::new(re, im));
    }
    match field {
        Field::Real => {
            if pairs.iter().any(|z| z.im != 0.0) {
                return Err(Error::Format(
                    "real tensor with nonzero imaginary parts".into(),
                ));
            }
            DenseTensor::from_real(shape, pairs.into_iter().map(|z| z.re).collect())
        }
        Field::Complex => DenseTensor::from_complex(shape, pairs),
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, k: usize) -> Result<&'a [u8]> {
        let end = self.pos + k;
        if end > self.bytes.len() {
            return Err(Error::Format("truncated tensor container".into()));
        }
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonTensor {
    field: Field,
    shape: Vec<usize>,
    re: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    im: Option<Vec<f64>>,
}

/// JSON text form.
pub fn to_json(t: &DenseTensor) -> Result<String> {
    let (re, im) = match t.data() {
        TensorData::Real(v) => (v.clone(), None),
        TensorData::Complex(v) => (
            v.iter().map(|z| z.re).collect(),
            Some(v.iter().map(|z| z.im).collect()),
        ),
    };
    Ok(serde_json::to_string(&JsonTensor {
        field: t.field(),
        shape: t.shape().to_vec(),
        re,
        im,
    })?)
}

pub fn from_json(s: &str) -> Result<DenseTensor> {
    let j: JsonTensor = serde_json::from_str(s)?;
    match (j.field, j.im) {
        (Field::Real, None) => DenseTensor::from_real(j.shape, j.re),
        (Field::Real, Some(_)) => Err(Error::Format("real tensor with an `im` array".into())),
        (Field::Complex, im) => {
            let im = im.unwrap_or_else(|| vec![0.0; j.re.len()]);
            if im.len() != j.re.len() {
                return Err(Error::Format(format!(
                    "{} real parts but {} imaginary parts",
                    j.re.len(),
                    im.len()
                )));
            }
            DenseTensor::from_complex(
                j.shape,
                j.re.into_iter()
                    .zip(im)
                    .map(|(a, b)| Complex64::new(a, b))
                    .collect(),
            )
        }
    }
}

/// Saves a tensor, choosing JSON for `.json` paths and the binary container
/// otherwise.
pub fn save(t: &DenseTensor, path: &Path) -> Result<()> {
    if is_json(path) {
        std::fs::write(path, to_json(t)?)?;
    } else {
        write_binary(t, std::io::BufWriter::new(std::fs::File::create(path)?))?;
    }
    Ok(())
}

/// Loads a tensor saved by [`save`].
pub fn load(path: &Path) -> Result<DenseTensor> {
    if is_json(path) {
        from_json(&std::fs::read_to_string(path)?)
    } else {
        read_binary(std::fs::File::open(path)?)
    }
}

fn is_json(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_complex() -> DenseTensor {
        let data = (0..12)
            .map(|i| Complex64::new(i as f64 * 0.5, -(i as f64).sqrt()))
            .collect();
        DenseTensor::from_complex(vec![2, 3, 2], data).unwrap()
    }

    #[test]
    fn binary_round_trip() {
        for t in [
            sample_complex(),
            DenseTensor::from_real(vec![3, 1], vec![1.0, -2.5, 1e-300]).unwrap(),
        ] {
            let mut buf = Vec::new();
            write_binary(&t, &mut buf).unwrap();
            assert_eq!(&buf[..4], MAGIC);
            assert_eq!(read_binary(buf.as_slice()).unwrap(), t);
        }
    }

    #[test]
    fn binary_header_layout() {
        let t = DenseTensor::from_real(vec![2], vec![1.0, 2.0]).unwrap();
        let mut buf = Vec::new();
        write_binary(&t, &mut buf).unwrap();
        assert_eq!(buf.len(), 4 + 4 + 1 + 1 + 4 + 2 * 16);
        assert_eq!(&buf[4..8], &1u32.to_le_bytes());
        assert_eq!(buf[8], 0);
        assert_eq!(buf[9], 1);
        assert_eq!(&buf[10..14], &2u32.to_le_bytes());
        assert_eq!(&buf[14..22], &1f64.to_le_bytes());
    }

    #[test]
    fn malformed_binary_is_rejected() {
        let mut buf = Vec::new();
        write_binary(&sample_complex(), &mut buf).unwrap();
        assert!(matches!(
            read_binary(&buf[..buf.len() - 1]),
            Err(Error::Format(_))
        ));
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_binary(bad.as_slice()), Err(Error::Format(_))));
    }

    #[test]
    fn json_round_trip() {
        let t = sample_complex();
        assert_eq!(from_json(&to_json(&t).unwrap()).unwrap(), t);
        let r = DenseTensor::from_real(vec![2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let s = to_json(&r).unwrap();
        assert!(!s.contains("\"im\""));
        assert_eq!(from_json(&s).unwrap(), r);
        assert!(from_json(r#"{"field":"real","shape":[2],"re":[1.0]}"#).is_err());
    }
}
