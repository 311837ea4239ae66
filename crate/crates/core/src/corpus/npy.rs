//! Import path for `.npy` v1.0 arrays of shape `[n_layers, n_tokens, hidden_dim]`.

use std::path::Path;

use super::store::ExampleActivations;
use crate::error::{Error, Result};

const NPY_MAGIC: &[u8] = b"\x93NUMPY";

/// Parsed `.npy` v1.0 payload as f32 with its shape.
#[derive(Debug, Clone, PartialEq)]
pub struct NpyArray {
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

fn header_value<'a>(header: &'a str, key: &str) -> Option<&'a str> {
    let pat = format!("'{key}':");
    let start = header.find(&pat)? + pat.len();
    Some(header[start..].trim_start())
}

fn parse_shape(rest: &str) -> Option<Vec<usize>> {
    let open = rest.find('(')?;
    let close = rest.find(')')?;
    rest[open + 1..close]
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().ok())
        .collect()
}

/// Parse `.npy` bytes. Accepts little-endian f32 (`<f4`) and f64 (`<f8`),
/// C order only; f64 is narrowed to f32.
pub fn parse_npy(bytes: &[u8]) -> Result<NpyArray> {
    let bad = |d: &str| Error::Config(format!("npy: {d}"));
    if bytes.len() < 10 || &bytes[..6] != NPY_MAGIC {
        return Err(bad("bad magic"));
    }
    if bytes[6] != 1 {
        return Err(bad("only format version 1.0 is supported"));
    }
    let hlen = u16::from_le_bytes([bytes[8], bytes[9]]) as usize;
    let start = 10 + hlen;
    if bytes.len() < start {
        return Err(bad("truncated header"));
    }
    let header = std::str::from_utf8(&bytes[10..start]).map_err(|_| bad("header is not UTF-8"))?;
    let descr = header_value(header, "descr").ok_or_else(|| bad("missing descr"))?;
    let width = if descr.starts_with("'<f4'") {
        4
    } else if descr.starts_with("'<f8'") {
        8
    } else {
        return Err(bad("dtype must be <f4 or <f8"));
    };
    let fortran = header_value(header, "fortran_order").ok_or_else(|| bad("missing fortran_order"))?;
    if fortran.starts_with("True") {
        return Err(bad("fortran order is not supported"));
    }
    let shape = header_value(header, "shape")
        .and_then(parse_shape)
        .ok_or_else(|| bad("unreadable shape"))?;
    let n: usize = shape.iter().product();
    let body = &bytes[start..];
    if body.len() != n * width {
        return Err(bad("payload length does not match shape"));
    }
    let data = if width == 4 {
        body.chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect()
    } else {
        body.chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()) as f32)
            .collect()
    };
    Ok(NpyArray { shape, data })
}

/// Read one example's `[n_layers, n_tokens, hidden_dim]` array from a `.npy` file.
pub fn import_npy_example(path: &Path, example_id: &str) -> Result<(usize, usize, ExampleActivations)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let arr = parse_npy(&bytes)?;
    let [n_layers, n_tokens, dim] = arr.shape[..] else {
        return Err(Error::HeaderMismatch {
            example_id: example_id.to_string(),
            detail: format!("expected a 3-d array, got shape {:?}", arr.shape),
        });
    };
    Ok((n_layers, dim, ExampleActivations::new(example_id, n_tokens, arr.data)))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn npy_bytes(shape: &[usize], data: &[f32]) -> Vec<u8> {
        let dims: Vec<String> = shape.iter().map(|d| d.to_string()).collect();
        let shape_str = if dims.len() == 1 { format!("{},", dims[0]) } else { dims.join(", ") };
        let mut header = format!("{{'descr': '<f4', 'fortran_order': False, 'shape': ({shape_str}), }}");
        while (10 + header.len() + 1) % 64 != 0 {
            header.push(' ');
        }
        header.push('\n');
        let mut out = Vec::from(NPY_MAGIC);
        out.extend_from_slice(&[1, 0]);
        out.extend_from_slice(&(header.len() as u16).to_le_bytes());
        out.extend_from_slice(header.as_bytes());
        for v in data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    #[test]
    fn parses_numpy_layout() {
        let data: Vec<f32> = (0..24).map(|i| i as f32 * 0.5).collect();
        let arr = parse_npy(&npy_bytes(&[2, 3, 4], &data)).unwrap();
        assert_eq!(arr.shape, vec![2, 3, 4]);
        assert_eq!(arr.data, data);
    }

    #[test]
    fn rejects_wrong_dtype_and_length() {
        let mut b = npy_bytes(&[2], &[1.0, 2.0]);
        b.pop();
        assert!(parse_npy(&b).is_err());
        let s = String::from_utf8_lossy(&npy_bytes(&[1], &[1.0])).replace("<f4", "<i4");
        assert!(parse_npy(s.as_bytes()).is_err());
    }

    #[test]
    fn import_requires_three_dims() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.npy");
        std::fs::write(&p, npy_bytes(&[2, 2], &[1.0; 4])).unwrap();
        assert!(import_npy_example(&p, "a").is_err());
        std::fs::write(&p, npy_bytes(&[1, 2, 2], &[1.0; 4])).unwrap();
        let (layers, dim, ex) = import_npy_example(&p, "a").unwrap();
        assert_eq!((layers, dim, ex.n_tokens), (1, 2, 2));
    }
}
