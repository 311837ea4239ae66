//! In-memory activation store and the `.actd` container.
//!
//! An `.actd` file is the 8-byte magic `ACTDUMP1`, a little-endian `u32`
//! header length, the UTF-8 JSON header, then `n_layers` blocks of
//! `n_tokens × hidden_dim` little-endian f32 values in row-major order,
//! layer 0 first.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::meta::ExampleMeta;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::par;

pub const ACTD_MAGIC: &[u8; 8] = b"ACTDUMP1";
pub const META_FILE: &str = "meta.jsonl";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActdHeader {
    pub example_id: String,
    pub n_layers: usize,
    pub hidden_dim: usize,
    pub n_tokens: usize,
    pub dtype: String,
}

/// All layers of one example, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct ExampleActivations {
    pub example_id: String,
    pub n_tokens: usize,
    data: Vec<f32>,
}

impl ExampleActivations {
    /// `data` holds `n_layers` blocks of `n_tokens × hidden_dim` values.
    pub fn new(example_id: impl Into<String>, n_tokens: usize, data: Vec<f32>) -> Self {
        Self {
            example_id: example_id.into(),
            n_tokens,
            data,
        }
    }

    pub fn raw(&self) -> &[f32] {
        &self.data
    }
}

/// Per-example, per-layer token × dimension activations. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationStore {
    n_layers: usize,
    hidden_dim: usize,
    examples: Vec<ExampleActivations>,
    index: HashMap<String, usize>,
}

impl ActivationStore {
    /// Validates shapes, finiteness, and id uniqueness. Examples are kept in
    /// ascending `example_id` order.
    pub fn new(n_layers: usize, hidden_dim: usize, mut examples: Vec<ExampleActivations>) -> Result<Self> {
        if n_layers == 0 || hidden_dim == 0 {
            return Err(Error::Config("n_layers and hidden_dim must be positive".into()));
        }
        examples.sort_by(|a, b| a.example_id.cmp(&b.example_id));
        let mut index = HashMap::with_capacity(examples.len());
        for (i, ex) in examples.iter().enumerate() {
            if index.insert(ex.example_id.clone(), i).is_some() {
                return Err(Error::DuplicateExample(ex.example_id.clone()));
            }
            if ex.n_tokens == 0 {
                return Err(Error::HeaderMismatch {
                    example_id: ex.example_id.clone(),
                    detail: "n_tokens must be >= 1".into(),
                });
            }
            let expected = n_layers * ex.n_tokens * hidden_dim;
            if ex.data.len() != expected {
                return Err(Error::HeaderMismatch {
                    example_id: ex.example_id.clone(),
                    detail: format!("expected {expected} values, found {}", ex.data.len()),
                });
            }
            let block = ex.n_tokens * hidden_dim;
            if let Some(pos) = ex.data.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFinite {
                    example_id: ex.example_id.clone(),
                    layer: pos / block,
                });
            }
        }
        Ok(Self {
            n_layers,
            hidden_dim,
            examples,
            index,
        })
    }

    pub fn n_layers(&self) -> usize {
        self.n_layers
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn example_ids(&self) -> impl Iterator<Item = &str> {
        self.examples.iter().map(|e| e.example_id.as_str())
    }

    pub fn examples(&self) -> &[ExampleActivations] {
        &self.examples
    }

    fn example(&self, example_id: &str) -> Result<&ExampleActivations> {
        self.index
            .get(example_id)
            .map(|&i| &self.examples[i])
            .ok_or_else(|| Error::UnknownExample(example_id.to_string()))
    }

    fn check_layer(&self, layer: usize) -> Result<()> {
        if layer >= self.n_layers {
            return Err(Error::LayerOutOfRange {
                layer,
                n_layers: self.n_layers,
            });
        }
        Ok(())
    }

    pub fn n_tokens(&self, example_id: &str) -> Result<usize> {
        Ok(self.example(example_id)?.n_tokens)
    }

    /// The `n_tokens × hidden_dim` f32 block for one (example, layer).
    pub fn layer_block(&self, example_id: &str, layer: usize) -> Result<&[f32]> {
        self.check_layer(layer)?;
        let ex = self.example(example_id)?;
        let block = ex.n_tokens * self.hidden_dim;
        Ok(&ex.data[layer * block..(layer + 1) * block])
    }

    /// One token row as f64.
    pub fn token_row(&self, example_id: &str, layer: usize, token: usize) -> Result<Vec<f64>> {
        let block = self.layer_block(example_id, layer)?;
        let n_tokens = block.len() / self.hidden_dim;
        if token >= n_tokens {
            return Err(Error::Insufficient(format!(
                "token {token} out of range for {example_id:?} ({n_tokens} tokens)"
            )));
        }
        Ok(block[token * self.hidden_dim..(token + 1) * self.hidden_dim]
            .iter()
            .map(|&v| v as f64)
            .collect())
    }

    /// All token rows of one (example, layer) as an f64 matrix.
    pub fn token_matrix(&self, example_id: &str, layer: usize) -> Result<Matrix> {
        let block = self.layer_block(example_id, layer)?;
        Matrix::from_vec(
            block.len() / self.hidden_dim,
            self.hidden_dim,
            block.iter().map(|&v| v as f64).collect(),
        )
    }

    /// Mean over generated tokens of one example at one layer, accumulated in f64.
    pub fn centroid(&self, example_id: &str, layer: usize) -> Result<Vec<f64>> {
        let block = self.layer_block(example_id, layer)?;
        let d = self.hidden_dim;
        let n = block.len() / d;
        let mut acc = vec![0.0f64; d];
        for row in block.chunks_exact(d) {
            for (a, &v) in acc.iter_mut().zip(row) {
                *a += v as f64;
            }
        }
        let inv = 1.0 / n as f64;
        acc.iter_mut().for_each(|a| *a *= inv);
        Ok(acc)
    }

    /// Centroid rows for `ids`, in the given order.
    pub fn centroid_matrix<S: AsRef<str> + Sync>(&self, ids: &[S], layer: usize) -> Result<Matrix> {
        let rows = par::try_map_range(ids.len(), |i| self.centroid(ids[i].as_ref(), layer))?;
        Matrix::from_rows(&rows)
    }
}

/// Encode one example as `.actd` bytes.
pub fn encode_actd(store: &ActivationStore, example_id: &str) -> Result<Vec<u8>> {
    let ex = store.example(example_id)?;
    let header = ActdHeader {
        example_id: ex.example_id.clone(),
        n_layers: store.n_layers,
        hidden_dim: store.hidden_dim,
        n_tokens: ex.n_tokens,
        dtype: "f32le".into(),
    };
    let header = serde_json::to_vec(&header).map_err(|e| Error::json("actd header", e))?;
    let mut out = Vec::with_capacity(12 + header.len() + ex.data.len() * 4);
    out.extend_from_slice(ACTD_MAGIC);
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    for v in &ex.data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

/// Decode `.actd` bytes. `expected_id` guards against misnamed files.
pub fn decode_actd(bytes: &[u8], expected_id: &str) -> Result<(ActdHeader, Vec<f32>)> {
    let mismatch = |detail: String| Error::HeaderMismatch {
        example_id: expected_id.to_string(),
        detail,
    };
    if bytes.len() < 12 || &bytes[..8] != ACTD_MAGIC {
        return Err(mismatch("bad magic".into()));
    }
    let hlen = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let body_start = 12 + hlen;
    if bytes.len() < body_start {
        return Err(mismatch("truncated header".into()));
    }
    let header: ActdHeader = serde_json::from_slice(&bytes[12..body_start])
        .map_err(|e| mismatch(format!("unreadable header: {e}")))?;
    if header.example_id != expected_id {
        return Err(mismatch(format!("header names {:?}", header.example_id)));
    }
    if header.dtype != "f32le" {
        return Err(mismatch(format!("unsupported dtype {:?}", header.dtype)));
    }
    let n = header.n_layers * header.n_tokens * header.hidden_dim;
    let body = &bytes[body_start..];
    if body.len() != n * 4 {
        return Err(mismatch(format!("expected {} payload bytes, found {}", n * 4, body.len())));
    }
    let data = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((header, data))
}

pub fn read_meta(path: &Path) -> Result<Vec<ExampleMeta>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let meta: ExampleMeta = serde_json::from_str(&line)
            .map_err(|e| Error::json(format!("{}:{}", path.display(), lineno + 1), e))?;
        meta.validate()?;
        out.push(meta);
    }
    Ok(out)
}

pub fn write_meta(path: &Path, meta: &[ExampleMeta]) -> Result<()> {
    let mut buf = Vec::new();
    for m in meta {
        serde_json::to_writer(&mut buf, m).map_err(|e| Error::json("meta.jsonl", e))?;
        buf.push(b'\n');
    }
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Load `meta.jsonl` plus one `{example_id}.actd` per listed example.
pub fn load_corpus(dir: &Path) -> Result<(ActivationStore, Vec<ExampleMeta>)> {
    let mut meta = read_meta(&dir.join(META_FILE))?;
    meta.sort_by(|a, b| a.example_id.cmp(&b.example_id));
    let mut seen = HashSet::new();
    for m in &meta {
        if !seen.insert(m.example_id.as_str()) {
            return Err(Error::DuplicateExample(m.example_id.clone()));
        }
    }
    let mut shape: Option<(usize, usize)> = None;
    let mut examples = Vec::with_capacity(meta.len());
    for m in &meta {
        let path = dir.join(format!("{}.actd", m.example_id));
        if !path.exists() {
            return Err(Error::MissingActivation(m.example_id.clone()));
        }
        let bytes = fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let (header, data) = decode_actd(&bytes, &m.example_id)?;
        let this = (header.n_layers, header.hidden_dim);
        match shape {
            None => shape = Some(this),
            Some(s) if s != this => {
                return Err(Error::HeaderMismatch {
                    example_id: m.example_id.clone(),
                    detail: format!("layers/dim {this:?} differ from corpus {s:?}"),
                })
            }
            _ => {}
        }
        if header.n_tokens != m.n_generated_tokens {
            return Err(Error::HeaderMismatch {
                example_id: m.example_id.clone(),
                detail: format!(
                    "n_tokens {} != meta n_generated_tokens {}",
                    header.n_tokens, m.n_generated_tokens
                ),
            });
        }
        examples.push(ExampleActivations::new(m.example_id.clone(), header.n_tokens, data));
    }
    let (n_layers, hidden_dim) =
        shape.ok_or_else(|| Error::Insufficient("corpus lists no examples".into()))?;
    let store = ActivationStore::new(n_layers, hidden_dim, examples)?;
    Ok((store, meta))
}

/// Write the canonical corpus layout. Metadata is written in `example_id` order.
pub fn save_corpus(dir: &Path, store: &ActivationStore, meta: &[ExampleMeta]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut sorted: Vec<ExampleMeta> = meta.to_vec();
    sorted.sort_by(|a, b| a.example_id.cmp(&b.example_id));
    for m in &sorted {
        let bytes = encode_actd(store, &m.example_id)?;
        let path = dir.join(format!("{}.actd", m.example_id));
        let mut f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        f.write_all(&bytes).map_err(|e| Error::io(&path, e))?;
    }
    write_meta(&dir.join(META_FILE), &sorted)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn store_2x3() -> ActivationStore {
        // 2 layers, dim 2; example "e" has 2 tokens.
        let data = vec![1.0, 3.0, 3.0, 5.0, 0.0, 0.0, 2.0, 4.0];
        ActivationStore::new(2, 2, vec![ExampleActivations::new("e", 2, data)]).unwrap()
    }

    #[test]
    fn centroid_hand_mean() {
        let s = store_2x3();
        assert_eq!(s.centroid("e", 0).unwrap(), vec![2.0, 4.0]);
        assert_eq!(s.centroid("e", 1).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn single_token_centroid_is_the_row() {
        let s = ActivationStore::new(1, 3, vec![ExampleActivations::new("one", 1, vec![0.5, -2.0, 7.25])]).unwrap();
        assert_eq!(s.centroid("one", 0).unwrap(), vec![0.5, -2.0, 7.25]);
    }

    #[test]
    fn centroid_errors() {
        let s = store_2x3();
        assert!(matches!(s.centroid("nope", 0), Err(Error::UnknownExample(_))));
        assert!(matches!(s.centroid("e", 2), Err(Error::LayerOutOfRange { .. })));
    }

    #[test]
    fn store_rejects_bad_inputs() {
        let r = ActivationStore::new(1, 2, vec![ExampleActivations::new("a", 1, vec![1.0, f32::NAN])]);
        assert!(matches!(r, Err(Error::NonFinite { .. })));
        let r = ActivationStore::new(1, 2, vec![ExampleActivations::new("a", 2, vec![1.0, 2.0])]);
        assert!(matches!(r, Err(Error::HeaderMismatch { .. })));
        let r = ActivationStore::new(
            1,
            1,
            vec![ExampleActivations::new("a", 1, vec![1.0]), ExampleActivations::new("a", 1, vec![2.0])],
        );
        assert!(matches!(r, Err(Error::DuplicateExample(_))));
    }

    #[test]
    fn actd_roundtrip_and_header_checks() {
        let s = store_2x3();
        let bytes = encode_actd(&s, "e").unwrap();
        assert_eq!(&bytes[..8], ACTD_MAGIC);
        let (h, data) = decode_actd(&bytes, "e").unwrap();
        assert_eq!((h.n_layers, h.hidden_dim, h.n_tokens), (2, 2, 2));
        assert_eq!(data, s.examples()[0].raw());
        assert!(decode_actd(&bytes, "other").is_err());
        assert!(decode_actd(&bytes[..bytes.len() - 1], "e").is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_actd(&bad, "e").is_err());
    }
}
