//! Labeled embedding collections, their on-disk formats and a synthetic
//! generator for desk-scale experiments.
//!
//! Two file formats are supported:
//!
//! * `EMB1` binary (canonical, little-endian, bit-exact round trip):
//!
//!   ```text
//!   "EMB1" | u32 n | u32 d | u32 m | m × (u16 len, utf-8 name) | n × (u32 class, d × f32)
//!   ```
//!
//! * CSV with header `label,f0,f1,...,f{d-1}` and the class name in the first
//!   column. Classes without any item cannot be represented in CSV.

mod binary;
mod text;
mod synth;

use std::collections::{HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use binary::{decode_binary, encode_binary, MAGIC};
pub use synth::{generate_synthetic, generate_synthetic_with_centers, SynthSpec, SyntheticSet};

/// File format selector for [`load_embeddings`] / [`save_embeddings`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Binary,
    Csv,
}

impl Format {
    /// Guess from the file extension; anything but `.csv` is binary.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Format::Csv,
            _ => Format::Binary,
        }
    }
}

/// A finite embedding vector stored at file precision.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(Vec<f32>);

impl FeatureVector {
    pub fn new(values: Vec<f32>) -> Result<Self> {
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "coordinate {pos} is not finite ({})",
                values[pos]
            )));
        }
        Ok(FeatureVector(values))
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Widened copy used by the numerical code.
    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&v| f64::from(v)).collect()
    }

    pub fn norm(&self) -> f64 {
        self.0
            .iter()
            .map(|&v| f64::from(v) * f64::from(v))
            .sum::<f64>()
            .sqrt()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledEmbedding {
    pub features: FeatureVector,
    pub class_id: u32,
}

/// Immutable labeled collection of `dim`-dimensional vectors with a class-name table.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    dim: usize,
    class_names: Vec<String>,
    items: Vec<LabeledEmbedding>,
}

impl EmbeddingSet {
    pub fn new(dim: usize, class_names: Vec<String>, items: Vec<LabeledEmbedding>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Validation("dimension must be positive".into()));
        }
        let mut seen = HashSet::with_capacity(class_names.len());
        for name in &class_names {
            if name.is_empty() {
                return Err(Error::Validation("empty class name".into()));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::Validation(format!("duplicate class name {name:?}")));
            }
        }
        for (index, item) in items.iter().enumerate() {
            if item.features.len() != dim {
                return Err(Error::Record {
                    index,
                    message: format!("expected {dim} values, found {}", item.features.len()),
                });
            }
            if item.class_id as usize >= class_names.len() {
                return Err(Error::Validation(format!(
                    "record {index}: class index {} out of range (class count {})",
                    item.class_id,
                    class_names.len()
                )));
            }
        }
        Ok(EmbeddingSet {
            dim,
            class_names,
            items,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn items(&self) -> &[LabeledEmbedding] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Item indices grouped by class id, in file order.
    pub fn indices_by_class(&self) -> Vec<Vec<usize>> {
        let mut by_class = vec![Vec::new(); self.class_names.len()];
        for (i, item) in self.items.iter().enumerate() {
            by_class[item.class_id as usize].push(i);
        }
        by_class
    }
}

pub fn load_embeddings(path: impl AsRef<Path>, format: Format) -> Result<EmbeddingSet> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    match format {
        Format::Binary => decode_binary(&bytes),
        Format::Csv => text::decode_csv(&bytes),
    }
}

pub fn save_embeddings(set: &EmbeddingSet, path: impl AsRef<Path>, format: Format) -> Result<()> {
    let path = path.as_ref();
    let bytes = match format {
        Format::Binary => encode_binary(set)?,
        Format::Csv => text::encode_csv(set)?,
    };
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SetDiagnostics {
    pub n_items: usize,
    pub dim: usize,
    /// Item count per class id, including classes with no items.
    pub class_counts: Vec<usize>,
    pub norm_min: f64,
    pub norm_mean: f64,
    pub norm_max: f64,
    /// Groups of item indices whose vectors are bit-identical.
    pub duplicate_groups: Vec<Vec<usize>>,
}

impl SetDiagnostics {
    pub fn has_duplicates(&self) -> bool {
        !self.duplicate_groups.is_empty()
    }
}

/// Summarize a set; never rejects.
pub fn validate_set(set: &EmbeddingSet) -> SetDiagnostics {
    let mut class_counts = vec![0usize; set.n_classes()];
    let mut norm_min = f64::INFINITY;
    let mut norm_max = 0.0f64;
    let mut norm_sum = 0.0f64;
    let mut groups: HashMap<Vec<u32>, Vec<usize>> = HashMap::new();

    for (i, item) in set.items().iter().enumerate() {
        class_counts[item.class_id as usize] += 1;
        let norm = item.features.norm();
        norm_min = norm_min.min(norm);
        norm_max = norm_max.max(norm);
        norm_sum += norm;
        // -0.0 and 0.0 compare equal as vectors; fold them together
        let key = item
            .features
            .as_slice()
            .iter()
            .map(|&v| if v == 0.0 { 0 } else { v.to_bits() })
            .collect();
        groups.entry(key).or_default().push(i);
    }

    let mut duplicate_groups: Vec<Vec<usize>> =
        groups.into_values().filter(|g| g.len() > 1).collect();
    duplicate_groups.sort();

    let n = set.len();
    SetDiagnostics {
        n_items: n,
        dim: set.dim(),
        class_counts,
        norm_min: if n == 0 { 0.0 } else { norm_min },
        norm_mean: if n == 0 { 0.0 } else { norm_sum / n as f64 },
        norm_max,
        duplicate_groups,
    }
}
