use super::{EmbeddingSet, FeatureVector, LabeledEmbedding};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"EMB1";
const HEADER_LEN: u64 = 16;

/// Serialize a set in the EMB1 layout.
pub fn encode_binary(set: &EmbeddingSet) -> Result<Vec<u8>> {
    let n = u32::try_from(set.len())
        .map_err(|_| Error::Validation(format!("{} records exceed the u32 limit", set.len())))?;
    let d = u32::try_from(set.dim())
        .map_err(|_| Error::Validation(format!("dimension {} exceeds the u32 limit", set.dim())))?;
    let m = u32::try_from(set.n_classes()).map_err(|_| {
        Error::Validation(format!("{} classes exceed the u32 limit", set.n_classes()))
    })?;

    let table_len: usize = set.class_names().iter().map(|s| 2 + s.len()).sum();
    let mut out = Vec::with_capacity(16 + table_len + set.len() * (4 + 4 * set.dim()));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&n.to_le_bytes());
    out.extend_from_slice(&d.to_le_bytes());
    out.extend_from_slice(&m.to_le_bytes());
    for name in set.class_names() {
        let len = u16::try_from(name.len()).map_err(|_| {
            Error::Validation(format!("class name of {} bytes exceeds the u16 limit", name.len()))
        })?;
        out.extend_from_slice(&len.to_le_bytes());
        out.extend_from_slice(name.as_bytes());
    }
    for item in set.items() {
        out.extend_from_slice(&item.class_id.to_le_bytes());
        for v in item.features.as_slice() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, len: usize) -> Result<&'a [u8]> {
        let end = self.pos + len;
        if end > self.bytes.len() {
            return Err(Error::Truncated {
                expected: end as u64,
                actual: self.bytes.len() as u64,
            });
        }
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

/// Parse an EMB1 byte buffer.
pub fn decode_binary(bytes: &[u8]) -> Result<EmbeddingSet> {
    if (bytes.len() as u64) < HEADER_LEN {
        return Err(Error::Truncated {
            expected: HEADER_LEN,
            actual: bytes.len() as u64,
        });
    }
    let mut cur = Cursor { bytes, pos: 0 };
    if cur.take(4)? != MAGIC {
        return Err(Error::Format {
            offset: 0,
            message: format!("bad magic {:?}, expected \"EMB1\"", &bytes[..4]),
        });
    }
    let n = cur.u32()? as usize;
    let d = cur.u32()? as usize;
    let m = cur.u32()? as usize;
    if d == 0 {
        return Err(Error::Format {
            offset: 8,
            message: "dimension is zero".into(),
        });
    }

    let mut class_names = Vec::with_capacity(m.min(1 << 16));
    for c in 0..m {
        let offset = cur.pos as u64;
        let len = cur.u16()? as usize;
        let raw = cur.take(len)?;
        let name = std::str::from_utf8(raw).map_err(|e| Error::Format {
            offset: offset + 2,
            message: format!("class name {c} is not valid UTF-8: {e}"),
        })?;
        if name.is_empty() {
            return Err(Error::Format {
                offset,
                message: format!("class name {c} is empty"),
            });
        }
        if class_names.iter().any(|s: &String| s == name) {
            return Err(Error::Format {
                offset,
                message: format!("duplicate class name {name:?}"),
            });
        }
        class_names.push(name.to_owned());
    }

    let record_len = 4 + 4 * d as u64;
    let expected = cur.pos as u64 + n as u64 * record_len;
    let actual = bytes.len() as u64;
    if actual < expected {
        return Err(Error::Truncated { expected, actual });
    }
    if actual > expected {
        return Err(Error::Format {
            offset: expected,
            message: format!("{} trailing bytes after the last record", actual - expected),
        });
    }

    let mut items = Vec::with_capacity(n);
    for index in 0..n {
        let class_id = cur.u32()?;
        if class_id as usize >= m {
            return Err(Error::Validation(format!(
                "record {index}: class index {class_id} out of range (class count {m})"
            )));
        }
        let values: Vec<f32> = cur
            .take(4 * d)?
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
            .collect();
        let features = FeatureVector::new(values).map_err(|e| Error::Record {
            index,
            message: e.to_string(),
        })?;
        items.push(LabeledEmbedding { features, class_id });
    }
    EmbeddingSet::new(d, class_names, items)
}
