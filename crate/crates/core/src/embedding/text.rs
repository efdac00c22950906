use std::collections::HashMap;

use super::{EmbeddingSet, FeatureVector, LabeledEmbedding};
use crate::error::{Error, Result};

pub(super) fn encode_csv(set: &EmbeddingSet) -> Result<Vec<u8>> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header = Vec::with_capacity(set.dim() + 1);
    header.push("label".to_string());
    header.extend((0..set.dim()).map(|k| format!("f{k}")));
    writer.write_record(&header).map_err(csv_err)?;

    let mut row = Vec::with_capacity(set.dim() + 1);
    for item in set.items() {
        row.clear();
        row.push(set.class_names()[item.class_id as usize].clone());
        // shortest representation that parses back to the same f32
        row.extend(item.features.as_slice().iter().map(|v| v.to_string()));
        writer.write_record(&row).map_err(csv_err)?;
    }
    writer
        .into_inner()
        .map_err(|e| Error::Validation(format!("csv writer: {e}")))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Validation(format!("csv: {e}"))
}

pub(super) fn decode_csv(bytes: &[u8]) -> Result<EmbeddingSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(bytes);

    let header = reader.headers().map_err(|e| Error::Format {
        offset: 0,
        message: format!("unreadable header: {e}"),
    })?;
    if header.get(0) != Some("label") || header.len() < 2 {
        return Err(Error::Format {
            offset: 0,
            message: "header must be label,f0,f1,...".into(),
        });
    }
    for (k, field) in header.iter().skip(1).enumerate() {
        if field != format!("f{k}") {
            return Err(Error::Format {
                offset: 0,
                message: format!("header column {} is {field:?}, expected \"f{k}\"", k + 1),
            });
        }
    }
    let dim = header.len() - 1;

    let mut class_names: Vec<String> = Vec::new();
    let mut class_index: HashMap<String, u32> = HashMap::new();
    let mut items = Vec::new();
    for (index, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::Record {
            index,
            message: e.to_string(),
        })?;
        if row.len() != dim + 1 {
            return Err(Error::Record {
                index,
                message: format!("expected {dim} values, found {}", row.len().saturating_sub(1)),
            });
        }
        let label = &row[0];
        if label.is_empty() {
            return Err(Error::Record {
                index,
                message: "empty label".into(),
            });
        }
        let class_id = match class_index.get(label) {
            Some(&id) => id,
            None => {
                let id = class_names.len() as u32;
                class_names.push(label.to_owned());
                class_index.insert(label.to_owned(), id);
                id
            }
        };
        let values = row
            .iter()
            .skip(1)
            .enumerate()
            .map(|(k, s)| {
                s.trim().parse::<f32>().map_err(|e| Error::Record {
                    index,
                    message: format!("column f{k}: {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let features = FeatureVector::new(values).map_err(|e| Error::Record {
            index,
            message: e.to_string(),
        })?;
        items.push(LabeledEmbedding { features, class_id });
    }
    EmbeddingSet::new(dim, class_names, items)
}
