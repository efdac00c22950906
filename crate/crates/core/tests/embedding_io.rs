use proptest::prelude::*;
use tempfile::tempdir;

use ronfa_core::embedding::{
    decode_binary, encode_binary, generate_synthetic, load_embeddings, save_embeddings,
    EmbeddingSet, FeatureVector, Format, LabeledEmbedding, SynthSpec,
};
use ronfa_core::Error;

fn set_from(dim: usize, names: &[&str], rows: &[(u32, Vec<f32>)]) -> EmbeddingSet {
    EmbeddingSet::new(
        dim,
        names.iter().map(|s| s.to_string()).collect(),
        rows.iter()
            .map(|(c, v)| LabeledEmbedding {
                features: FeatureVector::new(v.clone()).unwrap(),
                class_id: *c,
            })
            .collect(),
    )
    .unwrap()
}

#[test]
fn empty_set_is_header_plus_class_table() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("empty.emb");
    let set = set_from(4, &["ab", "c"], &[]);
    save_embeddings(&set, &path, Format::Binary).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(bytes.len(), 16 + (2 + 2) + (2 + 1));
    let back = load_embeddings(&path, Format::Binary).unwrap();
    assert!(back.is_empty());
    assert_eq!(back.dim(), 4);
    assert_eq!(back, set);
}

#[test]
fn one_record_occupies_four_plus_four_d_bytes() {
    let d = 7;
    let empty = encode_binary(&set_from(d, &["x"], &[])).unwrap();
    let one = encode_binary(&set_from(d, &["x"], &[(0, vec![0.5; d])])).unwrap();
    assert_eq!(one.len() - empty.len(), 4 + 4 * d);
}

#[test]
fn save_load_save_is_byte_identical() {
    let dir = tempdir().unwrap();
    let set = generate_synthetic(
        &SynthSpec {
            n_classes: 3,
            per_class: 4,
            dim: 5,
            center_radius: 2.0,
            within_std: 0.3,
        },
        5,
    )
    .unwrap();
    let a = dir.path().join("a.emb");
    let b = dir.path().join("b.emb");
    save_embeddings(&set, &a, Format::Binary).unwrap();
    let loaded = load_embeddings(&a, Format::Binary).unwrap();
    save_embeddings(&loaded, &b, Format::Binary).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(loaded, set);
}

#[test]
fn csv_file_round_trip() {
    let dir = tempdir().unwrap();
    let path = dir.path().join("s.csv");
    std::fs::write(&path, "label,f0,f1\ncat,1.0,2.0\n").unwrap();
    let set = load_embeddings(&path, Format::Csv).unwrap();
    assert_eq!(set.len(), 1);
    assert_eq!(set.class_names(), ["cat"]);
    let out = dir.path().join("t.csv");
    save_embeddings(&set, &out, Format::Csv).unwrap();
    assert_eq!(std::fs::read_to_string(&out).unwrap(), "label,f0,f1\ncat,1,2\n");
}

#[test]
fn missing_file_is_io_error() {
    let err = load_embeddings("/nonexistent/x.emb", Format::Binary).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
}

#[test]
fn unwritable_path_is_io_error() {
    let set = set_from(1, &["a"], &[]);
    let err = save_embeddings(&set, "/nonexistent/dir/x.emb", Format::Binary).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
}

#[test]
fn truncated_file_cites_byte_counts() {
    let set = set_from(3, &["a", "b"], &[(0, vec![1.0, 2.0, 3.0]), (1, vec![4.0, 5.0, 6.0])]);
    let bytes = encode_binary(&set).unwrap();
    let msg = decode_binary(&bytes[..bytes.len() - 6]).unwrap_err().to_string();
    assert!(msg.contains(&bytes.len().to_string()), "{msg}");
    assert!(msg.contains(&(bytes.len() - 6).to_string()), "{msg}");
}

fn arb_set() -> impl Strategy<Value = EmbeddingSet> {
    (1usize..6, 1usize..5).prop_flat_map(|(dim, m)| {
        let names = proptest::collection::hash_set("[a-zé]{1,8}", m);
        let rows = proptest::collection::vec(
            (0..m as u32, proptest::collection::vec(-1e6f32..1e6, dim)),
            0..12,
        );
        (Just(dim), names, rows).prop_map(|(dim, names, rows)| {
            let mut names: Vec<String> = names.into_iter().collect();
            names.sort();
            let refs: Vec<&str> = names.iter().map(String::as_str).collect();
            set_from(dim, &refs, &rows)
        })
    })
}

proptest! {
    #[test]
    fn binary_round_trip_is_exact(set in arb_set()) {
        let bytes = encode_binary(&set).unwrap();
        let back = decode_binary(&bytes).unwrap();
        prop_assert_eq!(&back, &set);
        prop_assert_eq!(encode_binary(&back).unwrap(), bytes);
    }

    #[test]
    fn csv_round_trip_preserves_values(set in arb_set()) {
        let dir = tempdir().unwrap();
        let path = dir.path().join("p.csv");
        save_embeddings(&set, &path, Format::Csv).unwrap();
        let back = load_embeddings(&path, Format::Csv).unwrap();
        prop_assert_eq!(back.len(), set.len());
        for (a, b) in back.items().iter().zip(set.items()) {
            prop_assert_eq!(a.features.as_slice(), b.features.as_slice());
            prop_assert_eq!(
                &back.class_names()[a.class_id as usize],
                &set.class_names()[b.class_id as usize]
            );
        }
    }
}
