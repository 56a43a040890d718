mod common;

use common::*;
use drss::dataio::{
    load_dense_features, load_libsvm_file, parse_libsvm, parse_libsvm_str, prepare_dataset, write_dense_features,
    write_libsvm, LabelMap, PrepareOptions, RawSample,
};
use drss::Error;
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e6f64..1e6,
        any::<f64>().prop_filter("finite", |v| v.is_finite()),
        Just(0.0),
        Just(-0.0),
    ]
}

fn sample() -> impl Strategy<Value = RawSample> {
    (finite(), proptest::collection::btree_map(1usize..200, finite(), 0..12)).prop_map(|(label, m)| RawSample {
        label,
        values: m.into_iter().collect(),
    })
}

fn labelled_sample() -> impl Strategy<Value = RawSample> {
    (any::<bool>(), proptest::collection::btree_map(1usize..8, -10.0f64..10.0, 0..8)).prop_map(|(pos, m)| RawSample {
        label: if pos { 1.0 } else { -1.0 },
        values: m.into_iter().collect(),
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn write_then_parse_is_identity(samples in proptest::collection::vec(sample(), 0..20)) {
        let mut buf = Vec::new();
        write_libsvm(&samples, &mut buf).unwrap();
        let back = parse_libsvm(buf.as_slice()).unwrap();
        prop_assert_eq!(back, samples);
    }

    #[test]
    fn line_order_permutes_rows(samples in proptest::collection::vec(labelled_sample(), 1..20), rot in 0usize..20) {
        let opts = PrepareOptions { dims: Some(8), ..PrepareOptions::default() };
        let a = prepare_dataset(&samples, &opts).unwrap();
        let k = rot % samples.len();
        let mut rotated = samples.clone();
        rotated.rotate_left(k);
        let b = prepare_dataset(&rotated, &opts).unwrap();
        prop_assert_eq!(&a.kept_features, &b.kept_features);
        let n = samples.len();
        for i in 0..n {
            prop_assert_eq!(a.dataset.xcheck().row((i + k) % n), b.dataset.xcheck().row(i));
        }
    }

    #[test]
    fn parser_never_panics(text in "\\PC*") {
        let _ = parse_libsvm_str(&text);
    }
}

#[test]
fn error_positions() {
    let cases: &[(&str, usize, usize, &str)] = &[
        ("abc 1:2", 1, 1, "invalid label"),
        ("1 1:x", 1, 5, "invalid value"),
        ("1 0:1", 1, 3, "at least 1"),
        ("1 1:2 foo", 1, 7, "expected index:value"),
        ("1 a:2", 1, 3, "invalid feature index"),
        ("1 1:1\n\n# note\n-1  2:nan", 4, 7, "invalid value"),
        ("1 2:1 2:3", 1, 7, "non-increasing"),
    ];
    for &(text, line, column, msg) in cases {
        let e = parse_libsvm_str(text).unwrap_err();
        assert_eq!((e.line, e.column), (line, column), "{text:?}: {e}");
        assert!(e.message.contains(msg), "{text:?}: {e}");
    }
}

#[test]
fn comments_and_blank_lines() {
    let s = parse_libsvm_str("# header\n\n+1 1:2 # trailing\n-1\n").unwrap();
    assert_eq!(s.len(), 2);
    assert_eq!(s[1], RawSample { label: -1.0, values: vec![] });
}

#[test]
fn prepare_appends_intercept_and_drops_columns() {
    let s = parse_libsvm_str("1 1:1 2:2\n-1 2:3 3:4").unwrap();
    let p = prepare_dataset(&s, &PrepareOptions::default()).unwrap();
    assert_eq!(p.kept_features, vec![1, 2, 3]);
    assert_eq!(p.dataset.x().row(0), &[1.0, 2.0, 0.0, 1.0]);
    // X̌ flips the negative row, intercept included
    assert_eq!(p.dataset.xcheck().row(1), &[0.0, -3.0, -4.0, -1.0]);
    let opts = PrepareOptions { drop_zero_features: true, ..PrepareOptions::default() };
    let p = prepare_dataset(&s, &opts).unwrap();
    assert_eq!(p.kept_features, vec![2]);
    assert_eq!(p.dataset.d(), 2);
    let opts = PrepareOptions { dims: Some(2), ..PrepareOptions::default() };
    assert!(prepare_dataset(&s, &opts).is_err());
    assert!(prepare_dataset(&[], &PrepareOptions::default()).is_err());
}

#[test]
fn label_maps() {
    let s = parse_libsvm_str("0 1:1\n1 1:2").unwrap();
    assert!(matches!(prepare_dataset(&s, &PrepareOptions::default()), Err(Error::InvalidDataset(_))));
    let opts = PrepareOptions { label_map: Some(LabelMap::parse("0:-1, 1:1").unwrap()), ..PrepareOptions::default() };
    let p = prepare_dataset(&s, &opts).unwrap();
    assert_eq!(p.dataset.y(), &[-1.0, 1.0]);
    assert!(LabelMap::parse("0:2").is_err());
    assert!(LabelMap::parse("0:1,0:-1").is_err());
    assert!(LabelMap::parse("").is_err());
    assert!(LabelMap::parse("0").is_err());
    let partial = PrepareOptions { label_map: Some(LabelMap::parse("0:-1").unwrap()), ..PrepareOptions::default() };
    assert!(prepare_dataset(&s, &partial).is_err());
}

#[test]
fn dense_csv_round_trip() {
    let data = gaussian_clusters(7, 15, 5, 1.0);
    let mut buf = Vec::new();
    write_dense_features(&data, &mut buf, "label").unwrap();
    let back = load_dense_features(buf.as_slice(), "label", None).unwrap();
    assert_eq!(back, data);

    let text = "a,cls,b\n1.5,0,2\n-1,1,3\n";
    let map = LabelMap::parse("0:-1,1:1").unwrap();
    let d = load_dense_features(text.as_bytes(), "cls", Some(&map)).unwrap();
    assert_eq!(d.x().row(0), &[1.5, 2.0, 1.0]);
    assert_eq!(d.y(), &[-1.0, 1.0]);
    assert!(load_dense_features(text.as_bytes(), "label", Some(&map)).is_err());
    match load_dense_features("x,label\n1,1\nq,-1\n".as_bytes(), "label", None) {
        Err(Error::Parse(e)) => assert_eq!((e.line, e.column), (3, 1)),
        other => panic!("expected a parse error, got {other:?}"),
    }
    assert!(load_dense_features("x,label\n1,1,2\n".as_bytes(), "label", None).is_err());
}

#[test]
fn file_loading() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("toy.libsvm");
    std::fs::write(&path, "+1 1:1 2:1\n-1 1:-1 2:0.5\n").unwrap();
    let p = load_libsvm_file(&path, &PrepareOptions::default()).unwrap();
    assert_eq!((p.dataset.n(), p.dataset.d()), (2, 3));
    assert!(matches!(load_libsvm_file(dir.path().join("missing"), &PrepareOptions::default()), Err(Error::Io(_))));
}

#[test]
fn oversized_index_is_rejected() {
    let s = parse_libsvm_str("1 1:1\n-1 18446744073709551615:1").unwrap();
    assert!(matches!(prepare_dataset(&s, &PrepareOptions::default()), Err(Error::InvalidDataset(_))));
}
