#![no_main]
//! Dense CSV loading, with and without a label map.

use drss::dataio::{load_dense_features, write_dense_features, LabelMap};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(ds) = load_dense_features(data, "label", None) {
        let mut buf = Vec::new();
        write_dense_features(&ds, &mut buf, "label").unwrap();
        assert_eq!(load_dense_features(buf.as_slice(), "label", None).unwrap(), ds);
    }
    let map = LabelMap::parse("0:-1,1:1").unwrap();
    let _ = load_dense_features(data, "label", Some(&map));
});
