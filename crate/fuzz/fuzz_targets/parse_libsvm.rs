#![no_main]
//! LIBSVM parsing, write/parse round trip and densification.

use drss::dataio::{parse_libsvm, prepare_dataset, write_libsvm, PrepareOptions};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(samples) = parse_libsvm(data) else {
        return;
    };
    let mut buf = Vec::new();
    write_libsvm(&samples, &mut buf).unwrap();
    assert_eq!(parse_libsvm(buf.as_slice()).unwrap(), samples);

    let widest = samples.iter().filter_map(|s| s.values.last().map(|v| v.0)).max().unwrap_or(0);
    if widest <= 256 {
        for drop_zero_features in [false, true] {
            let opts = PrepareOptions { drop_zero_features, ..PrepareOptions::default() };
            if let Ok(p) = prepare_dataset(&samples, &opts) {
                assert_eq!(p.dataset.n(), samples.len());
                assert_eq!(p.dataset.d(), p.kept_features.len() + 1);
            }
        }
    }
});
