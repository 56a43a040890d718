#![no_main]
//! Label map parsing; every mapped label is ±1.

use drss::dataio::LabelMap;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(map) = LabelMap::parse(text) {
        for raw in [-1.0, 0.0, 1.0, 2.0] {
            if let Ok(v) = LabelMap::apply(Some(&map), raw) {
                assert!(v == 1.0 || v == -1.0);
            }
        }
    }
});
