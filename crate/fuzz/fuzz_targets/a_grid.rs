#![no_main]
//! Weight-change grids; the narrow form must stay inside [0.9, 1.1].

use drss::experiment::parse_a_grid;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(v) = parse_a_grid(text, false) {
        assert!(!v.is_empty());
        assert!(v.iter().all(|a| (0.9 - 1e-9..=1.1 + 1e-9).contains(a)));
    }
    let _ = parse_a_grid(text, true);
});
