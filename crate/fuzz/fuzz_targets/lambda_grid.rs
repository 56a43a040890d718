#![no_main]
//! Lambda grid expressions, resolved against a fixed two-sample dataset.

use drss::experiment::LambdaGrid;
use drss::linalg::DenseMatrix;
use drss::models::Dataset;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(grid) = LambdaGrid::parse(text) else {
        return;
    };
    let x = DenseMatrix::from_rows(&[vec![1.0, 1.0], vec![-0.5, 1.0]]).unwrap();
    let ds = Dataset::new(x, vec![1.0, -1.0]).unwrap();
    let _ = grid.resolve(&ds);
});
