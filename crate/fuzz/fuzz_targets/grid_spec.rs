#![no_main]

use col_core::harness::{grid_points, parse_grid, MAX_POINTS};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(spec) = std::str::from_utf8(data) else { return };
    if let Ok(axes) = parse_grid(spec) {
        assert!(grid_points(&axes).len() <= MAX_POINTS);
    }
});
