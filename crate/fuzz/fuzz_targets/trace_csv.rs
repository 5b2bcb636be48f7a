#![no_main]

use col_core::metrics::parse_trace_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(rows) = parse_trace_csv(data) {
        assert!(rows.windows(2).all(|w| w[0].n < w[1].n));
    }
});
