//! Result-CSV parsing of arbitrary text must never panic, and rows that do
//! parse must re-serialize and re-parse to the same values.

#![no_main]

use libfuzzer_sys::fuzz_target;
use sicnet_core::harness::{parse_result_csv, rows_to_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(rows) = parse_result_csv(text) else {
        return;
    };
    // Parsed rows all share the experiment id of the first row or writing
    // fails; both outcomes are fine, panics are not.
    if let Ok(serialized) = rows_to_csv(&rows) {
        let reparsed = parse_result_csv(&serialized).expect("own output parses");
        assert_eq!(reparsed.len(), rows.len());
    }
});
