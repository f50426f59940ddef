//! Soft-decision Viterbi over arbitrary LLR bytes: non-finite values and
//! bad lengths are rejected as errors, finite inputs decode without panics.

#![no_main]

use libfuzzer_sys::fuzz_target;
use sicnet_core::fec::ConvCode;

fuzz_target!(|data: &[u8]| {
    let llrs: Vec<f64> = data
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let code = ConvCode::new();
    if let Ok(info) = code.viterbi_soft(&llrs) {
        assert_eq!(ConvCode::coded_len(info.len()), llrs.len());
    }
});
