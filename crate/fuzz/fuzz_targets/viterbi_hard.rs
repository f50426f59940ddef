//! Hard-decision Viterbi over arbitrary bit streams: any length is either
//! decoded or rejected, and decoded words re-encode to the input length.

#![no_main]

use libfuzzer_sys::fuzz_target;
use sicnet_core::fec::ConvCode;

fuzz_target!(|data: &[u8]| {
    let bits: Vec<u8> = data.iter().map(|b| b & 1).collect();
    let code = ConvCode::new();
    if let Ok(info) = code.viterbi_hard(&bits) {
        assert_eq!(ConvCode::coded_len(info.len()), bits.len());
        let reencoded = code.encode(&info).expect("decoded word re-encodes");
        assert_eq!(reencoded.len(), bits.len());
    }
});
