//! Model checkpoints are parsed from untrusted bytes: arbitrary input must
//! produce an error, never a panic or oversized allocation, and anything
//! that parses must round-trip bit-exactly.

#![no_main]

use libfuzzer_sys::fuzz_target;
use sicnet_core::sicnet::SicNetModel;

fuzz_target!(|data: &[u8]| {
    if let Ok(model) = SicNetModel::load_bytes(data) {
        let mut bytes = Vec::new();
        model.save_to(&mut bytes).expect("serializing a parsed model");
        let again = SicNetModel::load_bytes(&bytes).expect("round trip parses");
        assert_eq!(model, again);
    }
});
