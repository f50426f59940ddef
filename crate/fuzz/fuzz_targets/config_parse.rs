//! The key-value config parser must reject malformed text gracefully.

#![no_main]

use libfuzzer_sys::fuzz_target;
use sicnet_core::harness::ConfigFile;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = ConfigFile::parse(text);
    }
});
