#![no_main]

use libfuzzer_sys::fuzz_target;
use recprover::services::parse_verify_response;

fuzz_target!(|data: &[u8]| {
    if let Ok(value) = serde_json::from_slice::<serde_json::Value>(data) {
        if let Ok(r) = parse_verify_response(&value) {
            assert!(!(r.passed && r.errors().next().is_some()));
        }
    }
});
