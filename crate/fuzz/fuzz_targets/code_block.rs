#![no_main]

use libfuzzer_sys::fuzz_target;
use recprover::lean_source::extract_code_block;

fuzz_target!(|reply: &str| {
    if let Ok(code) = extract_code_block(reply) {
        assert!(!code.contains("```"));
    }
});
