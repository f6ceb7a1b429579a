#![no_main]

use libfuzzer_sys::fuzz_target;
use recprover::lean_source::{normalize_preamble, split_source};

fuzz_target!(|code: &str| {
    let src = split_source(code);
    let once = normalize_preamble(&src.preamble);
    assert_eq!(normalize_preamble(&once.render()), once);
    let _ = src.normalized().to_code();
});
