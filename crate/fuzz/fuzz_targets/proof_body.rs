#![no_main]

use libfuzzer_sys::fuzz_target;
use recprover::lean_source::{
    count_sorries, declaration_name, extract_proof_body, proof_body, replace_subgoal, statement_header,
    statement_with_sorry,
};

fuzz_target!(|code: &str| {
    let _ = proof_body(code);
    if let Ok(body) = extract_proof_body(code) {
        assert_ne!(body.split_whitespace().next(), Some("by"));
    }
    let _ = statement_header(code);
    let _ = statement_with_sorry(code);
    let before = count_sorries(code);
    if let Some(name) = declaration_name(code) {
        if let Ok(out) = replace_subgoal(code, &name, "trivial") {
            assert!(count_sorries(&out) < before);
        }
    }
});
