#![no_main]

use libfuzzer_sys::fuzz_target;
use recprover::ast::{extract_subgoals, get_unproven_subgoal_names, parse_ast};

fuzz_target!(|payload: &str| {
    if let Ok((ast, sorries)) = parse_ast(payload) {
        let _ = get_unproven_subgoal_names(&ast);
        if let Ok(subgoals) = extract_subgoals(&ast, &sorries) {
            assert!(subgoals.windows(2).all(|w| w[0].position <= w[1].position));
        }
    }
});
