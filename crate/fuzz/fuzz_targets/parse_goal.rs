#![no_main]

use libfuzzer_sys::fuzz_target;
use recprover::ast::parse_goal;

fuzz_target!(|goal: &str| {
    let _ = parse_goal(goal);
});
