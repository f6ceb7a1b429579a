#![no_main]

use libfuzzer_sys::fuzz_target;
use recprover::orchestrator::read_run_log;

fuzz_target!(|text: &str| {
    let _ = read_run_log(text);
});
