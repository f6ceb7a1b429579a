#![no_main]

use libfuzzer_sys::fuzz_target;
use recprover::agents::{parse_judgement, parse_search_queries};

fuzz_target!(|reply: &str| {
    if let Ok(qs) = parse_search_queries(reply) {
        assert!(qs.iter().all(|q| !q.is_empty()));
    }
    let _ = parse_judgement(reply);
});
