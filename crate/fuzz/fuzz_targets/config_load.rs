#![no_main]

use libfuzzer_sys::fuzz_target;
use recprover::config::Config;

fuzz_target!(|ini: &str| {
    if let Ok(cfg) = Config::load(ini, None, Vec::<(&str, &str)>::new()) {
        let _ = cfg.typed_limits();
        let _ = cfg.chat_backends();
        let _ = cfg.lean_server();
        let _ = cfg.search();
    }
});
