#![no_main]

use libfuzzer_sys::fuzz_target;
use qkzr_cli::config::RunConfig;

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(cfg) = RunConfig::from_json(s) {
            let _ = cfg.suites();
            let _ = cfg.policy.policy();
            if cfg.n <= 8 {
                let _ = cfg.suite_config();
                let _ = cfg.weight();
            }
        }
    }
});
