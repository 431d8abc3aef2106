#![no_main]

use libfuzzer_sys::fuzz_target;

// The TOML run-configuration parser must never panic: arbitrary input may
// only produce Ok(config) or a structured error.
fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = deltascatter::config::parse_config(text);
    }
});
