#![no_main]

use libfuzzer_sys::fuzz_target;

// The CLI sweep grammars START:STOP:COUNT and X0:X1:Y0:Y1:NX:NY must never
// panic or allocate unboundedly on arbitrary input.
fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = deltascatter::config::parse_range(text);
        let _ = deltascatter::config::parse_grid(text);
    }
});
