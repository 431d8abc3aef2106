#![no_main]

use libfuzzer_sys::fuzz_target;

// The surface height-grid file parser must never panic; malformed headers,
// inconsistent row lengths, and non-finite values must all return errors.
fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = deltascatter::config::parse_height_grid(text);
    }
});
