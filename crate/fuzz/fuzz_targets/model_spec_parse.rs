//! Fuzz the JSON model-spec parser: arbitrary bytes must either parse or
//! return an error, never panic.

#![no_main]

use gwlife::modelspec::ModelSpec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = ModelSpec::from_json(text);
    }
});
