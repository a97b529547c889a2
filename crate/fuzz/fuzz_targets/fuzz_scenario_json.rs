#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        // Structural parse only: no filesystem access happens here.
        let _ = rebar_core::scenario::ScenarioFile::from_json_str(text);
    }
});
