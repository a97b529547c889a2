#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(poly) = rebar_core::lingeo::Polytope::from_json_str(text) {
            // Accepted polytopes must answer membership queries safely.
            let p = vec![0.0; poly.dim];
            let _ = rebar_core::lingeo::contains_point(&poly, &p);
        }
    }
});
