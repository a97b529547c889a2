#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        // Must reject or accept without panicking; accepted networks must
        // satisfy their own invariants.
        if let Ok(net) = rebar_core::network::ReluNetwork::from_json_str(text) {
            let _ = net.validate();
        }
    }
});
