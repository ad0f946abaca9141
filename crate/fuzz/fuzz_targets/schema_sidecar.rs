#![no_main]

use dpbroker::table::parse_schema_sidecar;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = parse_schema_sidecar(text);
    }
});
