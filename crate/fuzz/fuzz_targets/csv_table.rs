#![no_main]

use dpbroker::synth::census_schema;
use dpbroker::table::parse_csv;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let _ = parse_csv(data, None);
    let _ = parse_csv(data, Some(&census_schema()));
});
