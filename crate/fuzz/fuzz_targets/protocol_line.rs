#![no_main]

use dpbroker::protocol::{parse_request, to_query_request, Request};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(line) = std::str::from_utf8(data) else { return };
    if let Ok(Request::UserQuery(msg)) = parse_request(line) {
        let _ = to_query_request(&msg);
    }
});
