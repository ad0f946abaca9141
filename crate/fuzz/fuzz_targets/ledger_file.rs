#![no_main]

use dpbroker::ledger::{verify_bytes, LedgerSnapshot};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let report = verify_bytes(data);
    let snapshot = LedgerSnapshot::from_bytes(data);
    // A snapshot only loads from a chain that verifies end to end.
    if snapshot.is_ok() {
        assert!(report.ok);
    }
});
