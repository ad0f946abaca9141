#![no_main]

use dpbroker::ConfigFile;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = ConfigFile::parse_toml(text) {
        // Resolution validates ranges; it must reject, never panic.
        let _ = cfg.resolve();
    }
});
