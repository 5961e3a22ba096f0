//! Experiment-config text is untrusted input: parsing must never panic,
//! only return errors.

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = isac_crlb::config::parse_ini(text);
        let _ = isac_crlb::config::ExperimentConfig::from_ini(text);
    }
});
