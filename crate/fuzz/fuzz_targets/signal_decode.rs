//! Binary signal files are untrusted input: decoding must never panic or
//! over-allocate, and anything it accepts must round-trip.

#![no_main]

use libfuzzer_sys::fuzz_target;

use isac_crlb::io::{decode_signal, encode_signal};

fuzz_target!(|data: &[u8]| {
    if let Ok(sig) = decode_signal(data) {
        let bytes = encode_signal(&sig);
        let back = decode_signal(&bytes).expect("re-encoded signal must decode");
        assert_eq!(back.samples(), sig.samples());
        assert_eq!(back.fs(), sig.fs());
        assert_eq!(back.t0_offset(), sig.t0_offset());
    }
});
