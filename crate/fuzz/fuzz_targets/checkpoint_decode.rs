//! Fuzzes the checkpoint container decoder: arbitrary bytes must never
//! panic, and anything that decodes must re-encode and re-decode to the
//! same spec and bit-identical parameters.

#![no_main]

use libfuzzer_sys::fuzz_target;
use pd_core::nn::{read_checkpoint_bytes, write_checkpoint_bytes};

fuzz_target!(|data: &[u8]| {
    if let Ok((spec, params)) = read_checkpoint_bytes(data) {
        let bytes = write_checkpoint_bytes(&spec, &params).expect("decoded checkpoint re-encodes");
        let (spec2, params2) = read_checkpoint_bytes(&bytes).expect("re-encoded checkpoint decodes");
        assert_eq!(spec, spec2);
        assert!(params.bits_eq(&params2));
    }
});
