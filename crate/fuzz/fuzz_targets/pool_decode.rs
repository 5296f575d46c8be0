//! Fuzzes the start-pool container decoder: arbitrary bytes must never
//! panic, and anything that decodes must re-encode and re-decode cleanly.

#![no_main]

use libfuzzer_sys::fuzz_target;
use pd_core::eval::{read_pool_bytes, write_pool_bytes};

fuzz_target!(|data: &[u8]| {
    if let Ok(pool) = read_pool_bytes(data) {
        let bytes = write_pool_bytes(&pool);
        let again = read_pool_bytes(&bytes).expect("re-encoded pool decodes");
        assert_eq!(again.entries.len(), pool.entries.len());
    }
});
