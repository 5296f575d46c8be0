//! Fuzzes the experiment-config parser: arbitrary text must never panic,
//! and any config that parses must survive a serialize/parse round trip.

#![no_main]

use libfuzzer_sys::fuzz_target;
use pd_core::harness::{parse_config, serialize_config};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(config) = parse_config(text) {
            let echoed = serialize_config(&config);
            let reparsed = parse_config(&echoed).expect("canonical form re-parses");
            assert_eq!(config, reparsed);
        }
    }
});
