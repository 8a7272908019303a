#![no_main]

use hbarlab_core::fuzzy::{read_node_csv, SphereSymbol};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if read_node_csv(data).is_ok() {
        let _ = SphereSymbol::from_node_csv("fuzz", data);
    }
});
