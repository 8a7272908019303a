#![no_main]

use hbarlab_core::planck::{bohr_sommerfeld_set, AreaProfile};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(p) = AreaProfile::from_json(text) {
            let _ = bohr_sommerfeld_set(&p, (p.hbar_max * 0.5).max(1e-3));
        }
    }
});
