#![no_main]

use hbarlab_core::poly::PolyMap;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(m) = PolyMap::from_json(text) {
            let back = PolyMap::from_json(&serde_json::to_string(&m.to_table()).unwrap()).unwrap();
            assert_eq!(back, m);
        }
    }
});
