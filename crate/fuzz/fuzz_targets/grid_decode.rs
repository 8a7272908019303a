#![no_main]

use hbarlab_core::moyal::io::{decode_grid, encode_grid};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok((f, hbar)) = decode_grid(data) {
        // Values are stored as f32, so a decoded grid re-encodes exactly.
        let again = encode_grid(&f, hbar);
        let (g, h2) = decode_grid(&again).expect("re-encoded grid decodes");
        assert_eq!(f.grid, g.grid);
        assert!(hbar.to_bits() == h2.to_bits());
    }
});
