#![no_main]

use libfuzzer_sys::fuzz_target;
use silverqa_core::scorers::{parse_handshake, parse_response};

fuzz_target!(|data: &[u8]| {
    let Ok(line) = std::str::from_utf8(data) else { return };
    if let Ok(h) = parse_handshake(line) {
        assert!(h.score_range.0 < h.score_range.1);
    }
    if let Ok(r) = parse_response(line) {
        assert!(r.score.is_some() != r.error.is_some());
    }
});
