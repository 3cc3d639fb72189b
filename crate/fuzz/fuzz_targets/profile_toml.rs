#![no_main]

use libfuzzer_sys::fuzz_target;
use silverqa_core::curation::{is_excluded, is_interrogative};
use silverqa_core::profiles::{parse_profile, parse_word_list};

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    if let Ok(profile) = parse_profile(src) {
        let _ = is_interrogative("What happened?", &profile);
        let _ = is_excluded("What happened?", &profile);
    }
    let _ = parse_word_list(src);
});
