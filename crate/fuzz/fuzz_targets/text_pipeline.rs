#![no_main]

use libfuzzer_sys::fuzz_target;
use silverqa_core::model::normalize_text;
use silverqa_core::textproc::{fold_case, trim_punct, Segmenter, Tokenizer};

fuzz_target!(|data: &[u8]| {
    let Ok(raw) = std::str::from_utf8(data) else { return };
    let text = normalize_text(raw);
    assert_eq!(normalize_text(&text), text);
    if let Ok(tokens) = Tokenizer::whitespace().tokenize(&text) {
        for t in &tokens {
            let _ = fold_case(trim_punct(t));
        }
    }
    let _ = Segmenter::rule(&['?', '؟']).segment(&text);
});
