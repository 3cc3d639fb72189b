#![no_main]

use std::path::Path;

use libfuzzer_sys::fuzz_target;
use silverqa_core::gold::{AnnotationResponse, AnnotationTask, GoldRecord};
use silverqa_core::instances::TrainingInstance;
use silverqa_core::model::{Article, QAPair};
use silverqa_core::scorers::ScoreRecord;
use silverqa_core::store::parse_jsonl;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    let origin = Path::new("fuzz.jsonl");
    if let Ok(pairs) = parse_jsonl::<QAPair>(src, origin) {
        for p in &pairs {
            let _ = p.validate();
        }
    }
    let _ = parse_jsonl::<Article>(src, origin);
    let _ = parse_jsonl::<TrainingInstance>(src, origin);
    let _ = parse_jsonl::<ScoreRecord>(src, origin);
    let _ = parse_jsonl::<AnnotationTask>(src, origin);
    let _ = parse_jsonl::<AnnotationResponse>(src, origin);
    let _ = parse_jsonl::<GoldRecord>(src, origin);
});
