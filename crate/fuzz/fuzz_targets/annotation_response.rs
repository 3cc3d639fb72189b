#![no_main]

use libfuzzer_sys::fuzz_target;
use silverqa_core::gold::{
    derive_gold, validate_response, AnnotationResponse, AnnotationTask, TaskParagraph, TaskStatus,
};

fuzz_target!(|data: &[u8]| {
    let Ok(resp) = serde_json::from_slice::<AnnotationResponse>(data) else { return };
    let task = AnnotationTask {
        task_id: resp.task_id.clone(),
        qa_id: "qa".into(),
        language: "en".into(),
        title: String::new(),
        question: "Why?".into(),
        paragraphs: (0..4).map(|index| TaskParagraph { index, text: String::new() }).collect(),
        status: TaskStatus::Open,
    };
    if validate_response(&task, &resp).is_ok() {
        let gold = derive_gold("qa", 4, std::slice::from_ref(&resp)).expect("one valid response");
        assert!(gold.gold_ids.iter().all(|i| *i < 4));
    }
});
