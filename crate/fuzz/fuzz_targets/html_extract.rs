#![no_main]

use libfuzzer_sys::fuzz_target;
use silverqa_core::model::LanguageProfile;
use silverqa_ingest::{extract_article, extract_links, parse_year, split_archive_url, RawPage};

fuzz_target!(|data: &[u8]| {
    let page = RawPage {
        url: "https://news.example/world/1".into(),
        status_code: 200,
        body: data.to_vec(),
        fetched_at: chrono::DateTime::UNIX_EPOCH,
    };
    let profile = LanguageProfile::basic("en");
    if let Ok(Some(article)) = extract_article(&page, &profile) {
        // Blocks come out in order and indexed densely.
        for (i, b) in article.blocks.iter().enumerate() {
            assert_eq!(b.index, i);
        }
    }
    let html = String::from_utf8_lossy(data);
    for link in extract_links(&html, &page.url) {
        let _ = split_archive_url("https://web.archive.org/web/", &link);
    }
    let _ = parse_year(&html);
});
