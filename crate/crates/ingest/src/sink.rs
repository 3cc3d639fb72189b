use std::collections::HashSet;
use std::fs;
use std::path::Path;
use std::sync::Mutex;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use silverqa_core::model::article_id_for_url;
use silverqa_core::store::{append_jsonl, read_jsonl, CorpusLayout};
use silverqa_core::{Error, Result};

/// A fetched page. The body is kept byte-for-byte as received.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawPage {
    pub url: String,
    pub status_code: u16,
    pub body: Vec<u8>,
    pub fetched_at: DateTime<Utc>,
}

/// One line of `pages/meta.jsonl`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageMeta {
    pub id: String,
    pub url: String,
    /// Where the bytes came from; a snapshot URL in archive mode.
    pub fetched_url: String,
    /// 0 when the request failed before any response.
    pub status_code: u16,
    pub fetched_at: DateTime<Utc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub snapshot: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub body_bytes: usize,
    /// Set when an earlier fetch of the same page was already stored; the
    /// earlier body is kept.
    #[serde(default)]
    pub duplicate: bool,
}

impl PageMeta {
    pub fn is_success(&self) -> bool {
        (200..300).contains(&self.status_code) && self.error.is_none()
    }
}

pub trait PageSink {
    /// Stores one fetch. Implementations must be safe for concurrent calls
    /// and must keep the first stored body for an id.
    fn store(&self, meta: PageMeta, body: &[u8]) -> Result<PageMeta>;
}

/// Pages under a corpus root: metadata JSONL plus one body file per id.
pub struct FilePageSink {
    layout: CorpusLayout,
    seen: Mutex<HashSet<String>>,
}

impl FilePageSink {
    /// Opens the sink, remembering pages stored by earlier runs.
    pub fn open(layout: CorpusLayout) -> Result<Self> {
        let meta_path = layout.pages_meta();
        let mut seen = HashSet::new();
        if meta_path.exists() {
            for m in read_jsonl::<PageMeta>(&meta_path)? {
                if m.is_success() && !m.duplicate {
                    seen.insert(m.id);
                }
            }
        }
        Ok(Self {
            layout,
            seen: Mutex::new(seen),
        })
    }

    pub fn layout(&self) -> &CorpusLayout {
        &self.layout
    }
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let tmp = path.with_extension("part");
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

impl PageSink for FilePageSink {
    fn store(&self, mut meta: PageMeta, body: &[u8]) -> Result<PageMeta> {
        let mut seen = self.seen.lock().expect("sink lock");
        if meta.is_success() {
            if seen.contains(&meta.id) {
                meta.duplicate = true;
            } else {
                write_atomic(&self.layout.page_body(&meta.id), body)?;
                seen.insert(meta.id.clone());
            }
        }
        append_jsonl(&self.layout.pages_meta(), &meta)?;
        Ok(meta)
    }
}

/// In-memory sink for tests and dry runs.
#[derive(Debug, Default)]
pub struct MemorySink {
    pub pages: Mutex<Vec<(PageMeta, Vec<u8>)>>,
}

impl MemorySink {
    pub fn metas(&self) -> Vec<PageMeta> {
        self.pages
            .lock()
            .expect("sink lock")
            .iter()
            .map(|(m, _)| m.clone())
            .collect()
    }
}

impl PageSink for MemorySink {
    fn store(&self, mut meta: PageMeta, body: &[u8]) -> Result<PageMeta> {
        let mut pages = self.pages.lock().expect("sink lock");
        if meta.is_success()
            && pages
                .iter()
                .any(|(m, _)| m.id == meta.id && m.is_success() && !m.duplicate)
        {
            meta.duplicate = true;
        }
        let kept = if meta.duplicate { Vec::new() } else { body.to_vec() };
        pages.push((meta.clone(), kept));
        Ok(meta)
    }
}

/// Stored raw page for `meta`, as needed by extraction.
pub fn load_page(layout: &CorpusLayout, meta: &PageMeta) -> Result<RawPage> {
    let path = layout.page_body(&meta.id);
    let body = fs::read(&path).map_err(|e| Error::io(&path, e))?;
    Ok(RawPage {
        url: meta.url.clone(),
        status_code: meta.status_code,
        body,
        fetched_at: meta.fetched_at,
    })
}

pub(crate) fn meta_for(url: &str, fetched_url: &str, fetched_at: DateTime<Utc>) -> PageMeta {
    PageMeta {
        id: article_id_for_url(url),
        url: url.to_string(),
        fetched_url: fetched_url.to_string(),
        status_code: 0,
        fetched_at,
        language: None,
        snapshot: None,
        error: None,
        body_bytes: 0,
        duplicate: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ok_meta(url: &str) -> PageMeta {
        PageMeta {
            status_code: 200,
            body_bytes: 3,
            ..meta_for(url, url, DateTime::UNIX_EPOCH)
        }
    }

    #[test]
    fn file_sink_keeps_first_body() {
        let dir = tempfile::tempdir().unwrap();
        let layout = CorpusLayout::new(dir.path());
        let sink = FilePageSink::open(layout.clone()).unwrap();
        let first = sink.store(ok_meta("https://a.example/x"), b"one").unwrap();
        assert!(!first.duplicate);
        drop(sink);

        let sink = FilePageSink::open(layout.clone()).unwrap();
        let again = sink.store(ok_meta("https://a.example/x#frag"), b"two").unwrap();
        assert!(again.duplicate);
        let page = load_page(&layout, &first).unwrap();
        assert_eq!(page.body, b"one");
        let metas: Vec<PageMeta> = read_jsonl(&layout.pages_meta()).unwrap();
        assert_eq!(metas.len(), 2);
    }

    #[test]
    fn failed_fetch_is_logged_without_body() {
        let dir = tempfile::tempdir().unwrap();
        let layout = CorpusLayout::new(dir.path());
        let sink = FilePageSink::open(layout.clone()).unwrap();
        let mut m = meta_for("https://a.example/y", "https://a.example/y", DateTime::UNIX_EPOCH);
        m.error = Some("connection refused".into());
        sink.store(m.clone(), b"").unwrap();
        assert!(!layout.page_body(&m.id).exists());
    }
}
