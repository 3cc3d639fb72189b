use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use crate::config::ArchiveMode;

/// `<prefix><timestamp>/<url>`.
pub fn archive_url(prefix: &str, timestamp: &str, url: &str) -> String {
    let prefix = if prefix.ends_with('/') {
        prefix.to_string()
    } else {
        format!("{prefix}/")
    };
    format!("{prefix}{timestamp}/{url}")
}

/// Splits a snapshot URL into (timestamp, original url). The timestamp may
/// carry a replay modifier such as `id_`, which is dropped.
pub fn split_archive_url(prefix: &str, url: &str) -> Option<(String, String)> {
    let prefix = prefix.trim_end_matches('/');
    let rest = url.strip_prefix(prefix)?.strip_prefix('/')?;
    let (stamp, original) = rest.split_once('/')?;
    let digits: String = stamp.chars().take_while(char::is_ascii_digit).collect();
    if digits.is_empty() || digits.len() > 14 {
        return None;
    }
    if !(original.starts_with("http://") || original.starts_with("https://")) {
        return None;
    }
    Some((digits, original.to_string()))
}

/// Timestamps compare as 14-digit strings, padded with zeros.
fn stamp_key(ts: &str) -> String {
    format!("{ts:0<14}")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrontierEntry {
    /// URL as it should be fetched.
    pub fetch_url: String,
    /// The page's own URL (differs from `fetch_url` in archive mode).
    pub url: String,
    pub timestamp: Option<String>,
}

/// (sort key, insertion order, timestamp, fetch url, url).
type OldestKey = (String, u64, Option<String>, String, String);

/// FIFO queue for live crawling, oldest-snapshot-first heap for archives.
#[derive(Debug)]
pub enum Frontier {
    Fifo(VecDeque<FrontierEntry>),
    Oldest {
        heap: BinaryHeap<Reverse<OldestKey>>,
        seq: u64,
    },
}

impl Frontier {
    pub fn new(mode: ArchiveMode) -> Self {
        match mode {
            ArchiveMode::Live => Frontier::Fifo(VecDeque::new()),
            ArchiveMode::EarliestSnapshotFirst => Frontier::Oldest {
                heap: BinaryHeap::new(),
                seq: 0,
            },
        }
    }

    pub fn push(&mut self, entry: FrontierEntry) {
        match self {
            Frontier::Fifo(q) => q.push_back(entry),
            Frontier::Oldest { heap, seq } => {
                let key = stamp_key(entry.timestamp.as_deref().unwrap_or(""));
                heap.push(Reverse((key, *seq, entry.timestamp, entry.fetch_url, entry.url)));
                *seq += 1;
            }
        }
    }

    pub fn pop(&mut self) -> Option<FrontierEntry> {
        match self {
            Frontier::Fifo(q) => q.pop_front(),
            Frontier::Oldest { heap, .. } => heap
                .pop()
                .map(|Reverse((_, _, timestamp, fetch_url, url))| FrontierEntry {
                    fetch_url,
                    url,
                    timestamp,
                }),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Frontier::Fifo(q) => q.len(),
            Frontier::Oldest { heap, .. } => heap.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: &str = "https://web.archive.org/web/";

    fn entry(ts: &str, url: &str) -> FrontierEntry {
        FrontierEntry {
            fetch_url: archive_url(P, ts, url),
            url: url.into(),
            timestamp: Some(ts.into()),
        }
    }

    #[test]
    fn archive_round_trip() {
        let a = archive_url(P, "2015", "https://www.bbc.com/hindi");
        assert_eq!(a, "https://web.archive.org/web/2015/https://www.bbc.com/hindi");
        assert_eq!(
            split_archive_url(P, &a),
            Some(("2015".into(), "https://www.bbc.com/hindi".into()))
        );
        assert_eq!(
            split_archive_url(P, "https://web.archive.org/web/20150101000000id_/http://x.org/a"),
            Some(("20150101000000".into(), "http://x.org/a".into()))
        );
        assert_eq!(split_archive_url(P, "https://web.archive.org/about"), None);
    }

    #[test]
    fn oldest_first() {
        let mut f = Frontier::new(ArchiveMode::EarliestSnapshotFirst);
        f.push(entry("20180101000000", "https://a/1"));
        f.push(entry("2015", "https://a/2"));
        f.push(entry("20160505", "https://a/3"));
        f.push(entry("2015", "https://a/4"));
        let order: Vec<String> = std::iter::from_fn(|| f.pop()).map(|e| e.url).collect();
        assert_eq!(order, ["https://a/2", "https://a/4", "https://a/3", "https://a/1"]);
    }

    #[test]
    fn fifo_live() {
        let mut f = Frontier::new(ArchiveMode::Live);
        for u in ["x", "y", "z"] {
            f.push(FrontierEntry { fetch_url: u.into(), url: u.into(), timestamp: None });
        }
        assert_eq!(f.len(), 3);
        assert_eq!(f.pop().unwrap().url, "x");
    }
}
