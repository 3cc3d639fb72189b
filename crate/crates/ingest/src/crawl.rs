use std::collections::HashSet;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use silverqa_core::model::canonical_url;
use silverqa_core::Result;

use crate::config::{ArchiveMode, CrawlConfig};
use crate::extract::extract_links;
use crate::fetch::{Clock, DelayGate, Fetcher};
use crate::frontier::{archive_url, split_archive_url, Frontier, FrontierEntry};
use crate::sink::{meta_for, PageSink};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrawlStats {
    /// Requests made, successful or not.
    pub fetched: usize,
    pub errors: usize,
    /// Links dropped by the host filter.
    pub skipped_offsite: usize,
    /// Links to pages already queued or fetched.
    pub skipped_seen: usize,
    /// Successful fetches of pages a sink already held.
    pub duplicates: usize,
    pub frontier_remaining: usize,
}

fn host_of(url: &str) -> Option<String> {
    url::Url::parse(url)
        .ok()
        .and_then(|u| u.host_str().map(str::to_ascii_lowercase))
}

/// Breadth-first crawl from the seeds. Each page URL is requested at most
/// once and requests to one host are spaced by `min_delay_ms`.
pub fn crawl(
    config: &CrawlConfig,
    language: Option<&str>,
    fetcher: &dyn Fetcher,
    clock: &dyn Clock,
    sink: &dyn PageSink,
) -> Result<CrawlStats> {
    config.validate()?;
    let archive = config.archive_mode == ArchiveMode::EarliestSnapshotFirst;
    let mut stats = CrawlStats::default();
    let mut frontier = Frontier::new(config.archive_mode);
    let mut seen: HashSet<String> = HashSet::new();
    let mut gate = DelayGate::new(Duration::from_millis(config.min_delay_ms));

    let mut enqueue = |url: String, timestamp: Option<String>, frontier: &mut Frontier, stats: &mut CrawlStats| {
        let url = canonical_url(&url);
        match host_of(&url) {
            Some(h) if config.host_allowed(&h) => {}
            _ => {
                stats.skipped_offsite += 1;
                return;
            }
        }
        if !seen.insert(url.clone()) {
            stats.skipped_seen += 1;
            return;
        }
        let fetch_url = match (&timestamp, archive) {
            (Some(ts), true) => archive_url(&config.archive_prefix, ts, &url),
            _ => url.clone(),
        };
        frontier.push(FrontierEntry { fetch_url, url, timestamp });
    };

    for seed in &config.seed_urls {
        let ts = archive.then(|| config.archive_from.clone());
        enqueue(seed.clone(), ts, &mut frontier, &mut stats);
    }

    while stats.fetched < config.max_pages {
        let Some(entry) = frontier.pop() else { break };
        if let Some(host) = host_of(&entry.fetch_url) {
            gate.wait(&host, clock);
        }
        let mut meta = meta_for(&entry.url, &entry.fetch_url, clock.wall());
        meta.language = language.map(str::to_string);
        meta.snapshot = entry.timestamp.clone();
        stats.fetched += 1;

        let body = match fetcher.fetch(&entry.fetch_url) {
            Ok(resp) => {
                meta.status_code = resp.status;
                meta.body_bytes = resp.body.len();
                resp.body
            }
            Err(e) => {
                log::warn!("fetch {} failed: {e}", entry.fetch_url);
                meta.error = Some(e.0);
                Vec::new()
            }
        };
        if !meta.is_success() {
            stats.errors += 1;
        }
        let stored = sink.store(meta, &body)?;
        if stored.duplicate {
            stats.duplicates += 1;
        }
        if !stored.is_success() {
            continue;
        }

        let html = String::from_utf8_lossy(&body);
        for link in extract_links(&html, &entry.fetch_url) {
            if archive {
                match split_archive_url(&config.archive_prefix, &link) {
                    Some((ts, original)) => enqueue(original, Some(ts), &mut frontier, &mut stats),
                    None => stats.skipped_offsite += 1,
                }
            } else {
                enqueue(link, None, &mut frontier, &mut stats);
            }
        }
    }
    stats.frontier_remaining = frontier.len();
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fetch::{FetchError, FetchResponse, ManualClock};
    use crate::sink::MemorySink;
    use std::collections::HashMap;
    use std::sync::Mutex;

    struct MapFetcher {
        pages: HashMap<String, String>,
        log: Mutex<Vec<String>>,
    }

    impl Fetcher for MapFetcher {
        fn fetch(&self, url: &str) -> Result<FetchResponse, FetchError> {
            self.log.lock().unwrap().push(url.to_string());
            match self.pages.get(url) {
                Some(b) => Ok(FetchResponse { status: 200, body: b.clone().into_bytes() }),
                None if url.contains("down") => Err(FetchError("connection reset".into())),
                None => Ok(FetchResponse { status: 404, body: Vec::new() }),
            }
        }
    }

    fn site(pages: &[(&str, &str)]) -> MapFetcher {
        MapFetcher {
            pages: pages.iter().map(|(u, b)| (u.to_string(), b.to_string())).collect(),
            log: Mutex::new(Vec::new()),
        }
    }

    #[test]
    fn dedup_and_filters() {
        let f = site(&[
            ("https://n.example/", r#"<a href="/a">a</a><a href="/a#x">a</a><a href="https://other.example/">o</a><a href="/down">d</a>"#),
            ("https://n.example/a", r#"<a href="/">home</a><a href="/missing">m</a>"#),
        ]);
        let clock = ManualClock::default();
        let sink = MemorySink::default();
        let mut cfg = CrawlConfig::new(vec!["https://n.example/".into()]);
        cfg.min_delay_ms = 250;
        let stats = crawl(&cfg, Some("hi"), &f, &clock, &sink).unwrap();
        let log = f.log.lock().unwrap().clone();
        assert_eq!(log, ["https://n.example/", "https://n.example/a", "https://n.example/down", "https://n.example/missing"]);
        assert_eq!(stats.fetched, 4);
        assert_eq!(stats.errors, 2);
        assert_eq!(stats.skipped_offsite, 1);
        assert_eq!(stats.skipped_seen, 2);
        assert_eq!(clock.elapsed(), Duration::from_millis(750));
        assert!(sink.metas().iter().all(|m| m.language.as_deref() == Some("hi")));
    }

    #[test]
    fn max_pages_one_fetches_first_seed() {
        let f = site(&[("https://n.example/", r#"<a href="/a">a</a>"#)]);
        let sink = MemorySink::default();
        let mut cfg = CrawlConfig::new(vec!["https://n.example/".into(), "https://n.example/b".into()]);
        cfg.max_pages = 1;
        let stats = crawl(&cfg, None, &f, &ManualClock::default(), &sink).unwrap();
        assert_eq!(stats.fetched, 1);
        assert_eq!(*f.log.lock().unwrap(), ["https://n.example/"]);
        assert_eq!(stats.frontier_remaining, 2);
    }

    #[test]
    fn archive_mode_rewrites_and_orders() {
        let p = "https://web.archive.org/web/";
        let f = site(&[
            (
                "https://web.archive.org/web/2010/https://n.example/",
                r#"<a href="/web/20120101000000/https://n.example/late">l</a>
                   <a href="/web/20110101000000/https://n.example/early">e</a>
                   <a href="/about">about</a>"#,
            ),
            ("https://web.archive.org/web/20110101000000/https://n.example/early", ""),
            ("https://web.archive.org/web/20120101000000/https://n.example/late", ""),
        ]);
        let mut cfg = CrawlConfig::new(vec!["https://n.example/".into()]);
        cfg.archive_mode = ArchiveMode::EarliestSnapshotFirst;
        cfg.archive_prefix = p.into();
        cfg.archive_from = "2010".into();
        let sink = MemorySink::default();
        crawl(&cfg, None, &f, &ManualClock::default(), &sink).unwrap();
        let metas = sink.metas();
        let urls: Vec<&str> = metas.iter().map(|m| m.url.as_str()).collect();
        assert_eq!(urls, ["https://n.example/", "https://n.example/early", "https://n.example/late"]);
        assert_eq!(metas[1].snapshot.as_deref(), Some("20110101000000"));
    }
}
