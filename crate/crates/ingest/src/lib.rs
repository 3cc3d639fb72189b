//! Crawling news sites (live or through web-archive snapshots) and turning
//! fetched HTML into [`silverqa_core::model::Article`]s.

mod config;
mod crawl;
mod extract;
mod fetch;
mod frontier;
mod sink;

pub use config::{ArchiveMode, CrawlConfig};
pub use crawl::{crawl, CrawlStats};
pub use extract::{extract_article, extract_links, parse_year};
pub use fetch::{Clock, DelayGate, FetchError, FetchResponse, Fetcher, HttpFetcher, ManualClock, SystemClock};
pub use frontier::{archive_url, split_archive_url, Frontier, FrontierEntry};
pub use sink::{load_page, FilePageSink, MemorySink, PageMeta, PageSink, RawPage};
