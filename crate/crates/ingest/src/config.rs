use serde::{Deserialize, Serialize};
use silverqa_core::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchiveMode {
    #[default]
    Live,
    /// Fetch through the snapshot service, oldest snapshots first.
    EarliestSnapshotFirst,
}

fn default_max_pages() -> usize {
    1000
}

fn default_delay() -> u64 {
    1000
}

fn default_user_agent() -> String {
    concat!("silverqa-crawler/", env!("CARGO_PKG_VERSION")).to_string()
}

fn default_timeout() -> u64 {
    30_000
}

fn default_archive_prefix() -> String {
    "https://web.archive.org/web/".to_string()
}

fn default_archive_from() -> String {
    "1996".to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrawlConfig {
    pub seed_urls: Vec<String>,
    #[serde(default = "default_delay")]
    pub min_delay_ms: u64,
    #[serde(default = "default_max_pages")]
    pub max_pages: usize,
    /// Hosts are accepted when they equal or end with one of these; empty
    /// means the hosts of the seeds.
    #[serde(default)]
    pub allowed_host_suffixes: Vec<String>,
    #[serde(default)]
    pub archive_mode: ArchiveMode,
    #[serde(default = "default_user_agent")]
    pub user_agent: String,
    #[serde(default = "default_timeout")]
    pub timeout_ms: u64,
    #[serde(default = "default_archive_prefix")]
    pub archive_prefix: String,
    /// Snapshot timestamp used for seeds; the service resolves partial
    /// timestamps to the nearest capture.
    #[serde(default = "default_archive_from")]
    pub archive_from: String,
}

impl CrawlConfig {
    pub fn new(seed_urls: Vec<String>) -> Self {
        Self {
            seed_urls,
            min_delay_ms: default_delay(),
            max_pages: default_max_pages(),
            allowed_host_suffixes: Vec::new(),
            archive_mode: ArchiveMode::Live,
            user_agent: default_user_agent(),
            timeout_ms: default_timeout(),
            archive_prefix: default_archive_prefix(),
            archive_from: default_archive_from(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seed_urls.is_empty() {
            return Err(Error::Config("crawl needs at least one seed url".into()));
        }
        if self.max_pages == 0 {
            return Err(Error::Config("max_pages must be at least 1".into()));
        }
        if !self.archive_from.chars().all(|c| c.is_ascii_digit()) || self.archive_from.len() > 14 {
            return Err(Error::Config(format!(
                "archive_from `{}` is not a snapshot timestamp",
                self.archive_from
            )));
        }
        Ok(())
    }

    /// Effective host suffixes: configured ones, else the seed hosts.
    pub fn host_suffixes(&self) -> Vec<String> {
        if !self.allowed_host_suffixes.is_empty() {
            return self
                .allowed_host_suffixes
                .iter()
                .map(|s| s.trim_start_matches('.').to_ascii_lowercase())
                .collect();
        }
        self.seed_urls
            .iter()
            .filter_map(|s| url::Url::parse(s).ok())
            .filter_map(|u| u.host_str().map(str::to_ascii_lowercase))
            .collect()
    }

    pub fn host_allowed(&self, host: &str) -> bool {
        let host = host.to_ascii_lowercase();
        self.host_suffixes()
            .iter()
            .any(|s| host == *s || host.ends_with(&format!(".{s}")))
    }
}
