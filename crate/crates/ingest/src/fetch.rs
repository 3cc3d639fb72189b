use std::collections::HashMap;
use std::io::Read;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};

/// Upper bound on a fetched body.
const MAX_BODY_BYTES: u64 = 16 * 1024 * 1024;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchResponse {
    pub status: u16,
    pub body: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct FetchError(pub String);

pub trait Fetcher {
    fn fetch(&self, url: &str) -> Result<FetchResponse, FetchError>;
}

pub struct HttpFetcher {
    agent: ureq::Agent,
}

impl HttpFetcher {
    pub fn new(user_agent: &str, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .user_agent(user_agent)
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self { agent }
    }
}

impl Fetcher for HttpFetcher {
    fn fetch(&self, url: &str) -> Result<FetchResponse, FetchError> {
        let mut resp = self
            .agent
            .get(url)
            .call()
            .map_err(|e| FetchError(e.to_string()))?;
        let status = resp.status().as_u16();
        let mut body = Vec::new();
        resp.body_mut()
            .as_reader()
            .take(MAX_BODY_BYTES)
            .read_to_end(&mut body)
            .map_err(|e| FetchError(e.to_string()))?;
        Ok(FetchResponse { status, body })
    }
}

/// Time source for the crawler; injectable so politeness can be tested.
pub trait Clock {
    /// Monotonic time since an arbitrary origin.
    fn elapsed(&self) -> Duration;
    fn sleep(&self, d: Duration);
    fn wall(&self) -> DateTime<Utc>;
}

pub struct SystemClock {
    origin: Instant,
}

impl Default for SystemClock {
    fn default() -> Self {
        Self { origin: Instant::now() }
    }
}

impl Clock for SystemClock {
    fn elapsed(&self) -> Duration {
        self.origin.elapsed()
    }

    fn sleep(&self, d: Duration) {
        std::thread::sleep(d);
    }

    fn wall(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// Clock that only moves when slept on or advanced by hand.
#[derive(Debug, Default)]
pub struct ManualClock {
    now: Mutex<Duration>,
}

impl ManualClock {
    pub fn advance(&self, d: Duration) {
        *self.now.lock().expect("clock lock") += d;
    }
}

impl Clock for ManualClock {
    fn elapsed(&self) -> Duration {
        *self.now.lock().expect("clock lock")
    }

    fn sleep(&self, d: Duration) {
        self.advance(d);
    }

    fn wall(&self) -> DateTime<Utc> {
        DateTime::UNIX_EPOCH + chrono::Duration::from_std(self.elapsed()).unwrap_or_default()
    }
}

/// Enforces a minimum gap between requests to the same host.
#[derive(Debug)]
pub struct DelayGate {
    min_gap: Duration,
    last: HashMap<String, Duration>,
}

impl DelayGate {
    pub fn new(min_gap: Duration) -> Self {
        Self {
            min_gap,
            last: HashMap::new(),
        }
    }

    /// Blocks until `host` may be contacted, then records the request time.
    pub fn wait(&mut self, host: &str, clock: &dyn Clock) {
        if let Some(&prev) = self.last.get(host) {
            let ready = prev + self.min_gap;
            let now = clock.elapsed();
            if now < ready {
                clock.sleep(ready - now);
            }
        }
        self.last.insert(host.to_string(), clock.elapsed());
    }
}
