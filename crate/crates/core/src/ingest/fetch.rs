//! Paginated, rate-limited download of an OpenSea-compatible assets endpoint.
//!
//! Requests are issued one at a time. Consecutive request starts are spaced
//! at least `1 / rate_limit` seconds apart, retries included. Every response
//! body is written to the snapshot store before it is parsed, and
//! `cursor.json` records the last page that was fully persisted, so an
//! interrupted fetch resumes after that page.
//!
//! Layout of the output directory:
//!
//! ```text
//! raw/page-<n>.json        response body, byte for byte
//! raw/page-<n>.meta.json   {"fetched_at": ..., "request_url": ...}
//! cursor.json              {"last_page": n}
//! ```

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{parse_assets_page, IngestError};
use crate::model::{canonical_address, Collection, Token};

/// Environment variable consulted for the API key when none is configured.
pub const API_KEY_ENV: &str = "RECSYS_API_KEY";

const API_KEY_HEADER: &str = "X-API-KEY";

#[derive(Debug, Clone, PartialEq)]
pub struct FetchConfig {
    pub api_base: String,
    pub contract: String,
    /// Assets per page, `1..=50`.
    pub page_size: usize,
    /// Requests per second, `> 0`.
    pub rate_limit: f64,
    pub max_retries: u32,
    pub api_key: Option<String>,
    /// First backoff delay; doubles on every further retry.
    pub backoff_base: Duration,
}

impl FetchConfig {
    pub fn new(api_base: impl Into<String>, contract: impl Into<String>) -> Self {
        Self {
            api_base: api_base.into(),
            contract: contract.into(),
            page_size: 50,
            rate_limit: 2.0,
            max_retries: 5,
            api_key: None,
            backoff_base: Duration::from_secs(1),
        }
    }

    pub fn validate(&self) -> Result<(), FetchError> {
        if !(1..=50).contains(&self.page_size) {
            return Err(FetchError::Config(format!(
                "page size {} outside 1..=50",
                self.page_size
            )));
        }
        if !(self.rate_limit.is_finite() && self.rate_limit > 0.0) {
            return Err(FetchError::Config(format!(
                "rate limit must be a positive number, got {}",
                self.rate_limit
            )));
        }
        canonical_address(&self.contract).map_err(|e| FetchError::Config(e.to_string()))?;
        if self.api_base.is_empty() {
            return Err(FetchError::Config("api base URL is empty".into()));
        }
        Ok(())
    }

    pub fn min_interval(&self) -> Duration {
        Duration::from_secs_f64(1.0 / self.rate_limit)
    }

    pub fn page_url(&self, page: u64) -> String {
        format!(
            "{}/assets?asset_contract_address={}&order_direction=asc&offset={}&limit={}",
            self.api_base.trim_end_matches('/'),
            self.contract.to_ascii_lowercase(),
            page * self.page_size as u64,
            self.page_size
        )
    }
}

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("invalid fetch configuration: {0}")]
    Config(String),
    #[error("fetch aborted at page {page} ({reason}); last persisted page: {}", fmt_cursor(.cursor))]
    Aborted {
        page: u64,
        cursor: Option<u64>,
        reason: String,
    },
    #[error("snapshot store {path}: {source}")]
    Store {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("page {page}: {source}")]
    Parse {
        page: u64,
        #[source]
        source: IngestError,
    },
    #[error(transparent)]
    Collection(#[from] IngestError),
}

fn fmt_cursor(c: &Option<u64>) -> String {
    c.map(|c| c.to_string()).unwrap_or_else(|| "none".into())
}

/// Monotonic time plus wall-clock timestamps.
pub trait Clock {
    /// Time elapsed since an arbitrary fixed origin.
    fn now(&self) -> Duration;
    fn sleep(&self, d: Duration);
    fn utc_now(&self) -> DateTime<Utc>;
}

#[derive(Debug, Clone)]
pub struct SystemClock {
    origin: Instant,
}

impl Default for SystemClock {
    fn default() -> Self {
        Self { origin: Instant::now() }
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }

    fn sleep(&self, d: Duration) {
        std::thread::sleep(d);
    }

    fn utc_now(&self) -> DateTime<Utc> {
        Utc::now()
    }
}

/// A clock that only moves when slept on. Clones share the same time.
#[derive(Debug, Clone, Default)]
pub struct VirtualClock {
    now: Arc<Mutex<Duration>>,
    sleeps: Arc<Mutex<Vec<Duration>>>,
}

impl VirtualClock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn advance(&self, d: Duration) {
        *self.now.lock().unwrap() += d;
    }

    /// Every sleep requested so far, in order.
    pub fn sleeps(&self) -> Vec<Duration> {
        self.sleeps.lock().unwrap().clone()
    }
}

impl Clock for VirtualClock {
    fn now(&self) -> Duration {
        *self.now.lock().unwrap()
    }

    fn sleep(&self, d: Duration) {
        self.sleeps.lock().unwrap().push(d);
        self.advance(d);
    }

    fn utc_now(&self) -> DateTime<Utc> {
        DateTime::<Utc>::UNIX_EPOCH + self.now()
    }
}

/// Enforces a minimum spacing between consecutive request starts.
#[derive(Debug, Clone)]
pub struct RateLimiter {
    min_interval: Duration,
    last_start: Option<Duration>,
}

impl RateLimiter {
    pub fn new(min_interval: Duration) -> Self {
        Self {
            min_interval,
            last_start: None,
        }
    }

    /// Sleeps until the next request may start and records that start.
    pub fn acquire(&mut self, clock: &dyn Clock) -> Duration {
        if let Some(last) = self.last_start {
            let ready = last + self.min_interval;
            let now = clock.now();
            if now < ready {
                clock.sleep(ready - now);
            }
        }
        let start = clock.now();
        self.last_start = Some(start);
        start
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("timed out: {0}")]
    Timeout(String),
    #[error("network error: {0}")]
    Network(String),
}

/// Issues one GET request.
pub trait Transport {
    fn get(&self, url: &str, headers: &[(&str, &str)]) -> Result<HttpResponse, TransportError>;
}

/// Blocking HTTP transport backed by `ureq`.
pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build();
        Self {
            agent: ureq::Agent::new_with_config(config),
        }
    }
}

impl Default for UreqTransport {
    fn default() -> Self {
        Self::new(Duration::from_secs(30))
    }
}

impl Transport for UreqTransport {
    fn get(&self, url: &str, headers: &[(&str, &str)]) -> Result<HttpResponse, TransportError> {
        let classify = |e: ureq::Error| match e {
            ureq::Error::Timeout(_) => TransportError::Timeout(e.to_string()),
            other => TransportError::Network(other.to_string()),
        };
        let mut req = self.agent.get(url).header("Accept", "application/json");
        for (k, v) in headers {
            req = req.header(*k, *v);
        }
        let mut resp = req.call().map_err(classify)?;
        let status = resp.status().as_u16();
        let body = resp
            .body_mut()
            .with_config()
            .limit(256 * 1024 * 1024)
            .read_to_vec()
            .map_err(classify)?;
        Ok(HttpResponse { status, body })
    }
}

/// One response as received.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawSnapshot {
    pub fetched_at: DateTime<Utc>,
    pub request_url: String,
    pub body: Vec<u8>,
}

#[derive(Serialize, Deserialize)]
struct SnapshotMeta {
    fetched_at: DateTime<Utc>,
    request_url: String,
}

#[derive(Serialize, Deserialize)]
struct Cursor {
    last_page: u64,
}

/// Directory of raw response bodies plus the resume cursor.
#[derive(Debug, Clone)]
pub struct SnapshotStore {
    root: PathBuf,
}

impl SnapshotStore {
    pub fn open(root: &Path) -> Result<Self, FetchError> {
        let raw = root.join("raw");
        fs::create_dir_all(&raw).map_err(|source| FetchError::Store { path: raw, source })?;
        Ok(Self {
            root: root.to_path_buf(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn page_path(&self, page: u64) -> PathBuf {
        self.root.join("raw").join(format!("page-{page}.json"))
    }

    fn meta_path(&self, page: u64) -> PathBuf {
        self.root.join("raw").join(format!("page-{page}.meta.json"))
    }

    fn cursor_path(&self) -> PathBuf {
        self.root.join("cursor.json")
    }

    fn store_err(path: &Path) -> impl FnOnce(std::io::Error) -> FetchError + '_ {
        move |source| FetchError::Store {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn persist(&self, page: u64, snap: &RawSnapshot) -> Result<(), FetchError> {
        let body_path = self.page_path(page);
        fs::write(&body_path, &snap.body).map_err(Self::store_err(&body_path))?;
        let meta = SnapshotMeta {
            fetched_at: snap.fetched_at,
            request_url: snap.request_url.clone(),
        };
        let meta_path = self.meta_path(page);
        let bytes = serde_json::to_vec(&meta).expect("snapshot metadata always serializes");
        fs::write(&meta_path, bytes).map_err(Self::store_err(&meta_path))
    }

    pub fn load(&self, page: u64) -> Result<RawSnapshot, FetchError> {
        let body_path = self.page_path(page);
        let body = fs::read(&body_path).map_err(Self::store_err(&body_path))?;
        let meta_path = self.meta_path(page);
        let meta_bytes = fs::read(&meta_path).map_err(Self::store_err(&meta_path))?;
        let meta: SnapshotMeta = serde_json::from_slice(&meta_bytes).map_err(|e| FetchError::Store {
            path: meta_path.clone(),
            source: std::io::Error::new(std::io::ErrorKind::InvalidData, e),
        })?;
        Ok(RawSnapshot {
            fetched_at: meta.fetched_at,
            request_url: meta.request_url,
            body,
        })
    }

    /// Last fully persisted page, if any.
    pub fn cursor(&self) -> Result<Option<u64>, FetchError> {
        let path = self.cursor_path();
        match fs::read(&path) {
            Ok(bytes) => {
                let c: Cursor = serde_json::from_slice(&bytes).map_err(|e| FetchError::Store {
                    path: path.clone(),
                    source: std::io::Error::new(std::io::ErrorKind::InvalidData, e),
                })?;
                Ok(Some(c.last_page))
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(source) => Err(FetchError::Store { path, source }),
        }
    }

    pub fn set_cursor(&self, last_page: u64) -> Result<(), FetchError> {
        let path = self.cursor_path();
        let bytes = serde_json::to_vec(&Cursor { last_page }).expect("cursor always serializes");
        fs::write(&path, bytes).map_err(Self::store_err(&path))
    }
}

fn parse_page(page: u64, body: &[u8]) -> Result<Vec<Token>, FetchError> {
    parse_assets_page(body).map_err(|source| FetchError::Parse { page, source })
}

/// Rebuilds the collection from persisted pages `0..=cursor`.
pub fn replay_snapshots(cfg: &FetchConfig, store: &SnapshotStore) -> Result<Collection, FetchError> {
    let mut tokens = Vec::new();
    if let Some(last) = store.cursor()? {
        for page in 0..=last {
            tokens.extend(parse_page(page, &store.load(page)?.body)?);
        }
    }
    Ok(Collection::new(&cfg.contract, None, tokens).map_err(IngestError::from)?)
}

/// Downloads every page of `cfg.contract`, resuming after the store's cursor.
///
/// Pagination stops at the first page holding fewer than `page_size`
/// assets. HTTP 429 and transport failures are retried with exponential
/// backoff (`backoff_base`, doubling) up to `max_retries` times; any other
/// non-2xx status aborts. Aborts report the last persisted page.
pub fn fetch_assets(
    cfg: &FetchConfig,
    store: &SnapshotStore,
    transport: &dyn Transport,
    clock: &dyn Clock,
) -> Result<Collection, FetchError> {
    cfg.validate()?;
    let api_key = cfg.api_key.clone().or_else(|| std::env::var(API_KEY_ENV).ok());
    let headers: Vec<(&str, &str)> = api_key
        .as_deref()
        .map(|k| vec![(API_KEY_HEADER, k)])
        .unwrap_or_default();

    let mut cursor = store.cursor()?;
    let mut tokens = Vec::new();
    let mut finished = false;
    if let Some(last) = cursor {
        for page in 0..=last {
            let got = parse_page(page, &store.load(page)?.body)?;
            finished = got.len() < cfg.page_size;
            tokens.extend(got);
        }
        log::info!("resuming after page {last} ({} assets on disk)", tokens.len());
    }

    let mut limiter = RateLimiter::new(cfg.min_interval());
    let mut page = cursor.map_or(0, |c| c + 1);
    while !finished {
        let url = cfg.page_url(page);
        let abort = |reason: String| FetchError::Aborted { page, cursor, reason };
        let mut retries = 0u32;
        let body = loop {
            limiter.acquire(clock);
            log::debug!("GET {url}");
            let failure = match transport.get(&url, &headers) {
                Ok(resp) if (200..300).contains(&resp.status) => break resp.body,
                Ok(resp) if resp.status == 429 => "HTTP 429 Too Many Requests".to_string(),
                Ok(resp) => return Err(abort(format!("HTTP {}", resp.status))),
                Err(e) => e.to_string(),
            };
            if retries >= cfg.max_retries {
                return Err(abort(format!("{failure} after {retries} retries")));
            }
            let delay = cfg
                .backoff_base
                .checked_mul(2u32.saturating_pow(retries))
                .unwrap_or(Duration::MAX);
            log::warn!("page {page}: {failure}; retrying in {delay:?}");
            clock.sleep(delay);
            retries += 1;
        };

        let snap = RawSnapshot {
            fetched_at: clock.utc_now(),
            request_url: url.clone(),
            body,
        };
        store.persist(page, &snap)?;
        let got = parse_page(page, &snap.body)?;
        store.set_cursor(page)?;
        cursor = Some(page);
        log::info!("page {page}: {} assets", got.len());
        finished = got.len() < cfg.page_size;
        tokens.extend(got);
        page += 1;
    }
    Ok(Collection::new(&cfg.contract, None, tokens).map_err(IngestError::from)?)
}
