//! PubChem PUG REST client for SDF records, with an on-disk response cache.

use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

pub const DEFAULT_BASE_URL: &str = "https://pubchem.ncbi.nlm.nih.gov/rest/pug";

/// Environment variable that disables all network access when set to `1`.
pub const OFFLINE_ENV: &str = "PEPFRAG_OFFLINE";

pub fn offline_from_env() -> bool {
    std::env::var(OFFLINE_ENV).is_ok_and(|v| v == "1")
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Identifier {
    Cid(u64),
    Name(String),
}

impl std::str::FromStr for Identifier {
    type Err = FetchError;

    fn from_str(s: &str) -> Result<Self, FetchError> {
        let s = s.trim();
        if s.is_empty() {
            return Err(FetchError::EmptyIdentifier);
        }
        if s.bytes().all(|b| b.is_ascii_digit()) {
            s.parse().map(Identifier::Cid).map_err(|_| FetchError::UnknownIdentifier(s.to_string()))
        } else {
            Ok(Identifier::Name(s.to_string()))
        }
    }
}

impl fmt::Display for Identifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Identifier::Cid(c) => write!(f, "CID {c}"),
            Identifier::Name(n) => write!(f, "{n:?}"),
        }
    }
}

impl Identifier {
    fn path(&self) -> String {
        match self {
            Identifier::Cid(c) => format!("compound/cid/{c}"),
            Identifier::Name(n) => format!("compound/name/{}", percent_encode(n)),
        }
    }

    fn cache_stem(&self) -> String {
        match self {
            Identifier::Cid(c) => format!("cid_{c}"),
            Identifier::Name(n) => format!("name_{}", percent_encode(&n.to_lowercase())),
        }
    }
}

fn percent_encode(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for b in s.bytes() {
        if b.is_ascii_alphanumeric() || matches!(b, b'-' | b'_' | b'.') {
            out.push(b as char);
        } else {
            out.push_str(&format!("%{b:02X}"));
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecordType {
    ThreeD,
    TwoD,
}

impl RecordType {
    fn query(self) -> &'static str {
        match self {
            RecordType::ThreeD => "3d",
            RecordType::TwoD => "2d",
        }
    }
}

#[derive(Debug, Clone)]
pub struct FetchedSdf {
    pub bytes: Vec<u8>,
    pub record_type: RecordType,
    pub from_cache: bool,
    /// Set when only a 2D record was available.
    pub warning: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum FetchError {
    #[error("empty compound identifier")]
    EmptyIdentifier,
    #[error("PubChem has no compound for {0}")]
    UnknownIdentifier(String),
    #[error("rate limited by PubChem (retry after {retry_after:?} s)")]
    RateLimited { retry_after: Option<u64> },
    #[error("HTTP {status} from PubChem (retry after {retry_after:?} s)")]
    Http { status: u16, retry_after: Option<u64> },
    #[error("network error: {0}")]
    Transport(String),
    #[error("network access disabled and {0} is not cached")]
    Offline(String),
    #[error("cache: {0}")]
    Cache(String),
}

pub struct HttpResponse {
    pub status: u16,
    pub body: Vec<u8>,
    pub retry_after: Option<u64>,
}

pub trait Transport: Send + Sync {
    fn get(&self, url: &str) -> Result<HttpResponse, FetchError>;
}

pub struct UreqTransport {
    agent: ureq::Agent,
}

impl UreqTransport {
    pub fn new(timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self { agent }
    }
}

impl Default for UreqTransport {
    fn default() -> Self {
        Self::new(Duration::from_secs(30))
    }
}

impl Transport for UreqTransport {
    fn get(&self, url: &str) -> Result<HttpResponse, FetchError> {
        let mut resp = self
            .agent
            .get(url)
            .call()
            .map_err(|e| FetchError::Transport(e.to_string()))?;
        let status = resp.status().as_u16();
        let retry_after = resp
            .headers()
            .get("retry-after")
            .and_then(|v| v.to_str().ok())
            .and_then(|v| v.trim().parse().ok());
        let body = resp
            .body_mut()
            .read_to_vec()
            .map_err(|e| FetchError::Transport(e.to_string()))?;
        Ok(HttpResponse {
            status,
            body,
            retry_after,
        })
    }
}

pub struct PubChemClient<T: Transport = UreqTransport> {
    transport: T,
    base_url: String,
    cache_dir: PathBuf,
    offline: bool,
    network_calls: AtomicUsize,
    write_lock: Mutex<()>,
}

impl PubChemClient<UreqTransport> {
    pub fn new(cache_dir: impl Into<PathBuf>) -> Self {
        Self::with_transport(UreqTransport::default(), cache_dir)
    }
}

impl<T: Transport> PubChemClient<T> {
    pub fn with_transport(transport: T, cache_dir: impl Into<PathBuf>) -> Self {
        Self {
            transport,
            base_url: DEFAULT_BASE_URL.to_string(),
            cache_dir: cache_dir.into(),
            offline: offline_from_env(),
            network_calls: AtomicUsize::new(0),
            write_lock: Mutex::new(()),
        }
    }

    pub fn base_url(mut self, url: impl Into<String>) -> Self {
        self.base_url = url.into();
        self
    }

    pub fn offline(mut self, offline: bool) -> Self {
        self.offline = offline;
        self
    }

    /// Requests issued so far (cache hits excluded).
    pub fn network_calls(&self) -> usize {
        self.network_calls.load(Ordering::SeqCst)
    }

    fn cache_path(&self, id: &Identifier, kind: RecordType) -> PathBuf {
        self.cache_dir.join(format!("{}.{}.sdf", id.cache_stem(), kind.query()))
    }

    fn cached(&self, id: &Identifier) -> Option<FetchedSdf> {
        for kind in [RecordType::ThreeD, RecordType::TwoD] {
            if let Ok(bytes) = std::fs::read(self.cache_path(id, kind)) {
                return Some(FetchedSdf {
                    bytes,
                    record_type: kind,
                    from_cache: true,
                    warning: two_d_warning(id, kind),
                });
            }
        }
        None
    }

    fn store(&self, id: &Identifier, kind: RecordType, bytes: &[u8]) -> Result<(), FetchError> {
        let _guard = self.write_lock.lock().unwrap_or_else(|e| e.into_inner());
        write_atomic(&self.cache_path(id, kind), bytes).map_err(|e| FetchError::Cache(e.to_string()))
    }

    fn request(&self, id: &Identifier, kind: RecordType) -> Result<HttpResponse, FetchError> {
        let url = format!("{}/{}/record/SDF?record_type={}", self.base_url, id.path(), kind.query());
        self.network_calls.fetch_add(1, Ordering::SeqCst);
        log::info!("GET {url}");
        self.transport.get(&url)
    }

    /// 3D record when PubChem has one, else the 2D record (flagged).
    pub fn fetch(&self, id: &Identifier) -> Result<FetchedSdf, FetchError> {
        match id {
            Identifier::Cid(0) => return Err(FetchError::UnknownIdentifier(id.to_string())),
            Identifier::Name(n) if n.trim().is_empty() => return Err(FetchError::EmptyIdentifier),
            _ => {}
        }
        if let Some(hit) = self.cached(id) {
            return Ok(hit);
        }
        if self.offline {
            return Err(FetchError::Offline(id.to_string()));
        }
        for kind in [RecordType::ThreeD, RecordType::TwoD] {
            let resp = self.request(id, kind)?;
            match resp.status {
                200 if is_sdf(&resp.body) => {
                    self.store(id, kind, &resp.body)?;
                    if kind == RecordType::TwoD {
                        log::warn!("{id}: no 3D conformer, using 2D record");
                    }
                    return Ok(FetchedSdf {
                        bytes: resp.body,
                        record_type: kind,
                        from_cache: false,
                        warning: two_d_warning(id, kind),
                    });
                }
                200 => {
                    return Err(FetchError::Transport(format!("{id}: response is not an SDF record")));
                }
                // missing 3D conformer: try 2D; missing 2D too: unknown compound
                404 if kind == RecordType::ThreeD => continue,
                400 | 404 => return Err(FetchError::UnknownIdentifier(id.to_string())),
                429 | 503 => {
                    return Err(FetchError::RateLimited {
                        retry_after: resp.retry_after,
                    })
                }
                status => {
                    return Err(FetchError::Http {
                        status,
                        retry_after: resp.retry_after,
                    })
                }
            }
        }
        Err(FetchError::UnknownIdentifier(id.to_string()))
    }

    pub fn cache_dir(&self) -> &Path {
        &self.cache_dir
    }
}

fn two_d_warning(id: &Identifier, kind: RecordType) -> Option<String> {
    (kind == RecordType::TwoD).then(|| format!("{id}: only a 2D record is available; coordinates are planar"))
}

fn is_sdf(body: &[u8]) -> bool {
    body.windows(6).any(|w| w == b"M  END")
}

/// Writes via a temporary file in the same directory and renames it into
/// place, so readers see either the old file or the complete new one.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    const WATER: &[u8] = b"water\n  test\n\n  3  2  0  0  0  0  0  0  0  0999 V2000\n    0.0000    0.0000    0.0000 O   0  0  0  0  0  0  0  0  0  0  0  0\n    0.7572    0.5865    0.0000 H   0  0  0  0  0  0  0  0  0  0  0  0\n   -0.7572    0.5865    0.0000 H   0  0  0  0  0  0  0  0  0  0  0  0\n  1  2  1  0\n  1  3  1  0\nM  END\n$$$$\n";

    struct Mock {
        routes: HashMap<String, (u16, Vec<u8>, Option<u64>)>,
        seen: Mutex<Vec<String>>,
    }

    impl Mock {
        fn new(routes: &[(&str, u16, &[u8], Option<u64>)]) -> Self {
            Self {
                routes: routes
                    .iter()
                    .map(|(u, s, b, r)| (u.to_string(), (*s, b.to_vec(), *r)))
                    .collect(),
                seen: Mutex::new(Vec::new()),
            }
        }
    }

    impl Transport for Mock {
        fn get(&self, url: &str) -> Result<HttpResponse, FetchError> {
            self.seen.lock().unwrap().push(url.to_string());
            let (status, body, retry_after) = self
                .routes
                .get(url)
                .cloned()
                .unwrap_or((404, b"not found".to_vec(), None));
            Ok(HttpResponse {
                status,
                body,
                retry_after,
            })
        }
    }

    fn url(path: &str, kind: &str) -> String {
        format!("{DEFAULT_BASE_URL}/{path}/record/SDF?record_type={kind}")
    }

    #[test]
    fn second_fetch_is_served_from_cache() {
        let dir = tempfile::tempdir().unwrap();
        let u = url("compound/cid/962", "3d");
        let client = PubChemClient::with_transport(Mock::new(&[(&u, 200, WATER, None)]), dir.path()).offline(false);
        let id = Identifier::Cid(962);
        let first = client.fetch(&id).unwrap();
        assert!(!first.from_cache);
        assert_eq!(first.record_type, RecordType::ThreeD);
        assert_eq!(client.network_calls(), 1);
        let second = client.fetch(&id).unwrap();
        assert!(second.from_cache);
        assert_eq!(second.bytes, first.bytes);
        assert_eq!(client.network_calls(), 1);
    }

    #[test]
    fn falls_back_to_2d_with_warning() {
        let dir = tempfile::tempdir().unwrap();
        let u2 = url("compound/name/cystine", "2d");
        let client = PubChemClient::with_transport(Mock::new(&[(&u2, 200, WATER, None)]), dir.path()).offline(false);
        let got = client.fetch(&"cystine".parse().unwrap()).unwrap();
        assert_eq!(got.record_type, RecordType::TwoD);
        assert!(got.warning.is_some());
        assert_eq!(client.network_calls(), 2);
    }

    #[test]
    fn cid_zero_is_unknown_without_network() {
        let dir = tempfile::tempdir().unwrap();
        let client = PubChemClient::with_transport(Mock::new(&[]), dir.path()).offline(false);
        let err = client.fetch(&"0".parse().unwrap()).unwrap_err();
        assert!(matches!(err, FetchError::UnknownIdentifier(_)));
        assert_eq!(client.network_calls(), 0);
    }

    #[test]
    fn unknown_name_after_both_records_missing() {
        let dir = tempfile::tempdir().unwrap();
        let client = PubChemClient::with_transport(Mock::new(&[]), dir.path()).offline(false);
        let err = client.fetch(&"not a compound".parse().unwrap()).unwrap_err();
        assert!(matches!(err, FetchError::UnknownIdentifier(_)));
        let seen = client.transport.seen.lock().unwrap();
        assert!(seen[0].contains("not%20a%20compound"));
    }

    #[test]
    fn rate_limit_carries_retry_after() {
        let dir = tempfile::tempdir().unwrap();
        let u = url("compound/cid/750", "3d");
        let client = PubChemClient::with_transport(Mock::new(&[(&u, 503, b"busy", Some(7))]), dir.path()).offline(false);
        assert_eq!(
            client.fetch(&Identifier::Cid(750)).unwrap_err(),
            FetchError::RateLimited { retry_after: Some(7) }
        );
        let u = url("compound/cid/751", "3d");
        let client = PubChemClient::with_transport(Mock::new(&[(&u, 500, b"oops", None)]), dir.path()).offline(false);
        assert_eq!(
            client.fetch(&Identifier::Cid(751)).unwrap_err(),
            FetchError::Http { status: 500, retry_after: None }
        );
    }

    #[test]
    fn offline_mode_only_reads_cache() {
        let dir = tempfile::tempdir().unwrap();
        let client = PubChemClient::with_transport(Mock::new(&[]), dir.path()).offline(true);
        assert!(matches!(client.fetch(&Identifier::Cid(750)), Err(FetchError::Offline(_))));
        assert_eq!(client.network_calls(), 0);
        write_atomic(&dir.path().join("cid_750.3d.sdf"), WATER).unwrap();
        assert!(client.fetch(&Identifier::Cid(750)).unwrap().from_cache);
    }

    #[test]
    fn identifier_parsing() {
        assert_eq!("750".parse::<Identifier>().unwrap(), Identifier::Cid(750));
        assert_eq!("glycine".parse::<Identifier>().unwrap(), Identifier::Name("glycine".into()));
        assert_eq!("  ".parse::<Identifier>().unwrap_err(), FetchError::EmptyIdentifier);
    }
}
