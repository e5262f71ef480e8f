use std::collections::{BTreeSet, HashMap};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Duration;

use super::BuiltinError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProbeOutcome {
    /// Any status below 400, redirects included.
    Ok(u16),
    HttpError {
        status: u16,
        reason: String,
    },
    Unreachable(String),
    Timeout,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UrlProbeResult {
    pub url: String,
    pub outcome: ProbeOutcome,
}

impl UrlProbeResult {
    /// The two message fragments for a failed probe; `None` when the URL
    /// is live.
    pub fn answers(&self) -> Option<(String, String)> {
        match &self.outcome {
            ProbeOutcome::Ok(_) => None,
            ProbeOutcome::HttpError { status, reason } => Some((
                format!("{}:", self.url),
                format!("ERROR {status}: {reason}"),
            )),
            ProbeOutcome::Unreachable(detail) => Some((
                "No answer or time out,".into(),
                format!("The server seems to be down or does not exist ({detail})"),
            )),
            ProbeOutcome::Timeout => Some((
                "No answer or time out,".into(),
                "The server seems to be down or does not exist (timed out)".into(),
            )),
        }
    }
}

/// One liveness check of one URL.
pub trait HttpProbe: Send + Sync {
    fn probe(&self, url: &str, timeout: Duration) -> ProbeOutcome;
}

/// Real network probe: `HEAD`, retried as `GET` when the server rejects the
/// method. Redirects are not followed.
#[derive(Debug, Default, Clone, Copy)]
pub struct UreqProbe;

impl UreqProbe {
    fn agent(timeout: Duration) -> ureq::Agent {
        ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .max_redirects(0)
            .max_redirects_will_error(false)
            .user_agent(concat!("semlint/", env!("CARGO_PKG_VERSION")))
            .build()
            .into()
    }
}

impl HttpProbe for UreqProbe {
    fn probe(&self, url: &str, timeout: Duration) -> ProbeOutcome {
        let agent = Self::agent(timeout);
        let mut result = agent.head(url).call();
        if let Ok(resp) = &result {
            if matches!(resp.status().as_u16(), 405 | 501) {
                result = agent.get(url).call();
            }
        }
        match result {
            Ok(resp) => {
                let status = resp.status();
                if status.as_u16() < 400 {
                    ProbeOutcome::Ok(status.as_u16())
                } else {
                    ProbeOutcome::HttpError {
                        status: status.as_u16(),
                        reason: status.canonical_reason().unwrap_or("").to_string(),
                    }
                }
            }
            Err(ureq::Error::Timeout(_)) => ProbeOutcome::Timeout,
            Err(ureq::Error::Io(e)) if e.kind() == std::io::ErrorKind::TimedOut => {
                ProbeOutcome::Timeout
            }
            Err(e) => ProbeOutcome::Unreachable(e.to_string()),
        }
    }
}

/// Canned outcomes; URLs not listed are unreachable. Meant for tests and
/// dry runs.
#[derive(Debug, Default, Clone)]
pub struct StaticProbe {
    table: HashMap<String, ProbeOutcome>,
}

impl StaticProbe {
    pub fn new<S: Into<String>>(entries: impl IntoIterator<Item = (S, ProbeOutcome)>) -> Self {
        Self {
            table: entries.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        }
    }
}

impl HttpProbe for StaticProbe {
    fn probe(&self, url: &str, _timeout: Duration) -> ProbeOutcome {
        self.table
            .get(url)
            .cloned()
            .unwrap_or_else(|| ProbeOutcome::Unreachable("no such host".into()))
    }
}

/// Probes each distinct URL at most once per run.
pub struct UrlChecker {
    prober: Arc<dyn HttpProbe>,
    timeout: Duration,
    max_parallel: usize,
    memo: Mutex<HashMap<String, Arc<OnceLock<ProbeOutcome>>>>,
    probes: AtomicUsize,
}

impl UrlChecker {
    pub fn new(prober: Arc<dyn HttpProbe>, timeout: Duration, max_parallel: usize) -> Self {
        Self {
            prober,
            timeout,
            max_parallel: max_parallel.max(1),
            memo: Mutex::new(HashMap::new()),
            probes: AtomicUsize::new(0),
        }
    }

    pub fn check(&self, url: &str) -> UrlProbeResult {
        let cell = self
            .memo
            .lock()
            .unwrap_or_else(|e| e.into_inner())
            .entry(url.to_string())
            .or_default()
            .clone();
        let outcome = cell
            .get_or_init(|| {
                self.probes.fetch_add(1, Ordering::Relaxed);
                log::debug!("probing {url}");
                self.prober.probe(url, self.timeout)
            })
            .clone();
        UrlProbeResult {
            url: url.to_string(),
            outcome,
        }
    }

    /// Probes the given URLs with at most `max_parallel` in flight.
    pub fn prefetch(&self, urls: &[String]) {
        let distinct: Vec<&String> = urls.iter().collect::<BTreeSet<_>>().into_iter().collect();
        let next = AtomicUsize::new(0);
        let workers = self.max_parallel.min(distinct.len());
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::Relaxed);
                    let Some(url) = distinct.get(i) else { break };
                    self.check(url);
                });
            }
        });
    }

    /// Number of probes actually issued so far.
    pub fn probe_count(&self) -> usize {
        self.probes.load(Ordering::Relaxed)
    }
}

/// Accepts absolute `http`/`https` URLs with a host.
pub(super) fn check_syntax(s: &str) -> Result<(), BuiltinError> {
    match ::url::Url::parse(s) {
        Ok(u) if matches!(u.scheme(), "http" | "https") && u.host().is_some() => Ok(()),
        _ => Err(BuiltinError::MalformedUrl(s.to_string())),
    }
}
