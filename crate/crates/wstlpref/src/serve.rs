//! Local HTTP service behind the elicitation UI.
//!
//! Requests are handled by a small pool of worker threads; every mutation
//! of the session goes through one mutex and is persisted before the
//! response is sent.

use std::fs;
use std::io::Read;
use std::net::SocketAddr;
use std::path::{Component, Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use tiny_http::{Header, Method, Request, Response, Server};
use wstlpref_core::{ChannelKind, Signal};

use crate::error::{Error, Result};
use crate::format::reals;
use crate::session::{LoadedSession, Side};
use crate::store;

const MAX_BODY: u64 = 64 * 1024;

const PLACEHOLDER_PAGE: &str = "<!doctype html>
<html><head><meta charset=\"utf-8\"><title>wstlpref</title></head>
<body><p>The elicitation API is running under <code>/api</code>.
Start the service with <code>--ui-dir</code> to serve the built UI.</p></body></html>
";

/// Trajectory as sent to the UI.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignalPayload {
    #[serde(with = "reals")]
    pub time: Vec<f64>,
    /// Real-valued channels by name.
    pub series: std::collections::BTreeMap<String, Payload>,
    /// Boolean channels by name.
    pub flags: std::collections::BTreeMap<String, Vec<bool>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct Payload(#[serde(with = "reals")] pub Vec<f64>);

impl SignalPayload {
    pub fn from_signal(s: &Signal) -> Self {
        let mut series = std::collections::BTreeMap::new();
        let mut flags = std::collections::BTreeMap::new();
        for c in s.channels() {
            let values = s.channel(&c.name).expect("channel exists");
            match c.kind {
                ChannelKind::Real => {
                    series.insert(c.name.clone(), Payload(values.to_vec()));
                }
                ChannelKind::Boolean => {
                    flags.insert(c.name.clone(), values.iter().map(|v| *v > 0.0).collect());
                }
            }
        }
        SignalPayload {
            time: (0..s.len()).map(|t| t as f64 * s.dt()).collect(),
            series,
            flags,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChoiceBody {
    choice: Side,
}

/// Shared service state.
#[derive(Debug)]
pub struct Elicitation {
    session: Mutex<LoadedSession>,
    ui_dir: Option<PathBuf>,
}

impl Elicitation {
    pub fn new(session: LoadedSession, ui_dir: Option<PathBuf>) -> Self {
        Elicitation {
            session: Mutex::new(session),
            ui_dir,
        }
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, LoadedSession> {
        // A panicking handler cannot leave a half-applied choice behind:
        // the session is only replaced after a successful write.
        self.session.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn summary(s: &LoadedSession) -> Value {
        json!({
            "id": s.session.id,
            "scenario": s.session.scenario,
            "marker": s.dataset.marker,
            "total": s.session.total(),
            "answered": s.session.answered(),
            "progress": s.session.progress(),
            "complete": s.session.is_complete(),
        })
    }

    /// Routes one request to a status code, content type and body.
    pub fn handle(&self, method: &Method, url: &str, body: &[u8]) -> (u16, &'static str, Vec<u8>) {
        let path = url.split(['?', '#']).next().unwrap_or("");
        let segments: Vec<&str> = path.split('/').filter(|s| !s.is_empty()).collect();
        match (method, segments.as_slice()) {
            (Method::Get, ["api", "session"]) => ok_json(&Self::summary(&self.lock())),
            (Method::Get, ["api", "pairs", i]) => {
                let Some(i) = parse_index(i) else {
                    return error(404, "no such pair");
                };
                let s = self.lock();
                let Ok((left, right)) = s.placement(i) else {
                    return error(404, &format!("pair index {i} out of range"));
                };
                let payload = |id: &str| SignalPayload::from_signal(&s.data.signals[s.data.index[id]]);
                ok_json(&json!({
                    "index": i,
                    "total": s.session.total(),
                    "left": payload(left),
                    "right": payload(right),
                    "answered": s.session.chosen_side(i).ok().flatten(),
                }))
            }
            (Method::Post, ["api", "pairs", i, "choice"]) => {
                let Some(i) = parse_index(i) else {
                    return error(404, "no such pair");
                };
                let choice: ChoiceBody = match serde_json::from_slice(body) {
                    Ok(c) => c,
                    Err(e) => {
                        return error(400, &format!("expected {{\"choice\": \"left\"|\"right\"}}: {e}"))
                    }
                };
                let mut s = self.lock();
                if i >= s.session.total() {
                    return error(404, &format!("pair index {i} out of range"));
                }
                match s.submit(i, choice.choice) {
                    Ok(()) => {
                        let mut v = Self::summary(&s);
                        v["index"] = json!(i);
                        ok_json(&v)
                    }
                    Err(e) => error(500, &format!("could not save choice: {e}")),
                }
            }
            (Method::Get, ["api", "export"]) => match self.lock().export() {
                Ok(doc) => (200, "application/json", store::to_bytes(&doc)),
                Err(e @ Error::IncompleteSession { .. }) => error(409, &e.to_string()),
                Err(e) => error(500, &e.to_string()),
            },
            (_, ["api", ..]) => error(404, "unknown endpoint"),
            (Method::Get, _) => self.asset(&segments),
            _ => error(405, "method not allowed"),
        }
    }

    fn asset(&self, segments: &[&str]) -> (u16, &'static str, Vec<u8>) {
        let Some(dir) = &self.ui_dir else {
            return if segments.is_empty() || segments == ["index.html"] {
                (
                    200,
                    "text/html; charset=utf-8",
                    PLACEHOLDER_PAGE.as_bytes().to_vec(),
                )
            } else {
                error(404, "not found")
            };
        };
        let rel: PathBuf = if segments.is_empty() {
            PathBuf::from("index.html")
        } else {
            segments.iter().collect()
        };
        if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
            return error(404, "not found");
        }
        let path = dir.join(&rel);
        match fs::read(&path) {
            Ok(bytes) => (200, content_type(&path), bytes),
            Err(_) => error(404, "not found"),
        }
    }
}

fn parse_index(s: &str) -> Option<usize> {
    if s.bytes().all(|b| b.is_ascii_digit()) {
        s.parse().ok()
    } else {
        None
    }
}

fn ok_json(v: &Value) -> (u16, &'static str, Vec<u8>) {
    (
        200,
        "application/json",
        serde_json::to_vec(v).expect("json values serialize"),
    )
}

fn error(status: u16, message: &str) -> (u16, &'static str, Vec<u8>) {
    (
        status,
        "application/json",
        serde_json::to_vec(&json!({ "error": message })).expect("json values serialize"),
    )
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js" | "mjs") => "text/javascript",
        Some("css") => "text/css",
        Some("json") => "application/json",
        Some("svg") => "image/svg+xml",
        Some("png") => "image/png",
        _ => "application/octet-stream",
    }
}

/// A bound, not yet running, service.
pub struct Service {
    server: Arc<Server>,
    state: Arc<Elicitation>,
    addr: SocketAddr,
}

impl std::fmt::Debug for Service {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Service")
            .field("addr", &self.addr)
            .finish_non_exhaustive()
    }
}

impl Service {
    pub fn bind(addr: &str, state: Elicitation) -> Result<Self> {
        let server = Server::http(addr).map_err(|e| Error::Bind {
            addr: addr.to_owned(),
            message: e.to_string(),
        })?;
        let addr = server.server_addr().to_ip().ok_or_else(|| Error::Bind {
            addr: addr.to_owned(),
            message: "not an IP listener".to_owned(),
        })?;
        Ok(Service {
            server: Arc::new(server),
            state: Arc::new(state),
            addr,
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Starts `workers` request threads.
    pub fn spawn(self, workers: usize) -> RunningService {
        let stop = Arc::new(AtomicBool::new(false));
        let threads = (0..workers.max(1))
            .map(|_| {
                let server = Arc::clone(&self.server);
                let state = Arc::clone(&self.state);
                let stop = Arc::clone(&stop);
                std::thread::spawn(move || {
                    while !stop.load(Ordering::SeqCst) {
                        match server.recv() {
                            Ok(req) => respond(&state, req),
                            Err(_) => break,
                        }
                    }
                })
            })
            .collect();
        RunningService {
            server: self.server,
            addr: self.addr,
            stop,
            threads,
        }
    }

    /// Serves until the process is terminated.
    pub fn run(self, workers: usize) {
        for t in self.spawn(workers).threads {
            let _ = t.join();
        }
    }
}

fn respond(state: &Elicitation, mut req: Request) {
    let mut body = Vec::new();
    let read = req.as_reader().take(MAX_BODY).read_to_end(&mut body);
    let (status, ctype, bytes) = match read {
        Ok(_) => state.handle(req.method(), req.url(), &body),
        Err(_) => error(400, "unreadable request body"),
    };
    let header = Header::from_bytes("Content-Type", ctype).expect("static header is valid");
    let _ = req.respond(
        Response::from_data(bytes)
            .with_status_code(status)
            .with_header(header),
    );
}

/// Handle to a service running on background threads.
pub struct RunningService {
    server: Arc<Server>,
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    threads: Vec<JoinHandle<()>>,
}

impl std::fmt::Debug for RunningService {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RunningService")
            .field("addr", &self.addr)
            .finish_non_exhaustive()
    }
}

impl RunningService {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Stops accepting requests and joins the workers.
    pub fn shutdown(self) {
        self.stop.store(true, Ordering::SeqCst);
        for _ in &self.threads {
            self.server.unblock();
        }
        for t in self.threads {
            let _ = t.join();
        }
    }
}
