//! Shared test support: fixture loading and a loopback HTTP stub.
#![allow(dead_code)]

pub mod gen;

use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;

pub const ACTIVITY_RULES: &str = include_str!("../../rules/activity_report.rules");

pub fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn rules_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("rules/activity_report.rules")
}

/// Minimal HTTP/1.1 server: paths under `/dead` answer 404, everything
/// else 200. Each connection serves one request.
pub struct StubServer {
    pub addr: SocketAddr,
    pub hits: Arc<AtomicUsize>,
}

impl StubServer {
    pub fn start() -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();
        let hits = Arc::new(AtomicUsize::new(0));
        let counter = hits.clone();
        thread::spawn(move || {
            for stream in listener.incoming() {
                let Ok(stream) = stream else { continue };
                let counter = counter.clone();
                thread::spawn(move || serve(stream, &counter));
            }
        });
        Self { addr, hits }
    }

    pub fn base(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn hits(&self) -> usize {
        self.hits.load(Ordering::SeqCst)
    }
}

fn serve(stream: TcpStream, hits: &AtomicUsize) {
    let mut reader = BufReader::new(stream.try_clone().unwrap());
    let mut request_line = String::new();
    if reader.read_line(&mut request_line).is_err() {
        return;
    }
    loop {
        let mut header = String::new();
        match reader.read_line(&mut header) {
            Ok(0) | Err(_) => break,
            Ok(_) if header == "\r\n" || header == "\n" => break,
            Ok(_) => {}
        }
    }
    hits.fetch_add(1, Ordering::SeqCst);
    let path = request_line.split_whitespace().nth(1).unwrap_or("/");
    let status = if path.starts_with("/dead") {
        "404 Not Found"
    } else {
        "200 OK"
    };
    let mut stream = stream;
    let _ = write!(
        stream,
        "HTTP/1.1 {status}\r\nContent-Length: 0\r\nConnection: close\r\n\r\n"
    );
    let _ = stream.flush();
}

/// A socket that accepts connections at the TCP level but never answers.
pub struct SilentServer {
    pub addr: SocketAddr,
    _listener: TcpListener,
}

impl SilentServer {
    pub fn start() -> Self {
        let listener = TcpListener::bind("127.0.0.1:0").unwrap();
        Self {
            addr: listener.local_addr().unwrap(),
            _listener: listener,
        }
    }
}

/// Copies a fixture directory into `dest`, substituting the stub base URL.
pub fn materialize(corpus: &str, dest: &Path, stub_base: &str) -> Vec<PathBuf> {
    std::fs::create_dir_all(dest).unwrap();
    let mut out = Vec::new();
    let mut entries: Vec<_> = std::fs::read_dir(fixture_dir().join(corpus))
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    entries.sort();
    for src in entries {
        let text = std::fs::read_to_string(&src).unwrap();
        let target = dest.join(src.file_name().unwrap());
        std::fs::write(&target, text.replace("{{STUB}}", stub_base)).unwrap();
        out.push(target);
    }
    out
}
