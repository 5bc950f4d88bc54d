//! Read-only HTTP endpoints for viewers: `/meta` (header JSON), `/vdi`
//! (exact file bytes) and static assets under `/`.

use std::io::Write;
use std::path::{Component, Path, PathBuf};
use std::sync::Arc;

use tiny_http::{Header, Method, Response, Server};
use vdi::vdi::format::{decode_header, decode_vdi};

use crate::args::ServeArgs;
use crate::commands::meta_json;
use crate::{io_err, CliError};

pub struct ServeState {
    pub vdi_bytes: Vec<u8>,
    pub meta: serde_json::Value,
    pub assets: Option<PathBuf>,
}

impl ServeState {
    /// Loads and fully validates the VDI once; requests only read it.
    pub fn load(vdi: &Path, assets: Option<PathBuf>) -> Result<Self, CliError> {
        let bytes = std::fs::read(vdi).map_err(io_err(vdi))?;
        decode_vdi(&bytes)?;
        let meta = meta_json(&decode_header(&bytes)?, bytes.len());
        Ok(Self { vdi_bytes: bytes, meta, assets })
    }
}

pub struct Reply {
    pub status: u16,
    pub content_type: &'static str,
    pub body: Vec<u8>,
}

fn content_type(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()) {
        Some("html") => "text/html; charset=utf-8",
        Some("js") => "text/javascript",
        Some("wasm") => "application/wasm",
        Some("css") => "text/css",
        Some("json") => "application/json",
        Some("png") => "image/png",
        _ => "application/octet-stream",
    }
}

fn not_found() -> Reply {
    Reply { status: 404, content_type: "text/plain", body: b"not found\n".to_vec() }
}

/// Maps a request to a reply without touching the network.
pub fn route(state: &ServeState, method: &Method, url: &str) -> Reply {
    if *method != Method::Get {
        return Reply { status: 405, content_type: "text/plain", body: b"method not allowed\n".to_vec() };
    }
    let path = url.split(['?', '#']).next().unwrap_or("");
    match path {
        "/meta" => Reply {
            status: 200,
            content_type: "application/json",
            body: serde_json::to_vec(&state.meta).expect("meta serializes"),
        },
        "/vdi" => Reply { status: 200, content_type: "application/octet-stream", body: state.vdi_bytes.clone() },
        _ => {
            let Some(root) = &state.assets else {
                return not_found();
            };
            let rel = Path::new(path.trim_start_matches('/'));
            if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
                return not_found();
            }
            let file = if rel.as_os_str().is_empty() { root.join("index.html") } else { root.join(rel) };
            match std::fs::read(&file) {
                Ok(body) if file.is_file() => Reply { status: 200, content_type: content_type(&file), body },
                _ => not_found(),
            }
        }
    }
}

pub fn bind(host: &str, port: u16) -> Result<Server, CliError> {
    let addr = format!("{host}:{port}");
    Server::http(&addr).map_err(|e| CliError::Bind { addr, reason: e.to_string() })
}

/// Answers requests on `workers` threads until the server is dropped or unblocked.
pub fn run(server: Arc<Server>, state: Arc<ServeState>, workers: usize) {
    let handles: Vec<_> = (0..workers.max(1))
        .map(|_| {
            let (server, state) = (Arc::clone(&server), Arc::clone(&state));
            std::thread::spawn(move || {
                for req in server.incoming_requests() {
                    let reply = route(&state, req.method(), req.url());
                    log::info!("{} {} -> {}", req.method(), req.url(), reply.status);
                    let header = Header::from_bytes("Content-Type", reply.content_type).expect("static header");
                    let resp = Response::from_data(reply.body).with_status_code(reply.status).with_header(header);
                    if let Err(e) = req.respond(resp) {
                        log::warn!("response failed: {e}");
                    }
                }
            })
        })
        .collect();
    for h in handles {
        let _ = h.join();
    }
}

pub fn serve(a: &ServeArgs) -> Result<serde_json::Value, CliError> {
    let state = Arc::new(ServeState::load(&a.vdi, a.assets.clone())?);
    let server = Arc::new(bind(&a.host, a.port)?);
    let addr = server.server_addr().to_ip().map(|s| s.to_string()).unwrap_or_else(|| format!("{}:{}", a.host, a.port));
    let mut stdout = std::io::stdout();
    let _ = writeln!(stdout, "{}", serde_json::json!({ "listening": format!("http://{addr}") }));
    let _ = stdout.flush();
    run(server, state, a.workers);
    Ok(serde_json::json!({ "stopped": addr }))
}
