//! Blocking client for the simherd server.
//!
//! ```no_run
//! use simherd::client::ServerSession;
//!
//! let session = ServerSession::start("addr:127.0.0.1:8923").unwrap();
//! let ws = session.new_workspace().unwrap();
//! ws.open_model("Fire.nlogo").unwrap();
//! ws.command("set density 60 setup repeat 100 [go]").unwrap();
//! println!("{}", ws.report("burned-trees").unwrap());
//! session.stop().unwrap();
//! ```

use std::collections::BTreeSet;
use std::io::{BufRead, BufReader, Write};
use std::net::TcpStream;
use std::path::PathBuf;
use std::process::{Child, Command, Stdio};
use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::Duration;

use serde_json::{json, Value};
use thiserror::Error;

use crate::server::{protocol::split_error, Request, Response};

pub const ADDR_ENV: &str = "SIMHERD_SERVER_ADDR";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClientError {
    #[error("disconnected from server")]
    Disconnected,
    #[error("cannot reach server at {addr}: {reason}")]
    Connect { addr: String, reason: String },
    #[error("cannot start server binary {path}: {reason}")]
    Spawn { path: String, reason: String },
    #[error("{code}: {message}")]
    Server { code: String, message: String },
    #[error("protocol violation: {0}")]
    Protocol(String),
}

impl ClientError {
    /// The server's error code, for errors that came back in an envelope.
    pub fn code(&self) -> Option<&str> {
        match self {
            ClientError::Server { code, .. } => Some(code),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, ClientError>;

/// Where to find a server.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Locator {
    /// `addr:host:port`, an already running server.
    Address(String),
    /// Path to a `simherd` binary to launch with `serve --port 0`.
    Binary(PathBuf),
}

impl Locator {
    pub fn parse(s: &str) -> Locator {
        match s.strip_prefix("addr:") {
            Some(addr) => Locator::Address(addr.to_string()),
            None => Locator::Binary(PathBuf::from(s)),
        }
    }

    /// `SIMHERD_SERVER_ADDR` wins over the given locator when set.
    pub fn resolve(s: &str) -> Locator {
        match std::env::var(ADDR_ENV) {
            Ok(addr) if !addr.trim().is_empty() => {
                Locator::Address(addr.trim().trim_start_matches("addr:").to_string())
            }
            _ => Locator::parse(s),
        }
    }
}

struct Connection {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

struct Inner {
    addr: String,
    conn: Mutex<Option<Connection>>,
    next_id: AtomicI64,
    child: Mutex<Option<Child>>,
    created: Mutex<BTreeSet<u64>>,
    transcript: Mutex<Option<Vec<String>>>,
}

impl Drop for Inner {
    fn drop(&mut self) {
        if let Some(mut child) = self.child.get_mut().ok().and_then(Option::take) {
            let _ = child.kill();
            let _ = child.wait();
        }
    }
}

/// A connection to one server. Cloning shares the connection.
#[derive(Clone)]
pub struct ServerSession(Arc<Inner>);

impl std::fmt::Debug for ServerSession {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ServerSession")
            .field("addr", &self.0.addr)
            .field("owns_server", &self.owns_server())
            .finish()
    }
}

impl ServerSession {
    /// Connects to, or launches, the server named by `locator`
    /// (see [`Locator::resolve`]).
    pub fn start(locator: &str) -> Result<ServerSession> {
        match Locator::resolve(locator) {
            Locator::Address(addr) => Self::connect(&addr),
            Locator::Binary(path) => Self::spawn(&path),
        }
    }

    pub fn connect(addr: &str) -> Result<ServerSession> {
        Self::open(addr, None)
    }

    pub fn spawn(path: &std::path::Path) -> Result<ServerSession> {
        let spawn_err = |reason: String| ClientError::Spawn {
            path: path.display().to_string(),
            reason,
        };
        let mut child = Command::new(path)
            .args(["serve", "--port", "0"])
            .stdin(Stdio::null())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| spawn_err(e.to_string()))?;
        let stdout = child.stdout.take().expect("piped stdout");
        let mut line = String::new();
        let read = BufReader::new(stdout).read_line(&mut line);
        let addr = match (read, line.trim().strip_prefix("listening ")) {
            (Ok(_), Some(addr)) => addr.to_string(),
            _ => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(spawn_err(format!(
                    "expected 'listening <addr>' on stdout, got {:?}",
                    line.trim()
                )));
            }
        };
        Self::open(&addr, Some(child))
    }

    fn open(addr: &str, child: Option<Child>) -> Result<ServerSession> {
        let stream = TcpStream::connect(addr).map_err(|e| ClientError::Connect {
            addr: addr.to_string(),
            reason: e.to_string(),
        })?;
        let _ = stream.set_nodelay(true);
        let writer = stream.try_clone().map_err(|_| ClientError::Disconnected)?;
        Ok(ServerSession(Arc::new(Inner {
            addr: addr.to_string(),
            conn: Mutex::new(Some(Connection {
                reader: BufReader::new(stream),
                writer,
            })),
            next_id: AtomicI64::new(1),
            child: Mutex::new(child),
            created: Mutex::new(BTreeSet::new()),
            transcript: Mutex::new(None),
        })))
    }

    pub fn addr(&self) -> &str {
        &self.0.addr
    }

    /// True when this session launched the server process.
    pub fn owns_server(&self) -> bool {
        lock(&self.0.child).is_some()
    }

    /// Starts recording every request and response line.
    pub fn record_transcript(&self) {
        *lock(&self.0.transcript) = Some(Vec::new());
    }

    pub fn transcript(&self) -> Vec<String> {
        lock(&self.0.transcript).clone().unwrap_or_default()
    }

    /// Sends one request and waits for its response.
    pub fn call(&self, op: &str, args: Value) -> Result<Value> {
        let mut guard = lock(&self.0.conn);
        let conn = guard.as_mut().ok_or(ClientError::Disconnected)?;
        let id = self.0.next_id.fetch_add(1, Ordering::SeqCst);
        let line = Request::new(id, op, args).to_line();
        let mut reply = String::new();
        let io = conn
            .writer
            .write_all(format!("{line}\n").as_bytes())
            .and_then(|_| conn.reader.read_line(&mut reply));
        if !matches!(io, Ok(n) if n > 0) {
            *guard = None;
            return Err(ClientError::Disconnected);
        }
        drop(guard);
        let reply = reply.trim_end();
        if let Some(t) = lock(&self.0.transcript).as_mut() {
            t.push(line);
            t.push(reply.to_string());
        }
        let response: Response = serde_json::from_str(reply)
            .map_err(|e| ClientError::Protocol(format!("bad response {reply:?}: {e}")))?;
        if response.id != Some(id) {
            return Err(ClientError::Protocol(format!(
                "response id {:?} does not match request id {id}",
                response.id
            )));
        }
        if response.ok {
            Ok(response.result.unwrap_or(Value::Null))
        } else {
            let error = response.error.unwrap_or_default();
            let (code, message) = split_error(&error);
            Err(ClientError::Server {
                code: code.to_string(),
                message: message.to_string(),
            })
        }
    }

    pub fn new_workspace(&self) -> Result<RemoteWorkspace> {
        let id = self
            .call("new_workspace", json!({}))?
            .as_u64()
            .ok_or_else(|| ClientError::Protocol("workspace id is not an integer".into()))?;
        lock(&self.0.created).insert(id);
        Ok(self.workspace(id))
    }

    /// Handle for an existing workspace id, without contacting the server.
    pub fn workspace(&self, id: u64) -> RemoteWorkspace {
        RemoteWorkspace {
            session: self.clone(),
            id,
        }
    }

    /// Workspaces created through this session that have not been deleted.
    pub fn get_all(&self) -> Vec<RemoteWorkspace> {
        let ids: Vec<u64> = lock(&self.0.created).iter().copied().collect();
        ids.into_iter().map(|id| self.workspace(id)).collect()
    }

    /// Ids of every workspace on the server.
    pub fn list_workspaces(&self) -> Result<Vec<u64>> {
        serde_json::from_value(self.call("list_workspaces", json!({}))?)
            .map_err(|e| ClientError::Protocol(e.to_string()))
    }

    pub fn delete_all(&self) -> Result<()> {
        self.call("delete_all_workspaces", json!({}))?;
        lock(&self.0.created).clear();
        Ok(())
    }

    /// Shuts the server down if this session started it, otherwise just
    /// disconnects. Later calls fail with [`ClientError::Disconnected`].
    pub fn stop(&self) -> Result<()> {
        let child = lock(&self.0.child).take();
        let result = match child {
            Some(mut child) => {
                let sent = self.call("shutdown", json!({})).map(|_| ());
                if sent.is_err() {
                    let _ = child.kill();
                }
                wait_or_kill(&mut child, Duration::from_secs(5));
                sent
            }
            None => Ok(()),
        };
        lock(&self.0.conn).take();
        result
    }

    /// Asks the server to shut down even if this session did not start it.
    pub fn shutdown_server(&self) -> Result<()> {
        let result = self.call("shutdown", json!({})).map(|_| ());
        self.stop()?;
        result
    }
}

fn wait_or_kill(child: &mut Child, timeout: Duration) {
    let deadline = std::time::Instant::now() + timeout;
    while std::time::Instant::now() < deadline {
        if let Ok(Some(_)) = child.try_wait() {
            return;
        }
        std::thread::sleep(Duration::from_millis(10));
    }
    let _ = child.kill();
    let _ = child.wait();
}

fn lock<T>(m: &Mutex<T>) -> MutexGuard<'_, T> {
    m.lock().unwrap_or_else(|e| e.into_inner())
}

/// One workspace on the server. Reporter values come back as strings.
#[derive(Clone)]
pub struct RemoteWorkspace {
    session: ServerSession,
    pub id: u64,
}

impl std::fmt::Debug for RemoteWorkspace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RemoteWorkspace").field("id", &self.id).finish()
    }
}

impl RemoteWorkspace {
    fn call(&self, op: &str, mut args: Value) -> Result<Value> {
        args["workspace"] = json!(self.id);
        self.session.call(op, args)
    }

    pub fn open_model(&self, path: &str) -> Result<()> {
        self.call("open_model", json!({ "path": path })).map(drop)
    }

    pub fn close_model(&self) -> Result<()> {
        self.call("close_model", json!({})).map(drop)
    }

    /// Runs command text. Long-running commands return once queued.
    pub fn command(&self, text: &str) -> Result<()> {
        self.call("command", json!({ "text": text })).map(drop)
    }

    pub fn report(&self, text: &str) -> Result<String> {
        match self.call("report", json!({ "text": text }))? {
            Value::String(s) => Ok(s),
            other => Err(ClientError::Protocol(format!("report returned {other}"))),
        }
    }

    pub fn set_params_random(&self) -> Result<()> {
        self.call("set_params_random", json!({})).map(drop)
    }

    pub fn get_param_names(&self) -> Result<Vec<String>> {
        serde_json::from_value(self.call("get_param_names", json!({}))?)
            .map_err(|e| ClientError::Protocol(e.to_string()))
    }

    /// `[min, step, max]` for numeric parameters; other parameters list
    /// their allowed values.
    pub fn get_param_ranges(&self) -> Result<Vec<Vec<Value>>> {
        serde_json::from_value(self.call("get_param_ranges", json!({}))?)
            .map_err(|e| ClientError::Protocol(e.to_string()))
    }

    /// A negative `stop_at_tick` runs until the model stops itself.
    pub fn schedule_reporters_and_run(
        &self,
        reporters: &[&str],
        start_at_tick: i64,
        interval_ticks: i64,
        stop_at_tick: i64,
        go_command: &str,
    ) -> Result<()> {
        self.call(
            "schedule_reporters_and_run",
            json!({
                "reporters": reporters,
                "start_at_tick": start_at_tick,
                "interval_ticks": interval_ticks,
                "stop_at_tick": stop_at_tick,
                "go_command": go_command,
            }),
        )
        .map(drop)
    }

    /// Empty until the scheduled run ends; the full buffer exactly once after.
    pub fn get_scheduled_reporter_results(&self) -> Result<Vec<Vec<String>>> {
        serde_json::from_value(self.call("get_scheduled_reporter_results", json!({}))?)
            .map_err(|e| ClientError::Protocol(e.to_string()))
    }

    pub fn delete(&self) -> Result<()> {
        self.call("delete_workspace", json!({}))?;
        lock(&self.session.0.created).remove(&self.id);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn locator_forms() {
        assert_eq!(
            Locator::parse("addr:127.0.0.1:9"),
            Locator::Address("127.0.0.1:9".into())
        );
        assert_eq!(
            Locator::parse("/usr/bin/simherd"),
            Locator::Binary("/usr/bin/simherd".into())
        );
    }

    #[test]
    fn error_display_keeps_code() {
        let e = ClientError::Server {
            code: "not-found".into(),
            message: "workspace 3 does not exist".into(),
        };
        assert_eq!(e.to_string(), "not-found: workspace 3 does not exist");
        assert_eq!(e.code(), Some("not-found"));
    }
}
