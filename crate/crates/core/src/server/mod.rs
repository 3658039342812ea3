//! TCP controller owning the workspace pool.
//!
//! One listener thread accepts connections; each connection is served by its
//! own thread that handles requests in order. Long-running work (repeats,
//! scheduled reporter runs) is queued per workspace and executed by a fixed
//! pool of worker threads in bounded time slices, so every queued workspace
//! makes progress regardless of pool size.

pub mod protocol;
mod slot;

use std::collections::{BTreeMap, HashMap};
use std::io::{BufRead, BufReader, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};

use crossbeam_channel::{Receiver, Sender};
use log::{debug, info, warn};
use serde_json::{json, Value};

use crate::cmdlang;
use crate::engine::ParamKind;

use protocol::Args;
pub use protocol::{Request, Response, ServerError};
pub use slot::{RunStatus, ScheduleSpec};
use slot::{ScheduledRun, Slot, Task};

pub const DEFAULT_PORT: u16 = 8923;
pub const DEFAULT_MAX_WORKSPACES: usize = 256;

/// Units of work a worker runs on one workspace before yielding it.
const TIME_SLICE: usize = 32;

#[derive(Clone, Debug)]
pub struct ServerConfig {
    pub host: String,
    pub port: u16,
    pub workers: usize,
    pub max_workspaces: usize,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            host: "127.0.0.1".to_string(),
            port: DEFAULT_PORT,
            workers: default_workers(),
            max_workspaces: DEFAULT_MAX_WORKSPACES,
        }
    }
}

pub fn default_workers() -> usize {
    thread::available_parallelism().map_or(1, |n| n.get())
}

#[derive(Default)]
struct Registry {
    slots: BTreeMap<u64, Arc<Slot>>,
    next_id: u64,
}

struct Shared {
    addr: SocketAddr,
    registry: Mutex<Registry>,
    max_workspaces: usize,
    ready: Mutex<Option<Sender<Arc<Slot>>>>,
    shutting_down: AtomicBool,
    connections: Mutex<HashMap<u64, TcpStream>>,
    next_conn: AtomicU64,
}

impl Shared {
    fn slot(&self, id: u64) -> Result<Arc<Slot>, ServerError> {
        self.registry
            .lock()
            .unwrap()
            .slots
            .get(&id)
            .cloned()
            .ok_or(ServerError::NotFound(id))
    }

    fn submit(&self, slot: Arc<Slot>) {
        if let Some(tx) = self.ready.lock().unwrap().as_ref() {
            let _ = tx.send(slot);
        }
    }

    /// Queues `task` behind any pending work on `slot`.
    fn enqueue(&self, slot: &Arc<Slot>, task: Task) {
        let mut st = slot.lock();
        st.queue.push_back(task);
        if !st.on_worker {
            st.on_worker = true;
            drop(st);
            self.submit(slot.clone());
        }
    }

    fn begin_shutdown(&self) {
        if self.shutting_down.swap(true, Ordering::SeqCst) {
            return;
        }
        info!("shutting down");
        let slots: Vec<_> = self.registry.lock().unwrap().slots.values().cloned().collect();
        for slot in slots {
            slot.lock().abort();
        }
        self.ready.lock().unwrap().take();
        // Wake the accept loop.
        let _ = TcpStream::connect(self.addr);
    }
}

/// Cloneable handle that can stop a running server from another thread.
#[derive(Clone)]
pub struct ShutdownHandle(Arc<Shared>);

impl ShutdownHandle {
    pub fn shutdown(&self) {
        self.0.begin_shutdown();
    }
}

pub struct Server {
    listener: TcpListener,
    shared: Arc<Shared>,
    workers: Vec<JoinHandle<()>>,
}

impl Server {
    pub fn bind(config: &ServerConfig) -> std::io::Result<Server> {
        let listener = TcpListener::bind((config.host.as_str(), config.port))?;
        let addr = listener.local_addr()?;
        let (tx, rx) = crossbeam_channel::unbounded();
        let shared = Arc::new(Shared {
            addr,
            registry: Mutex::new(Registry::default()),
            max_workspaces: config.max_workspaces,
            ready: Mutex::new(Some(tx)),
            shutting_down: AtomicBool::new(false),
            connections: Mutex::new(HashMap::new()),
            next_conn: AtomicU64::new(0),
        });
        let workers = (0..config.workers.max(1))
            .map(|i| {
                let rx = rx.clone();
                let shared = shared.clone();
                thread::Builder::new()
                    .name(format!("simherd-worker-{i}"))
                    .spawn(move || worker_loop(rx, shared))
                    .expect("spawn worker thread")
            })
            .collect();
        Ok(Server {
            listener,
            shared,
            workers,
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.shared.addr
    }

    pub fn shutdown_handle(&self) -> ShutdownHandle {
        ShutdownHandle(self.shared.clone())
    }

    /// Serves until a `shutdown` request or [`ShutdownHandle::shutdown`].
    pub fn run(self) {
        info!("listening on {}", self.shared.addr);
        for stream in self.listener.incoming() {
            if self.shared.shutting_down.load(Ordering::SeqCst) {
                break;
            }
            match stream {
                Ok(stream) => {
                    let shared = self.shared.clone();
                    let conn_id = shared.next_conn.fetch_add(1, Ordering::SeqCst);
                    if let Ok(clone) = stream.try_clone() {
                        shared.connections.lock().unwrap().insert(conn_id, clone);
                    }
                    thread::spawn(move || {
                        if let Err(e) = serve_connection(stream, &shared) {
                            debug!("connection {conn_id} closed: {e}");
                        }
                        shared.connections.lock().unwrap().remove(&conn_id);
                    });
                }
                Err(e) => warn!("accept failed: {e}"),
            }
        }
        drop(self.listener);
        self.shared.begin_shutdown();
        for conn in self.shared.connections.lock().unwrap().drain() {
            let _ = conn.1.shutdown(Shutdown::Both);
        }
        for w in self.workers {
            let _ = w.join();
        }
        info!("stopped");
    }

    /// Runs the server on a background thread.
    pub fn spawn(self) -> RunningServer {
        let addr = self.local_addr();
        let handle = self.shutdown_handle();
        let thread = thread::spawn(move || self.run());
        RunningServer {
            addr,
            handle,
            thread: Some(thread),
        }
    }
}

pub struct RunningServer {
    pub addr: SocketAddr,
    handle: ShutdownHandle,
    thread: Option<JoinHandle<()>>,
}

impl RunningServer {
    pub fn shutdown_handle(&self) -> ShutdownHandle {
        self.handle.clone()
    }

    /// Requests shutdown and waits for the server thread to exit.
    pub fn stop(mut self) {
        self.handle.shutdown();
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }

    /// Waits for the server to exit on its own.
    pub fn join(mut self) {
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

impl Drop for RunningServer {
    fn drop(&mut self) {
        if let Some(t) = self.thread.take() {
            self.handle.shutdown();
            let _ = t.join();
        }
    }
}

fn worker_loop(rx: Receiver<Arc<Slot>>, shared: Arc<Shared>) {
    while let Ok(slot) = rx.recv() {
        let mut finished = false;
        for _ in 0..TIME_SLICE {
            let mut st = slot.lock();
            if st.deleted || st.queue.is_empty() {
                st.on_worker = false;
                finished = true;
                break;
            }
            if st.run_unit() {
                st.queue.pop_front();
            }
        }
        if finished {
            continue;
        }
        let mut st = slot.lock();
        if st.deleted || st.queue.is_empty() || shared.shutting_down.load(Ordering::SeqCst) {
            st.on_worker = false;
        } else {
            drop(st);
            shared.submit(slot.clone());
        }
    }
}

fn serve_connection(stream: TcpStream, shared: &Arc<Shared>) -> std::io::Result<()> {
    stream.set_nodelay(true)?;
    let mut writer = stream.try_clone()?;
    let reader = BufReader::new(stream);
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (response, stop) = handle_line(&line, shared);
        let mut out = response.to_line();
        out.push('\n');
        writer.write_all(out.as_bytes())?;
        if stop {
            shared.begin_shutdown();
            break;
        }
    }
    Ok(())
}

/// Handles one request line. The flag is set for a `shutdown` request.
fn handle_line(line: &str, shared: &Shared) -> (Response, bool) {
    let value: Value = match serde_json::from_str(line) {
        Ok(v) => v,
        Err(e) => {
            return (
                Response::err(None, &ServerError::BadRequest(format!("invalid JSON: {e}"))),
                false,
            )
        }
    };
    let id = value.get("id").and_then(Value::as_i64);
    let request: Request = match serde_json::from_value(value) {
        Ok(r) => r,
        Err(e) => {
            return (
                Response::err(id, &ServerError::BadRequest(format!("malformed request: {e}"))),
                false,
            )
        }
    };
    if shared.shutting_down.load(Ordering::SeqCst) {
        return (Response::err(id, &ServerError::ShuttingDown), false);
    }
    let stop = request.op == "shutdown";
    let response = match dispatch(&request.op, &Args(&request.args), shared) {
        Ok(v) => Response::ok(id, v),
        Err(e) => Response::err(id, &e),
    };
    (response, stop)
}

fn dispatch(op: &str, args: &Args, shared: &Shared) -> Result<Value, ServerError> {
    match op {
        "new_workspace" => {
            let mut reg = shared.registry.lock().unwrap();
            if reg.slots.len() >= shared.max_workspaces {
                return Err(ServerError::Capacity(shared.max_workspaces));
            }
            let id = reg.next_id;
            reg.next_id += 1;
            reg.slots.insert(id, Arc::new(Slot::new(id)));
            Ok(json!(id))
        }
        "delete_workspace" => {
            let id = args.workspace()?;
            let slot = shared
                .registry
                .lock()
                .unwrap()
                .slots
                .remove(&id)
                .ok_or(ServerError::NotFound(id))?;
            retire(&slot);
            Ok(Value::Null)
        }
        "delete_all_workspaces" => {
            let slots = std::mem::take(&mut shared.registry.lock().unwrap().slots);
            slots.values().for_each(|s| retire(s));
            Ok(Value::Null)
        }
        "list_workspaces" => {
            let ids: Vec<u64> = shared.registry.lock().unwrap().slots.keys().copied().collect();
            Ok(json!(ids))
        }
        "open_model" => {
            let slot = shared.slot(args.workspace()?)?;
            let path = args.string("path")?;
            let mut st = slot.lock();
            st.abort();
            st.workspace
                .open_model(&path)
                .map_err(|e| ServerError::Runtime(e.to_string()))?;
            Ok(Value::Null)
        }
        "close_model" => {
            let slot = shared.slot(args.workspace()?)?;
            let mut st = slot.lock();
            st.abort();
            st.workspace.close_model();
            Ok(Value::Null)
        }
        "command" => {
            let slot = shared.slot(args.workspace()?)?;
            let text = args.string("text")?;
            let program = cmdlang::parse_program(&text).map_err(|e| ServerError::Syntax(e.to_string()))?;
            command(shared, &slot, program)
        }
        "report" => {
            let slot = shared.slot(args.workspace()?)?;
            let reporter = cmdlang::parse_reporter(&args.string("text")?)
                .map_err(|e| ServerError::Syntax(e.to_string()))?;
            let st = slot.lock();
            cmdlang::evaluate(&st.workspace, &reporter)
                .map(Value::String)
                .map_err(|e| ServerError::Runtime(e.to_string()))
        }
        "set_params_random" => {
            let slot = shared.slot(args.workspace()?)?;
            let mut st = slot.lock();
            if st.workspace.model().is_none() {
                return Err(ServerError::Runtime("no model is open".into()));
            }
            if st.is_idle() {
                st.workspace
                    .set_params_random()
                    .map_err(|e| ServerError::Runtime(e.to_string()))?;
            } else {
                drop(st);
                shared.enqueue(&slot, Task::SetParamsRandom);
            }
            Ok(Value::Null)
        }
        "get_param_names" => {
            let slot = shared.slot(args.workspace()?)?;
            let st = slot.lock();
            let specs = st
                .workspace
                .param_specs()
                .map_err(|e| ServerError::Runtime(e.to_string()))?;
            Ok(json!(specs.iter().map(|s| s.name.as_str()).collect::<Vec<_>>()))
        }
        "get_param_ranges" => {
            let slot = shared.slot(args.workspace()?)?;
            let st = slot.lock();
            let specs = st
                .workspace
                .param_specs()
                .map_err(|e| ServerError::Runtime(e.to_string()))?;
            let ranges: Vec<Value> = specs
                .iter()
                .map(|s| match &s.kind {
                    ParamKind::Numeric { min, step, max } => json!([min, step, max]),
                    ParamKind::Choice { options } => json!(options),
                    ParamKind::Boolean => json!([false, true]),
                })
                .collect();
            Ok(Value::Array(ranges))
        }
        "schedule_reporters_and_run" => {
            let slot = shared.slot(args.workspace()?)?;
            let spec = schedule_spec(args)?;
            let run = ScheduledRun::new(&spec).map_err(|e| ServerError::Syntax(e.to_string()))?;
            {
                let mut st = slot.lock();
                if st.workspace.model().is_none() {
                    return Err(ServerError::Runtime("no model is open".into()));
                }
                if st.scheduled.as_ref().is_some_and(|r| r.is_running()) {
                    return Err(ServerError::Busy(slot.id));
                }
                st.scheduled = Some(run);
            }
            shared.enqueue(&slot, Task::Scheduled);
            Ok(Value::Null)
        }
        "get_scheduled_reporter_results" => {
            let slot = shared.slot(args.workspace()?)?;
            let mut st = slot.lock();
            match st.scheduled.as_mut() {
                None => Ok(json!([])),
                Some(run) => run.drain().map(|rows| json!(rows)).map_err(ServerError::Runtime),
            }
        }
        "shutdown" => Ok(Value::Null),
        other => Err(ServerError::UnknownOp(other.to_string())),
    }
}

fn schedule_spec(args: &Args) -> Result<ScheduleSpec, ServerError> {
    let start = args.int_or("start_at_tick", 0)?;
    let interval = args.int_or("interval_ticks", 1)?;
    let stop = args.int_or("stop_at_tick", -1)?;
    if start < 0 {
        return Err(ServerError::BadRequest("start_at_tick must be >= 0".into()));
    }
    if interval < 1 {
        return Err(ServerError::BadRequest("interval_ticks must be >= 1".into()));
    }
    Ok(ScheduleSpec {
        reporters: args.strings("reporters")?,
        start_at_tick: start as u64,
        interval_ticks: interval as u64,
        stop_at_tick: (stop >= 0).then_some(stop as u64),
        go_command: args.string_or("go_command", "go")?,
    })
}

fn command(shared: &Shared, slot: &Arc<Slot>, program: Vec<cmdlang::Command>) -> Result<Value, ServerError> {
    let mut st = slot.lock();
    // A bare `stop` halts in-flight work at the next tick boundary.
    if program == [cmdlang::Command::Stop] {
        st.abort();
        return Ok(Value::Null);
    }
    let long_running = program.iter().any(cmdlang::Command::is_long_running);
    if st.is_idle() && !long_running {
        return cmdlang::execute_program(&mut st.workspace, &program)
            .map(|_| Value::Null)
            .map_err(|e| ServerError::Runtime(e.to_string()));
    }
    drop(st);
    shared.enqueue(slot, Task::program(program));
    Ok(Value::Null)
}

fn retire(slot: &Slot) {
    let mut st = slot.lock();
    st.deleted = true;
    st.abort();
}

#[cfg(test)]
mod tests {
    use super::*;

    fn shared() -> (Arc<Shared>, Vec<JoinHandle<()>>) {
        let server = Server::bind(&ServerConfig {
            port: 0,
            workers: 2,
            max_workspaces: 4,
            ..ServerConfig::default()
        })
        .unwrap();
        (server.shared.clone(), server.workers)
    }

    fn call(shared: &Shared, line: &str) -> String {
        handle_line(line, shared).0.to_line()
    }

    #[test]
    fn ids_are_never_reused() {
        let (s, _w) = shared();
        assert_eq!(
            call(&s, r#"{"id":1,"op":"new_workspace"}"#),
            r#"{"id":1,"ok":true,"result":0}"#
        );
        call(&s, r#"{"id":2,"op":"new_workspace","args":{}}"#);
        call(&s, r#"{"id":3,"op":"delete_all_workspaces","args":{}}"#);
        assert_eq!(
            call(&s, r#"{"id":4,"op":"new_workspace","args":{}}"#),
            r#"{"id":4,"ok":true,"result":2}"#
        );
        s.begin_shutdown();
    }

    #[test]
    fn capacity_is_enforced() {
        let (s, _w) = shared();
        for i in 0..4 {
            call(&s, &format!(r#"{{"id":{i},"op":"new_workspace"}}"#));
        }
        assert_eq!(
            call(&s, r#"{"id":9,"op":"new_workspace"}"#),
            r#"{"id":9,"ok":false,"error":"capacity: workspace limit of 4 reached"}"#
        );
        s.begin_shutdown();
    }

    #[test]
    fn delete_during_run_stops_it_early() {
        let (s, _w) = shared();
        call(&s, r#"{"id":1,"op":"new_workspace"}"#);
        call(
            &s,
            r#"{"id":2,"op":"open_model","args":{"workspace":0,"path":"Fire.nlogo"}}"#,
        );
        call(
            &s,
            r#"{"id":3,"op":"command","args":{"workspace":0,"text":"set density 99 setup"}}"#,
        );
        call(
            &s,
            r#"{"id":4,"op":"schedule_reporters_and_run","args":{"workspace":0,"reporters":["ticks"],"stop_at_tick":100000}}"#,
        );
        let slot = s.slot(0).unwrap();
        call(&s, r#"{"id":5,"op":"delete_workspace","args":{"workspace":0}}"#);
        let st = slot.lock();
        assert!(st.deleted);
        assert_ne!(st.scheduled.as_ref().unwrap().status, RunStatus::Running);
        drop(st);
        assert_eq!(
            call(
                &s,
                r#"{"id":6,"op":"report","args":{"workspace":0,"text":"ticks"}}"#
            ),
            r#"{"id":6,"ok":false,"error":"not-found: workspace 0 does not exist"}"#
        );
        s.begin_shutdown();
    }

    #[test]
    fn malformed_requests() {
        let (s, _w) = shared();
        assert!(call(&s, "not json").starts_with(r#"{"id":null,"ok":false,"error":"bad-request"#));
        assert!(call(&s, r#"{"id":7}"#).starts_with(r#"{"id":7,"ok":false,"error":"bad-request"#));
        assert_eq!(
            call(&s, r#"{"id":8,"op":"fly"}"#),
            r#"{"id":8,"ok":false,"error":"unknown-op: fly"}"#
        );
        s.begin_shutdown();
    }
}
