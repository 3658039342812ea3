//! C ABI for simherd.
//!
//! Every fallible function returns a [`SimherdStatus`]. On failure the
//! message is available from [`simherd_last_error`] on the same thread.
//! Strings handed out by the library must be released with
//! [`simherd_string_free`]; handles with their matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use simherd::analysis::{self, BaseSequence, SobolProblem};
use simherd::client::{ClientError, ServerSession};
use simherd::cmdlang;
use simherd::engine::Workspace;
use simherd::server::{RunningServer, Server, ServerConfig};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SimherdStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    InvalidArgument = 3,
    /// The command or reporter did not parse.
    Syntax = 4,
    /// The model rejected the operation.
    Runtime = 5,
    NotFound = 6,
    Busy = 7,
    Capacity = 8,
    Connect = 9,
    Disconnected = 10,
    Protocol = 11,
    Io = 12,
    Panic = 13,
}

/// An in-process server listening on a TCP port.
pub struct SimherdServer(RunningServer);

/// A client connection to a server.
pub struct SimherdSession(ServerSession);

/// A workspace driven directly in this process, without a server.
pub struct SimherdWorkspace(Workspace);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(SimherdStatus, String);

impl From<ClientError> for Failure {
    fn from(e: ClientError) -> Self {
        let status = match &e {
            ClientError::Disconnected => SimherdStatus::Disconnected,
            ClientError::Connect { .. } | ClientError::Spawn { .. } => SimherdStatus::Connect,
            ClientError::Protocol(_) => SimherdStatus::Protocol,
            ClientError::Server { code, .. } => match code.as_str() {
                "syntax" => SimherdStatus::Syntax,
                "runtime" => SimherdStatus::Runtime,
                "not-found" => SimherdStatus::NotFound,
                "busy" => SimherdStatus::Busy,
                "capacity" => SimherdStatus::Capacity,
                _ => SimherdStatus::InvalidArgument,
            },
        };
        Failure(status, e.to_string())
    }
}

impl From<analysis::AnalysisError> for Failure {
    fn from(e: analysis::AnalysisError) -> Self {
        Failure(SimherdStatus::InvalidArgument, e.to_string())
    }
}

impl From<cmdlang::ParseError> for Failure {
    fn from(e: cmdlang::ParseError) -> Self {
        Failure(SimherdStatus::Syntax, e.to_string())
    }
}

impl From<simherd::engine::EngineError> for Failure {
    fn from(e: simherd::engine::EngineError) -> Self {
        Failure(SimherdStatus::Runtime, e.to_string())
    }
}

type Res<T> = Result<T, Failure>;

fn set_last_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Res<()>) -> SimherdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SimherdStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic".into());
            SimherdStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, name: &str) -> Res<&'a str> {
    if p.is_null() {
        return Err(Failure(SimherdStatus::NullArgument, format!("{name} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(SimherdStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Res<&'a T> {
    p.as_ref()
        .ok_or_else(|| Failure(SimherdStatus::NullArgument, format!("{name} is null")))
}

unsafe fn out<'a, T>(p: *mut T) -> Res<&'a mut T> {
    p.as_mut()
        .ok_or_else(|| Failure(SimherdStatus::NullArgument, "output pointer is null".into()))
}

unsafe fn slice<'a>(p: *const f64, len: usize, name: &str) -> Res<&'a [f64]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure(SimherdStatus::NullArgument, format!("{name} is null")));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

fn give(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

fn json<T: serde::Serialize>(v: &T) -> Res<String> {
    serde_json::to_string(v).map_err(|e| Failure(SimherdStatus::Io, e.to_string()))
}

fn parse_json<T: serde::de::DeserializeOwned>(s: &str, name: &str) -> Res<T> {
    serde_json::from_str(s).map_err(|e| Failure(SimherdStatus::InvalidArgument, format!("{name}: {e}")))
}

/// Message of the last failure on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn simherd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn simherd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Starts a server on `host:port` (port 0 picks one) with `workers`
/// threads; 0 workers means one per core.
///
/// # Safety
/// `host` must be a NUL-terminated string or NULL for 127.0.0.1.
#[no_mangle]
pub unsafe extern "C" fn simherd_server_start(
    host: *const c_char,
    port: u16,
    workers: usize,
    out_server: *mut *mut SimherdServer,
) -> SimherdStatus {
    guard(|| {
        let out = out(out_server)?;
        let mut config = ServerConfig {
            port,
            ..ServerConfig::default()
        };
        if !host.is_null() {
            config.host = text(host, "host")?.to_string();
        }
        if workers > 0 {
            config.workers = workers;
        }
        let server = Server::bind(&config).map_err(|e| Failure(SimherdStatus::Io, e.to_string()))?;
        *out = Box::into_raw(Box::new(SimherdServer(server.spawn())));
        Ok(())
    })
}

/// Returns the bound address as `host:port`; free with [`simherd_string_free`].
///
/// # Safety
/// `server` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn simherd_server_addr(server: *const SimherdServer) -> *mut c_char {
    server
        .as_ref()
        .map_or(ptr::null_mut(), |s| give(s.0.addr.to_string()))
}

/// Stops the server, aborting active runs, and frees the handle.
///
/// # Safety
/// `server` must be a live handle or NULL; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn simherd_server_free(server: *mut SimherdServer) {
    if !server.is_null() {
        let server = Box::from_raw(server);
        let _ = catch_unwind(AssertUnwindSafe(|| server.0.stop()));
    }
}

/// Connects to `addr:host:port` or launches the binary at the given path.
///
/// # Safety
/// `locator` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn simherd_session_start(
    locator: *const c_char,
    out_session: *mut *mut SimherdSession,
) -> SimherdStatus {
    guard(|| {
        let out = out(out_session)?;
        let session = ServerSession::start(text(locator, "locator")?)?;
        *out = Box::into_raw(Box::new(SimherdSession(session)));
        Ok(())
    })
}

/// Disconnects (shutting down a server this session launched) and frees
/// the handle.
///
/// # Safety
/// `session` must be a live handle or NULL; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn simherd_session_free(session: *mut SimherdSession) {
    if !session.is_null() {
        let session = Box::from_raw(session);
        let _ = catch_unwind(AssertUnwindSafe(|| session.0.stop()));
    }
}

/// # Safety
/// `session` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn simherd_session_new_workspace(
    session: *const SimherdSession,
    out_id: *mut u64,
) -> SimherdStatus {
    guard(|| {
        let s = handle(session, "session")?;
        *out(out_id)? = s.0.new_workspace()?.id;
        Ok(())
    })
}

/// # Safety
/// `session` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn simherd_session_delete_workspace(
    session: *const SimherdSession,
    id: u64,
) -> SimherdStatus {
    guard(|| Ok(handle(session, "session")?.0.workspace(id).delete()?))
}

/// # Safety
/// `session` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn simherd_session_open_model(
    session: *const SimherdSession,
    id: u64,
    path: *const c_char,
) -> SimherdStatus {
    guard(|| {
        let s = handle(session, "session")?;
        Ok(s.0.workspace(id).open_model(text(path, "path")?)?)
    })
}

/// Queues a command program on the workspace.
///
/// # Safety
/// `session` must be a live handle and `command` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn simherd_session_command(
    session: *const SimherdSession,
    id: u64,
    command: *const c_char,
) -> SimherdStatus {
    guard(|| {
        let s = handle(session, "session")?;
        Ok(s.0.workspace(id).command(text(command, "command")?)?)
    })
}

/// # Safety
/// `session` must be a live handle and `reporter` a NUL-terminated string.
/// `out_value` receives a string to free with [`simherd_string_free`].
#[no_mangle]
pub unsafe extern "C" fn simherd_session_report(
    session: *const SimherdSession,
    id: u64,
    reporter: *const c_char,
    out_value: *mut *mut c_char,
) -> SimherdStatus {
    guard(|| {
        let s = handle(session, "session")?;
        let out = out(out_value)?;
        *out = give(s.0.workspace(id).report(text(reporter, "reporter")?)?);
        Ok(())
    })
}

/// Starts a scheduled run. `reporters_json` is a JSON array of strings;
/// a negative `stop_at_tick` runs until the model stops.
///
/// # Safety
/// `session` must be a live handle; string arguments NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn simherd_session_schedule(
    session: *const SimherdSession,
    id: u64,
    reporters_json: *const c_char,
    start_at_tick: i64,
    interval_ticks: i64,
    stop_at_tick: i64,
    go_command: *const c_char,
) -> SimherdStatus {
    guard(|| {
        let s = handle(session, "session")?;
        let reporters: Vec<String> = parse_json(text(reporters_json, "reporters_json")?, "reporters_json")?;
        let refs: Vec<&str> = reporters.iter().map(String::as_str).collect();
        let go = if go_command.is_null() {
            "go"
        } else {
            text(go_command, "go_command")?
        };
        Ok(s.0.workspace(id).schedule_reporters_and_run(
            &refs,
            start_at_tick,
            interval_ticks,
            stop_at_tick,
            go,
        )?)
    })
}

/// Writes the scheduled-run rows as a JSON array of string arrays. The
/// array is empty while the run is in progress and after the first drain.
///
/// # Safety
/// `session` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn simherd_session_results(
    session: *const SimherdSession,
    id: u64,
    out_json: *mut *mut c_char,
) -> SimherdStatus {
    guard(|| {
        let s = handle(session, "session")?;
        let out = out(out_json)?;
        *out = give(json(&s.0.workspace(id).get_scheduled_reporter_results()?)?);
        Ok(())
    })
}

/// Creates an in-process workspace whose random stream starts at `seed`.
///
/// # Safety
/// `out_workspace` must be writable.
#[no_mangle]
pub unsafe extern "C" fn simherd_workspace_new(
    seed: i64,
    out_workspace: *mut *mut SimherdWorkspace,
) -> SimherdStatus {
    guard(|| {
        *out(out_workspace)? = Box::into_raw(Box::new(SimherdWorkspace(Workspace::new(seed))));
        Ok(())
    })
}

/// # Safety
/// `ws` must be a live handle or NULL; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn simherd_workspace_free(ws: *mut SimherdWorkspace) {
    if !ws.is_null() {
        drop(Box::from_raw(ws));
    }
}

/// # Safety
/// `ws` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn simherd_workspace_open_model(
    ws: *mut SimherdWorkspace,
    path: *const c_char,
) -> SimherdStatus {
    guard(|| {
        let ws = out(ws)?;
        ws.0.open_model(text(path, "path")?)?;
        Ok(())
    })
}

/// Runs a command program to completion.
///
/// # Safety
/// `ws` must be a live handle and `command` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn simherd_workspace_command(
    ws: *mut SimherdWorkspace,
    command: *const c_char,
) -> SimherdStatus {
    guard(|| {
        let ws = out(ws)?;
        let program = cmdlang::parse_program(text(command, "command")?)?;
        cmdlang::execute_program(&mut ws.0, &program)?;
        Ok(())
    })
}

/// # Safety
/// `ws` must be a live handle and `reporter` a NUL-terminated string.
/// `out_value` receives a string to free with [`simherd_string_free`].
#[no_mangle]
pub unsafe extern "C" fn simherd_workspace_report(
    ws: *const SimherdWorkspace,
    reporter: *const c_char,
    out_value: *mut *mut c_char,
) -> SimherdStatus {
    guard(|| {
        let ws = handle(ws, "workspace")?;
        let out = out(out_value)?;
        let r = cmdlang::parse_reporter(text(reporter, "reporter")?)?;
        *out = give(cmdlang::evaluate(&ws.0, &r)?);
        Ok(())
    })
}

/// Mean two-species stability over `len` paired samples.
///
/// # Safety
/// `sheep` and `wolves` must each point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn simherd_stability_score(
    sheep: *const f64,
    wolves: *const f64,
    len: usize,
    out_score: *mut f64,
) -> SimherdStatus {
    guard(|| {
        let out = out(out_score)?;
        *out = analysis::stability_score(slice(sheep, len, "sheep")?, slice(wolves, len, "wolves")?)?;
        Ok(())
    })
}

/// Saltelli sample for `problem_json` (`num_vars`, `names`, `bounds`) with
/// `n` base points, as a JSON array of rows. `skip` < 0 uses the default
/// leading-point skip.
///
/// # Safety
/// `problem_json` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn simherd_saltelli_sample(
    problem_json: *const c_char,
    n: usize,
    skip: i64,
    out_json: *mut *mut c_char,
) -> SimherdStatus {
    guard(|| {
        let out = out(out_json)?;
        let problem: SobolProblem = parse_json(text(problem_json, "problem_json")?, "problem_json")?;
        let base = BaseSequence::Sobol {
            skip: u64::try_from(skip).ok(),
        };
        *out = give(json(&analysis::saltelli_sample(&problem, n, &base)?)?);
        Ok(())
    })
}

/// First and total order indices from model outputs laid out as the
/// sample above. Writes `{"s1":..,"st":..,"s1_with_interactions":..,"st_relative":..}`.
///
/// # Safety
/// `problem_json` must be NUL-terminated and `y` point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn simherd_sobol_analyze(
    problem_json: *const c_char,
    y: *const f64,
    len: usize,
    out_json: *mut *mut c_char,
) -> SimherdStatus {
    guard(|| {
        let out = out(out_json)?;
        let problem: SobolProblem = parse_json(text(problem_json, "problem_json")?, "problem_json")?;
        *out = give(json(&analysis::sobol_analyze(&problem, slice(y, len, "y")?)?)?);
        Ok(())
    })
}
