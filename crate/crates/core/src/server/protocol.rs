//! Newline-delimited JSON envelopes.
//!
//! Request: `{"id":<int>,"op":"<name>","args":{...}}`
//! Response: `{"id":<int>,"ok":true,"result":...}` or
//! `{"id":<int>,"ok":false,"error":"<msg>"}`

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

pub const OPS: [&str; 14] = [
    "new_workspace",
    "delete_workspace",
    "delete_all_workspaces",
    "list_workspaces",
    "open_model",
    "close_model",
    "command",
    "report",
    "set_params_random",
    "get_param_names",
    "get_param_ranges",
    "schedule_reporters_and_run",
    "get_scheduled_reporter_results",
    "shutdown",
];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Request {
    pub id: i64,
    pub op: String,
    #[serde(default = "empty_args")]
    pub args: Value,
}

fn empty_args() -> Value {
    Value::Object(Map::new())
}

impl Request {
    pub fn new(id: i64, op: &str, args: Value) -> Self {
        Request {
            id,
            op: op.to_string(),
            args,
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("request serializes")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub id: Option<i64>,
    pub ok: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub result: Option<Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Response {
    pub fn ok(id: Option<i64>, result: Value) -> Self {
        Response {
            id,
            ok: true,
            result: Some(result),
            error: None,
        }
    }

    pub fn err(id: Option<i64>, error: &ServerError) -> Self {
        Response {
            id,
            ok: false,
            result: None,
            error: Some(error.to_string()),
        }
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("response serializes")
    }
}

/// Failures reported in error envelopes. The display form starts with a
/// stable kebab-case code followed by `: ` and a human readable message.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ServerError {
    #[error("bad-request: {0}")]
    BadRequest(String),
    #[error("unknown-op: {0}")]
    UnknownOp(String),
    #[error("not-found: workspace {0} does not exist")]
    NotFound(u64),
    #[error("capacity: workspace limit of {0} reached")]
    Capacity(usize),
    #[error("busy: workspace {0} already has a scheduled run in progress")]
    Busy(u64),
    #[error("syntax: {0}")]
    Syntax(String),
    #[error("runtime: {0}")]
    Runtime(String),
    #[error("shutting-down: server is stopping")]
    ShuttingDown,
}

impl ServerError {
    pub fn code(&self) -> &'static str {
        match self {
            ServerError::BadRequest(_) => "bad-request",
            ServerError::UnknownOp(_) => "unknown-op",
            ServerError::NotFound(_) => "not-found",
            ServerError::Capacity(_) => "capacity",
            ServerError::Busy(_) => "busy",
            ServerError::Syntax(_) => "syntax",
            ServerError::Runtime(_) => "runtime",
            ServerError::ShuttingDown => "shutting-down",
        }
    }
}

/// Splits an error envelope message into its code and detail.
pub fn split_error(message: &str) -> (&str, &str) {
    message.split_once(": ").unwrap_or(("error", message))
}

/// Typed access to request arguments.
pub struct Args<'a>(pub &'a Value);

impl Args<'_> {
    fn field(&self, key: &str) -> Option<&Value> {
        self.0.get(key).filter(|v| !v.is_null())
    }

    pub fn workspace(&self) -> Result<u64, ServerError> {
        self.field("workspace")
            .and_then(Value::as_u64)
            .ok_or_else(|| ServerError::BadRequest("missing integer argument 'workspace'".into()))
    }

    pub fn string(&self, key: &str) -> Result<String, ServerError> {
        self.field(key)
            .and_then(Value::as_str)
            .map(str::to_string)
            .ok_or_else(|| ServerError::BadRequest(format!("missing string argument '{key}'")))
    }

    pub fn string_or(&self, key: &str, default: &str) -> Result<String, ServerError> {
        match self.field(key) {
            None => Ok(default.to_string()),
            Some(_) => self.string(key),
        }
    }

    pub fn int_or(&self, key: &str, default: i64) -> Result<i64, ServerError> {
        match self.field(key) {
            None => Ok(default),
            Some(v) => v
                .as_i64()
                .ok_or_else(|| ServerError::BadRequest(format!("argument '{key}' must be an integer"))),
        }
    }

    pub fn strings(&self, key: &str) -> Result<Vec<String>, ServerError> {
        let bad = || ServerError::BadRequest(format!("argument '{key}' must be a list of strings"));
        self.field(key)
            .and_then(Value::as_array)
            .ok_or_else(bad)?
            .iter()
            .map(|v| v.as_str().map(str::to_string).ok_or_else(bad))
            .collect()
    }
}
