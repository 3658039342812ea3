//! The command and reporter strings clients send to a workspace.
//!
//! The grammar is deliberately small:
//!
//! ```text
//! command  := "setup" | "go" | "stop"
//!           | "set" name expr
//!           | "random-seed" number
//!           | "repeat" count "[" command* "]"
//! expr     := number | "string" | true | false | "random" count
//! reporter := "ticks" | "count" breed | "not any? turtles" | name
//! ```
//!
//! Anything else is rejected as an unsupported construct.

mod ast;
mod eval;
mod parser;

use thiserror::Error;

pub use ast::{Command, Expr, Reporter};
pub use eval::{eval_expr, evaluate, execute, execute_block, execute_program, Flow};
pub use parser::{parse_command, parse_program, parse_reporter};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("syntax error at offset {position} near '{token}': {message}")]
pub struct ParseError {
    pub position: usize,
    pub token: String,
    pub message: String,
}

impl ParseError {
    fn new(position: usize, token: impl Into<String>, message: impl Into<String>) -> Self {
        ParseError {
            position,
            token: token.into(),
            message: message.into(),
        }
    }
}
