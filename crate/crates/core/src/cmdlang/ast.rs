use std::fmt;

use crate::engine::format_number;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Number(f64),
    Str(String),
    Bool(bool),
    /// `random n`: uniform integer in `[0, n)`.
    Random(u64),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Command {
    Set(String, Expr),
    Setup,
    Go,
    Stop,
    Repeat(u64, Vec<Command>),
    RandomSeed(i64),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Reporter {
    Ticks,
    Count(String),
    NotAnyTurtles,
    Named(String),
}

impl Command {
    /// True when executing the command can take many ticks.
    pub fn is_long_running(&self) -> bool {
        matches!(self, Command::Repeat(..))
    }
}

fn write_string_literal(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    f.write_str("\"")?;
    for c in s.chars() {
        match c {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            '\n' => f.write_str("\\n")?,
            '\t' => f.write_str("\\t")?,
            c => write!(f, "{c}")?,
        }
    }
    f.write_str("\"")
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Number(v) => f.write_str(&format_number(*v)),
            Expr::Str(s) => write_string_literal(f, s),
            Expr::Bool(b) => write!(f, "{b}"),
            Expr::Random(n) => write!(f, "random {n}"),
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Command::Set(name, e) => write!(f, "set {name} {e}"),
            Command::Setup => f.write_str("setup"),
            Command::Go => f.write_str("go"),
            Command::Stop => f.write_str("stop"),
            Command::RandomSeed(n) => write!(f, "random-seed {n}"),
            Command::Repeat(n, body) => {
                write!(f, "repeat {n} [")?;
                for (i, c) in body.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str("]")
            }
        }
    }
}

impl fmt::Display for Reporter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Reporter::Ticks => f.write_str("ticks"),
            Reporter::Count(b) => write!(f, "count {b}"),
            Reporter::NotAnyTurtles => f.write_str("not any? turtles"),
            Reporter::Named(n) => f.write_str(n),
        }
    }
}
