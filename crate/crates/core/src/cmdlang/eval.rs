use crate::engine::{EngineError, ParamValue, StepOutcome, Workspace};

use super::ast::{Command, Expr, Reporter};

/// How control left a command.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Flow {
    Continue,
    /// `stop` was executed; the rest of the program is skipped.
    Stop,
    /// The model's own stop condition fired during `go`; enclosing repeats end.
    ModelStopped,
}

pub fn eval_expr(ws: &mut Workspace, expr: &Expr) -> ParamValue {
    match expr {
        Expr::Number(v) => ParamValue::Number(*v),
        Expr::Str(s) => ParamValue::Text(s.clone()),
        Expr::Bool(b) => ParamValue::Bool(*b),
        Expr::Random(bound) => ParamValue::Number(ws.rng_mut().below(*bound) as f64),
    }
}

pub fn execute(ws: &mut Workspace, cmd: &Command) -> Result<Flow, EngineError> {
    match cmd {
        Command::Set(name, expr) => {
            let value = eval_expr(ws, expr);
            ws.set_param(name, &value)?;
            Ok(Flow::Continue)
        }
        Command::Setup => ws.setup().map(|_| Flow::Continue),
        Command::Go => Ok(match ws.step()? {
            StepOutcome::Running => Flow::Continue,
            StepOutcome::Stopped => Flow::ModelStopped,
        }),
        Command::Stop => Ok(Flow::Stop),
        Command::RandomSeed(seed) => {
            ws.reseed(*seed);
            Ok(Flow::Continue)
        }
        Command::Repeat(count, body) => {
            for _ in 0..*count {
                match execute_block(ws, body)? {
                    Flow::Continue => {}
                    other => return Ok(other),
                }
            }
            Ok(Flow::Continue)
        }
    }
}

/// Runs one pass over `body` as a repeat iteration: any non-`Continue` flow
/// ends the iteration.
pub fn execute_block(ws: &mut Workspace, body: &[Command]) -> Result<Flow, EngineError> {
    for cmd in body {
        match execute(ws, cmd)? {
            Flow::Continue => {}
            other => return Ok(other),
        }
    }
    Ok(Flow::Continue)
}

/// Runs a top-level program. A model stop only ends the repeat it occurred
/// in; `stop` ends the program.
pub fn execute_program(ws: &mut Workspace, program: &[Command]) -> Result<Flow, EngineError> {
    let mut last = Flow::Continue;
    for cmd in program {
        match execute(ws, cmd)? {
            Flow::Stop => return Ok(Flow::Stop),
            flow => last = flow,
        }
    }
    Ok(last)
}

pub fn evaluate(ws: &Workspace, reporter: &Reporter) -> Result<String, EngineError> {
    match reporter {
        Reporter::Ticks => ws.ticks().map(|t| t.to_string()),
        Reporter::Count(breed) => ws.count(breed).map(|n| n.to_string()),
        Reporter::NotAnyTurtles => ws.any_turtles().map(|any| (!any).to_string()),
        Reporter::Named(name) => ws.named(name),
    }
}
