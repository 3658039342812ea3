use super::ast::{Command, Expr, Reporter};
use super::ParseError;

const MAX_NESTING: usize = 64;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Word(String),
    Number(f64),
    Str(String),
    Open,
    Close,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    pos: usize,
    text: String,
}

fn is_word_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '-' | '?' | '_' | '!' | '.' | '%')
}

fn is_delimiter(c: Option<char>) -> bool {
    match c {
        None => true,
        Some(c) => c.is_whitespace() || c == '[' || c == ']',
    }
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut chars = src.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        match c {
            '[' | ']' => {
                chars.next();
                out.push(Token {
                    tok: if c == '[' { Tok::Open } else { Tok::Close },
                    pos,
                    text: c.to_string(),
                });
            }
            '"' => {
                chars.next();
                let mut value = String::new();
                let mut closed = false;
                while let Some((_, c)) = chars.next() {
                    match c {
                        '"' => {
                            closed = true;
                            break;
                        }
                        '\\' => match chars.next() {
                            Some((_, '"')) => value.push('"'),
                            Some((_, '\\')) => value.push('\\'),
                            Some((_, 'n')) => value.push('\n'),
                            Some((_, 't')) => value.push('\t'),
                            Some((p, other)) => {
                                return Err(ParseError::new(
                                    p,
                                    format!("\\{other}"),
                                    "unknown escape sequence",
                                ))
                            }
                            None => break,
                        },
                        c => value.push(c),
                    }
                }
                if !closed {
                    return Err(ParseError::new(pos, &src[pos..], "unterminated string"));
                }
                let end = chars.peek().map_or(src.len(), |&(p, _)| p);
                out.push(Token {
                    tok: Tok::Str(value),
                    pos,
                    text: src[pos..end].to_string(),
                });
            }
            _ => {
                let start = pos;
                let mut end = src.len();
                while let Some(&(p, c)) = chars.peek() {
                    if is_delimiter(Some(c)) || c == '"' {
                        end = p;
                        break;
                    }
                    chars.next();
                }
                let text = &src[start..end];
                let first = text.chars().next().unwrap_or(' ');
                let numeric_start = first.is_ascii_digit()
                    || ((first == '-' || first == '.')
                        && text[1..].starts_with(|c: char| c.is_ascii_digit() || c == '.'));
                let tok = if numeric_start {
                    Tok::Number(
                        parse_number(text).ok_or_else(|| ParseError::new(start, text, "malformed number"))?,
                    )
                } else if first.is_ascii_alphabetic() && text.chars().all(is_word_char) {
                    Tok::Word(text.to_ascii_lowercase())
                } else {
                    return Err(ParseError::new(start, text, "unexpected character"));
                };
                out.push(Token {
                    tok,
                    pos: start,
                    text: text.to_string(),
                });
            }
        }
    }
    Ok(out)
}

fn parse_number(text: &str) -> Option<f64> {
    let body = text.strip_prefix('-').unwrap_or(text);
    let (int, frac) = match body.split_once('.') {
        Some((i, f)) => (i, Some(f)),
        None => (body, None),
    };
    let digits = |s: &str| s.chars().all(|c| c.is_ascii_digit());
    let ok =
        digits(int) && frac.is_none_or(|f| !f.is_empty() && digits(f)) && !(int.is_empty() && frac.is_none());
    if !ok {
        return None;
    }
    text.parse::<f64>().ok().filter(|v| v.is_finite())
}

struct Parser<'a> {
    src: &'a str,
    tokens: Vec<Token>,
    at: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Result<Self, ParseError> {
        Ok(Parser {
            src,
            tokens: lex(src)?,
            at: 0,
        })
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.at)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.at).cloned();
        self.at += 1;
        t
    }

    fn eof_error(&self, what: &str) -> ParseError {
        ParseError::new(self.src.len(), "", format!("expected {what}, found end of input"))
    }

    fn expect_word(&mut self, what: &str) -> Result<(String, Token), ParseError> {
        match self.next() {
            Some(t) => match &t.tok {
                Tok::Word(w) => Ok((w.clone(), t)),
                _ => Err(ParseError::new(t.pos, &t.text, format!("expected {what}"))),
            },
            None => Err(self.eof_error(what)),
        }
    }

    fn expect_number(&mut self, what: &str) -> Result<(f64, Token), ParseError> {
        match self.next() {
            Some(t) => match t.tok {
                Tok::Number(v) => Ok((v, t)),
                _ => Err(ParseError::new(t.pos, &t.text, format!("expected {what}"))),
            },
            None => Err(self.eof_error(what)),
        }
    }

    fn non_negative_integer(&mut self, what: &str) -> Result<u64, ParseError> {
        let (v, t) = self.expect_number(what)?;
        if v < 0.0 || v.fract() != 0.0 || v > u64::MAX as f64 {
            return Err(ParseError::new(t.pos, &t.text, format!("expected {what}")));
        }
        Ok(v as u64)
    }

    fn commands_until_close(&mut self, depth: usize) -> Result<Vec<Command>, ParseError> {
        let mut out = Vec::new();
        loop {
            match self.peek() {
                Some(Token { tok: Tok::Close, .. }) => {
                    self.at += 1;
                    return Ok(out);
                }
                Some(_) => out.push(self.command(depth)?),
                None => return Err(self.eof_error("]")),
            }
        }
    }

    fn command(&mut self, depth: usize) -> Result<Command, ParseError> {
        let Some(t) = self.next() else {
            return Err(self.eof_error("a command"));
        };
        let Tok::Word(word) = &t.tok else {
            return Err(ParseError::new(t.pos, &t.text, "expected a command"));
        };
        match word.as_str() {
            "setup" => Ok(Command::Setup),
            "go" => Ok(Command::Go),
            "stop" => Ok(Command::Stop),
            "set" => {
                let (name, _) = self.expect_word("a variable name")?;
                let value = self.expr()?;
                Ok(Command::Set(name, value))
            }
            "random-seed" => {
                let (v, t) = self.expect_number("a seed")?;
                if v.abs() >= 9.2e18 {
                    return Err(ParseError::new(t.pos, &t.text, "seed out of range"));
                }
                Ok(Command::RandomSeed(v.trunc() as i64))
            }
            "repeat" => {
                if depth >= MAX_NESTING {
                    return Err(ParseError::new(t.pos, &t.text, "repeat nested too deeply"));
                }
                let count = self.non_negative_integer("a non-negative repeat count")?;
                match self.next() {
                    Some(Token { tok: Tok::Open, .. }) => {}
                    Some(other) => return Err(ParseError::new(other.pos, &other.text, "expected [")),
                    None => return Err(self.eof_error("[")),
                }
                let body = self.commands_until_close(depth + 1)?;
                Ok(Command::Repeat(count, body))
            }
            other => Err(ParseError::new(
                t.pos,
                &t.text,
                format!("unsupported NetLogo construct '{other}'"),
            )),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let Some(t) = self.next() else {
            return Err(self.eof_error("a value"));
        };
        match &t.tok {
            Tok::Number(v) => Ok(Expr::Number(*v)),
            Tok::Str(s) => Ok(Expr::Str(s.clone())),
            Tok::Word(w) if w == "true" => Ok(Expr::Bool(true)),
            Tok::Word(w) if w == "false" => Ok(Expr::Bool(false)),
            Tok::Word(w) if w == "random" => {
                let (v, nt) = self.expect_number("a random bound")?;
                if v < 1.0 || v.fract() != 0.0 || v > u64::MAX as f64 {
                    return Err(ParseError::new(
                        nt.pos,
                        &nt.text,
                        "random bound must be a positive integer",
                    ));
                }
                Ok(Expr::Random(v as u64))
            }
            Tok::Word(w) => Err(ParseError::new(
                t.pos,
                &t.text,
                format!("unsupported NetLogo construct '{w}'"),
            )),
            _ => Err(ParseError::new(t.pos, &t.text, "expected a value")),
        }
    }

    fn reporter(&mut self) -> Result<Reporter, ParseError> {
        let (word, t) = self.expect_word("a reporter")?;
        match word.as_str() {
            "ticks" => Ok(Reporter::Ticks),
            "count" => {
                let (breed, _) = self.expect_word("a breed")?;
                Ok(Reporter::Count(breed))
            }
            "not" => {
                let (w, t) = self.expect_word("any?")?;
                if w != "any?" {
                    return Err(ParseError::new(t.pos, &t.text, "expected any?"));
                }
                let (w, t) = self.expect_word("turtles")?;
                if w != "turtles" {
                    return Err(ParseError::new(
                        t.pos,
                        &t.text,
                        "only `not any? turtles` is supported",
                    ));
                }
                Ok(Reporter::NotAnyTurtles)
            }
            "random" | "set" | "repeat" | "any?" => Err(ParseError::new(
                t.pos,
                &t.text,
                format!("unsupported NetLogo construct '{word}'"),
            )),
            _ => Ok(Reporter::Named(word)),
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(ParseError::new(t.pos, &t.text, "unexpected trailing input")),
        }
    }
}

/// Parses a whitespace-separated sequence of commands.
pub fn parse_program(src: &str) -> Result<Vec<Command>, ParseError> {
    let mut p = Parser::new(src)?;
    let mut out = Vec::new();
    while let Some(t) = p.peek() {
        if t.tok == Tok::Close {
            return Err(ParseError::new(t.pos, &t.text, "unmatched ]"));
        }
        out.push(p.command(0)?);
    }
    Ok(out)
}

/// Parses exactly one command.
pub fn parse_command(src: &str) -> Result<Command, ParseError> {
    let mut p = Parser::new(src)?;
    let cmd = p.command(0)?;
    p.finish()?;
    Ok(cmd)
}

pub fn parse_reporter(src: &str) -> Result<Reporter, ParseError> {
    let mut p = Parser::new(src)?;
    let r = p.reporter()?;
    p.finish()?;
    Ok(r)
}
