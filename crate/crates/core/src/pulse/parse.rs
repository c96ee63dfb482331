//! Text form of pulse sequences.
//!
//! ```text
//! seq   := stmt (';' stmt)* ';'?
//! stmt  := 'mw' angle '@' freq | 'rf' dur '@' freq | 'delay' dur | 'read'
//! angle := 'pi' | 'pi/2' | FLOAT 'deg'
//! dur   := FLOAT 'ns'
//! freq  := FLOAT 'mhz' | NAME
//! ```
//!
//! Keywords are case-insensitive; names are looked up case-insensitively.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use super::{Pulse, PulseBlock, PulseSequence};
use crate::error::Result;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("line {line}, column {column}: unresolved frequency name '{name}'")]
    UnresolvedName { name: String, line: usize, column: usize },
    #[error("sequence has no 'read' statement")]
    MissingReadout,
}

/// Rabi frequencies for angle conversion and the named-frequency table.
#[derive(Clone, Debug, PartialEq)]
pub struct SequenceContext {
    pub omega_mw_mhz: f64,
    pub omega_rf_mhz: f64,
    names: BTreeMap<String, f64>,
}

impl SequenceContext {
    pub fn new(omega_mw_mhz: f64, omega_rf_mhz: f64) -> Self {
        Self { omega_mw_mhz, omega_rf_mhz, names: BTreeMap::new() }
    }

    pub fn with_name(mut self, name: &str, frequency_mhz: f64) -> Self {
        self.insert(name, frequency_mhz);
        self
    }

    pub fn insert(&mut self, name: &str, frequency_mhz: f64) {
        self.names.insert(name.to_ascii_lowercase(), frequency_mhz);
    }

    pub fn lookup(&self, name: &str) -> Option<f64> {
        self.names.get(&name.to_ascii_lowercase()).copied()
    }

    pub fn names(&self) -> &BTreeMap<String, f64> {
        &self.names
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Number(f64),
    Word(String),
    Semi,
    At,
    Slash,
}

#[derive(Clone, Debug)]
struct Token {
    tok: Tok,
    line: usize,
    column: usize,
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax { line, column, message: message.into() }
}

fn lex(text: &str) -> std::result::Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut column) = (1usize, 1usize);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let (l0, c0) = (line, column);
        if c == '\n' {
            line += 1;
            column = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            column += 1;
            i += 1;
            continue;
        }
        let single = match c {
            ';' => Some(Tok::Semi),
            '@' => Some(Tok::At),
            '/' => Some(Tok::Slash),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Token { tok, line: l0, column: c0 });
            i += 1;
            column += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(|d| d.is_ascii_digit())) {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            if i < chars.len() && chars[i] == '.' {
                i += 1;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    while j < chars.len() && chars[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let s: String = chars[start..i].iter().collect();
            let v: f64 = s.parse().map_err(|_| syntax(l0, c0, format!("malformed number '{s}'")))?;
            out.push(Token { tok: Tok::Number(v), line: l0, column: c0 });
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token { tok: Tok::Word(chars[start..i].iter().collect()), line: l0, column: c0 });
        } else {
            return Err(syntax(l0, c0, format!("unexpected character '{c}'")));
        }
        column += i - start;
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Token>,
    pos: usize,
    end: (usize, usize),
    ctx: &'a SequenceContext,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn here(&self) -> (usize, usize) {
        self.peek().map_or(self.end, |t| (t.line, t.column))
    }

    fn fail(&self, message: impl Into<String>) -> ParseError {
        let (l, c) = self.here();
        syntax(l, c, message)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn keyword(&mut self, kw: &str) -> std::result::Result<(), ParseError> {
        match self.peek() {
            Some(Token { tok: Tok::Word(w), .. }) if w.eq_ignore_ascii_case(kw) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.fail(format!("expected '{kw}'"))),
        }
    }

    fn punct(&mut self, want: Tok, shown: &str) -> std::result::Result<(), ParseError> {
        match self.peek() {
            Some(t) if t.tok == want => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.fail(format!("expected '{shown}'"))),
        }
    }

    fn number(&mut self) -> std::result::Result<f64, ParseError> {
        match self.peek() {
            Some(Token { tok: Tok::Number(v), .. }) => {
                let v = *v;
                self.pos += 1;
                Ok(v)
            }
            _ => Err(self.fail("expected a number")),
        }
    }

    fn angle(&mut self) -> std::result::Result<f64, ParseError> {
        if let Some(Token { tok: Tok::Word(w), .. }) = self.peek() {
            if w.eq_ignore_ascii_case("pi") {
                self.pos += 1;
                if matches!(self.peek(), Some(Token { tok: Tok::Slash, .. })) {
                    self.pos += 1;
                    let (l, c) = self.here();
                    let d = self.number()?;
                    if d != 2.0 {
                        return Err(syntax(l, c, "only 'pi/2' is supported as a fraction"));
                    }
                    return Ok(PI / 2.0);
                }
                return Ok(PI);
            }
        }
        let deg = self.number()?;
        self.keyword("deg")?;
        Ok(deg.to_radians())
    }

    fn duration(&mut self) -> std::result::Result<f64, ParseError> {
        let (l, c) = self.here();
        let v = self.number()?;
        self.keyword("ns")?;
        if !v.is_finite() {
            return Err(syntax(l, c, "duration is not finite"));
        }
        Ok(v)
    }

    fn frequency(&mut self) -> std::result::Result<f64, ParseError> {
        self.punct(Tok::At, "@")?;
        match self.next() {
            Some(Token { tok: Tok::Number(v), .. }) => {
                self.keyword("mhz")?;
                Ok(v)
            }
            Some(Token { tok: Tok::Word(name), line, column }) => {
                self.ctx.lookup(&name).ok_or(ParseError::UnresolvedName { name, line, column })
            }
            _ => {
                self.pos -= 1;
                Err(self.fail("expected a frequency or frequency name"))
            }
        }
    }

    fn statement(&mut self) -> std::result::Result<PulseBlock, ParseError> {
        let (l, c) = self.here();
        let word = match self.next() {
            Some(Token { tok: Tok::Word(w), .. }) => w.to_ascii_lowercase(),
            _ => return Err(syntax(l, c, "expected 'mw', 'rf', 'delay' or 'read'")),
        };
        let check = |r: Result<Pulse>| r.map_err(|e| syntax(l, c, e.to_string()));
        match word.as_str() {
            "mw" => {
                let angle = self.angle()?;
                let f = self.frequency()?;
                Ok(PulseBlock::Mw(check(Pulse::with_angle(f, self.ctx.omega_mw_mhz, angle))?))
            }
            "rf" => {
                let t = self.duration()?;
                let f = self.frequency()?;
                Ok(PulseBlock::Rf(check(Pulse::new(f, self.ctx.omega_rf_mhz, 0.0, t))?))
            }
            "delay" => {
                let t = self.duration()?;
                if t < 0.0 {
                    return Err(syntax(l, c, "delay must be non-negative"));
                }
                Ok(PulseBlock::delay(t))
            }
            "read" => Ok(PulseBlock::Readout),
            other => Err(syntax(l, c, format!("unknown statement '{other}'"))),
        }
    }
}

fn parse_blocks(text: &str, ctx: &SequenceContext) -> std::result::Result<Vec<PulseBlock>, ParseError> {
    let toks = lex(text)?;
    let line_count = text.split('\n').count();
    let last_col = text.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    let mut p = Parser { toks, pos: 0, end: (line_count, last_col), ctx };
    let mut blocks = Vec::new();
    loop {
        if blocks.last() == Some(&PulseBlock::Readout) {
            return Err(p.fail("'read' must be the last statement"));
        }
        blocks.push(p.statement()?);
        match p.peek() {
            None => break,
            Some(Token { tok: Tok::Semi, .. }) => {
                p.pos += 1;
                if p.peek().is_none() {
                    break;
                }
            }
            Some(_) => return Err(p.fail("expected ';'")),
        }
    }
    if blocks.last() != Some(&PulseBlock::Readout) {
        return Err(ParseError::MissingReadout);
    }
    Ok(blocks)
}

/// Parses sequence text, resolving named frequencies against `ctx`.
pub fn parse_sequence(text: &str, ctx: &SequenceContext) -> Result<PulseSequence> {
    PulseSequence::new(parse_blocks(text, ctx)?)
}
