use alloc::borrow::ToOwned;
use alloc::boxed::Box;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{Formula, Interval, Pins};
use crate::signal::PredicateFn;

/// Syntax error with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Num(f64),
    LParen,
    RParen,
    LBracket,
    RBracket,
    LBrace,
    RBrace,
    Comma,
    Bang,
    Amp,
    Pipe,
    Implies,
    Ge,
    Le,
    Plus,
    Minus,
    Star,
    Question,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Num(n) => format!("number {n}"),
            Tok::Eof => "end of input".to_owned(),
            other => format!("{other:?}"),
        }
    }
}

const KEYWORDS: [&str; 4] = ["true", "F", "G", "U"];

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(Tok, usize)>, ParseError> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        loop {
            lx.skip_ws();
            let start = lx.pos;
            let tok = lx.next_tok()?;
            let done = tok == Tok::Eof;
            out.push((tok, start));
            if done {
                return Ok(out);
            }
        }
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.pos += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn next_tok(&mut self) -> Result<Tok, ParseError> {
        let Some(c) = self.peek() else {
            return Ok(Tok::Eof);
        };
        let rest = &self.src[self.pos..];
        let two = |s: &str| rest.starts_with(s);
        let (tok, width) = if two("=>") {
            (Tok::Implies, 2)
        } else if two(">=") {
            (Tok::Ge, 2)
        } else if two("<=") {
            (Tok::Le, 2)
        } else {
            match c {
                '(' => (Tok::LParen, 1),
                ')' => (Tok::RParen, 1),
                '[' => (Tok::LBracket, 1),
                ']' => (Tok::RBracket, 1),
                '{' => (Tok::LBrace, 1),
                '}' => (Tok::RBrace, 1),
                ',' => (Tok::Comma, 1),
                '!' => (Tok::Bang, 1),
                '&' => (Tok::Amp, 1),
                '|' => (Tok::Pipe, 1),
                '+' => (Tok::Plus, 1),
                '-' => (Tok::Minus, 1),
                '*' => (Tok::Star, 1),
                '?' => (Tok::Question, 1),
                c if c.is_ascii_digit() || c == '.' => return self.number(),
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let len = rest
                        .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_'))
                        .unwrap_or(rest.len());
                    self.pos += len;
                    return Ok(Tok::Ident(rest[..len].to_owned()));
                }
                other => {
                    return Err(error_at(
                        self.src,
                        self.pos,
                        format!("unexpected character `{other}`"),
                    ))
                }
            }
        };
        self.pos += width;
        Ok(tok)
    }

    fn number(&mut self) -> Result<Tok, ParseError> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        let mut i = self.pos;
        while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
            i += 1;
        }
        if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
            let mut j = i + 1;
            if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                j += 1;
            }
            if j < bytes.len() && bytes[j].is_ascii_digit() {
                while j < bytes.len() && bytes[j].is_ascii_digit() {
                    j += 1;
                }
                i = j;
            }
        }
        let text = &self.src[start..i];
        let value: f64 = text
            .parse()
            .map_err(|_| error_at(self.src, start, format!("malformed number `{text}`")))?;
        self.pos = i;
        Ok(Tok::Num(value))
    }
}

fn error_at(src: &str, offset: usize, message: String) -> ParseError {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    ParseError {
        line,
        column,
        message,
    }
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
    i: usize,
}

/// Parses the textual formula grammar documented in [`crate::formula`].
pub fn parse(text: &str) -> Result<Formula, ParseError> {
    let toks = Lexer::tokens(text)?;
    let mut p = Parser {
        src: text,
        toks,
        i: 0,
    };
    let f = p.implies()?;
    if *p.peek() != Tok::Eof {
        return Err(p.unexpected("end of input"));
    }
    Ok(f)
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.i].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.i].0.clone();
        if t != Tok::Eof {
            self.i += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.bump();
            true
        } else {
            false
        }
    }

    fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn error(&self, message: String) -> ParseError {
        error_at(self.src, self.toks[self.i].1, message)
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        self.error(format!("expected {expected}, found {}", self.peek().describe()))
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), ParseError> {
        if self.eat(&t) {
            Ok(())
        } else {
            Err(self.unexpected(what))
        }
    }

    fn implies(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.or()?;
        if self.eat(&Tok::Implies) {
            let pins = self.pins()?;
            let rhs = self.implies()?;
            return Ok(Formula::Or {
                left: Box::new(Formula::not(lhs)),
                right: Box::new(rhs),
                pins,
            });
        }
        Ok(lhs)
    }

    fn or(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.and()?;
        while self.eat(&Tok::Pipe) {
            let pins = self.pins()?;
            let rhs = self.and()?;
            lhs = Formula::Or {
                left: Box::new(lhs),
                right: Box::new(rhs),
                pins,
            };
        }
        Ok(lhs)
    }

    fn and(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.until()?;
        while self.eat(&Tok::Amp) {
            let pins = self.pins()?;
            let rhs = self.until()?;
            lhs = Formula::And {
                left: Box::new(lhs),
                right: Box::new(rhs),
                pins,
            };
        }
        Ok(lhs)
    }

    fn until(&mut self) -> Result<Formula, ParseError> {
        let mut lhs = self.unary()?;
        while self.at_keyword("U") {
            self.bump();
            let interval = self.interval()?;
            let pins = self.pins()?;
            let rhs = self.unary()?;
            lhs = Formula::Until {
                left: Box::new(lhs),
                right: Box::new(rhs),
                interval,
                pins,
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Formula, ParseError> {
        if self.eat(&Tok::Bang) {
            return Ok(Formula::not(self.unary()?));
        }
        for (kw, always) in [("G", true), ("F", false)] {
            if self.at_keyword(kw) {
                self.bump();
                let interval = self.interval()?;
                let pins = self.pins()?;
                let child = Box::new(self.unary()?);
                return Ok(if always {
                    Formula::Always {
                        child,
                        interval,
                        pins,
                    }
                } else {
                    Formula::Eventually {
                        child,
                        interval,
                        pins,
                    }
                });
            }
        }
        self.atom()
    }

    fn atom(&mut self) -> Result<Formula, ParseError> {
        if self.at_keyword("true") {
            self.bump();
            return Ok(Formula::True);
        }
        if self.eat(&Tok::LParen) {
            let f = self.implies()?;
            self.expect(Tok::RParen, "`)`")?;
            return Ok(f);
        }
        match self.peek() {
            Tok::Ident(s) if KEYWORDS.contains(&s.as_str()) => Err(self.unexpected("a formula")),
            Tok::Ident(_) | Tok::Num(_) | Tok::Plus | Tok::Minus => self.predicate(),
            _ => Err(self.unexpected("a formula")),
        }
    }

    fn predicate(&mut self) -> Result<Formula, ParseError> {
        let lhs = self.affine()?;
        let f = if self.eat(&Tok::Ge) {
            let rhs = self.affine()?;
            difference(lhs, rhs)
        } else if self.eat(&Tok::Le) {
            let rhs = self.affine()?;
            difference(rhs, lhs)
        } else {
            lhs
        };
        Ok(Formula::Pred(f))
    }

    fn affine(&mut self) -> Result<PredicateFn, ParseError> {
        let mut f = PredicateFn::new(Vec::new(), 0.0);
        let mut sign = 1.0;
        if self.eat(&Tok::Minus) {
            sign = -1.0;
        } else {
            self.eat(&Tok::Plus);
        }
        loop {
            self.term(sign, &mut f)?;
            if self.eat(&Tok::Plus) {
                sign = 1.0;
            } else if self.eat(&Tok::Minus) {
                sign = -1.0;
            } else {
                return Ok(f);
            }
        }
    }

    fn term(&mut self, sign: f64, f: &mut PredicateFn) -> Result<(), ParseError> {
        match self.peek().clone() {
            Tok::Num(n) => {
                self.bump();
                if self.eat(&Tok::Star) {
                    let name = self.ident()?;
                    f.terms.push((name, sign * n));
                } else {
                    f.offset += sign * n;
                }
                Ok(())
            }
            Tok::Ident(name) if !KEYWORDS.contains(&name.as_str()) => {
                self.bump();
                f.terms.push((name, sign));
                Ok(())
            }
            _ => Err(self.unexpected("a number or channel name")),
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(name) if !KEYWORDS.contains(&name.as_str()) => {
                self.bump();
                Ok(name)
            }
            _ => Err(self.unexpected("a channel name")),
        }
    }

    fn integer(&mut self) -> Result<usize, ParseError> {
        match *self.peek() {
            Tok::Num(n) if n >= 0.0 && n == (n as usize) as f64 => {
                self.bump();
                Ok(n as usize)
            }
            _ => Err(self.unexpected("a non-negative integer")),
        }
    }

    fn interval(&mut self) -> Result<Interval, ParseError> {
        if *self.peek() != Tok::LBracket {
            return Ok(Interval::UNBOUNDED);
        }
        let open = self.i;
        self.bump();
        let a = self.integer()?;
        self.expect(Tok::Comma, "`,`")?;
        let b = if matches!(self.peek(), Tok::Ident(s) if s == "inf") {
            self.bump();
            None
        } else {
            Some(self.integer()?)
        };
        self.expect(Tok::RBracket, "`]`")?;
        if let Some(b) = b {
            if a > b {
                return Err(error_at(
                    self.src,
                    self.toks[open].1,
                    format!("malformed interval [{a},{b}]: lower bound exceeds upper bound"),
                ));
            }
        }
        Ok(Interval { a, b })
    }

    fn pins(&mut self) -> Result<Pins, ParseError> {
        if !self.eat(&Tok::LBrace) {
            return Ok(None);
        }
        let mut out = Vec::new();
        loop {
            match self.peek().clone() {
                Tok::Question => {
                    self.bump();
                    out.push(None);
                }
                Tok::Num(n) => {
                    if !(n > 0.0 && n.is_finite()) {
                        return Err(self.error(format!("pinned weight {n} must be positive")));
                    }
                    self.bump();
                    out.push(Some(n));
                }
                _ => return Err(self.unexpected("a positive weight or `?`")),
            }
            if !self.eat(&Tok::Comma) {
                break;
            }
        }
        self.expect(Tok::RBrace, "`}`")?;
        Ok(Some(out))
    }
}

fn difference(lhs: PredicateFn, rhs: PredicateFn) -> PredicateFn {
    let mut terms = lhs.terms;
    terms.extend(rhs.terms.into_iter().map(|(n, c)| (n, -c)));
    PredicateFn::new(terms, lhs.offset - rhs.offset)
}
