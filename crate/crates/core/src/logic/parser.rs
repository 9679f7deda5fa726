//! Recursive-descent parser for the ASCII formula syntax.
//!
//! ```text
//! formula := disj ( "->" formula )?
//! disj    := conj ( "|" conj )*
//! conj    := unary ( "&" unary )*
//! unary   := "!" unary | "G" unary | "F" interval? unary | "X" ( "^" NUM )? unary | primary
//! primary := ATOM | "(" formula ")"
//! interval:= "[" DURATION "," DURATION "]"
//! ```
//!
//! Both logics share one grammar; the MTL entry point rejects `X`, the LTL entry
//! point rejects interval subscripts.

use std::fmt;

use super::duration::{Duration, DurationParseError};
use super::formula::{Atom, LtlFormula, MtlFormula};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at column {}: expected {expected}, found {found}", .position + 1)]
    Syntax {
        position: usize,
        expected: String,
        found: String,
    },
    #[error("invalid duration at column {}: {message}", .position + 1)]
    Duration { position: usize, message: String },
    #[error("interval subscript at column {} is not allowed in LTL", .position + 1)]
    IntervalNotAllowed { position: usize },
}

impl ParseError {
    pub fn position(&self) -> usize {
        match self {
            ParseError::Syntax { position, .. }
            | ParseError::Duration { position, .. }
            | ParseError::IntervalNotAllowed { position } => *position,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Bang,
    Amp,
    Pipe,
    Arrow,
    Minus,
    Caret,
    Globally,
    Finally,
    Next,
    Ident(String),
    Number(String),
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::LBracket => f.write_str("`[`"),
            Tok::RBracket => f.write_str("`]`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Bang => f.write_str("`!`"),
            Tok::Amp => f.write_str("`&`"),
            Tok::Pipe => f.write_str("`|`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Minus => f.write_str("`-`"),
            Tok::Caret => f.write_str("`^`"),
            Tok::Globally => f.write_str("`G`"),
            Tok::Finally => f.write_str("`F`"),
            Tok::Next => f.write_str("`X`"),
            Tok::Ident(s) => write!(f, "atom `{s}`"),
            Tok::Number(s) => write!(f, "number `{s}`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        let tok = match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
                continue;
            }
            b'(' => Tok::LParen,
            b')' => Tok::RParen,
            b'[' => Tok::LBracket,
            b']' => Tok::RBracket,
            b',' => Tok::Comma,
            b'!' => Tok::Bang,
            b'&' => Tok::Amp,
            b'|' => Tok::Pipe,
            b'^' => Tok::Caret,
            b'G' => Tok::Globally,
            b'F' => Tok::Finally,
            b'X' => Tok::Next,
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                i += 2;
                out.push((start, Tok::Arrow));
                continue;
            }
            b'-' => Tok::Minus,
            b'a'..=b'z' => {
                while i < bytes.len()
                    && (bytes[i].is_ascii_lowercase() || bytes[i].is_ascii_digit() || bytes[i] == b'_')
                {
                    i += 1;
                }
                out.push((start, Tok::Ident(text[start..i].to_string())));
                continue;
            }
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.' || bytes[i] == b'/') {
                    i += 1;
                }
                out.push((start, Tok::Number(text[start..i].to_string())));
                continue;
            }
            _ => {
                let found = text[i..].chars().next().unwrap_or('?');
                return Err(ParseError::Syntax {
                    position: i,
                    expected: "a formula token".into(),
                    found: format!("character `{found}`"),
                });
            }
        };
        i += 1;
        out.push((start, tok));
    }
    out.push((text.len(), Tok::Eof));
    Ok(out)
}

/// Logic-neutral parse tree; converted to an MTL or LTL AST afterwards.
#[derive(Debug)]
enum Expr {
    Atom(Atom),
    Not(Box<Expr>),
    And(Box<Expr>, Box<Expr>),
    Or(Box<Expr>, Box<Expr>),
    Implies(Box<Expr>, Box<Expr>),
    Globally(Box<Expr>),
    Finally {
        position: usize,
        interval: Option<(Duration, Duration)>,
        body: Box<Expr>,
    },
    Next {
        position: usize,
        count: u32,
        body: Box<Expr>,
    },
}

struct Parser {
    tokens: Vec<(usize, Tok)>,
    cursor: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.cursor].1
    }

    fn position(&self) -> usize {
        self.tokens[self.cursor].0
    }

    fn bump(&mut self) -> (usize, Tok) {
        let t = self.tokens[self.cursor].clone();
        if self.cursor + 1 < self.tokens.len() {
            self.cursor += 1;
        }
        t
    }

    fn error(&self, expected: &str) -> ParseError {
        ParseError::Syntax {
            position: self.position(),
            expected: expected.to_string(),
            found: self.peek().to_string(),
        }
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.error(expected))
        }
    }

    fn formula(&mut self) -> Result<Expr, ParseError> {
        let lhs = self.disjunction()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.formula()?;
            return Ok(Expr::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.conjunction()?;
        while *self.peek() == Tok::Pipe {
            self.bump();
            let rhs = self.conjunction()?;
            lhs = Expr::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Tok::Bang => {
                self.bump();
                Ok(Expr::Not(Box::new(self.unary()?)))
            }
            Tok::Globally => {
                self.bump();
                Ok(Expr::Globally(Box::new(self.unary()?)))
            }
            Tok::Finally => {
                let (position, _) = self.bump();
                let interval = if *self.peek() == Tok::LBracket {
                    Some(self.interval()?)
                } else {
                    None
                };
                let body = Box::new(self.unary()?);
                Ok(Expr::Finally { position, interval, body })
            }
            Tok::Next => {
                let (position, _) = self.bump();
                let count = if *self.peek() == Tok::Caret {
                    self.bump();
                    match self.bump() {
                        (_, Tok::Number(n)) if n.bytes().all(|b| b.is_ascii_digit()) => {
                            n.parse::<u32>().map_err(|_| ParseError::Syntax {
                                position,
                                expected: "an exponent that fits in 32 bits".into(),
                                found: format!("number `{n}`"),
                            })?
                        }
                        (p, t) => {
                            return Err(ParseError::Syntax {
                                position: p,
                                expected: "a non-negative integer exponent".into(),
                                found: t.to_string(),
                            })
                        }
                    }
                } else {
                    1
                };
                let body = Box::new(self.unary()?);
                Ok(Expr::Next { position, count, body })
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                let position = self.position();
                self.bump();
                let atom = Atom::new(name).map_err(|e| ParseError::Syntax {
                    position,
                    expected: "an atom".into(),
                    found: e.to_string(),
                })?;
                Ok(Expr::Atom(atom))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.formula()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            _ => Err(self.error("an atom, `(`, `!`, `G`, `F` or `X`")),
        }
    }

    fn interval(&mut self) -> Result<(Duration, Duration), ParseError> {
        self.expect(Tok::LBracket, "`[`")?;
        let lo = self.duration()?;
        self.expect(Tok::Comma, "`,`")?;
        let hi_position = self.position();
        let hi = self.duration()?;
        self.expect(Tok::RBracket, "`]`")?;
        if lo > hi {
            return Err(ParseError::Duration {
                position: hi_position,
                message: format!("lower bound {lo} exceeds upper bound {hi}"),
            });
        }
        Ok((lo, hi))
    }

    fn duration(&mut self) -> Result<Duration, ParseError> {
        let position = self.position();
        match self.bump() {
            (_, Tok::Minus) => Err(ParseError::Duration {
                position,
                message: "durations must be non-negative".into(),
            }),
            (_, Tok::Number(raw)) => {
                if matches!(self.peek(), Tok::Ident(s) if s == "min") {
                    self.bump();
                }
                raw.parse::<Duration>().map_err(|e: DurationParseError| ParseError::Duration {
                    position,
                    message: e.to_string(),
                })
            }
            (_, t) => Err(ParseError::Syntax {
                position,
                expected: "a duration".into(),
                found: t.to_string(),
            }),
        }
    }
}

fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        tokens: lex(text)?,
        cursor: 0,
    };
    let e = p.formula()?;
    if *p.peek() != Tok::Eof {
        return Err(p.error("an operator or end of input"));
    }
    Ok(e)
}

fn to_mtl(e: Expr) -> Result<MtlFormula, ParseError> {
    Ok(match e {
        Expr::Atom(a) => MtlFormula::Atom(a),
        Expr::Not(f) => MtlFormula::not(to_mtl(*f)?),
        Expr::And(a, b) => MtlFormula::and(to_mtl(*a)?, to_mtl(*b)?),
        Expr::Or(a, b) => MtlFormula::or(to_mtl(*a)?, to_mtl(*b)?),
        Expr::Implies(a, b) => MtlFormula::implies(to_mtl(*a)?, to_mtl(*b)?),
        Expr::Globally(f) => MtlFormula::globally(to_mtl(*f)?),
        Expr::Finally { interval: Some((lo, hi)), body, .. } => {
            MtlFormula::eventually_within(lo, hi, to_mtl(*body)?)
        }
        Expr::Finally { interval: None, body, .. } => MtlFormula::Eventually(Box::new(to_mtl(*body)?)),
        Expr::Next { position, .. } => {
            return Err(ParseError::Syntax {
                position,
                expected: "an MTL operator (`X` is LTL-only)".into(),
                found: Tok::Next.to_string(),
            })
        }
    })
}

fn to_ltl(e: Expr) -> Result<LtlFormula, ParseError> {
    Ok(match e {
        Expr::Atom(a) => LtlFormula::Atom(a),
        Expr::Not(f) => LtlFormula::not(to_ltl(*f)?),
        Expr::And(a, b) => LtlFormula::and(to_ltl(*a)?, to_ltl(*b)?),
        Expr::Or(a, b) => LtlFormula::or(to_ltl(*a)?, to_ltl(*b)?),
        Expr::Implies(a, b) => LtlFormula::implies(to_ltl(*a)?, to_ltl(*b)?),
        Expr::Globally(f) => LtlFormula::globally(to_ltl(*f)?),
        Expr::Finally { interval: Some(_), position, .. } => {
            return Err(ParseError::IntervalNotAllowed { position })
        }
        Expr::Finally { interval: None, body, .. } => LtlFormula::eventually(to_ltl(*body)?),
        Expr::Next { count, body, .. } => LtlFormula::next_pow(count, to_ltl(*body)?),
    })
}

pub fn parse_mtl(text: &str) -> Result<MtlFormula, ParseError> {
    to_mtl(parse_expr(text)?)
}

/// Parses an LTL formula; `X^j` is expanded into `j` nested `X`.
pub fn parse_ltl(text: &str) -> Result<LtlFormula, ParseError> {
    to_ltl(parse_expr(text)?)
}

/// One formula read from a formula file, with its 1-based line number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FormulaLine<'a> {
    /// 1-based line number.
    pub line: usize,
    /// Byte offset of `text` within its line.
    pub offset: usize,
    pub text: &'a str,
}

/// Splits a formula file into non-empty lines with `#` comments stripped.
pub fn formula_lines(source: &str) -> impl Iterator<Item = FormulaLine<'_>> {
    source.lines().enumerate().filter_map(|(idx, raw)| {
        let uncommented = raw.split('#').next().unwrap_or("");
        let text = uncommented.trim();
        let offset = uncommented.len() - uncommented.trim_start().len();
        (!text.is_empty()).then_some(FormulaLine {
            line: idx + 1,
            offset,
            text,
        })
    })
}
