//! Propositional goal formulas.
//!
//! Concrete syntax, loosest binding first: `->` (right associative), `|`,
//! `&`, `~`, then parentheses, atoms and the constants `true` / `false`.
//! Atoms are resolved against a declared atom list and stored by index.

use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Atom(usize),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Implies(Box<Formula>, Box<Formula>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("empty formula")]
    Empty,
    #[error("unexpected character {ch:?} at byte {offset}")]
    UnexpectedChar { offset: usize, ch: char },
    #[error("expected {expected} at byte {offset}, found {found}")]
    Unexpected {
        offset: usize,
        expected: &'static str,
        found: String,
    },
    #[error("undeclared atom `{name}` at byte {offset}")]
    UndeclaredAtom { offset: usize, name: String },
    #[error("valuation does not assign atom #{0}")]
    MissingAtom(usize),
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Ident(String),
    Not,
    And,
    Or,
    Arrow,
    LParen,
    RParen,
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Not => f.write_str("`~`"),
            Tok::And => f.write_str("`&`"),
            Tok::Or => f.write_str("`|`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::End => f.write_str("end of input"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(usize, Tok)>, FormulaError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            b' ' | b'\t' | b'\n' | b'\r' => i += 1,
            b'~' => {
                out.push((i, Tok::Not));
                i += 1;
            }
            b'&' => {
                out.push((i, Tok::And));
                i += 1;
            }
            b'|' => {
                out.push((i, Tok::Or));
                i += 1;
            }
            b'(' => {
                out.push((i, Tok::LParen));
                i += 1;
            }
            b')' => {
                out.push((i, Tok::RParen));
                i += 1;
            }
            b'-' if bytes.get(i + 1) == Some(&b'>') => {
                out.push((i, Tok::Arrow));
                i += 2;
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(text[start..i].to_string())));
            }
            _ => {
                let ch = text[i..].chars().next().unwrap_or('?');
                return Err(FormulaError::UnexpectedChar { offset: i, ch });
            }
        }
    }
    out.push((text.len(), Tok::End));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    atoms: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].1
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].0
    }

    fn unexpected(&self, expected: &'static str) -> FormulaError {
        FormulaError::Unexpected {
            offset: self.offset(),
            expected,
            found: self.peek().to_string(),
        }
    }

    fn implication(&mut self) -> Result<Formula, FormulaError> {
        let lhs = self.disjunction()?;
        if *self.peek() == Tok::Arrow {
            self.pos += 1;
            let rhs = self.implication()?;
            return Ok(Formula::Implies(Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, FormulaError> {
        let mut lhs = self.conjunction()?;
        while *self.peek() == Tok::Or {
            self.pos += 1;
            let rhs = self.conjunction()?;
            lhs = Formula::Or(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn conjunction(&mut self) -> Result<Formula, FormulaError> {
        let mut lhs = self.negation()?;
        while *self.peek() == Tok::And {
            self.pos += 1;
            let rhs = self.negation()?;
            lhs = Formula::And(Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn negation(&mut self) -> Result<Formula, FormulaError> {
        if *self.peek() == Tok::Not {
            self.pos += 1;
            return Ok(Formula::Not(Box::new(self.negation()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Formula, FormulaError> {
        let offset = self.offset();
        match self.peek().clone() {
            Tok::LParen => {
                self.pos += 1;
                let inner = self.implication()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.unexpected("`)`"));
                }
                self.pos += 1;
                Ok(inner)
            }
            Tok::Ident(name) => {
                self.pos += 1;
                match name.as_str() {
                    "true" => Ok(Formula::True),
                    "false" => Ok(Formula::False),
                    _ => self
                        .atoms
                        .iter()
                        .position(|a| *a == name)
                        .map(Formula::Atom)
                        .ok_or(FormulaError::UndeclaredAtom { offset, name }),
                }
            }
            _ => Err(self.unexpected("an atom, constant, `~` or `(`")),
        }
    }
}

/// Parses `text`, resolving identifiers against `atoms`.
pub fn parse(text: &str, atoms: &[String]) -> Result<Formula, FormulaError> {
    if text.trim().is_empty() {
        return Err(FormulaError::Empty);
    }
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
        atoms,
    };
    let f = p.implication()?;
    if *p.peek() != Tok::End {
        return Err(p.unexpected("end of input"));
    }
    Ok(f)
}

impl Formula {
    pub fn not(f: Formula) -> Formula {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Formula {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Formula {
        Formula::Or(Box::new(a), Box::new(b))
    }

    pub fn implies(a: Formula, b: Formula) -> Formula {
        Formula::Implies(Box::new(a), Box::new(b))
    }

    /// `v ⊨ self`, where `v[k]` is the truth value of atom `k`.
    pub fn eval(&self, v: &[bool]) -> Result<bool, FormulaError> {
        if let Some(k) = self.max_atom() {
            if k >= v.len() {
                return Err(FormulaError::MissingAtom(k));
            }
        }
        Ok(self.eval_unchecked(v))
    }

    pub(crate) fn eval_unchecked(&self, v: &[bool]) -> bool {
        match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(k) => v[*k],
            Formula::Not(a) => !a.eval_unchecked(v),
            Formula::And(a, b) => a.eval_unchecked(v) && b.eval_unchecked(v),
            Formula::Or(a, b) => a.eval_unchecked(v) || b.eval_unchecked(v),
            Formula::Implies(a, b) => !a.eval_unchecked(v) || b.eval_unchecked(v),
        }
    }

    pub fn max_atom(&self) -> Option<usize> {
        match self {
            Formula::True | Formula::False => None,
            Formula::Atom(k) => Some(*k),
            Formula::Not(a) => a.max_atom(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Implies(a, b) => {
                a.max_atom().max(b.max_atom())
            }
        }
    }

    /// Fully parenthesized rendering that [`parse`] reads back to `self`.
    pub fn display<'a>(&'a self, atoms: &'a [String]) -> impl fmt::Display + 'a {
        Printer { f: self, atoms }
    }
}

struct Printer<'a> {
    f: &'a Formula,
    atoms: &'a [String],
}

impl fmt::Display for Printer<'_> {
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sub = |f| Printer {
            f,
            atoms: self.atoms,
        };
        match self.f {
            Formula::True => out.write_str("true"),
            Formula::False => out.write_str("false"),
            Formula::Atom(k) => out.write_str(&self.atoms[*k]),
            Formula::Not(a) => write!(out, "~{}", sub(a)),
            Formula::And(a, b) => write!(out, "({} & {})", sub(a), sub(b)),
            Formula::Or(a, b) => write!(out, "({} | {})", sub(a), sub(b)),
            Formula::Implies(a, b) => write!(out, "({} -> {})", sub(a), sub(b)),
        }
    }
}
