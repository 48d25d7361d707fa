//! A small s-expression reader that remembers where every token came from.

use std::fmt;

use super::PddlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexp {
    /// A symbol, already lower-cased, with its original spelling.
    Atom { text: String, original: String, pos: Pos },
    List { items: Vec<Sexp>, pos: Pos },
}

impl Sexp {
    pub fn pos(&self) -> Pos {
        match self {
            Sexp::Atom { pos, .. } | Sexp::List { pos, .. } => *pos,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom { text, .. } => Some(text),
            Sexp::List { .. } => None,
        }
    }

    pub fn as_list(&self) -> Option<&[Sexp]> {
        match self {
            Sexp::List { items, .. } => Some(items),
            Sexp::Atom { .. } => None,
        }
    }

    pub fn expect_atom(&self, what: &str) -> Result<&str, PddlError> {
        self.as_atom().ok_or_else(|| PddlError::syntax(self.pos(), format!("expected {what}, found a list")))
    }

    pub fn expect_list(&self, what: &str) -> Result<&[Sexp], PddlError> {
        self.as_list().ok_or_else(|| PddlError::syntax(self.pos(), format!("expected {what}, found a symbol")))
    }

    /// Keyword at the head of a list, e.g. `:action` in `(:action ...)`.
    pub fn head(&self) -> Option<&str> {
        self.as_list().and_then(|l| l.first()).and_then(Sexp::as_atom)
    }
}

/// Parses exactly one top-level s-expression (comments start with `;`).
pub fn parse(text: &str) -> Result<Sexp, PddlError> {
    let mut reader = Reader { chars: text.chars().collect(), i: 0, line: 1, col: 1 };
    reader.skip_trivia();
    if reader.at_end() {
        return Err(PddlError::syntax(reader.pos(), "expected `(`, found end of input"));
    }
    let expr = reader.expr()?;
    reader.skip_trivia();
    if !reader.at_end() {
        return Err(PddlError::syntax(reader.pos(), "expected end of input after the definition"));
    }
    Ok(expr)
}

struct Reader {
    chars: Vec<char>,
    i: usize,
    line: usize,
    col: usize,
}

impl Reader {
    fn at_end(&self) -> bool {
        self.i >= self.chars.len()
    }

    fn pos(&self) -> Pos {
        Pos { line: self.line, col: self.col }
    }

    fn bump(&mut self) -> char {
        let c = self.chars[self.i];
        self.i += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        c
    }

    fn skip_trivia(&mut self) {
        while !self.at_end() {
            let c = self.chars[self.i];
            if c.is_whitespace() {
                self.bump();
            } else if c == ';' {
                while !self.at_end() && self.chars[self.i] != '\n' {
                    self.bump();
                }
            } else {
                break;
            }
        }
    }

    fn expr(&mut self) -> Result<Sexp, PddlError> {
        let pos = self.pos();
        match self.chars[self.i] {
            '(' => {
                self.bump();
                let mut items = Vec::new();
                loop {
                    self.skip_trivia();
                    if self.at_end() {
                        return Err(PddlError::syntax(
                            pos,
                            "unbalanced parenthesis: expected `)` before end of input",
                        ));
                    }
                    if self.chars[self.i] == ')' {
                        self.bump();
                        return Ok(Sexp::List { items, pos });
                    }
                    items.push(self.expr()?);
                }
            }
            ')' => Err(PddlError::syntax(pos, "unexpected `)`")),
            _ => {
                let mut original = String::new();
                while !self.at_end() {
                    let c = self.chars[self.i];
                    if c.is_whitespace() || c == '(' || c == ')' || c == ';' {
                        break;
                    }
                    original.push(self.bump());
                }
                Ok(Sexp::Atom { text: original.to_lowercase(), original, pos })
            }
        }
    }
}
