//! Concept, role and feature expressions with their canonical text form.

use std::fmt;

use serde::{Serialize, Serializer};

use super::DlError;

/// Suffix marking the goal version of a primitive in the text form.
pub const GOAL_SUFFIX: &str = "_g";

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Concept {
    /// Objects at position `pos` of the true atoms of `pred` (or of the goal atoms).
    Primitive { pred: String, pos: usize, goal: bool },
    OneOf(String),
    Top,
    Bot,
    Equal(Box<Role>, Box<Role>),
    And(Box<Concept>, Box<Concept>),
    Not(Box<Concept>),
    Some(Box<Role>, Box<Concept>),
    All(Box<Role>, Box<Concept>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Primitive { pred: String, first: usize, second: usize, goal: bool },
    Inverse(Box<Role>),
    /// Pairs of the role whose second element belongs to the concept.
    Restrict(Box<Role>, Box<Concept>),
    TransitiveClosure(Box<Role>),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Concept(Concept),
    Role(Role),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Feature {
    Nullary { pred: String, goal: bool },
    Empty(Expr),
    Count(Expr),
    Distance(Concept, Role, Concept),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum FeatureKind {
    Boolean,
    Numerical,
}

impl Concept {
    pub fn complexity(&self) -> usize {
        match self {
            Concept::Primitive { .. } | Concept::OneOf(_) | Concept::Top | Concept::Bot => 1,
            Concept::Equal(r, s) => 1 + r.complexity() + s.complexity(),
            Concept::And(c, d) => 1 + c.complexity() + d.complexity(),
            Concept::Not(c) => 1 + c.complexity(),
            Concept::Some(r, c) | Concept::All(r, c) => 1 + r.complexity() + c.complexity(),
        }
    }

    pub fn is_primitive(&self) -> bool {
        matches!(self, Concept::Primitive { .. } | Concept::OneOf(_) | Concept::Top | Concept::Bot)
    }

    pub fn primitive(pred: &str, pos: usize) -> Concept {
        Concept::Primitive { pred: pred.to_string(), pos, goal: false }
    }

    pub fn goal_primitive(pred: &str, pos: usize) -> Concept {
        Concept::Primitive { pred: pred.to_string(), pos, goal: true }
    }

    pub fn negate(self) -> Concept {
        Concept::Not(Box::new(self))
    }

    pub fn and(self, other: Concept) -> Concept {
        Concept::And(Box::new(self), Box::new(other))
    }

    pub fn some(role: Role, c: Concept) -> Concept {
        Concept::Some(Box::new(role), Box::new(c))
    }

    pub fn all(role: Role, c: Concept) -> Concept {
        Concept::All(Box::new(role), Box::new(c))
    }

    pub fn equal(r: Role, s: Role) -> Concept {
        Concept::Equal(Box::new(r), Box::new(s))
    }

    /// Checks the grammar restrictions of every nested role.
    pub fn validate(&self) -> Result<(), DlError> {
        match self {
            Concept::Primitive { .. } | Concept::OneOf(_) | Concept::Top | Concept::Bot => Ok(()),
            Concept::Equal(r, s) => {
                r.validate()?;
                s.validate()
            }
            Concept::And(c, d) => {
                c.validate()?;
                d.validate()
            }
            Concept::Not(c) => c.validate(),
            Concept::Some(r, c) | Concept::All(r, c) => {
                r.validate()?;
                c.validate()
            }
        }
    }
}

impl Role {
    pub fn complexity(&self) -> usize {
        match self {
            Role::Primitive { .. } => 1,
            Role::Inverse(r) | Role::TransitiveClosure(r) => 1 + r.complexity(),
            Role::Restrict(r, c) => 1 + r.complexity() + c.complexity(),
        }
    }

    pub fn primitive(pred: &str, first: usize, second: usize) -> Role {
        Role::Primitive { pred: pred.to_string(), first, second, goal: false }
    }

    pub fn goal_primitive(pred: &str, first: usize, second: usize) -> Role {
        Role::Primitive { pred: pred.to_string(), first, second, goal: true }
    }

    pub fn inverse(self) -> Role {
        Role::Inverse(Box::new(self))
    }

    pub fn closure(self) -> Role {
        Role::TransitiveClosure(Box::new(self))
    }

    pub fn restrict(self, c: Concept) -> Role {
        Role::Restrict(Box::new(self), Box::new(c))
    }

    /// Inverse, restriction and transitive closure apply to primitives only.
    pub fn validate(&self) -> Result<(), DlError> {
        match self {
            Role::Primitive { first, second, .. } => {
                if first >= second {
                    return Err(DlError::Grammar(format!("role positions must satisfy i < j in `{self}`")));
                }
                Ok(())
            }
            Role::Inverse(r) | Role::TransitiveClosure(r) => {
                if !matches!(**r, Role::Primitive { .. }) {
                    return Err(DlError::Grammar(format!("`{self}` applies to a non-primitive role")));
                }
                r.validate()
            }
            Role::Restrict(r, c) => {
                if !matches!(**r, Role::Primitive { .. }) || !c.is_primitive() {
                    return Err(DlError::Grammar(format!("`{self}` restricts a non-primitive role or concept")));
                }
                r.validate()
            }
        }
    }
}

impl Expr {
    pub fn complexity(&self) -> usize {
        match self {
            Expr::Concept(c) => c.complexity(),
            Expr::Role(r) => r.complexity(),
        }
    }
}

/// Largest role complexity allowed inside a distance feature.
pub const MAX_DISTANCE_ROLE_COMPLEXITY: usize = 2;

impl Feature {
    pub fn kind(&self) -> FeatureKind {
        match self {
            Feature::Nullary { .. } | Feature::Empty(_) => FeatureKind::Boolean,
            Feature::Count(_) | Feature::Distance(..) => FeatureKind::Numerical,
        }
    }

    pub fn complexity(&self) -> usize {
        match self {
            Feature::Nullary { .. } => 1,
            Feature::Empty(x) | Feature::Count(x) => 1 + x.complexity(),
            Feature::Distance(c, r, d) => 1 + c.complexity() + r.complexity() + d.complexity(),
        }
    }

    pub fn validate(&self) -> Result<(), DlError> {
        match self {
            Feature::Nullary { .. } => Ok(()),
            Feature::Empty(Expr::Concept(c)) | Feature::Count(Expr::Concept(c)) => c.validate(),
            Feature::Empty(Expr::Role(r)) | Feature::Count(Expr::Role(r)) => r.validate(),
            Feature::Distance(c, r, d) => {
                if r.complexity() > MAX_DISTANCE_ROLE_COMPLEXITY {
                    return Err(DlError::Grammar(format!(
                        "distance role `{r}` exceeds complexity {MAX_DISTANCE_ROLE_COMPLEXITY}"
                    )));
                }
                c.validate()?;
                r.validate()?;
                d.validate()
            }
        }
    }

    /// Parses and validates the canonical text form.
    pub fn parse(text: &str) -> Result<Feature, DlError> {
        let term = Term::parse(text)?;
        let f = term.feature()?;
        f.validate()?;
        Ok(f)
    }
}

fn pred_name(pred: &str, goal: bool) -> String {
    if goal {
        format!("{pred}{GOAL_SUFFIX}")
    } else {
        pred.to_string()
    }
}

impl fmt::Display for Concept {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Concept::Primitive { pred, pos, goal } => write!(f, "c_primitive({},{pos})", pred_name(pred, *goal)),
            Concept::OneOf(o) => write!(f, "c_one_of({o})"),
            Concept::Top => f.write_str("c_top"),
            Concept::Bot => f.write_str("c_bot"),
            Concept::Equal(r, s) => write!(f, "c_equal({r},{s})"),
            Concept::And(c, d) => write!(f, "c_and({c},{d})"),
            Concept::Not(c) => write!(f, "c_not({c})"),
            Concept::Some(r, c) => write!(f, "c_some({r},{c})"),
            Concept::All(r, c) => write!(f, "c_all({r},{c})"),
        }
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Role::Primitive { pred, first, second, goal } => {
                write!(f, "r_primitive({},{first},{second})", pred_name(pred, *goal))
            }
            Role::Inverse(r) => write!(f, "r_inverse({r})"),
            Role::Restrict(r, c) => write!(f, "r_restrict({r},{c})"),
            Role::TransitiveClosure(r) => write!(f, "r_transitive_closure({r})"),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Concept(c) => c.fmt(f),
            Expr::Role(r) => r.fmt(f),
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Feature::Nullary { pred, goal } => write!(f, "b_nullary({})", pred_name(pred, *goal)),
            Feature::Empty(x) => write!(f, "b_empty({x})"),
            Feature::Count(x) => write!(f, "n_count({x})"),
            Feature::Distance(c, r, d) => write!(f, "n_distance({c},{r},{d})"),
        }
    }
}

impl Serialize for Feature {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Untyped `head(arg, ...)` tree used while reading the text form.
#[derive(Debug)]
struct Term {
    head: String,
    args: Vec<Term>,
    offset: usize,
}

impl Term {
    fn parse(text: &str) -> Result<Term, DlError> {
        let bytes = text.as_bytes();
        let mut i = 0;
        let t = Self::read(text, bytes, &mut i)?;
        skip_ws(bytes, &mut i);
        if i != bytes.len() {
            return Err(DlError::Syntax { offset: i, message: "trailing input".into() });
        }
        Ok(t)
    }

    fn read(text: &str, bytes: &[u8], i: &mut usize) -> Result<Term, DlError> {
        skip_ws(bytes, i);
        let start = *i;
        while *i < bytes.len() && (bytes[*i].is_ascii_alphanumeric() || matches!(bytes[*i], b'_' | b'-')) {
            *i += 1;
        }
        if start == *i {
            return Err(DlError::Syntax { offset: start, message: "expected a name".into() });
        }
        let head = text[start..*i].to_ascii_lowercase();
        let mut args = Vec::new();
        skip_ws(bytes, i);
        if *i < bytes.len() && bytes[*i] == b'(' {
            *i += 1;
            loop {
                args.push(Self::read(text, bytes, i)?);
                skip_ws(bytes, i);
                match bytes.get(*i) {
                    Some(b',') => *i += 1,
                    Some(b')') => {
                        *i += 1;
                        break;
                    }
                    _ => return Err(DlError::Syntax { offset: *i, message: "expected `,` or `)`".into() }),
                }
            }
        }
        Ok(Term { head, args, offset: start })
    }

    fn err(&self, message: impl Into<String>) -> DlError {
        DlError::Syntax { offset: self.offset, message: message.into() }
    }

    fn arity(&self, n: usize) -> Result<&[Term], DlError> {
        if self.args.len() == n {
            Ok(&self.args)
        } else {
            Err(self.err(format!("`{}` takes {n} arguments, found {}", self.head, self.args.len())))
        }
    }

    fn leaf(&self) -> Result<&str, DlError> {
        if self.args.is_empty() {
            Ok(&self.head)
        } else {
            Err(self.err(format!("expected a name, found `{}(...)`", self.head)))
        }
    }

    fn number(&self) -> Result<usize, DlError> {
        self.leaf()?.parse().map_err(|_| self.err(format!("expected a position, found `{}`", self.head)))
    }

    fn predicate(&self) -> Result<(String, bool), DlError> {
        let name = self.leaf()?;
        Ok(match name.strip_suffix(GOAL_SUFFIX) {
            Some(p) if !p.is_empty() => (p.to_string(), true),
            _ => (name.to_string(), false),
        })
    }

    fn feature(&self) -> Result<Feature, DlError> {
        match self.head.as_str() {
            "b_nullary" => {
                let (pred, goal) = self.arity(1)?[0].predicate()?;
                Ok(Feature::Nullary { pred, goal })
            }
            "b_empty" => Ok(Feature::Empty(self.arity(1)?[0].expr()?)),
            "n_count" => Ok(Feature::Count(self.arity(1)?[0].expr()?)),
            "n_distance" => {
                let a = self.arity(3)?;
                Ok(Feature::Distance(a[0].concept()?, a[1].role()?, a[2].concept()?))
            }
            other => Err(self.err(format!("unknown feature constructor `{other}`"))),
        }
    }

    fn expr(&self) -> Result<Expr, DlError> {
        if self.head.starts_with("r_") {
            Ok(Expr::Role(self.role()?))
        } else {
            Ok(Expr::Concept(self.concept()?))
        }
    }

    fn concept(&self) -> Result<Concept, DlError> {
        Ok(match self.head.as_str() {
            "c_primitive" => {
                let a = self.arity(2)?;
                let (pred, goal) = a[0].predicate()?;
                Concept::Primitive { pred, pos: a[1].number()?, goal }
            }
            "c_one_of" => Concept::OneOf(self.arity(1)?[0].leaf()?.to_string()),
            "c_top" => {
                self.arity(0)?;
                Concept::Top
            }
            "c_bot" => {
                self.arity(0)?;
                Concept::Bot
            }
            "c_equal" => {
                let a = self.arity(2)?;
                Concept::equal(a[0].role()?, a[1].role()?)
            }
            "c_and" => {
                let a = self.arity(2)?;
                a[0].concept()?.and(a[1].concept()?)
            }
            "c_not" => self.arity(1)?[0].concept()?.negate(),
            "c_some" => {
                let a = self.arity(2)?;
                Concept::some(a[0].role()?, a[1].concept()?)
            }
            "c_all" => {
                let a = self.arity(2)?;
                Concept::all(a[0].role()?, a[1].concept()?)
            }
            other => return Err(self.err(format!("unknown concept constructor `{other}`"))),
        })
    }

    fn role(&self) -> Result<Role, DlError> {
        Ok(match self.head.as_str() {
            "r_primitive" => {
                let a = self.arity(3)?;
                let (pred, goal) = a[0].predicate()?;
                Role::Primitive { pred, first: a[1].number()?, second: a[2].number()?, goal }
            }
            "r_inverse" => self.arity(1)?[0].role()?.inverse(),
            "r_transitive_closure" => self.arity(1)?[0].role()?.closure(),
            "r_restrict" => {
                let a = self.arity(2)?;
                a[0].role()?.restrict(a[1].concept()?)
            }
            other => return Err(self.err(format!("unknown role constructor `{other}`"))),
        })
    }
}

fn skip_ws(bytes: &[u8], i: &mut usize) {
    while *i < bytes.len() && bytes[*i].is_ascii_whitespace() {
        *i += 1;
    }
}
