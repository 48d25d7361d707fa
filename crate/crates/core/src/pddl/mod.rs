//! PDDL front end for the `:strips`, `:typing`, `:negative-preconditions` and
//! `:equality` fragment: parsing, validation and grounding.

mod domain;
mod ground;
mod problem;
pub mod sexp;

use thiserror::Error;

pub use domain::{parse_domain, ActionSchema, Domain, Literal, Predicate, Term, TypedName, AtomTemplate, OBJECT};
pub use ground::ground;
pub use problem::{parse_problem, GroundLiteral, Problem, GroundAtomText};
pub use sexp::Pos;

pub const SUPPORTED_REQUIREMENTS: [&str; 4] = [":strips", ":typing", ":negative-preconditions", ":equality"];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PddlError {
    #[error("syntax error at {pos}: {message}")]
    Syntax { pos: Pos, message: String },
    #[error("unsupported requirement `{requirement}` at {pos}")]
    UnsupportedRequirement { requirement: String, pos: Pos },
    #[error("unsupported construct `{construct}` at {pos}")]
    Unsupported { construct: String, pos: Pos },
    #[error("duplicate {kind} `{name}` at {pos}")]
    DuplicateName { kind: &'static str, name: String, pos: Pos },
    #[error("unknown predicate `{name}` at {pos}")]
    UnknownPredicate { name: String, pos: Pos },
    #[error("unknown type `{name}` at {pos}")]
    UnknownType { name: String, pos: Pos },
    #[error("unknown object `{name}` at {pos}")]
    UnknownObject { name: String, pos: Pos },
    #[error("undeclared variable `{name}` at {pos}")]
    UndeclaredVariable { name: String, pos: Pos },
    #[error("type mismatch at {pos}: {message}")]
    TypeMismatch { message: String, pos: Pos },
    #[error("problem is for domain `{found}` but the domain is `{expected}`")]
    DomainMismatch { expected: String, found: String },
}

impl PddlError {
    pub(crate) fn syntax(pos: Pos, message: impl Into<String>) -> Self {
        PddlError::Syntax { pos, message: message.into() }
    }
}

/// Splits `a b - t c - u d` into typed names; untyped trailing names get
/// [`OBJECT`]. Names keep the spelling recorded by the reader in `original`.
pub(crate) fn typed_list(items: &[sexp::Sexp]) -> Result<Vec<(TypedName, Pos, String)>, PddlError> {
    let mut out = Vec::new();
    let mut pending: Vec<(String, String, Pos)> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let item = &items[i];
        let text = item.expect_atom("a name")?;
        if text == "-" {
            let ty = items
                .get(i + 1)
                .ok_or_else(|| PddlError::syntax(item.pos(), "expected a type name after `-`"))?;
            if ty.head() == Some("either") {
                return Err(PddlError::Unsupported { construct: "either".into(), pos: ty.pos() });
            }
            let ty = ty.expect_atom("a type name")?.to_string();
            if pending.is_empty() {
                return Err(PddlError::syntax(item.pos(), "expected a name before `-`"));
            }
            for (name, original, pos) in pending.drain(..) {
                out.push((TypedName { name, ty: ty.clone() }, pos, original));
            }
            i += 2;
        } else {
            let original = match item {
                sexp::Sexp::Atom { original, .. } => original.clone(),
                _ => unreachable!(),
            };
            pending.push((text.to_string(), original, item.pos()));
            i += 1;
        }
    }
    for (name, original, pos) in pending {
        out.push((TypedName { name, ty: OBJECT.to_string() }, pos, original));
    }
    Ok(out)
}

/// Parses a domain and a problem and grounds them.
pub fn load_task(domain: &str, problem: &str) -> Result<crate::task::GroundTask, PddlError> {
    let d = parse_domain(domain)?;
    let p = parse_problem(problem, &d)?;
    Ok(ground(&d, &p))
}
