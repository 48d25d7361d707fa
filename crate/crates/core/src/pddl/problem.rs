use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use super::domain::{Domain, TypedName};
use super::sexp::{self, Sexp};
use super::{typed_list, PddlError, SUPPORTED_REQUIREMENTS};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct GroundAtomText {
    pub predicate: String,
    pub args: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroundLiteral {
    pub atom: GroundAtomText,
    pub positive: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Problem {
    pub name: String,
    pub domain: String,
    pub objects: Vec<TypedName>,
    /// True atoms of the initial situation; every other atom is false.
    pub init: Vec<GroundAtomText>,
    pub goal: Vec<GroundLiteral>,
    /// Original spelling of objects, keyed by the lower-cased name.
    #[serde(skip)]
    pub display_names: HashMap<String, String>,
}

pub fn parse_problem(text: &str, domain: &Domain) -> Result<Problem, PddlError> {
    let root = sexp::parse(text)?;
    let items = root.expect_list("`(define ...)`")?;
    if items.first().and_then(Sexp::as_atom) != Some("define") {
        return Err(PddlError::syntax(root.pos(), "expected `(define (problem ...) ...)`"));
    }
    let header = items
        .get(1)
        .ok_or_else(|| PddlError::syntax(root.pos(), "expected `(problem <name>)`"))?;
    let name = match header.as_list() {
        Some([kw, name]) if kw.as_atom() == Some("problem") => name.expect_atom("a problem name")?.to_string(),
        _ => return Err(PddlError::syntax(header.pos(), "expected `(problem <name>)`")),
    };
    let mut problem = Problem {
        name,
        domain: String::new(),
        objects: Vec::new(),
        init: Vec::new(),
        goal: Vec::new(),
        display_names: HashMap::new(),
    };
    let mut goal_section = None;
    let mut init_section = None;
    for section in &items[2..] {
        let body = section.expect_list("a problem section")?;
        let kw = body
            .first()
            .ok_or_else(|| PddlError::syntax(section.pos(), "expected a section keyword"))?
            .expect_atom("a section keyword")?;
        match kw {
            ":domain" => {
                let d = body
                    .get(1)
                    .ok_or_else(|| PddlError::syntax(section.pos(), "expected a domain name"))?
                    .expect_atom("a domain name")?;
                if d != domain.name {
                    return Err(PddlError::DomainMismatch { expected: domain.name.clone(), found: d.to_string() });
                }
                problem.domain = d.to_string();
            }
            ":requirements" => {
                for r in &body[1..] {
                    let r_text = r.expect_atom("a requirement")?;
                    if !SUPPORTED_REQUIREMENTS.contains(&r_text) {
                        return Err(PddlError::UnsupportedRequirement { requirement: r_text.to_string(), pos: r.pos() });
                    }
                }
            }
            ":objects" => {
                for (o, pos, original) in typed_list(&body[1..])? {
                    if !domain.has_type(&o.ty) {
                        return Err(PddlError::UnknownType { name: o.ty, pos });
                    }
                    if problem.objects.iter().any(|x| x.name == o.name)
                        || domain.constants.iter().any(|x| x.name == o.name)
                    {
                        return Err(PddlError::DuplicateName { kind: "object", name: o.name, pos });
                    }
                    problem.display_names.insert(o.name.clone(), original);
                    problem.objects.push(o);
                }
            }
            ":init" => init_section = Some(&body[1..]),
            ":goal" => goal_section = Some((section.pos(), &body[1..])),
            other => return Err(PddlError::Unsupported { construct: other.to_string(), pos: section.pos() }),
        }
    }
    if problem.domain.is_empty() {
        return Err(PddlError::syntax(root.pos(), "missing `(:domain <name>)`"));
    }
    let v = Validator { domain, problem: &problem };
    let mut init = Vec::new();
    for item in init_section.unwrap_or(&[]) {
        let atom = v.atom(item)?;
        if !init.contains(&atom) {
            init.push(atom);
        }
    }
    let mut goal = Vec::new();
    match goal_section {
        Some((_, [g])) => v.goal(g, &mut goal)?,
        Some((pos, _)) => return Err(PddlError::syntax(pos, "expected exactly one goal formula")),
        None => return Err(PddlError::syntax(root.pos(), "missing `(:goal ...)`")),
    }
    problem.init = init;
    problem.goal = goal;
    Ok(problem)
}

struct Validator<'a> {
    domain: &'a Domain,
    problem: &'a Problem,
}

impl Validator<'_> {
    fn object_type(&self, name: &str) -> Option<&str> {
        self.problem
            .objects
            .iter()
            .chain(&self.domain.constants)
            .find(|o| o.name == name)
            .map(|o| o.ty.as_str())
    }

    fn atom(&self, item: &Sexp) -> Result<GroundAtomText, PddlError> {
        let parts = item.expect_list("a ground atom")?;
        let name = parts
            .first()
            .ok_or_else(|| PddlError::syntax(item.pos(), "expected a predicate name"))?
            .expect_atom("a predicate name")?;
        if matches!(name, "=" | "not" | "and" | "or") {
            return Err(PddlError::Unsupported { construct: name.to_string(), pos: item.pos() });
        }
        let pred = self
            .domain
            .predicate(name)
            .ok_or_else(|| PddlError::UnknownPredicate { name: name.to_string(), pos: item.pos() })?;
        if parts.len() - 1 != pred.arity() {
            return Err(PddlError::TypeMismatch {
                message: format!("`{name}` takes {} arguments, found {}", pred.arity(), parts.len() - 1),
                pos: item.pos(),
            });
        }
        let mut args = Vec::new();
        for (arg, decl) in parts[1..].iter().zip(&pred.params) {
            let obj = arg.expect_atom("an object name")?;
            let ty = self
                .object_type(obj)
                .ok_or_else(|| PddlError::UnknownObject { name: obj.to_string(), pos: arg.pos() })?;
            if !self.domain.is_subtype(ty, &decl.ty) {
                return Err(PddlError::TypeMismatch {
                    message: format!("object `{obj}` of type `{ty}` where `{name}` expects `{}`", decl.ty),
                    pos: arg.pos(),
                });
            }
            args.push(obj.to_string());
        }
        Ok(GroundAtomText { predicate: name.to_string(), args })
    }

    fn goal(&self, item: &Sexp, out: &mut Vec<GroundLiteral>) -> Result<(), PddlError> {
        let parts = item.expect_list("a goal formula")?;
        match parts.first().and_then(Sexp::as_atom) {
            None if parts.is_empty() => Ok(()),
            Some("and") => {
                for p in &parts[1..] {
                    self.goal(p, out)?;
                }
                Ok(())
            }
            Some("not") => match parts {
                [_, inner] => {
                    out.push(GroundLiteral { atom: self.atom(inner)?, positive: false });
                    Ok(())
                }
                _ => Err(PddlError::syntax(item.pos(), "expected `(not <atom>)`")),
            },
            Some(kw @ ("or" | "imply" | "exists" | "forall")) => {
                Err(PddlError::Unsupported { construct: kw.to_string(), pos: item.pos() })
            }
            _ => {
                out.push(GroundLiteral { atom: self.atom(item)?, positive: true });
                Ok(())
            }
        }
    }
}

impl fmt::Display for GroundAtomText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Display for Problem {
    /// Writes the problem back as PDDL; parsing the output gives an equal problem.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (problem {})", self.name)?;
        writeln!(f, "  (:domain {})", self.domain)?;
        f.write_str("  (:objects")?;
        for o in &self.objects {
            let shown = self.display_names.get(&o.name).unwrap_or(&o.name);
            write!(f, " {shown} - {}", o.ty)?;
        }
        f.write_str(")\n  (:init")?;
        for a in &self.init {
            write!(f, " {a}")?;
        }
        f.write_str(")\n  (:goal (and")?;
        for g in &self.goal {
            if g.positive {
                write!(f, " {}", g.atom)?;
            } else {
                write!(f, " (not {})", g.atom)?;
            }
        }
        f.write_str(")))\n")
    }
}
