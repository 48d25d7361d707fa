use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use super::sexp::{self, Pos, Sexp};
use super::{typed_list, PddlError, SUPPORTED_REQUIREMENTS};

/// Root of every type hierarchy.
pub const OBJECT: &str = "object";

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct TypedName {
    pub name: String,
    pub ty: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Predicate {
    pub name: String,
    pub params: Vec<TypedName>,
}

impl Predicate {
    pub fn arity(&self) -> usize {
        self.params.len()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub enum Term {
    Var(String),
    Const(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct AtomTemplate {
    pub predicate: String,
    pub args: Vec<Term>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Literal {
    Atom { atom: AtomTemplate, positive: bool },
    Equal { left: Term, right: Term, positive: bool },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ActionSchema {
    pub name: String,
    pub parameters: Vec<TypedName>,
    pub precondition: Vec<Literal>,
    pub add_effects: Vec<AtomTemplate>,
    pub delete_effects: Vec<AtomTemplate>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Domain {
    pub name: String,
    pub requirements: Vec<String>,
    /// Declared types with their parent, excluding [`OBJECT`] itself.
    pub types: Vec<TypedName>,
    pub constants: Vec<TypedName>,
    pub predicates: Vec<Predicate>,
    pub actions: Vec<ActionSchema>,
    /// Original spelling of constants, keyed by the lower-cased name.
    #[serde(skip)]
    pub display_names: HashMap<String, String>,
}

impl Domain {
    pub fn parent(&self, ty: &str) -> Option<&str> {
        self.types.iter().find(|t| t.name == ty).map(|t| t.ty.as_str())
    }

    pub fn has_type(&self, ty: &str) -> bool {
        ty == OBJECT || self.types.iter().any(|t| t.name == ty)
    }

    /// Whether `sub` equals `sup` or inherits from it.
    pub fn is_subtype(&self, sub: &str, sup: &str) -> bool {
        let mut cur = Some(sub);
        let mut steps = 0;
        while let Some(t) = cur {
            if t == sup {
                return true;
            }
            steps += 1;
            if steps > self.types.len() + 1 {
                return false;
            }
            cur = self.parent(t);
        }
        false
    }

    pub fn predicate(&self, name: &str) -> Option<&Predicate> {
        self.predicates.iter().find(|p| p.name == name)
    }

    /// Predicates that occur in no action effect.
    pub fn static_predicates(&self) -> HashSet<&str> {
        let mut fluent = HashSet::new();
        for a in &self.actions {
            for e in a.add_effects.iter().chain(&a.delete_effects) {
                fluent.insert(e.predicate.as_str());
            }
        }
        self.predicates.iter().map(|p| p.name.as_str()).filter(|p| !fluent.contains(p)).collect()
    }
}

pub fn parse_domain(text: &str) -> Result<Domain, PddlError> {
    let root = sexp::parse(text)?;
    let items = root.expect_list("`(define ...)`")?;
    if items.first().and_then(Sexp::as_atom) != Some("define") {
        return Err(PddlError::syntax(root.pos(), "expected `(define (domain ...) ...)`"));
    }
    let header = items
        .get(1)
        .ok_or_else(|| PddlError::syntax(root.pos(), "expected `(domain <name>)`"))?;
    let name = match header.as_list() {
        Some([kw, name]) if kw.as_atom() == Some("domain") => name.expect_atom("a domain name")?.to_string(),
        _ => return Err(PddlError::syntax(header.pos(), "expected `(domain <name>)`")),
    };
    let mut b = Builder { domain: Domain {
        name,
        requirements: Vec::new(),
        types: Vec::new(),
        constants: Vec::new(),
        predicates: Vec::new(),
        actions: Vec::new(),
        display_names: HashMap::new(),
    } };
    for section in &items[2..] {
        let body = section.expect_list("a domain section")?;
        let kw = body
            .first()
            .ok_or_else(|| PddlError::syntax(section.pos(), "expected a section keyword"))?
            .expect_atom("a section keyword")?;
        match kw {
            ":requirements" => b.requirements(&body[1..])?,
            ":types" => b.types(&body[1..])?,
            ":constants" => b.constants(&body[1..])?,
            ":predicates" => b.predicates(&body[1..])?,
            ":action" => b.action(section.pos(), &body[1..])?,
            other => {
                return Err(PddlError::Unsupported { construct: other.to_string(), pos: section.pos() })
            }
        }
    }
    Ok(b.domain)
}

struct Builder {
    domain: Domain,
}

impl Builder {
    fn requirements(&mut self, items: &[Sexp]) -> Result<(), PddlError> {
        for item in items {
            let r = item.expect_atom("a requirement")?;
            if !SUPPORTED_REQUIREMENTS.contains(&r) {
                return Err(PddlError::UnsupportedRequirement { requirement: r.to_string(), pos: item.pos() });
            }
            self.domain.requirements.push(r.to_string());
        }
        Ok(())
    }

    fn types(&mut self, items: &[Sexp]) -> Result<(), PddlError> {
        let list = typed_list(items)?;
        for (t, pos, _) in &list {
            if t.name == OBJECT {
                continue;
            }
            if self.domain.types.iter().any(|x| x.name == t.name) {
                return Err(PddlError::DuplicateName { kind: "type", name: t.name.clone(), pos: *pos });
            }
            self.domain.types.push(t.clone());
        }
        for (t, pos, _) in &list {
            if !self.domain.has_type(&t.ty) {
                return Err(PddlError::UnknownType { name: t.ty.clone(), pos: *pos });
            }
        }
        for t in &self.domain.types {
            if !self.domain.is_subtype(&t.name, OBJECT) {
                let pos = list.iter().find(|x| x.0.name == t.name).map(|x| x.1).unwrap_or_default();
                return Err(PddlError::TypeMismatch { message: format!("type `{}` is part of a cycle", t.name), pos });
            }
        }
        Ok(())
    }

    fn check_type(&self, ty: &str, pos: Pos) -> Result<(), PddlError> {
        if self.domain.has_type(ty) {
            Ok(())
        } else {
            Err(PddlError::UnknownType { name: ty.to_string(), pos })
        }
    }

    fn constants(&mut self, items: &[Sexp]) -> Result<(), PddlError> {
        for (c, pos, original) in typed_list(items)? {
            self.check_type(&c.ty, pos)?;
            if self.domain.constants.iter().any(|x| x.name == c.name) {
                return Err(PddlError::DuplicateName { kind: "constant", name: c.name, pos });
            }
            self.domain.display_names.insert(c.name.clone(), original);
            self.domain.constants.push(c);
        }
        Ok(())
    }

    fn predicates(&mut self, items: &[Sexp]) -> Result<(), PddlError> {
        for item in items {
            let parts = item.expect_list("a predicate declaration")?;
            let name = parts
                .first()
                .ok_or_else(|| PddlError::syntax(item.pos(), "expected a predicate name"))?
                .expect_atom("a predicate name")?
                .to_string();
            if self.domain.predicate(&name).is_some() {
                return Err(PddlError::DuplicateName { kind: "predicate", name, pos: item.pos() });
            }
            let mut params = Vec::new();
            for (p, pos, _) in typed_list(&parts[1..])? {
                if !p.name.starts_with('?') {
                    return Err(PddlError::syntax(pos, format!("expected a variable, found `{}`", p.name)));
                }
                self.check_type(&p.ty, pos)?;
                params.push(p);
            }
            self.domain.predicates.push(Predicate { name, params });
        }
        Ok(())
    }

    fn action(&mut self, pos: Pos, items: &[Sexp]) -> Result<(), PddlError> {
        let name = items
            .first()
            .ok_or_else(|| PddlError::syntax(pos, "expected an action name"))?
            .expect_atom("an action name")?
            .to_string();
        if self.domain.actions.iter().any(|a| a.name == name) {
            return Err(PddlError::DuplicateName { kind: "action", name, pos });
        }
        let mut schema = ActionSchema {
            name,
            parameters: Vec::new(),
            precondition: Vec::new(),
            add_effects: Vec::new(),
            delete_effects: Vec::new(),
        };
        let mut i = 1;
        while i < items.len() {
            let key = items[i].expect_atom("`:parameters`, `:precondition` or `:effect`")?;
            let value = items
                .get(i + 1)
                .ok_or_else(|| PddlError::syntax(items[i].pos(), format!("expected a value after `{key}`")))?;
            match key {
                ":parameters" => {
                    for (p, ppos, _) in typed_list(value.expect_list("a parameter list")?)? {
                        if !p.name.starts_with('?') {
                            return Err(PddlError::syntax(ppos, format!("expected a variable, found `{}`", p.name)));
                        }
                        self.check_type(&p.ty, ppos)?;
                        if schema.parameters.iter().any(|q| q.name == p.name) {
                            return Err(PddlError::DuplicateName { kind: "parameter", name: p.name, pos: ppos });
                        }
                        schema.parameters.push(p);
                    }
                }
                ":precondition" => {
                    let mut lits = Vec::new();
                    self.condition(value, &schema.parameters, &mut lits)?;
                    schema.precondition = lits;
                }
                ":effect" => {
                    let (mut add, mut del) = (Vec::new(), Vec::new());
                    self.effect(value, &schema.parameters, &mut add, &mut del)?;
                    schema.add_effects = add;
                    schema.delete_effects = del;
                }
                other => return Err(PddlError::Unsupported { construct: other.to_string(), pos: items[i].pos() }),
            }
            i += 2;
        }
        self.domain.actions.push(schema);
        Ok(())
    }

    fn term(&self, item: &Sexp, params: &[TypedName]) -> Result<(Term, String), PddlError> {
        let text = item.expect_atom("a term")?;
        if text.starts_with('?') {
            let p = params
                .iter()
                .find(|p| p.name == text)
                .ok_or_else(|| PddlError::UndeclaredVariable { name: text.to_string(), pos: item.pos() })?;
            Ok((Term::Var(text.to_string()), p.ty.clone()))
        } else {
            let c = self
                .domain
                .constants
                .iter()
                .find(|c| c.name == text)
                .ok_or_else(|| PddlError::UnknownObject { name: text.to_string(), pos: item.pos() })?;
            Ok((Term::Const(text.to_string()), c.ty.clone()))
        }
    }

    fn atom(&self, item: &Sexp, params: &[TypedName]) -> Result<AtomTemplate, PddlError> {
        let parts = item.expect_list("an atom")?;
        let name = parts
            .first()
            .ok_or_else(|| PddlError::syntax(item.pos(), "expected a predicate name"))?
            .expect_atom("a predicate name")?;
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
            let (term, ty) = self.term(arg, params)?;
            if !self.domain.is_subtype(&ty, &decl.ty) {
                return Err(PddlError::TypeMismatch {
                    message: format!("argument of type `{ty}` where `{name}` expects `{}`", decl.ty),
                    pos: arg.pos(),
                });
            }
            args.push(term);
        }
        Ok(AtomTemplate { predicate: name.to_string(), args })
    }

    fn condition(&self, item: &Sexp, params: &[TypedName], out: &mut Vec<Literal>) -> Result<(), PddlError> {
        let parts = item.expect_list("a condition")?;
        match parts.first().and_then(Sexp::as_atom) {
            None if parts.is_empty() => Ok(()),
            Some("and") => {
                for p in &parts[1..] {
                    self.condition(p, params, out)?;
                }
                Ok(())
            }
            Some("not") => {
                let inner = match parts {
                    [_, inner] => inner,
                    _ => return Err(PddlError::syntax(item.pos(), "expected `(not <atom>)`")),
                };
                match self.literal(inner, params)? {
                    Literal::Atom { atom, .. } => out.push(Literal::Atom { atom, positive: false }),
                    Literal::Equal { left, right, .. } => out.push(Literal::Equal { left, right, positive: false }),
                }
                Ok(())
            }
            Some(kw @ ("or" | "imply" | "exists" | "forall" | "when")) => {
                Err(PddlError::Unsupported { construct: kw.to_string(), pos: item.pos() })
            }
            _ => {
                out.push(self.literal(item, params)?);
                Ok(())
            }
        }
    }

    fn literal(&self, item: &Sexp, params: &[TypedName]) -> Result<Literal, PddlError> {
        let parts = item.expect_list("an atom")?;
        if parts.first().and_then(Sexp::as_atom) == Some("=") {
            if parts.len() != 3 {
                return Err(PddlError::syntax(item.pos(), "expected `(= <term> <term>)`"));
            }
            let (left, _) = self.term(&parts[1], params)?;
            let (right, _) = self.term(&parts[2], params)?;
            return Ok(Literal::Equal { left, right, positive: true });
        }
        if let Some(kw @ ("not" | "and" | "or" | "imply" | "exists" | "forall")) = parts.first().and_then(Sexp::as_atom) {
            return Err(PddlError::Unsupported { construct: format!("nested {kw}"), pos: item.pos() });
        }
        Ok(Literal::Atom { atom: self.atom(item, params)?, positive: true })
    }

    fn effect(
        &self,
        item: &Sexp,
        params: &[TypedName],
        add: &mut Vec<AtomTemplate>,
        del: &mut Vec<AtomTemplate>,
    ) -> Result<(), PddlError> {
        let parts = item.expect_list("an effect")?;
        match parts.first().and_then(Sexp::as_atom) {
            None if parts.is_empty() => Ok(()),
            Some("and") => {
                for p in &parts[1..] {
                    self.effect(p, params, add, del)?;
                }
                Ok(())
            }
            Some("not") => match parts {
                [_, inner] => {
                    del.push(self.atom(inner, params)?);
                    Ok(())
                }
                _ => Err(PddlError::syntax(item.pos(), "expected `(not <atom>)`")),
            },
            Some(kw @ ("when" | "forall" | "increase" | "decrease" | "assign" | "=")) => {
                Err(PddlError::Unsupported { construct: kw.to_string(), pos: item.pos() })
            }
            _ => {
                add.push(self.atom(item, params)?);
                Ok(())
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) | Term::Const(v) => f.write_str(v),
        }
    }
}

impl fmt::Display for AtomTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.predicate)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Atom { atom, positive: true } => write!(f, "{atom}"),
            Literal::Atom { atom, positive: false } => write!(f, "(not {atom})"),
            Literal::Equal { left, right, positive: true } => write!(f, "(= {left} {right})"),
            Literal::Equal { left, right, positive: false } => write!(f, "(not (= {left} {right}))"),
        }
    }
}

fn write_typed(f: &mut fmt::Formatter<'_>, names: &[TypedName]) -> fmt::Result {
    for (i, n) in names.iter().enumerate() {
        if i > 0 {
            f.write_str(" ")?;
        }
        write!(f, "{} - {}", n.name, n.ty)?;
    }
    Ok(())
}

impl fmt::Display for Domain {
    /// Writes the domain back as PDDL; parsing the output gives an equal domain.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "(define (domain {})", self.name)?;
        if !self.requirements.is_empty() {
            writeln!(f, "  (:requirements {})", self.requirements.join(" "))?;
        }
        if !self.types.is_empty() {
            f.write_str("  (:types ")?;
            write_typed(f, &self.types)?;
            f.write_str(")\n")?;
        }
        if !self.constants.is_empty() {
            f.write_str("  (:constants")?;
            for c in &self.constants {
                let shown = self.display_names.get(&c.name).unwrap_or(&c.name);
                write!(f, " {shown} - {}", c.ty)?;
            }
            f.write_str(")\n")?;
        }
        f.write_str("  (:predicates")?;
        for p in &self.predicates {
            write!(f, " ({}", p.name)?;
            if !p.params.is_empty() {
                f.write_str(" ")?;
                write_typed(f, &p.params)?;
            }
            f.write_str(")")?;
        }
        f.write_str(")\n")?;
        for a in &self.actions {
            writeln!(f, "  (:action {}", a.name)?;
            f.write_str("    :parameters (")?;
            write_typed(f, &a.parameters)?;
            f.write_str(")\n    :precondition (and")?;
            for l in &a.precondition {
                write!(f, " {l}")?;
            }
            f.write_str(")\n    :effect (and")?;
            for e in &a.add_effects {
                write!(f, " {e}")?;
            }
            for e in &a.delete_effects {
                write!(f, " (not {e})")?;
            }
            f.write_str("))\n")?;
        }
        f.write_str(")\n")
    }
}
