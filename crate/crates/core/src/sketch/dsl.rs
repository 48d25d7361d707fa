//! Line-oriented sketch files:
//!
//! ```text
//! # comment
//! feature holding = b_empty(c_primitive(empty,0))
//! feature undelivered = n_count(...)
//! rule { neg(holding) } -> { pos(holding) }
//! rule { pos(holding), gt(undelivered) } -> { unk(holding), dec(undelivered) }
//! ```
//!
//! Conditions are `pos`, `neg` (Boolean) and `eq`, `gt` (numerical); effects are
//! `pos`, `neg`, `unk` (Boolean) and `inc`, `dec`, `unk` (numerical). Features
//! a rule does not mention must keep their value.

use crate::dl::{Feature, FeatureKind};

use super::{Change, Condition, Effect, NamedFeature, Rule, Sketch, SketchError, Test};

pub fn parse_sketch(text: &str) -> Result<Sketch, SketchError> {
    let mut sketch = Sketch::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix("feature ") {
            let (name, def) = rest
                .split_once('=')
                .ok_or_else(|| SketchError::Syntax { line, message: "expected `feature <name> = <definition>`".into() })?;
            let name = name.trim();
            if !is_name(name) {
                return Err(SketchError::Syntax { line, message: format!("invalid feature name `{name}`") });
            }
            if sketch.features.iter().any(|f| f.name == name) {
                return Err(SketchError::DuplicateFeature { line, name: name.to_string() });
            }
            let feature = Feature::parse(def.trim()).map_err(|source| SketchError::Feature { line, source })?;
            sketch.features.push(NamedFeature { name: name.to_string(), feature });
        } else if let Some(rest) = content.strip_prefix("rule") {
            let rule = parse_rule(rest.trim(), line, &sketch)?;
            if rule.effects.is_empty() {
                log::warn!("line {line}: rule without effects makes every satisfying state its own subgoal");
            }
            sketch.rules.push(rule);
        } else {
            return Err(SketchError::Syntax { line, message: "expected `feature` or `rule`".into() });
        }
    }
    for f in &sketch.features {
        let idx = sketch.features.iter().position(|x| x.name == f.name).unwrap();
        let used = sketch
            .rules
            .iter()
            .any(|r| r.conditions.iter().any(|c| c.feature == idx) || r.effects.iter().any(|e| e.feature == idx));
        if !used && !sketch.rules.is_empty() {
            log::warn!("feature `{}` is not used by any rule", f.name);
        }
    }
    Ok(sketch)
}

fn is_name(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

fn parse_rule(text: &str, line: usize, sketch: &Sketch) -> Result<Rule, SketchError> {
    let syntax = |m: &str| SketchError::Syntax { line, message: m.to_string() };
    let (lhs, rhs) = text.split_once("->").ok_or_else(|| syntax("expected `rule { ... } -> { ... }`"))?;
    let mut rule = Rule::default();
    for (kw, name) in items(lhs.trim(), line)? {
        let f = lookup(sketch, &name, line)?;
        let test = match kw.as_str() {
            "pos" => Test::Pos,
            "neg" => Test::Neg,
            "eq" => Test::Eq,
            "gt" => Test::Gt,
            other => return Err(syntax(&format!("unknown condition `{other}`"))),
        };
        check_kind(sketch, f, test.kind(), &kw, line)?;
        if rule.conditions.iter().any(|c| c.feature == f) {
            return Err(SketchError::RepeatedFeature { line, name });
        }
        rule.conditions.push(Condition { feature: f, test });
    }
    for (kw, name) in items(rhs.trim(), line)? {
        let f = lookup(sketch, &name, line)?;
        let kind = sketch.features[f].feature.kind();
        let change = match (kw.as_str(), kind) {
            ("pos", _) => Change::SetTrue,
            ("neg", _) => Change::SetFalse,
            ("unk", FeatureKind::Boolean) => Change::AnyBool,
            ("unk", FeatureKind::Numerical) => Change::AnyNum,
            ("inc", _) => Change::Inc,
            ("dec", _) => Change::Dec,
            (other, _) => return Err(syntax(&format!("unknown effect `{other}`"))),
        };
        check_kind(sketch, f, change.kind(), &kw, line)?;
        if rule.effects.iter().any(|e| e.feature == f) {
            return Err(SketchError::RepeatedFeature { line, name });
        }
        rule.effects.push(Effect { feature: f, change });
    }
    Ok(rule)
}

fn lookup(sketch: &Sketch, name: &str, line: usize) -> Result<usize, SketchError> {
    sketch
        .features
        .iter()
        .position(|f| f.name == name)
        .ok_or_else(|| SketchError::UnknownFeature { line, name: name.to_string() })
}

fn check_kind(sketch: &Sketch, f: usize, wanted: FeatureKind, kw: &str, line: usize) -> Result<(), SketchError> {
    let kind = sketch.features[f].feature.kind();
    if kind == wanted {
        Ok(())
    } else {
        Err(SketchError::TypeMismatch { line, test: kw.to_string(), name: sketch.features[f].name.clone(), kind })
    }
}

/// Parses `{ kw(name), kw(name) }`.
fn items(text: &str, line: usize) -> Result<Vec<(String, String)>, SketchError> {
    let syntax = |m: &str| SketchError::Syntax { line, message: m.to_string() };
    let inner = text
        .strip_prefix('{')
        .and_then(|t| t.strip_suffix('}'))
        .ok_or_else(|| syntax("expected `{ ... }`"))?
        .trim();
    if inner.is_empty() {
        return Ok(Vec::new());
    }
    inner
        .split(',')
        .map(|item| {
            let item = item.trim();
            let (kw, rest) = item.split_once('(').ok_or_else(|| syntax(&format!("expected `kw(feature)`, found `{item}`")))?;
            let name = rest.strip_suffix(')').ok_or_else(|| syntax(&format!("missing `)` in `{item}`")))?;
            Ok((kw.trim().to_string(), name.trim().to_string()))
        })
        .collect()
}
