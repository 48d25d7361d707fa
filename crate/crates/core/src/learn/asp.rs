//! ASP program text: the learning encoding followed by ground facts.

use std::fmt::Write;

use crate::dl::{FeatureKind, INFINITY};

use super::{LearnConfig, LearnFacts};

/// The learning encoding. The objective counts each rule and each selected
/// feature's complexity once, so it matches the internal solver under unit weights.
pub const LISTING: &str = r#"{ select(F) } :- feature(F).           { rule(1..max_sketch_rules) }.
{ c_eq(R, F); c_gt(R, F); c_unk(R, F) } = 1 :- rule(R), numerical(F).
{ c_pos(R, F); c_neg(R, F); c_unk(R, F) } = 1 :- rule(R), boolean(F).
{ e_dec(R, F); e_inc(R, F); e_unk(R, F); e_bot(R, F) } = 1 :- rule(R), numerical(F).
{ e_pos(R, F); e_neg(R, F); e_unk(R, F); e_bot(R, F) } = 1 :- rule(R), boolean(F).
{ good(R, I, S, S') } :- rule(R), s_distance(I, S, S', _).
c_satisfied(R, F, I, S) :- { c_eq(R, F) : V = 0; c_gt(R, F) : V > 0; c_pos(R, F) : V = 1; c_neg(R, F) : V = 0; c_unk(R, F) } = 1, rule(R), feature_valuation(F, I, S, V), s_distance(I, S, S', _).
e_satisfied(R, F, I, S, S') :- { e_dec(R, F) : V > V'; e_inc(R, F) : V < V'; e_pos(R, F) : V' = 1; e_neg(R, F) : V' = 0; e_bot(R, F) : V = V'; e_unk(R, F) } = 1, rule(R), feature_valuation(F, I, S, V), feature_valuation(F, I, S', V'), s_distance(I, S, S', _).
:- { not c_satisfied(R, F, I, S); not e_satisfied(R, F, I, S, S') } != 0, select(F), good(R, I, S, S').
:- { not c_satisfied(R, F, I, S) : select(F); not e_satisfied(R, F, I, S, S') : select(F) } = 0, rule(R), s_distance(I, S, S', _), not good(R, I, S, S').
{ subgoal(I, S, T) : tuple(I, S, T) } = 1 :- solvable(I, S), exceed(I, S).
:- { good(R, I, S, S') : rule(R) } = 0, subgoal(I, S, T), contain(I, S, T, S').
:- D <= D', s_distance(I, S, S', D), t_distance(I, S, T, D'), subgoal(I, S, T), good(_, I, S, S'), solvable(I, S), unsolvable(I, S').
order(I, S, S') :- solvable(I, S), solvable(I, S'), good(_, I, S, S'), order(I, S').
order(I, S) :- solvable(I, S), order(I, S, S') : good(_, I, S, S'), solvable(I, S), solvable(I, S').
:- solvable(I, S), not order(I, S).
#minimize { C,complexity(F, C) : complexity(F, C), select(F) }.
#minimize { 1,rule(R) : rule(R) }.
"#;

/// Literal distance constraint on rule-satisfying pairs, added in strict mode.
const STRICT_C6: &str =
    ":- D < D', s_distance(I, S, S', D), t_distance(I, S, T, D'), subgoal(I, S, T), good(_, I, S, S').\n";

fn value(v: u32) -> String {
    if v == INFINITY {
        "#sup".to_string()
    } else {
        v.to_string()
    }
}

/// The encoding plus the facts; feature `i` is named `f<i>`, instance `j` is `j`.
pub fn emit_asp(facts: &LearnFacts, config: &LearnConfig) -> String {
    let mut out = String::new();
    out.push_str(LISTING);
    if config.strict_c6 {
        out.push_str(STRICT_C6);
    }
    let _ = writeln!(out, "#const max_sketch_rules = {}.", config.max_rules);
    for (i, f) in facts.features.iter().enumerate() {
        let kind = match f.kind {
            FeatureKind::Boolean => "boolean",
            FeatureKind::Numerical => "numerical",
        };
        let _ = writeln!(out, "feature(f{i}). {kind}(f{i}). complexity(f{i},{}).", f.complexity);
    }
    for (j, inst) in facts.instances.iter().enumerate() {
        let _ = writeln!(out, "% instance {j}: {}", inst.name);
        for (s, solvable) in inst.solvable.iter().enumerate() {
            let _ = writeln!(out, "{}({j},{s}).", if *solvable { "solvable" } else { "unsolvable" });
        }
        for s in &inst.alive {
            let _ = writeln!(out, "exceed({j},{s}).");
        }
        for p in &inst.pairs {
            let _ = writeln!(out, "s_distance({j},{},{},{}).", p.from, p.to, p.distance);
        }
        for (s, tuples) in inst.alive.iter().zip(&inst.tuples) {
            for (t, tuple) in tuples.iter().enumerate() {
                let _ = writeln!(out, "tuple({j},{s},{t}). t_distance({j},{s},{t},{}).", tuple.distance);
                for c in &tuple.contain {
                    let _ = writeln!(out, "contain({j},{s},{t},{c}).");
                }
            }
        }
        let mut used = vec![false; inst.num_states];
        for p in &inst.pairs {
            used[p.from as usize] = true;
            used[p.to as usize] = true;
        }
        for (f, vals) in inst.valuations.iter().enumerate() {
            for (s, v) in vals.iter().enumerate().filter(|(s, _)| used[*s]) {
                let _ = writeln!(out, "feature_valuation(f{f},{j},{s},{}).", value(*v));
            }
        }
    }
    out
}
