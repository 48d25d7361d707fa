use rustc_hash::FxHashMap;

use super::domain::{AtomTemplate, Domain, Literal, Term, OBJECT};
use super::problem::{GroundAtomText, Problem};
use crate::task::{AtomId, GroundAction, GroundAtom, GroundTask, Object, ObjectId, PredicateInfo, State};

/// Grounds a validated problem: every type-consistent predicate instantiation
/// becomes an atom and every type-consistent parameter binding that survives
/// the equality preconditions becomes an action.
pub fn ground(domain: &Domain, problem: &Problem) -> GroundTask {
    let mut objects = Vec::new();
    for (typed, is_constant, names) in domain
        .constants
        .iter()
        .map(|c| (c, true, &domain.display_names))
        .chain(problem.objects.iter().map(|o| (o, false, &problem.display_names)))
    {
        let mut types = Vec::new();
        let mut cur = Some(typed.ty.as_str());
        while let Some(t) = cur {
            if t == OBJECT || types.iter().any(|x: &String| x == t) {
                break;
            }
            types.push(t.to_string());
            cur = domain.parent(t);
        }
        objects.push(Object {
            name: typed.name.clone(),
            display: names.get(&typed.name).cloned().unwrap_or_else(|| typed.name.clone()),
            types,
            is_constant,
        });
    }
    let object_index: FxHashMap<&str, ObjectId> =
        objects.iter().enumerate().map(|(i, o)| (o.name.as_str(), i as ObjectId)).collect();
    let of_type = |ty: &str| -> Vec<ObjectId> {
        objects
            .iter()
            .enumerate()
            .filter(|(_, o)| ty == OBJECT || o.types.iter().any(|t| t == ty))
            .map(|(i, _)| i as ObjectId)
            .collect()
    };

    let statics = domain.static_predicates();
    let predicates: Vec<PredicateInfo> = domain
        .predicates
        .iter()
        .map(|p| PredicateInfo { name: p.name.clone(), arity: p.arity(), is_static: statics.contains(p.name.as_str()) })
        .collect();
    let pred_index: FxHashMap<&str, u32> =
        domain.predicates.iter().enumerate().map(|(i, p)| (p.name.as_str(), i as u32)).collect();

    let mut atoms = Vec::new();
    let mut static_atom = Vec::new();
    let mut atom_index: FxHashMap<GroundAtom, AtomId> = FxHashMap::default();
    for (pi, p) in domain.predicates.iter().enumerate() {
        let domains: Vec<Vec<ObjectId>> = p.params.iter().map(|x| of_type(&x.ty)).collect();
        for args in cartesian(&domains) {
            let atom = GroundAtom { predicate: pi as u32, args };
            atom_index.insert(atom.clone(), atoms.len() as AtomId);
            atoms.push(atom);
            static_atom.push(predicates[pi].is_static);
        }
    }

    let text_atom = |t: &GroundAtomText| -> AtomId {
        let atom = GroundAtom {
            predicate: pred_index[t.predicate.as_str()],
            args: t.args.iter().map(|a| object_index[a.as_str()]).collect(),
        };
        atom_index[&atom]
    };
    let init = State::new(problem.init.iter().map(text_atom).collect());
    let mut goal_pos = Vec::new();
    let mut goal_neg = Vec::new();
    for g in &problem.goal {
        let id = text_atom(&g.atom);
        if g.positive {
            goal_pos.push(id);
        } else {
            goal_neg.push(id);
        }
    }
    goal_pos.sort_unstable();
    goal_pos.dedup();
    goal_neg.sort_unstable();
    goal_neg.dedup();

    let mut actions = Vec::new();
    for schema in &domain.actions {
        let domains: Vec<Vec<ObjectId>> = schema.parameters.iter().map(|x| of_type(&x.ty)).collect();
        let var_slot: FxHashMap<&str, usize> =
            schema.parameters.iter().enumerate().map(|(i, p)| (p.name.as_str(), i)).collect();
        'binding: for args in cartesian(&domains) {
            let resolve = |t: &Term| -> ObjectId {
                match t {
                    Term::Var(v) => args[var_slot[v.as_str()]],
                    Term::Const(c) => object_index[c.as_str()],
                }
            };
            let instantiate = |a: &AtomTemplate| -> AtomId {
                let atom = GroundAtom {
                    predicate: pred_index[a.predicate.as_str()],
                    args: a.args.iter().map(resolve).collect(),
                };
                atom_index[&atom]
            };
            let mut pre_pos = Vec::new();
            let mut pre_neg = Vec::new();
            for lit in &schema.precondition {
                match lit {
                    Literal::Equal { left, right, positive } => {
                        if (resolve(left) == resolve(right)) != *positive {
                            continue 'binding;
                        }
                    }
                    Literal::Atom { atom, positive: true } => pre_pos.push(instantiate(atom)),
                    Literal::Atom { atom, positive: false } => pre_neg.push(instantiate(atom)),
                }
            }
            let mut add: Vec<AtomId> = schema.add_effects.iter().map(instantiate).collect();
            let mut del: Vec<AtomId> = schema.delete_effects.iter().map(instantiate).collect();
            for v in [&mut pre_pos, &mut pre_neg, &mut add, &mut del] {
                v.sort_unstable();
                v.dedup();
            }
            del.retain(|d| !add.contains(d));
            actions.push(GroundAction { schema: schema.name.clone(), args, pre_pos, pre_neg, add, del });
        }
    }

    let mut task = GroundTask {
        domain_name: domain.name.clone(),
        problem_name: problem.name.clone(),
        objects,
        predicates,
        atoms,
        actions,
        init,
        goal_pos,
        goal_neg,
        static_atom,
        atom_index: FxHashMap::default(),
        live: Vec::new(),
        triggered_by: Vec::new(),
        untriggered: Vec::new(),
    };
    task.finish();
    task
}

/// All tuples picking one element from each list, in lexicographic order.
fn cartesian(domains: &[Vec<ObjectId>]) -> Vec<Vec<ObjectId>> {
    let mut out = vec![Vec::new()];
    for d in domains {
        let mut next = Vec::with_capacity(out.len() * d.len());
        for prefix in &out {
            for x in d {
                let mut t = prefix.clone();
                t.push(*x);
                next.push(t);
            }
        }
        out = next;
    }
    out
}
