//! IW(k) and iterated IW.

use std::collections::VecDeque;

use super::{SearchResult, Transitions};
use super::novelty::NoveltyTable;

/// Breadth-first search from `start` that prunes generated states making no
/// new tuple of at most `k` atoms true. The test runs on every generated
/// state before pruning. With `k = 0` only the start and its successors are
/// tested.
pub fn iw<T: Transitions>(tr: &T, start: T::Node, k: usize, mut test: impl FnMut(&T::Node) -> bool) -> SearchResult<T::Node> {
    let mut result = SearchResult::failure();
    if test(&start) {
        result.plan = Some(Vec::new());
        result.end = Some(start);
        result.width = Some(k);
        return result;
    }
    let mut table = NoveltyTable::new(k, tr.static_atoms());
    table.insert(tr.state(&start));
    let mut nodes = vec![(start, usize::MAX, 0)];
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        result.expanded += 1;
        for (action, child) in tr.successors(&nodes[i].0) {
            result.generated += 1;
            let keep = k > 0 && table.insert(tr.state(&child));
            if (keep || k == 0) && test(&child) {
                let mut plan = vec![action];
                let mut j = i;
                while nodes[j].1 != usize::MAX {
                    plan.push(nodes[j].2);
                    j = nodes[j].1;
                }
                plan.reverse();
                result.plan = Some(plan);
                result.end = Some(child);
                result.width = Some(k);
                return result;
            }
            if keep {
                nodes.push((child, i, action));
                queue.push_back(nodes.len() - 1);
            }
        }
    }
    result
}

/// Runs IW(0), IW(1), ..., IW(k_max) until one succeeds. The counters add up
/// over all runs; `width` is the bound of the succeeding run.
pub fn iterated_iw<T: Transitions>(
    tr: &T,
    start: T::Node,
    k_max: usize,
    mut test: impl FnMut(&T::Node) -> bool,
) -> SearchResult<T::Node> {
    let (mut expanded, mut generated) = (0, 0);
    for k in 0..=k_max {
        let mut r = iw(tr, start.clone(), k, &mut test);
        expanded += r.expanded;
        generated += r.generated;
        if r.solved() {
            r.expanded = expanded;
            r.generated = generated;
            return r;
        }
    }
    SearchResult { expanded, generated, ..SearchResult::failure() }
}
