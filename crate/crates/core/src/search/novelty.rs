//! Novelty tables over tuples of fluent atoms.

use fixedbitset::FixedBitSet;
use rustc_hash::FxHashSet;

use crate::task::{AtomId, State};

const NONE: u32 = u32::MAX;

/// Largest number of fluent atoms for which pairs are kept in a dense bitset.
const DENSE_PAIRS: usize = 4096;

enum Pairs {
    Dense(FixedBitSet),
    Sparse(FxHashSet<(u32, u32)>),
}

/// Tuples of at most `k` fluent atoms seen so far. A state is novel when it
/// makes some such tuple true for the first time; with `k = 0` only the
/// first state inserted is novel.
pub struct NoveltyTable {
    k: usize,
    index: Vec<u32>,
    n: usize,
    singles: FixedBitSet,
    pairs: Option<Pairs>,
    larger: FxHashSet<Vec<u32>>,
    any: bool,
    scratch: Vec<u32>,
}

impl NoveltyTable {
    pub fn new(k: usize, static_atom: &[bool]) -> Self {
        let mut index = vec![NONE; static_atom.len()];
        let mut n = 0;
        for (i, s) in static_atom.iter().enumerate() {
            if !s {
                index[i] = n as u32;
                n += 1;
            }
        }
        let pairs = (k >= 2).then(|| {
            if n <= DENSE_PAIRS {
                Pairs::Dense(FixedBitSet::with_capacity(n * n))
            } else {
                Pairs::Sparse(FxHashSet::default())
            }
        });
        NoveltyTable {
            k,
            index,
            n,
            singles: FixedBitSet::with_capacity(n),
            pairs,
            larger: FxHashSet::default(),
            any: false,
            scratch: Vec::new(),
        }
    }

    pub fn arity(&self) -> usize {
        self.k
    }

    /// Marks every tuple of `state` as seen; returns whether any was new.
    pub fn insert(&mut self, state: &State) -> bool {
        let first = !self.any;
        self.any = true;
        if self.k == 0 {
            return first;
        }
        let mut atoms = std::mem::take(&mut self.scratch);
        atoms.clear();
        atoms.extend(state.atoms().iter().map(|a| self.index[*a as usize]).filter(|i| *i != NONE));
        let mut novel = false;
        for &a in &atoms {
            novel |= !self.singles.put(a as usize);
        }
        if let Some(pairs) = &mut self.pairs {
            for (i, &a) in atoms.iter().enumerate() {
                for &b in &atoms[i + 1..] {
                    novel |= match pairs {
                        Pairs::Dense(bits) => !bits.put(a as usize * self.n + b as usize),
                        Pairs::Sparse(set) => set.insert((a, b)),
                    };
                }
            }
        }
        for size in 3..=self.k.min(atoms.len()) {
            for t in combinations(&atoms, size) {
                novel |= self.larger.insert(t);
            }
        }
        self.scratch = atoms;
        novel || first
    }
}

/// All subsets of `items` of exactly `size` elements, in lexicographic order.
pub fn combinations<T: Copy>(items: &[T], size: usize) -> Vec<Vec<T>> {
    let mut out = Vec::new();
    if size > items.len() {
        return out;
    }
    let mut idx: Vec<usize> = (0..size).collect();
    loop {
        out.push(idx.iter().map(|i| items[*i]).collect());
        let mut i = size;
        while i > 0 && idx[i - 1] == items.len() - size + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..size {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Tuples of size 1..=k over the fluent atoms of `state`.
pub fn state_tuples(state: &State, static_atom: &[bool], k: usize) -> Vec<Vec<AtomId>> {
    let fluent: Vec<AtomId> = state.atoms().iter().copied().filter(|a| !static_atom[*a as usize]).collect();
    (1..=k).flat_map(|size| combinations(&fluent, size)).collect()
}
