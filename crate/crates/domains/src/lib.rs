//! Benchmark domains used by the tests, the acceptance suite and the examples in
//! the README: PDDL domain files, deterministic instance generators and the
//! handcrafted sketches that go with them.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub mod sketches;

pub const GRIPPER: &str = include_str!("../pddl/gripper.pddl");
pub const DELIVERY: &str = include_str!("../pddl/delivery.pddl");
pub const BLOCKS: &str = include_str!("../pddl/blocks.pddl");
pub const MICONIC: &str = include_str!("../pddl/miconic.pddl");
pub const VISITALL: &str = include_str!("../pddl/visitall.pddl");
pub const SPANNER: &str = include_str!("../pddl/spanner.pddl");
pub const CHILDSNACK: &str = include_str!("../pddl/childsnack.pddl");

/// A generated problem file together with a stable name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub name: String,
    pub pddl: String,
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

struct ProblemWriter {
    out: String,
}

impl ProblemWriter {
    fn new(name: &str, domain: &str) -> Self {
        let mut out = String::new();
        writeln!(out, "(define (problem {name})").unwrap();
        writeln!(out, "  (:domain {domain})").unwrap();
        ProblemWriter { out }
    }

    fn objects(&mut self, groups: &[(&[String], Option<&str>)]) {
        self.out.push_str("  (:objects");
        for (names, ty) in groups {
            if names.is_empty() {
                continue;
            }
            self.out.push_str("\n   ");
            for n in names.iter() {
                self.out.push(' ');
                self.out.push_str(n);
            }
            if let Some(ty) = ty {
                write!(self.out, " - {ty}").unwrap();
            }
        }
        self.out.push_str(")\n");
    }

    fn init(&mut self, atoms: &[String]) {
        self.out.push_str("  (:init");
        for a in atoms {
            write!(self.out, "\n    {a}").unwrap();
        }
        self.out.push_str(")\n");
    }

    fn goal(mut self, atoms: &[String]) -> String {
        self.out.push_str("  (:goal (and");
        for a in atoms {
            write!(self.out, "\n    {a}").unwrap();
        }
        self.out.push_str(")))\n");
        self.out
    }
}

fn names(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

/// Gripper with two rooms, two grippers and `balls` balls in room a.
pub fn gripper(balls: usize) -> Instance {
    let name = format!("gripper-{balls}");
    let rooms = vec!["rooma".to_string(), "roomb".to_string()];
    let ball_names = names("ball", balls);
    let grippers = vec!["left".to_string(), "right".to_string()];
    let mut w = ProblemWriter::new(&name, "gripper-strips");
    w.objects(&[(&rooms, None), (&ball_names, None), (&grippers, None)]);
    let mut init = vec!["(room rooma)".into(), "(room roomb)".into()];
    init.extend(ball_names.iter().map(|b| format!("(ball {b})")));
    init.extend(grippers.iter().map(|g| format!("(gripper {g})")));
    init.push("(at-robby rooma)".into());
    init.extend(grippers.iter().map(|g| format!("(free {g})")));
    init.extend(ball_names.iter().map(|b| format!("(at {b} rooma)")));
    w.init(&init);
    let goal: Vec<String> = ball_names.iter().map(|b| format!("(at {b} roomb)")).collect();
    Instance { name, pddl: w.goal(&goal) }
}

/// Delivery on a `width` x `height` grid with one truck and `packages` packages
/// that all have to reach the same target cell.
pub fn delivery(width: usize, height: usize, packages: usize, seed: u64) -> Instance {
    assert!(width * height >= 2, "delivery needs at least two cells");
    let mut r = rng(seed);
    let name = format!("delivery-{width}x{height}-{packages}-s{seed}");
    let cell = |x: usize, y: usize| format!("c_{x}_{y}");
    let cells: Vec<String> = (0..height)
        .flat_map(|y| (0..width).map(move |x| (x, y)))
        .map(|(x, y)| cell(x, y))
        .collect();
    let pkgs = names("p", packages);
    let trucks = vec!["t1".to_string()];
    let mut w = ProblemWriter::new(&name, "delivery");
    w.objects(&[(&cells, Some("cell")), (&pkgs, Some("package")), (&trucks, Some("truck"))]);
    let mut init = Vec::new();
    for y in 0..height {
        for x in 0..width {
            if x + 1 < width {
                init.push(format!("(adjacent {} {})", cell(x, y), cell(x + 1, y)));
                init.push(format!("(adjacent {} {})", cell(x + 1, y), cell(x, y)));
            }
            if y + 1 < height {
                init.push(format!("(adjacent {} {})", cell(x, y), cell(x, y + 1)));
                init.push(format!("(adjacent {} {})", cell(x, y + 1), cell(x, y)));
            }
        }
    }
    let target = r.gen_range(0..cells.len());
    let truck_at = r.gen_range(0..cells.len());
    init.push(format!("(at t1 {})", cells[truck_at]));
    init.push("(empty t1)".to_string());
    for p in &pkgs {
        let mut c = r.gen_range(0..cells.len());
        while c == target {
            c = r.gen_range(0..cells.len());
        }
        init.push(format!("(at {p} {})", cells[c]));
    }
    w.init(&init);
    let goal: Vec<String> = pkgs.iter().map(|p| format!("(at {p} {})", cells[target])).collect();
    Instance { name, pddl: w.goal(&goal) }
}

/// Random tower configuration over `n` blocks, as (block, below) pairs with
/// `None` meaning the table.
fn random_towers(n: usize, r: &mut ChaCha8Rng) -> Vec<Option<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(r);
    let mut below = vec![None; n];
    let mut prev: Option<usize> = None;
    for b in order {
        if let Some(p) = prev {
            if r.gen_bool(0.5) {
                below[b] = Some(p);
            }
        }
        prev = Some(b);
    }
    below
}

fn blocks_init(below: &[Option<usize>], blocks: &[String]) -> Vec<String> {
    let mut init = vec!["(handempty)".to_string()];
    let mut covered = vec![false; below.len()];
    for (b, under) in below.iter().enumerate() {
        match under {
            Some(u) => {
                covered[*u] = true;
                init.push(format!("(on {} {})", blocks[b], blocks[*u]));
            }
            None => init.push(format!("(ontable {})", blocks[b])),
        }
    }
    for (b, c) in covered.iter().enumerate() {
        if !c {
            init.push(format!("(clear {})", blocks[b]));
        }
    }
    init
}

/// Blocks-on: a random initial configuration and the goal `on(x, y)` for two
/// distinct blocks where `x` is not already on `y`.
pub fn blocks_on(n: usize, seed: u64) -> Instance {
    assert!(n >= 2, "blocks-on needs two blocks");
    let mut r = rng(seed);
    let name = format!("blocks-on-{n}-s{seed}");
    let blocks = names("b", n);
    let below = random_towers(n, &mut r);
    let (x, y) = loop {
        let x = r.gen_range(0..n);
        let y = r.gen_range(0..n);
        if x != y && below[x] != Some(y) {
            break (x, y);
        }
    };
    let mut w = ProblemWriter::new(&name, "blocks");
    w.objects(&[(&blocks, None)]);
    w.init(&blocks_init(&below, &blocks));
    Instance { name, pddl: w.goal(&[format!("(on {} {})", blocks[x], blocks[y])]) }
}

/// Blocks-clear: a random initial configuration and the goal of clearing a block
/// that is covered initially, with the hand empty.
pub fn blocks_clear(n: usize, seed: u64) -> Instance {
    assert!(n >= 2, "blocks-clear needs two blocks");
    let mut r = rng(seed);
    let name = format!("blocks-clear-{n}-s{seed}");
    let blocks = names("b", n);
    let below = loop {
        let below = random_towers(n, &mut r);
        if below.iter().any(|b| b.is_some()) {
            break below;
        }
    };
    let covered: Vec<usize> = below.iter().flatten().copied().collect();
    let x = covered[r.gen_range(0..covered.len())];
    let mut w = ProblemWriter::new(&name, "blocks");
    w.objects(&[(&blocks, None)]);
    w.init(&blocks_init(&below, &blocks));
    Instance { name, pddl: w.goal(&[format!("(clear {})", blocks[x]), "(handempty)".to_string()]) }
}

/// Miconic with `floors` floors and `passengers` passengers with random origin
/// and destination.
pub fn miconic(floors: usize, passengers: usize, seed: u64) -> Instance {
    assert!(floors >= 2, "miconic needs two floors");
    let mut r = rng(seed);
    let name = format!("miconic-{floors}-{passengers}-s{seed}");
    let fl = names("f", floors);
    let ps = names("p", passengers);
    let mut w = ProblemWriter::new(&name, "miconic");
    w.objects(&[(&ps, Some("passenger")), (&fl, Some("floor"))]);
    let mut init = Vec::new();
    for i in 0..floors {
        for j in i + 1..floors {
            init.push(format!("(above {} {})", fl[i], fl[j]));
        }
    }
    for p in &ps {
        let o = r.gen_range(0..floors);
        let mut d = r.gen_range(0..floors);
        while d == o {
            d = r.gen_range(0..floors);
        }
        init.push(format!("(origin {p} {})", fl[o]));
        init.push(format!("(destin {p} {})", fl[d]));
    }
    init.push(format!("(lift-at {})", fl[r.gen_range(0..floors)]));
    w.init(&init);
    let goal: Vec<String> = ps.iter().map(|p| format!("(served {p})")).collect();
    Instance { name, pddl: w.goal(&goal) }
}

/// Visitall on a `width` x `height` grid, robot starting at a random place.
pub fn visitall(width: usize, height: usize, seed: u64) -> Instance {
    let mut r = rng(seed);
    let name = format!("visitall-{width}x{height}-s{seed}");
    let place = |x: usize, y: usize| format!("cell-{x}-{y}");
    let places: Vec<String> = (0..height)
        .flat_map(|y| (0..width).map(move |x| (x, y)))
        .map(|(x, y)| place(x, y))
        .collect();
    let mut w = ProblemWriter::new(&name, "grid-visit-all");
    w.objects(&[(&places, Some("place"))]);
    let mut init = Vec::new();
    for y in 0..height {
        for x in 0..width {
            if x + 1 < width {
                init.push(format!("(connected {} {})", place(x, y), place(x + 1, y)));
                init.push(format!("(connected {} {})", place(x + 1, y), place(x, y)));
            }
            if y + 1 < height {
                init.push(format!("(connected {} {})", place(x, y), place(x, y + 1)));
                init.push(format!("(connected {} {})", place(x, y + 1), place(x, y)));
            }
        }
    }
    let start = r.gen_range(0..places.len());
    init.push(format!("(at-robot {})", places[start]));
    init.push(format!("(visited {})", places[start]));
    w.init(&init);
    let goal: Vec<String> = places.iter().map(|p| format!("(visited {p})")).collect();
    Instance { name, pddl: w.goal(&goal) }
}

/// Spanner with a one-way path of `locations` intermediate locations between the
/// shed and the gate, `spanners` spanners spread over the path and `nuts` loose
/// nuts at the gate.
pub fn spanner(locations: usize, spanners: usize, nuts: usize, seed: u64) -> Instance {
    assert!(locations >= 1 && spanners >= nuts, "spanner instance would be unsolvable");
    let mut r = rng(seed);
    let name = format!("spanner-{locations}-{spanners}-{nuts}-s{seed}");
    let locs = names("l", locations);
    let mut all_locs = vec!["shed".to_string()];
    all_locs.extend(locs.iter().cloned());
    all_locs.push("gate".to_string());
    let sp = names("spanner", spanners);
    let nt = names("nut", nuts);
    let man = vec!["bob".to_string()];
    let mut w = ProblemWriter::new(&name, "spanner");
    w.objects(&[
        (&man, Some("man")),
        (&sp, Some("spanner")),
        (&nt, Some("nut")),
        (&all_locs, Some("location")),
    ]);
    let mut init = vec!["(at bob shed)".to_string()];
    for s in &sp {
        init.push(format!("(at {s} {})", locs[r.gen_range(0..locs.len())]));
        init.push(format!("(useable {s})"));
    }
    for n in &nt {
        init.push(format!("(loose {n})"));
        init.push(format!("(at {n} gate)"));
    }
    for pair in all_locs.windows(2) {
        init.push(format!("(link {} {})", pair[0], pair[1]));
    }
    w.init(&init);
    let goal: Vec<String> = nt.iter().map(|n| format!("(tightened {n})")).collect();
    Instance { name, pddl: w.goal(&goal) }
}

/// Childsnack with `children` children of which `allergic` are gluten allergic,
/// `tables` tables and `trays` trays. There are exactly as many sandwiches,
/// breads and contents as children, and exactly as many gluten-free breads and
/// contents as allergic children, which keeps the instance solvable but makes
/// wasting gluten-free ingredients fatal.
pub fn childsnack(children: usize, allergic: usize, tables: usize, trays: usize, seed: u64) -> Instance {
    assert!(allergic <= children && tables >= 1 && trays >= 1);
    let mut r = rng(seed);
    let name = format!("childsnack-{children}-{allergic}-{tables}-{trays}-s{seed}");
    let ch = names("child", children);
    let br = names("bread", children);
    let co = names("content", children);
    let tr = names("tray", trays);
    let sw = names("sandw", children);
    let tb = names("table", tables);
    let mut w = ProblemWriter::new(&name, "child-snack");
    w.objects(&[
        (&ch, Some("child")),
        (&br, Some("bread-portion")),
        (&co, Some("content-portion")),
        (&tr, Some("tray")),
        (&tb, Some("place")),
        (&sw, Some("sandwich")),
    ]);
    let mut init = Vec::new();
    for t in &tr {
        init.push(format!("(at {t} kitchen)"));
    }
    for b in &br {
        init.push(format!("(at_kitchen_bread {b})"));
    }
    for c in &co {
        init.push(format!("(at_kitchen_content {c})"));
    }
    let mut gf_bread: Vec<usize> = (0..children).collect();
    gf_bread.shuffle(&mut r);
    for &b in &gf_bread[..allergic] {
        init.push(format!("(no_gluten_bread {})", br[b]));
    }
    let mut gf_content: Vec<usize> = (0..children).collect();
    gf_content.shuffle(&mut r);
    for &c in &gf_content[..allergic] {
        init.push(format!("(no_gluten_content {})", co[c]));
    }
    let mut who: Vec<usize> = (0..children).collect();
    who.shuffle(&mut r);
    for (rank, &c) in who.iter().enumerate() {
        if rank < allergic {
            init.push(format!("(allergic_gluten {})", ch[c]));
        } else {
            init.push(format!("(not_allergic_gluten {})", ch[c]));
        }
    }
    for c in &ch {
        init.push(format!("(waiting {c} {})", tb[r.gen_range(0..tables)]));
    }
    for s in &sw {
        init.push(format!("(notexist {s})"));
    }
    w.init(&init);
    let goal: Vec<String> = ch.iter().map(|c| format!("(served {c})")).collect();
    Instance { name, pddl: w.goal(&goal) }
}
