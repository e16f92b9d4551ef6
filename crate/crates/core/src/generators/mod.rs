//! Seeded random instances for the bundled domains.

mod domains;

use std::collections::{HashSet, VecDeque};
use std::fmt::Write;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::grounding::{ground, GroundTask};
use crate::pddl::{parse_domain, parse_instance, Domain};

pub use domains::{BLOCKSWORLD, GRIPPER, MINI_SOKOBAN, SPANNER};

/// States explored before a solvability check gives up.
pub const SOLVABILITY_CAP: usize = 200_000;

#[derive(Debug, Error)]
pub enum GenError {
    #[error("unknown domain `{0}` (expected blocksworld, gripper, spanner or mini-sokoban)")]
    UnknownDomain(String),
    #[error("invalid generator parameters: {0}")]
    Params(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bundled {
    Blocksworld,
    Gripper,
    Spanner,
    MiniSokoban,
}

impl FromStr for Bundled {
    type Err = GenError;

    fn from_str(s: &str) -> Result<Self, GenError> {
        Ok(match s.to_ascii_lowercase().as_str() {
            "blocksworld" | "blocks" => Bundled::Blocksworld,
            "gripper" => Bundled::Gripper,
            "spanner" => Bundled::Spanner,
            "mini-sokoban" | "sokoban" => Bundled::MiniSokoban,
            _ => return Err(GenError::UnknownDomain(s.to_string())),
        })
    }
}

impl Bundled {
    pub const ALL: [Bundled; 4] = [Bundled::Blocksworld, Bundled::Gripper, Bundled::Spanner, Bundled::MiniSokoban];

    pub fn name(self) -> &'static str {
        match self {
            Bundled::Blocksworld => "blocksworld",
            Bundled::Gripper => "gripper",
            Bundled::Spanner => "spanner",
            Bundled::MiniSokoban => "mini-sokoban",
        }
    }

    pub fn domain_pddl(self) -> &'static str {
        match self {
            Bundled::Blocksworld => BLOCKSWORLD,
            Bundled::Gripper => GRIPPER,
            Bundled::Spanner => SPANNER,
            Bundled::MiniSokoban => MINI_SOKOBAN,
        }
    }

    pub fn domain(self) -> Domain {
        parse_domain(self.domain_pddl()).expect("bundled domain parses")
    }

    // Instances of these domains are solvable by construction.
    fn always_solvable(self) -> bool {
        !matches!(self, Bundled::MiniSokoban)
    }
}

/// Size knobs; each generator reads the ones that concern it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GenParams {
    pub blocks: usize,
    pub balls: usize,
    pub nuts: usize,
    pub spanners: usize,
    pub locations: usize,
    pub width: usize,
    pub height: usize,
    pub stones: usize,
    pub walls: usize,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            blocks: 4,
            balls: 3,
            nuts: 2,
            spanners: 3,
            locations: 3,
            width: 4,
            height: 4,
            stones: 1,
            walls: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generated {
    pub name: String,
    pub pddl: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Batch {
    pub instances: Vec<Generated>,
    /// Set when fewer distinct solvable instances than requested exist or
    /// were found.
    pub shortfall: bool,
}

/// Breadth-first solvability check; `None` if more than `cap` states were
/// explored without an answer.
pub fn solvable(task: &GroundTask, cap: usize) -> Option<bool> {
    let mut seen = HashSet::new();
    let mut queue = VecDeque::new();
    seen.insert(task.init().clone());
    queue.push_back(task.init().clone());
    while let Some(s) = queue.pop_front() {
        if task.is_goal(&s) {
            return Some(true);
        }
        for a in task.applicable_actions(&s) {
            let n = task.apply(&s, a).expect("applicable");
            if seen.insert(n.clone()) {
                if seen.len() > cap {
                    return None;
                }
                queue.push_back(n);
            }
        }
    }
    Some(false)
}

/// Up to `count` distinct solvable instances. The same arguments always
/// produce the same output.
pub fn generate(domain: Bundled, params: &GenParams, seed: u64, count: usize) -> Result<Batch, GenError> {
    validate(domain, params)?;
    let dom = domain.domain();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bodies = HashSet::new();
    let mut instances = Vec::new();
    let max_attempts = 50 * count + 100;
    for _ in 0..max_attempts {
        if instances.len() == count {
            break;
        }
        let name = format!("{}-{}-s{}-{:03}", domain.name(), size_tag(domain, params), seed, instances.len());
        let body = match domain {
            Bundled::Blocksworld => blocksworld(&mut rng, params.blocks),
            Bundled::Gripper => gripper(&mut rng, params.balls),
            Bundled::Spanner => spanner(&mut rng, params),
            Bundled::MiniSokoban => sokoban(&mut rng, params),
        };
        let Some(body) = body else { continue };
        if bodies.contains(&body) {
            continue;
        }
        let pddl = format!("(define (problem {name})\n  (:domain {})\n{body})\n", domain.name());
        let inst = parse_instance(&pddl, &dom).expect("generated instance parses");
        let task = ground(&dom, &inst).expect("generated instance grounds");
        let ok = match solvable(&task, SOLVABILITY_CAP) {
            Some(b) => b,
            None => domain.always_solvable(),
        };
        if !ok {
            continue;
        }
        bodies.insert(body);
        instances.push(Generated { name, pddl });
    }
    let shortfall = instances.len() < count;
    Ok(Batch { instances, shortfall })
}

fn validate(domain: Bundled, p: &GenParams) -> Result<(), GenError> {
    let bad = |m: &str| Err(GenError::Params(m.to_string()));
    match domain {
        Bundled::Blocksworld if p.blocks == 0 => bad("--blocks must be at least 1"),
        Bundled::Gripper if p.balls == 0 => bad("--balls must be at least 1"),
        Bundled::Spanner if p.nuts == 0 || p.locations == 0 => bad("--nuts and --locations must be at least 1"),
        Bundled::Spanner if p.spanners < p.nuts => bad("--spanners must be at least --nuts"),
        Bundled::MiniSokoban if p.width < 3 || p.height < 3 => bad("grid must be at least 3x3"),
        Bundled::MiniSokoban if p.stones == 0 => bad("--stones must be at least 1"),
        Bundled::MiniSokoban if p.width * p.height < 2 * p.stones + 1 + p.walls => bad("grid too small"),
        _ => Ok(()),
    }
}

fn size_tag(domain: Bundled, p: &GenParams) -> String {
    match domain {
        Bundled::Blocksworld => format!("b{}", p.blocks),
        Bundled::Gripper => format!("n{}", p.balls),
        Bundled::Spanner => format!("s{}-n{}-l{}", p.spanners, p.nuts, p.locations),
        Bundled::MiniSokoban => format!("{}x{}-k{}", p.width, p.height, p.stones),
    }
}

fn objects_line(out: &mut String, names: &[String], ty: &str) {
    if !names.is_empty() {
        let _ = write!(out, " {} - {ty}", names.join(" "));
    }
}

/// Random towers: shuffle the blocks, then cut the sequence at random points.
fn towers(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut out: Vec<Vec<usize>> = vec![Vec::new()];
    for b in order {
        if !out.last().unwrap().is_empty() && rng.gen_bool(0.5) {
            out.push(Vec::new());
        }
        out.last_mut().unwrap().push(b);
    }
    out
}

fn blocksworld(rng: &mut ChaCha8Rng, n: usize) -> Option<String> {
    let name = |i: usize| format!("b{}", i + 1);
    let start = towers(rng, n);
    let goal = towers(rng, n);
    let mut init = vec!["(handempty)".to_string()];
    for t in &start {
        init.push(format!("(ontable {})", name(t[0])));
        for w in t.windows(2) {
            init.push(format!("(on {} {})", name(w[1]), name(w[0])));
        }
        init.push(format!("(clear {})", name(*t.last().unwrap())));
    }
    let mut goals = Vec::new();
    for t in &goal {
        for w in t.windows(2) {
            goals.push(format!("(on {} {})", name(w[1]), name(w[0])));
        }
    }
    if goals.is_empty() {
        goals = (0..n).map(|i| format!("(ontable {})", name(i))).collect();
    }
    init.sort();
    goals.sort();
    let satisfied = goals.iter().all(|g| init.contains(g));
    if satisfied && n > 1 {
        return None;
    }
    let blocks: Vec<String> = (0..n).map(name).collect();
    let mut out = String::from("  (:objects");
    objects_line(&mut out, &blocks, "block");
    let _ = write!(out, ")\n  (:init {})\n  (:goal (and {}))\n", init.join(" "), goals.join(" "));
    Some(out)
}

/// Two rooms; every goal puts a ball in the same target room. Balls start in
/// either room, at least one of them outside the target.
fn gripper(rng: &mut ChaCha8Rng, n: usize) -> Option<String> {
    let rooms = ["rooma", "roomb"];
    let target = rng.gen_range(0..2);
    let starts: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2)).collect();
    if starts.iter().all(|&r| r == target) {
        return None;
    }
    let robot = rng.gen_range(0..2);
    let balls: Vec<String> = (1..=n).map(|i| format!("ball{i}")).collect();
    let mut out = String::from("  (:objects rooma roomb - room");
    objects_line(&mut out, &balls, "ball");
    out.push_str(" left right - gripper)\n  (:init");
    let _ = write!(out, " (at-robby {}) (free left) (free right)", rooms[robot]);
    for (b, &r) in balls.iter().zip(&starts) {
        let _ = write!(out, " (at {b} {})", rooms[r]);
    }
    out.push_str(")\n  (:goal (and");
    for b in &balls {
        let _ = write!(out, " (at {b} {})", rooms[target]);
    }
    out.push_str("))\n");
    Some(out)
}

/// A one-way corridor `shed → location1 → … → gate`; spanners lie along the
/// corridor and all nuts wait at the gate.
fn spanner(rng: &mut ChaCha8Rng, p: &GenParams) -> Option<String> {
    let mut locs = vec!["shed".to_string()];
    locs.extend((1..=p.locations).map(|i| format!("location{i}")));
    locs.push("gate".to_string());
    let spanners: Vec<String> = (1..=p.spanners).map(|i| format!("spanner{i}")).collect();
    let nuts: Vec<String> = (1..=p.nuts).map(|i| format!("nut{i}")).collect();
    let mut out = String::from("  (:objects bob - man");
    objects_line(&mut out, &spanners, "spanner");
    objects_line(&mut out, &nuts, "nut");
    objects_line(&mut out, &locs, "location");
    out.push_str(")\n  (:init (at bob shed)");
    for s in &spanners {
        let l = rng.gen_range(1..=p.locations);
        let _ = write!(out, " (at {s} {}) (useable {s})", locs[l]);
    }
    for n in &nuts {
        let _ = write!(out, " (at {n} gate) (loose {n})");
    }
    for w in locs.windows(2) {
        let _ = write!(out, " (link {} {})", w[0], w[1]);
    }
    out.push_str(")\n  (:goal (and");
    for n in &nuts {
        let _ = write!(out, " (tightened {n})");
    }
    out.push_str("))\n");
    Some(out)
}

fn sokoban(rng: &mut ChaCha8Rng, p: &GenParams) -> Option<String> {
    let (w, h) = (p.width, p.height);
    let cell = |x: usize, y: usize| format!("c{x}-{y}");
    let mut cells: Vec<(usize, usize)> = (0..h).flat_map(|y| (0..w).map(move |x| (x, y))).collect();
    cells.shuffle(rng);
    let walls: HashSet<(usize, usize)> = cells[..p.walls].iter().copied().collect();
    let free: Vec<(usize, usize)> = cells[p.walls..].to_vec();
    let goals = &free[..p.stones];
    let stones = &free[p.stones..2 * p.stones];
    let robot = free[2 * p.stones];
    let is_floor = |x: isize, y: isize| {
        x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h && !walls.contains(&(x as usize, y as usize))
    };

    let mut floor: Vec<(usize, usize)> = free.clone();
    floor.sort();
    let names: Vec<String> = floor.iter().map(|&(x, y)| cell(x, y)).collect();
    let stone_names: Vec<String> = (1..=p.stones).map(|i| format!("stone{i}")).collect();
    let mut out = String::from("  (:objects");
    objects_line(&mut out, &names, "location");
    objects_line(&mut out, &stone_names, "stone");
    out.push_str(")\n  (:init");
    let _ = write!(out, " (at-robot {})", cell(robot.0, robot.1));
    for (s, &(x, y)) in stone_names.iter().zip(stones) {
        let _ = write!(out, " (at {s} {})", cell(x, y));
        if goals.contains(&(x, y)) {
            let _ = write!(out, " (at-goal {s})");
        }
    }
    for &(x, y) in &floor {
        if (x, y) != robot && !stones.contains(&(x, y)) {
            let _ = write!(out, " (clear {})", cell(x, y));
        }
        let kind = if goals.contains(&(x, y)) { "is-goal" } else { "is-nongoal" };
        let _ = write!(out, " ({kind} {})", cell(x, y));
        for (dx, dy) in [(1isize, 0isize), (-1, 0), (0, 1), (0, -1)] {
            let (nx, ny) = (x as isize + dx, y as isize + dy);
            if !is_floor(nx, ny) {
                continue;
            }
            let _ = write!(out, " (adjacent {} {})", cell(x, y), cell(nx as usize, ny as usize));
            let (mx, my) = (nx + dx, ny + dy);
            if is_floor(mx, my) {
                let _ = write!(
                    out,
                    " (in-line {} {} {})",
                    cell(x, y),
                    cell(nx as usize, ny as usize),
                    cell(mx as usize, my as usize)
                );
            }
        }
    }
    out.push_str(")\n  (:goal (and");
    for s in &stone_names {
        let _ = write!(out, " (at-goal {s})");
    }
    out.push_str("))\n");
    if stones.iter().all(|s| goals.contains(s)) {
        return None;
    }
    Some(out)
}
