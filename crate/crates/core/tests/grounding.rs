mod common;

use std::collections::{BTreeSet, HashSet, VecDeque};

use common::*;
use gsp_core::generators::{generate, Bundled, GenParams};
use gsp_core::grounding::ground;
use gsp_core::pddl::{parse_domain, parse_instance, Fact};

fn blocks_problem(n: usize) -> String {
    let objs: Vec<String> = (0..n).map(|i| format!("b{i}")).collect();
    let init: String = objs.iter().map(|o| format!("(ontable {o}) (clear {o}) ")).collect();
    format!(
        "(define (problem p{n}) (:domain blocksworld) (:objects {} - block) (:init {init}) (:goal (on b0 b1)))",
        objs.join(" ")
    )
}

#[test]
fn blocksworld_action_counts() {
    // pickup and putdown per block, stack and unstack per ordered pair of distinct blocks
    for n in 1..=5 {
        let t = task(BLOCKS4, &blocks_problem(n.max(2)));
        let n = n.max(2);
        assert_eq!(t.actions().len(), 2 * n + 2 * n * (n - 1), "{n} blocks");
    }
}

/// Breadth-first exploration by the grounded successor generator and by the
/// lifted matcher must visit the same fact sets with the same edges.
fn compare_with_lifted(domain: &str, problem: &str, cap: usize) {
    let dom = parse_domain(domain).unwrap();
    let inst = parse_instance(problem, &dom).unwrap();
    let t = ground(&dom, &inst).unwrap();
    let mut seen = HashSet::new();
    let mut q = VecDeque::from([t.init().clone()]);
    seen.insert(t.init().clone());
    let mut visited = 0;
    while let Some(s) = q.pop_front() {
        visited += 1;
        if visited > cap {
            break;
        }
        let facts = facts_of(&t, &s);
        let mut grounded: Vec<BTreeSet<Fact>> = t
            .applicable_actions(&s)
            .into_iter()
            .map(|a| facts_of(&t, &t.apply(&s, a).unwrap()))
            .collect();
        let mut lifted = lifted_successors(&dom, &inst, &facts);
        grounded.sort();
        lifted.sort();
        assert_eq!(grounded, lifted, "successors of {facts:?}");
        for a in t.applicable_actions(&s) {
            let n = t.apply(&s, a).unwrap();
            if seen.insert(n.clone()) {
                q.push_back(n);
            }
        }
    }
}

#[test]
fn successors_match_lifted_oracle_on_bundled_domains() {
    let p = GenParams {
        blocks: 3,
        balls: 2,
        nuts: 1,
        spanners: 2,
        locations: 2,
        width: 3,
        height: 3,
        ..GenParams::default()
    };
    for d in Bundled::ALL {
        for g in generate(d, &p, 11, 3).unwrap().instances {
            compare_with_lifted(d.domain_pddl(), &g.pddl, 300);
        }
    }
}

#[test]
fn successors_match_lifted_oracle_on_four_predicate_blocksworld() {
    compare_with_lifted(BLOCKS4, &blocks_problem(4), 1000);
}

#[test]
fn reachable_state_counts() {
    // without handempty any number of blocks can be held: 13 towers of 3,
    // 3 held x 3 towers of 2, 3 pairs held, all 3 held
    let t = task(BLOCKS4, &blocks_problem(3));
    assert_eq!(reachable(&t, 10_000).unwrap().len(), 13 + 9 + 3 + 1);
}

#[test]
fn plan_validation_rejects_bad_plans() {
    let t = task(BLOCKS4, &blocks_problem(2));
    let pick = t.action_id("pickup", &["b0"]).unwrap();
    let stack = t.action_id("stack", &["b0", "b1"]).unwrap();
    assert!(t.validate_plan(&[pick, stack]));
    assert!(!t.validate_plan(&[pick]));
    assert!(!t.validate_plan(&[stack]));
    assert!(t.apply(t.init(), stack).is_err());
}
