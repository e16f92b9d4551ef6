mod common;

use std::sync::Arc;

use common::*;
use gsp_core::generators::{generate, Bundled, GenParams};
use gsp_core::grounding::{ground, GroundTask};
use gsp_core::heuristics::{h_max, HMaxQ};
use gsp_core::pddl::parse_instance;
use gsp_core::search::{wastar_solve, Budget};

pub fn bundled_tasks(d: Bundled, p: &GenParams, seed: u64, n: usize) -> Vec<Arc<GroundTask>> {
    let dom = d.domain();
    generate(d, p, seed, n)
        .unwrap()
        .instances
        .iter()
        .map(|g| Arc::new(ground(&dom, &parse_instance(&g.pddl, &dom).unwrap()).unwrap()))
        .collect()
}

#[test]
fn admissible_on_every_reachable_state() {
    let p = GenParams {
        blocks: 4,
        balls: 3,
        width: 4,
        height: 4,
        ..GenParams::default()
    };
    for d in Bundled::ALL {
        for t in bundled_tasks(d, &p, 21, 10) {
            let states = reachable(&t, 10_000).expect("small instance");
            let v = value_iteration(&t, &states);
            for s in &states {
                let h = h_max(&t, s);
                let cost = -v[s];
                assert!(h <= cost, "{}: h_max {h} above optimal cost {cost}", t.name());
                if t.is_goal(s) {
                    assert_eq!(h, 0.0);
                }
            }
        }
    }
}

#[test]
fn unreachable_goal_is_reported_unsolved() {
    let t = go_task("cut", 3, &[(0, 1), (1, 0)], 0, 2);
    assert_eq!(h_max(&t, t.init()), f64::INFINITY);
    let r = wastar_solve(&t, &HMaxQ, 2.0, 1, &Budget::expansions(100));
    assert!(!r.solved());
}

#[test]
fn guided_search_finds_valid_plans() {
    for t in bundled_tasks(Bundled::Blocksworld, &GenParams::default(), 5, 5) {
        let r = wastar_solve(t.as_ref(), &HMaxQ, 1.0, 1, &Budget::expansions(10_000));
        assert!(r.solved());
        assert!(t.validate_plan(r.plan.as_ref().unwrap()));
    }
}
