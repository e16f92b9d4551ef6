mod common;

use std::collections::HashSet;

use common::bfs_distance;
use gsp_core::generators::{generate, Bundled, GenParams};
use gsp_core::grounding::ground;
use gsp_core::pddl::parse_instance;

#[test]
fn blocksworld_instances_are_distinct_and_solvable() {
    let p = GenParams {
        blocks: 4,
        ..GenParams::default()
    };
    let b = generate(Bundled::Blocksworld, &p, 3, 10).unwrap();
    assert_eq!(b.instances.len(), 10);
    assert!(!b.shortfall);
    let dom = Bundled::Blocksworld.domain();
    let mut seen = HashSet::new();
    for g in &b.instances {
        let inst = parse_instance(&g.pddl, &dom).unwrap();
        assert!(seen.insert((inst.init.clone(), inst.goal.clone())), "duplicate {}", g.name);
        let t = ground(&dom, &inst).unwrap();
        assert!(bfs_distance(&t, t.init()).is_some(), "{} unsolvable", g.name);
    }
}

#[test]
fn one_block_is_still_valid() {
    let p = GenParams {
        blocks: 1,
        ..GenParams::default()
    };
    let b = generate(Bundled::Blocksworld, &p, 0, 3).unwrap();
    let dom = Bundled::Blocksworld.domain();
    for g in &b.instances {
        let t = ground(&dom, &parse_instance(&g.pddl, &dom).unwrap()).unwrap();
        assert!(bfs_distance(&t, t.init()).is_some());
    }
}

#[test]
fn same_seed_same_files() {
    for d in Bundled::ALL {
        let p = GenParams::default();
        assert_eq!(generate(d, &p, 9, 4).unwrap(), generate(d, &p, 9, 4).unwrap());
    }
}

#[test]
fn every_domain_parses_and_solves() {
    let p = GenParams {
        width: 4,
        height: 4,
        ..GenParams::default()
    };
    for d in Bundled::ALL {
        let dom = d.domain();
        let b = generate(d, &p, 1, 5).unwrap();
        assert!(!b.instances.is_empty());
        for g in &b.instances {
            let t = ground(&dom, &parse_instance(&g.pddl, &dom).unwrap()).unwrap();
            assert!(bfs_distance(&t, t.init()).is_some(), "{}", g.name);
        }
    }
}

#[test]
fn unknown_domain_is_rejected() {
    assert!("logistics".parse::<Bundled>().is_err());
}
