pub const BLOCKSWORLD: &str = "(define (domain blocksworld)
  (:requirements :strips :typing)
  (:types block)
  (:predicates (on ?x - block ?y - block) (ontable ?x - block) (clear ?x - block)
               (handempty) (holding ?x - block))
  (:action pick-up
    :parameters (?x - block)
    :precondition (and (clear ?x) (ontable ?x) (handempty))
    :effect (and (holding ?x) (not (ontable ?x)) (not (clear ?x)) (not (handempty))))
  (:action put-down
    :parameters (?x - block)
    :precondition (holding ?x)
    :effect (and (ontable ?x) (clear ?x) (handempty) (not (holding ?x))))
  (:action stack
    :parameters (?x - block ?y - block)
    :precondition (and (holding ?x) (clear ?y))
    :effect (and (on ?x ?y) (clear ?x) (handempty) (not (holding ?x)) (not (clear ?y))))
  (:action unstack
    :parameters (?x - block ?y - block)
    :precondition (and (on ?x ?y) (clear ?x) (handempty))
    :effect (and (holding ?x) (clear ?y) (not (on ?x ?y)) (not (clear ?x)) (not (handempty)))))
";

pub const GRIPPER: &str = "(define (domain gripper)
  (:requirements :strips :typing)
  (:types room ball gripper)
  (:predicates (at-robby ?r - room) (at ?b - ball ?r - room) (free ?g - gripper)
               (carry ?b - ball ?g - gripper))
  (:action move
    :parameters (?from - room ?to - room)
    :precondition (at-robby ?from)
    :effect (and (at-robby ?to) (not (at-robby ?from))))
  (:action pick
    :parameters (?b - ball ?r - room ?g - gripper)
    :precondition (and (at ?b ?r) (at-robby ?r) (free ?g))
    :effect (and (carry ?b ?g) (not (at ?b ?r)) (not (free ?g))))
  (:action drop
    :parameters (?b - ball ?r - room ?g - gripper)
    :precondition (and (carry ?b ?g) (at-robby ?r))
    :effect (and (at ?b ?r) (free ?g) (not (carry ?b ?g)))))
";

pub const SPANNER: &str = "(define (domain spanner)
  (:requirements :strips :typing)
  (:types location locatable - object
          man nut spanner - locatable)
  (:predicates (at ?m - locatable ?l - location) (carrying ?m - man ?s - spanner)
               (useable ?s - spanner) (link ?l1 - location ?l2 - location)
               (tightened ?n - nut) (loose ?n - nut))
  (:action walk
    :parameters (?start - location ?end - location ?m - man)
    :precondition (and (at ?m ?start) (link ?start ?end))
    :effect (and (at ?m ?end) (not (at ?m ?start))))
  (:action pickup_spanner
    :parameters (?l - location ?s - spanner ?m - man)
    :precondition (and (at ?m ?l) (at ?s ?l))
    :effect (and (carrying ?m ?s) (not (at ?s ?l))))
  (:action tighten_nut
    :parameters (?l - location ?s - spanner ?m - man ?n - nut)
    :precondition (and (at ?m ?l) (at ?n ?l) (carrying ?m ?s) (useable ?s) (loose ?n))
    :effect (and (tightened ?n) (not (loose ?n)) (not (useable ?s)))))
";

pub const MINI_SOKOBAN: &str = "(define (domain mini-sokoban)
  (:requirements :strips :typing)
  (:types location stone)
  (:predicates (at-robot ?l - location) (at ?s - stone ?l - location) (clear ?l - location)
               (adjacent ?from - location ?to - location)
               (in-line ?a - location ?b - location ?c - location)
               (is-goal ?l - location) (is-nongoal ?l - location) (at-goal ?s - stone))
  (:action move
    :parameters (?from - location ?to - location)
    :precondition (and (at-robot ?from) (clear ?to) (adjacent ?from ?to))
    :effect (and (at-robot ?to) (clear ?from) (not (at-robot ?from)) (not (clear ?to))))
  (:action push-to-goal
    :parameters (?s - stone ?rpos - location ?from - location ?to - location)
    :precondition (and (at-robot ?rpos) (at ?s ?from) (clear ?to) (in-line ?rpos ?from ?to) (is-goal ?to))
    :effect (and (at-robot ?from) (at ?s ?to) (clear ?rpos) (at-goal ?s)
                 (not (at-robot ?rpos)) (not (at ?s ?from)) (not (clear ?to))))
  (:action push-to-nongoal
    :parameters (?s - stone ?rpos - location ?from - location ?to - location)
    :precondition (and (at-robot ?rpos) (at ?s ?from) (clear ?to) (in-line ?rpos ?from ?to) (is-nongoal ?to))
    :effect (and (at-robot ?from) (at ?s ?to) (clear ?rpos)
                 (not (at-robot ?rpos)) (not (at ?s ?from)) (not (clear ?to)) (not (at-goal ?s)))))
";
