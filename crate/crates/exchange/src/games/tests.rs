use std::collections::BTreeSet;
use std::time::Instant;

use super::*;
use crate::core::{AgentId, Allocation, LinearOrder, ObjectId, Preference, Profile, SubAllocation};
use crate::domains::{enumerate_single_peaked, Domain, ProfileSpace};
use crate::rules::designator;

fn pref(r: &[usize]) -> Preference {
    Preference::from_indices(r).unwrap()
}

fn profile(rows: &[&[usize]]) -> Profile {
    Profile::from_rows(rows).unwrap()
}

/// The five-preference domain the millipede fixture is played over.
fn millipede_domain() -> Domain {
    Domain::from_rows(&[&[0, 2, 1], &[0, 1, 2], &[1, 0, 2], &[2, 1, 0], &[1, 2, 0]]).unwrap()
}

fn full_sp_domains(n: usize) -> Vec<Domain> {
    vec![enumerate_single_peaked(&LinearOrder::identity(n)); n]
}

#[test]
fn builder_single_agent() {
    let game = build_designator_game(1, &LinearOrder::identity(1)).unwrap();
    let root = game.decision(game.root()).unwrap();
    assert_eq!(root.actions.len(), 2);
    assert!(root.child(Action::Object(ObjectId(0))).is_some());
    assert!(root.child(Action::Pass).is_some());
    // Both branches end with the single agent keeping its endowment.
    for &(_, child) in &root.actions {
        let mut at = child;
        loop {
            match &game.node(at).unwrap().kind {
                NodeKind::Terminal(outcome) => {
                    assert_eq!(outcome, &Allocation::identity(1));
                    break;
                }
                NodeKind::Decision(d) => at = d.actions[0].1,
            }
        }
    }
}

#[test]
fn builder_root_has_two_actions() {
    let game = build_designator_game(3, &LinearOrder::identity(3)).unwrap();
    assert_eq!(game.decision(game.root()).unwrap().actions.len(), 2);
}

/// Recomputes the action set a phase-two label prescribes and compares with
/// the built node, for every labeled node of the game.
fn check_label_invariants(game: &GameForm, n: usize, order: &LinearOrder) {
    for id in game.node_ids() {
        let Some(d) = game.decision(id) else { continue };
        let label = d.label.as_ref().expect("designator games label every node");
        assert_eq!(label.mover, d.player);
        // Departed and remaining partition agents and objects.
        let mut agents: BTreeSet<AgentId> = label.departed.agents().collect();
        let mut objects: BTreeSet<ObjectId> = label.departed.objects().collect();
        for (a, o) in label.remaining.iter() {
            assert!(agents.insert(a), "agent {a:?} on both sides at node {id:?}");
            assert!(objects.insert(o), "object {o:?} on both sides at node {id:?}");
        }
        assert_eq!(agents.len(), n);
        assert_eq!(objects.len(), n);
        assert!(label.remaining.contains_agent(label.mover));
        match label.kappa {
            Phase::One => {
                for (a, o) in label.departed.iter().chain(label.remaining.iter()) {
                    assert_eq!(o, a.endowment(), "phase one holds endowments only");
                }
                let own = label.remaining.get(label.mover).unwrap();
                let expected: BTreeSet<Action> = [Action::Object(own), Action::Pass].into();
                let actual: BTreeSet<Action> = d.actions.iter().map(|&(a, _)| a).collect();
                assert_eq!(actual, expected, "phase-one action set at {id:?}");
            }
            Phase::Two => {
                let held = label.remaining.get(label.mover).unwrap();
                let mut expected: BTreeSet<Action> = BTreeSet::new();
                for o in label.remaining.objects() {
                    if order.leq(o, held) {
                        expected.insert(Action::Object(o));
                        for (cand, held_c) in label.remaining.iter() {
                            if order.leq(o, held_c) && order.lt(held_c, held) {
                                expected.insert(Action::ObjectAgent(o, cand));
                            }
                        }
                    }
                }
                let max = order.max_of(label.remaining.objects()).unwrap();
                if held != max {
                    expected.insert(Action::Pass);
                }
                let actual: BTreeSet<Action> = d.actions.iter().map(|&(a, _)| a).collect();
                assert_eq!(actual, expected, "phase-two action set at {id:?}");
            }
        }
    }
}

#[test]
fn builder_labels_and_action_sets() {
    for n in 1..=4 {
        let order = LinearOrder::identity(n);
        let game = build_designator_game(n, &order).unwrap();
        check_label_invariants(&game, n, &order);
    }
    // A scrambled order must satisfy the same invariants.
    let order = LinearOrder::from_indices(&[2, 0, 1]).unwrap();
    let game = build_designator_game(3, &order).unwrap();
    check_label_invariants(&game, 3, &order);
}

#[test]
fn play_reaches_designator_outcome_on_table4() {
    let order = LinearOrder::identity(4);
    let game = build_designator_game(4, &order).unwrap();
    let plans = greedy_plans(&game, &full_sp_domains(4)).unwrap();
    let p = profile(&[&[3, 2, 1, 0], &[3, 2, 1, 0], &[0, 1, 2, 3], &[0, 1, 2, 3]]);
    let strategies: Vec<&Strategy> =
        p.agents().map(|a| plans.strategy(a, p.pref(a)).unwrap()).collect();
    let played = game.play(&strategies).unwrap();
    assert_eq!(played.indices(), vec![3, 2, 0, 1]);
}

#[test]
fn play_single_terminal_game() {
    let game = parse_game(r#"{"players":2,"nodes":[{"id":0,"outcome":[1,0]}]}"#).unwrap();
    let empty = Strategy::new();
    let out = game.play(&[&empty, &empty]).unwrap();
    assert_eq!(out.indices(), vec![1, 0]);
}

#[test]
fn play_missing_strategy_entry() {
    let game = three_agent_millipede();
    let empty = Strategy::new();
    assert_eq!(
        game.play(&[&empty, &empty, &empty]).unwrap_err(),
        GameError::MissingStrategy(0)
    );
}

#[test]
fn millipede_greedy_play_matches_known_run() {
    // Preferences (o_k>o_j>o_i, o_i>o_j>o_k, o_i>o_k>o_j): agent 1 passes,
    // agent 2 clinches o_1, agent 1 passes again, agent 3 clinches o_3.
    let game = three_agent_millipede();
    let p = profile(&[&[2, 1, 0], &[0, 1, 2], &[0, 2, 1]]);
    let strategies: Vec<Strategy> = p
        .agents()
        .map(|a| greedy_strategy(&game, a, p.pref(a)).unwrap())
        .collect();
    let refs: Vec<&Strategy> = strategies.iter().collect();
    assert_eq!(game.play(&refs).unwrap().indices(), vec![1, 0, 2]);
}

#[test]
fn millipede_greedy_clinches_top_feasible() {
    // At the node after two passes every object is clinchable; the greedy
    // choice for o_i > o_k > o_j is o_i.
    let game = three_agent_millipede();
    let s = greedy_strategy(&game, AgentId(2), &pref(&[0, 2, 1])).unwrap();
    assert_eq!(s.get(&NodeId(6)), Some(&Action::Object(ObjectId(0))));
}

#[test]
fn greedy_clinches_endowment_for_null_preference() {
    let order = LinearOrder::identity(3);
    let game = build_designator_game(3, &order).unwrap();
    let s = greedy_strategy(&game, AgentId(1), &pref(&[1, 0, 2])).unwrap();
    assert_eq!(s.get(&game.root()), None); // root belongs to agent 0
    let own_node = game
        .decision_nodes_of(AgentId(1))
        .into_iter()
        .find(|&id| {
            game.decision(id).unwrap().label.as_ref().unwrap().kappa == Phase::One
        })
        .unwrap();
    assert_eq!(s.get(&own_node), Some(&Action::Object(ObjectId(1))));
}

#[test]
fn feasible_set_examples() {
    let game = three_agent_millipede();
    // Terminal-adjacent: after clinching o_i at the root every continuation
    // gives agent i the object o_i.
    let s = greedy_strategy(&game, AgentId(0), &pref(&[0, 2, 1])).unwrap();
    let fs = feasible_set(&game, AgentId(0), game.root(), &s).unwrap();
    assert_eq!(fs, BTreeSet::from([ObjectId(0)]));

    // Designator game, agent 1 with the fully descending preference: the
    // greedy pass at the root leaves both extremes attainable.
    let order = LinearOrder::identity(4);
    let game = build_designator_game(4, &order).unwrap();
    let plans = greedy_plans(&game, &full_sp_domains(4)).unwrap();
    let pruned = prune(&game, &plans).unwrap();
    let descending = pref(&[3, 2, 1, 0]);
    let s = greedy_strategy(&pruned, AgentId(0), &descending).unwrap();
    let fs = feasible_set(&pruned, AgentId(0), pruned.root(), &s).unwrap();
    assert!(fs.contains(&ObjectId(0)) && fs.contains(&ObjectId(3)), "{fs:?}");

    // Off-path and wrong-player nodes are rejected.
    let game3 = three_agent_millipede();
    let s0 = greedy_strategy(&game3, AgentId(0), &pref(&[0, 2, 1])).unwrap();
    assert_eq!(
        feasible_set(&game3, AgentId(0), NodeId(9), &s0).unwrap_err(),
        GameError::NotAgentsNode(9)
    );
    assert_eq!(
        // Node 4 sits on the pass branch, unreachable after clinching.
        feasible_set(&game3, AgentId(0), NodeId(4), &s0).unwrap_err(),
        GameError::NodeOffPath(4)
    );
}

#[test]
fn earliest_departure_cases() {
    let game = three_agent_millipede();
    let s1 = greedy_strategy(&game, AgentId(1), &pref(&[0, 2, 1])).unwrap();
    assert!(earliest_departures(&game, AgentId(1), &s1, &s1).unwrap().is_empty());

    // Greedy strategies of agent j for o_i>o_k>o_j versus o_k>o_j>o_i
    // agree at node 1 (both pass) and differ first at node 2.
    let s2 = greedy_strategy(&game, AgentId(1), &pref(&[2, 1, 0])).unwrap();
    assert_eq!(
        earliest_departures(&game, AgentId(1), &s1, &s2).unwrap(),
        BTreeSet::from([NodeId(2)])
    );

    // Strategies differing only at the root depart only there.
    let mut s3 = greedy_strategy(&game, AgentId(0), &pref(&[0, 2, 1])).unwrap();
    let s4 = s3.clone();
    s3.insert(NodeId(0), Action::Pass);
    assert_eq!(
        earliest_departures(&game, AgentId(0), &s3, &s4).unwrap(),
        BTreeSet::from([NodeId(0)])
    );
}

#[test]
fn dominance_violation_for_root_clinch_under_high_peak() {
    // With o_k>o_j>o_i the greedy pass guarantees at least o_j, while
    // clinching o_i at the root caps the agent at o_i.
    let game = three_agent_millipede();
    let p4 = pref(&[2, 1, 0]);
    let mut s = greedy_strategy(&game, AgentId(0), &p4).unwrap();
    s.insert(NodeId(0), Action::Object(ObjectId(0)));
    let violation = obviously_dominant_node_wise(&game, AgentId(0), &s, &p4)
        .unwrap()
        .expect("clinching the bottom object is not obviously dominant");
    assert_eq!(violation.node, NodeId(0));
    assert_eq!(violation.truthful_worst, ObjectId(0));
}

#[test]
fn dominance_vacuous_when_agent_never_moves() {
    // Player 1 never moves in this one-shot game.
    let game = parse_game(
        r#"{"players":2,"nodes":[
            {"id":0,"player":0,"actions":[{"kind":"object","object":0,"child":1},{"kind":"object","object":1,"child":2}]},
            {"id":1,"outcome":[0,1]},
            {"id":2,"outcome":[1,0]}]}"#,
    )
    .unwrap();
    let empty = Strategy::new();
    assert_eq!(
        obviously_dominant_node_wise(&game, AgentId(1), &empty, &pref(&[0, 1])).unwrap(),
        None
    );
}

/// Tree equality up to node renumbering: same players, and the trees match
/// recursively from the roots (player, label, the action set, and matched
/// subtrees; terminal outcomes equal).
fn isomorphic(g1: &GameForm, g2: &GameForm) -> bool {
    fn go(g1: &GameForm, a: NodeId, g2: &GameForm, b: NodeId) -> bool {
        match (&g1.node(a).unwrap().kind, &g2.node(b).unwrap().kind) {
            (NodeKind::Terminal(x), NodeKind::Terminal(y)) => x == y,
            (NodeKind::Decision(x), NodeKind::Decision(y)) => {
                x.player == y.player
                    && x.label == y.label
                    && x.actions.len() == y.actions.len()
                    && x.actions.iter().all(|&(action, child)| {
                        y.child(action).is_some_and(|c2| go(g1, child, g2, c2))
                    })
            }
            _ => false,
        }
    }
    g1.players() == g2.players() && go(g1, g1.root(), g2, g2.root())
}

#[test]
fn millipede_fixture_is_prune_fixed_point() {
    let game = three_agent_millipede();
    let domains = vec![millipede_domain(); 3];
    let plans = greedy_plans(&game, &domains).unwrap();
    let pruned = prune(&game, &plans).unwrap();
    assert!(isomorphic(&pruned, &game));
    // Exact idempotence on the already pruned game: the rebuild numbering
    // is deterministic.
    let plans2 = greedy_plans(&pruned, &domains).unwrap();
    assert_eq!(prune(&pruned, &plans2).unwrap(), pruned);
}

#[test]
fn prune_shrinks_designator_game_and_preserves_plays() {
    let order = LinearOrder::identity(3);
    let game = build_designator_game(3, &order).unwrap();
    let domains = full_sp_domains(3);
    let plans = greedy_plans(&game, &domains).unwrap();
    let pruned = prune(&game, &plans).unwrap();
    assert!(pruned.len() < game.len(), "{} !< {}", pruned.len(), game.len());
    let pruned_plans = greedy_plans(&pruned, &domains).unwrap();
    let space = ProfileSpace::new(domains).unwrap();
    for (_, p) in space.iter() {
        let full: Vec<&Strategy> =
            p.agents().map(|a| plans.strategy(a, p.pref(a)).unwrap()).collect();
        let small: Vec<&Strategy> =
            p.agents().map(|a| pruned_plans.strategy(a, p.pref(a)).unwrap()).collect();
        assert_eq!(game.play(&full).unwrap(), pruned.play(&small).unwrap(), "at {p:?}");
    }
}

#[test]
fn verify_osp_trivial_constant_game() {
    let game = parse_game(r#"{"players":3,"nodes":[{"id":0,"outcome":[0,1,2]}]}"#).unwrap();
    let single = Domain::from_rows(&[&[0, 1, 2]]).unwrap();
    let domains = vec![single; 3];
    let plans = greedy_plans(&game, &domains).unwrap();
    let report = verify_osp_implementation(
        &game,
        &plans,
        |p| Ok(Allocation::identity(p.n())),
        &domains,
    )
    .unwrap();
    assert!(report.passed());
    assert_eq!(report.profiles_checked, 1);
}

#[test]
fn designator_game_implements_designator_n3() {
    let order = LinearOrder::identity(3);
    let game = build_designator_game(3, &order).unwrap();
    let domains = full_sp_domains(3);
    let plans = greedy_plans(&game, &domains).unwrap();
    let pruned = prune(&game, &plans).unwrap();
    let pruned_plans = greedy_plans(&pruned, &domains).unwrap();
    let report = verify_osp_implementation(
        &pruned,
        &pruned_plans,
        |p| designator(p, &order).map(|(a, _)| a),
        &domains,
    )
    .unwrap();
    assert!(report.passed(), "{report:?}");
    assert_eq!(report.profiles_checked, 64);
    // Outcome equality also holds before pruning.
    let unpruned = verify_osp_implementation(
        &game,
        &plans,
        |p| designator(p, &order).map(|(a, _)| a),
        &domains,
    )
    .unwrap();
    assert!(unpruned.outcome_mismatches.is_empty());
}

#[test]
fn designator_game_implements_designator_n4() {
    let start = Instant::now();
    let order = LinearOrder::identity(4);
    let game = build_designator_game(4, &order).unwrap();
    let domains = full_sp_domains(4);
    let plans = greedy_plans(&game, &domains).unwrap();
    let pruned = prune(&game, &plans).unwrap();
    let pruned_plans = greedy_plans(&pruned, &domains).unwrap();
    let report = verify_osp_implementation(
        &pruned,
        &pruned_plans,
        |p| designator(p, &order).map(|(a, _)| a),
        &domains,
    )
    .unwrap();
    assert!(report.passed(), "{report:?}");
    assert_eq!(report.profiles_checked, 4096);
    assert_eq!(report.dominance_checks, 32);
    assert!(pruned.len() < game.len());
    // Kept actions are greedy choices, so no node can offer more of them
    // than there are preferences.
    for id in pruned.node_ids() {
        if let Some(d) = pruned.decision(id) {
            assert!(d.actions.len() <= 8, "node {id:?} keeps {} actions", d.actions.len());
        }
    }
    eprintln!(
        "n=4 game: {} nodes unpruned, {} pruned, verified in {:?}",
        game.len(),
        pruned.len(),
        start.elapsed()
    );
}

#[test]
fn designator_game_scrambled_order_n3() {
    let order = LinearOrder::from_indices(&[1, 2, 0]).unwrap();
    let game = build_designator_game(3, &order).unwrap();
    let domains = vec![enumerate_single_peaked(&order); 3];
    let plans = greedy_plans(&game, &domains).unwrap();
    let pruned = prune(&game, &plans).unwrap();
    let pruned_plans = greedy_plans(&pruned, &domains).unwrap();
    let report = verify_osp_implementation(
        &pruned,
        &pruned_plans,
        |p| designator(p, &order).map(|(a, _)| a),
        &domains,
    )
    .unwrap();
    assert!(report.passed(), "{report:?}");
}

#[test]
fn game_json_round_trip() {
    let order = LinearOrder::identity(3);
    let game = build_designator_game(3, &order).unwrap();
    let json = crate::games::form::game_to_json(&game);
    let back = parse_game(&json).unwrap();
    assert_eq!(back, game);
}

#[test]
fn parse_rejects_malformed_games() {
    assert!(parse_game(r#"{"players":2,"nodes":[]}"#).is_err());
    // Node with both actions and outcome.
    assert!(parse_game(
        r#"{"players":1,"nodes":[{"id":0,"player":0,"actions":[{"kind":"pass","child":0}],"outcome":[0]}]}"#
    )
    .is_err());
    // Child points back at the root: not a tree.
    assert!(parse_game(
        r#"{"players":1,"nodes":[{"id":0,"player":0,"actions":[{"kind":"pass","child":0}]}]}"#
    )
    .is_err());
    // Label whose remaining side does not hold the mover.
    assert!(parse_game(
        r#"{"players":2,"nodes":[
            {"id":0,"player":0,
             "label":{"kappa":"I","hat":[[0,0]],"bar":[[1,1]],"mover":0},
             "actions":[{"kind":"pass","child":1}]},
            {"id":1,"outcome":[0,1]}]}"#
    )
    .is_err());
    // Label repeating an object across departed and remaining.
    assert!(parse_game(
        r#"{"players":2,"nodes":[
            {"id":0,"player":0,
             "label":{"kappa":"I","hat":[[1,0]],"bar":[[0,0]],"mover":0},
             "actions":[{"kind":"pass","child":1}]},
            {"id":1,"outcome":[0,1]}]}"#
    )
    .is_err());
}

#[test]
fn size_guard_rejects_runaway_builds() {
    let order = LinearOrder::identity(6);
    assert_eq!(
        build_designator_game_with_limit(6, &order, 10_000).unwrap_err(),
        GameError::SizeLimit { limit: 10_000 }
    );
    const _: () = assert!(MAX_GAME_NODES >= 1_000_000);
}

#[test]
fn phase2_entry_recomputed_on_parse() {
    let order = LinearOrder::identity(3);
    let game = build_designator_game(3, &order).unwrap();
    let back = parse_game(&crate::games::form::game_to_json(&game)).unwrap();
    for id in game.node_ids() {
        assert_eq!(
            game.node(id).unwrap().phase2_entry,
            back.node(id).unwrap().phase2_entry,
            "entry mismatch at {id:?}"
        );
    }
    let entry_nodes = game
        .node_ids()
        .filter(|&id| game.node(id).unwrap().phase2_entry.is_some())
        .count();
    assert!(entry_nodes > 0);
}

#[test]
fn suballocation_helpers_in_labels() {
    let order = LinearOrder::identity(4);
    let game = build_designator_game(4, &order).unwrap();
    // Every phase-two entry equals the remaining sub-allocation of the
    // first phase-two node on its path, which holds endowments only.
    for id in game.node_ids() {
        if let Some(entry) = &game.node(id).unwrap().phase2_entry {
            for (a, o) in entry.iter() {
                assert_eq!(o, a.endowment());
            }
            let d = game.decision(id).unwrap();
            let label = d.label.as_ref().unwrap();
            assert_eq!(label.kappa, Phase::Two);
            for o in label.remaining.objects() {
                assert!(entry.objects().any(|e| e == o));
            }
        }
    }
    let _ = SubAllocation::empty();
}
