use std::collections::BTreeMap;

use activefollow::behavior::{
    build_following_tree, tick, tick_traced, BehaviorError, BehaviorNode, DecoratorKind, Handlers, TickStatus,
};
use proptest::prelude::*;

const STATUSES: [TickStatus; 3] = [TickStatus::Success, TickStatus::Failure, TickStatus::Running];

/// Leaf outcomes are fixed per name; the context records every call.
#[derive(Default)]
struct Script {
    outcome: BTreeMap<String, TickStatus>,
    calls: Vec<String>,
}

fn handlers(names: &[String]) -> Handlers<Script> {
    let mut h = Handlers::new();
    for n in names {
        let key = n.clone();
        h = h.action(n, move |s: &mut Script| {
            s.calls.push(key.clone());
            s.outcome[&key]
        });
    }
    h
}

fn leaf_names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("a{i}")).collect()
}

/// Straightforward recursive evaluator used as the oracle.
fn reference(node: &BehaviorNode, s: &mut Script) -> TickStatus {
    match node {
        BehaviorNode::Fallback { children } => {
            for c in children {
                match reference(c, s) {
                    TickStatus::Failure => continue,
                    other => return other,
                }
            }
            TickStatus::Failure
        }
        BehaviorNode::Sequence { children } => {
            for c in children {
                match reference(c, s) {
                    TickStatus::Success => continue,
                    other => return other,
                }
            }
            TickStatus::Success
        }
        BehaviorNode::Parallel { success_threshold, children } => {
            let out: Vec<TickStatus> = children.iter().map(|c| reference(c, s)).collect();
            let ok = out.iter().filter(|x| **x == TickStatus::Success).count();
            let bad = out.iter().filter(|x| **x == TickStatus::Failure).count();
            if ok >= *success_threshold {
                TickStatus::Success
            } else if bad > children.len() - success_threshold {
                TickStatus::Failure
            } else {
                TickStatus::Running
            }
        }
        BehaviorNode::Decorator { decorator, child } => match (decorator, reference(child, s)) {
            (_, TickStatus::Running) => TickStatus::Running,
            (DecoratorKind::Succeeder, _) => TickStatus::Success,
            (DecoratorKind::Inverter, TickStatus::Success) => TickStatus::Failure,
            (DecoratorKind::Inverter, TickStatus::Failure) => TickStatus::Success,
        },
        BehaviorNode::Action { name } | BehaviorNode::Condition { name } => {
            s.calls.push(name.clone());
            s.outcome[name]
        }
    }
}

fn tree(leaves: usize) -> impl Strategy<Value = BehaviorNode> {
    let leaf = (0..leaves).prop_map(|i| BehaviorNode::action(format!("a{i}")));
    leaf.prop_recursive(4, 24, 4, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..4).prop_map(BehaviorNode::fallback),
            prop::collection::vec(inner.clone(), 1..4).prop_map(BehaviorNode::sequence),
            prop::collection::vec(inner.clone(), 1..4)
                .prop_flat_map(|cs| (1..=cs.len(), Just(cs)))
                .prop_map(|(m, cs)| BehaviorNode::parallel(m, cs)),
            inner.clone().prop_map(|c| BehaviorNode::decorator(DecoratorKind::Inverter, c)),
            inner.prop_map(|c| BehaviorNode::decorator(DecoratorKind::Succeeder, c)),
        ]
    })
}

proptest! {
    #[test]
    fn random_trees_match_the_reference(t in tree(4), outcomes in prop::collection::vec(0usize..3, 4)) {
        let names = leaf_names(4);
        let outcome: BTreeMap<String, TickStatus> =
            names.iter().cloned().zip(outcomes.iter().map(|&k| STATUSES[k])).collect();
        let mut got = Script { outcome: outcome.clone(), calls: Vec::new() };
        let mut want = Script { outcome, calls: Vec::new() };
        let mut h = handlers(&names);
        let mut trace = Vec::new();
        let status = tick_traced(&t, &mut got, &mut h, &mut trace).unwrap();
        prop_assert_eq!(status, reference(&t, &mut want));
        prop_assert_eq!(&got.calls, &want.calls);
        prop_assert_eq!(&trace, &want.calls);
    }

    #[test]
    fn tree_json_is_stable(t in tree(3)) {
        let text = serde_json::to_string(&t).unwrap();
        let back: BehaviorNode = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(serde_json::to_string(&back).unwrap(), text);
    }
}

#[test]
fn missing_handler_is_reported_before_ticking() {
    let names = leaf_names(1);
    let t = BehaviorNode::sequence(vec![BehaviorNode::action("a0"), BehaviorNode::action("ghost")]);
    let h = handlers(&names);
    match h.check(&t) {
        Err(BehaviorError::UnknownLeaf { name, .. }) => assert_eq!(name, "ghost"),
        other => panic!("expected unknown leaf, got {other:?}"),
    }
}

#[test]
fn malformed_tree_json_is_rejected() {
    assert!(serde_json::from_str::<BehaviorNode>(r#"{"type":"loop","children":[]}"#).is_err());
    let empty: BehaviorNode = serde_json::from_str(r#"{"type":"fallback","children":[]}"#).unwrap();
    assert!(matches!(empty.validate(), Err(BehaviorError::Malformed(_))));
}

#[test]
fn following_tree_runs_one_action_per_state() {
    let t = build_following_tree();
    for (identified, predicted, gaze, expected) in [
        (true, false, TickStatus::Failure, vec!["FollowTarget"]),
        (false, true, TickStatus::Failure, vec!["NavigateToPrediction"]),
        (false, false, TickStatus::Running, vec!["GazeSearch"]),
        (false, false, TickStatus::Failure, vec!["GazeSearch", "WaypointSearch"]),
    ] {
        let mut h: Handlers<Vec<&'static str>> = Handlers::new()
            .condition("TargetIdentified", move |_| identified)
            .condition("PredictionValid", move |_| predicted)
            .action("FollowTarget", |c: &mut Vec<&'static str>| {
                c.push("FollowTarget");
                TickStatus::Running
            })
            .action("NavigateToPrediction", |c: &mut Vec<&'static str>| {
                c.push("NavigateToPrediction");
                TickStatus::Running
            })
            .action("GazeSearch", move |c: &mut Vec<&'static str>| {
                c.push("GazeSearch");
                gaze
            })
            .action("WaypointSearch", |c: &mut Vec<&'static str>| {
                c.push("WaypointSearch");
                TickStatus::Running
            });
        let mut calls = Vec::new();
        assert_eq!(tick(&t, &mut calls, &mut h).unwrap(), TickStatus::Running);
        assert_eq!(calls, expected);
    }
}
