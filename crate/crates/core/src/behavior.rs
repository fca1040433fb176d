//! Behavior-tree engine and the person-following tree.
//!
//! Semantics are memoryless: every tick starts at the root and nothing is
//! resumed from a previous tick. Leaves dispatch to handlers registered by
//! name; handlers receive a mutable context and must not block.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::control::{GazeCommand, NavCommand};
use crate::geometry::Point2;
use crate::identity::BeliefGrid;
use crate::predict::PredictedPoint;

pub const TARGET_IDENTIFIED: &str = "TargetIdentified";
pub const FOLLOW_TARGET: &str = "FollowTarget";
pub const PREDICTION_VALID: &str = "PredictionValid";
pub const NAVIGATE_TO_PREDICTION: &str = "NavigateToPrediction";
pub const GAZE_SEARCH: &str = "GazeSearch";
pub const WAYPOINT_SEARCH: &str = "WaypointSearch";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BehaviorError {
    #[error("no handler registered for {kind} leaf {name:?}")]
    UnknownLeaf { kind: LeafKind, name: String },
    #[error("malformed tree: {0}")]
    Malformed(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TickStatus {
    Running,
    Success,
    Failure,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DecoratorKind {
    Inverter,
    Succeeder,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafKind {
    Action,
    Condition,
}

impl fmt::Display for LeafKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LeafKind::Action => "action",
            LeafKind::Condition => "condition",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum BehaviorNode {
    Fallback { children: Vec<BehaviorNode> },
    Sequence { children: Vec<BehaviorNode> },
    /// Succeeds once `success_threshold` children succeed.
    Parallel { success_threshold: usize, children: Vec<BehaviorNode> },
    Decorator { decorator: DecoratorKind, child: Box<BehaviorNode> },
    Action { name: String },
    Condition { name: String },
}

impl BehaviorNode {
    pub fn fallback(children: Vec<BehaviorNode>) -> Self {
        Self::Fallback { children }
    }

    pub fn sequence(children: Vec<BehaviorNode>) -> Self {
        Self::Sequence { children }
    }

    pub fn parallel(success_threshold: usize, children: Vec<BehaviorNode>) -> Self {
        Self::Parallel { success_threshold, children }
    }

    pub fn decorator(decorator: DecoratorKind, child: BehaviorNode) -> Self {
        Self::Decorator { decorator, child: Box::new(child) }
    }

    pub fn action(name: impl Into<String>) -> Self {
        Self::Action { name: name.into() }
    }

    pub fn condition(name: impl Into<String>) -> Self {
        Self::Condition { name: name.into() }
    }

    pub fn children(&self) -> Vec<&BehaviorNode> {
        match self {
            Self::Fallback { children } | Self::Sequence { children } | Self::Parallel { children, .. } => {
                children.iter().collect()
            }
            Self::Decorator { child, .. } => vec![child],
            Self::Action { .. } | Self::Condition { .. } => Vec::new(),
        }
    }

    /// Pre-order traversal.
    pub fn walk(&self) -> Vec<&BehaviorNode> {
        let mut out = vec![self];
        for c in self.children() {
            out.extend(c.walk());
        }
        out
    }

    pub fn count_fallbacks(&self) -> usize {
        self.walk().iter().filter(|n| matches!(n, Self::Fallback { .. })).count()
    }

    pub fn count_sequences(&self) -> usize {
        self.walk().iter().filter(|n| matches!(n, Self::Sequence { .. })).count()
    }

    /// `(kind, name)` of every leaf, in pre-order.
    pub fn leaves(&self) -> Vec<(LeafKind, &str)> {
        self.walk()
            .into_iter()
            .filter_map(|n| match n {
                Self::Action { name } => Some((LeafKind::Action, name.as_str())),
                Self::Condition { name } => Some((LeafKind::Condition, name.as_str())),
                _ => None,
            })
            .collect()
    }

    pub fn validate(&self) -> Result<(), BehaviorError> {
        for n in self.walk() {
            match n {
                Self::Fallback { children } | Self::Sequence { children } if children.is_empty() => {
                    return Err(BehaviorError::Malformed("composite node without children".into()));
                }
                Self::Parallel { success_threshold, children } => {
                    if children.is_empty() || *success_threshold == 0 || *success_threshold > children.len() {
                        return Err(BehaviorError::Malformed(format!(
                            "parallel threshold {success_threshold} of {} children",
                            children.len()
                        )));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}

pub type Handler<C> = Box<dyn FnMut(&mut C) -> TickStatus>;

/// Leaf handlers, keyed by kind and name.
pub struct Handlers<C> {
    actions: BTreeMap<String, Handler<C>>,
    conditions: BTreeMap<String, Handler<C>>,
}

impl<C> Default for Handlers<C> {
    fn default() -> Self {
        Self { actions: BTreeMap::new(), conditions: BTreeMap::new() }
    }
}

impl<C> Handlers<C> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn action(mut self, name: &str, f: impl FnMut(&mut C) -> TickStatus + 'static) -> Self {
        self.actions.insert(name.to_string(), Box::new(f));
        self
    }

    /// Registers a condition from a predicate.
    pub fn condition(mut self, name: &str, mut f: impl FnMut(&mut C) -> bool + 'static) -> Self {
        self.conditions.insert(
            name.to_string(),
            Box::new(move |c| if f(c) { TickStatus::Success } else { TickStatus::Failure }),
        );
        self
    }

    /// Fails if any leaf of `tree` has no handler.
    pub fn check(&self, tree: &BehaviorNode) -> Result<(), BehaviorError> {
        tree.validate()?;
        for (kind, name) in tree.leaves() {
            let map = match kind {
                LeafKind::Action => &self.actions,
                LeafKind::Condition => &self.conditions,
            };
            if !map.contains_key(name) {
                return Err(BehaviorError::UnknownLeaf { kind, name: name.to_string() });
            }
        }
        Ok(())
    }
}

/// One root-to-leaf pass.
pub fn tick<C>(node: &BehaviorNode, ctx: &mut C, handlers: &mut Handlers<C>) -> Result<TickStatus, BehaviorError> {
    tick_traced(node, ctx, handlers, &mut Vec::new())
}

/// Like [`tick`], appending the name of every action invoked to `trace`.
pub fn tick_traced<C>(
    node: &BehaviorNode,
    ctx: &mut C,
    handlers: &mut Handlers<C>,
    trace: &mut Vec<String>,
) -> Result<TickStatus, BehaviorError> {
    match node {
        BehaviorNode::Fallback { children } => {
            for c in children {
                let s = tick_traced(c, ctx, handlers, trace)?;
                if s != TickStatus::Failure {
                    return Ok(s);
                }
            }
            Ok(TickStatus::Failure)
        }
        BehaviorNode::Sequence { children } => {
            for c in children {
                let s = tick_traced(c, ctx, handlers, trace)?;
                if s != TickStatus::Success {
                    return Ok(s);
                }
            }
            Ok(TickStatus::Success)
        }
        BehaviorNode::Parallel { success_threshold, children } => {
            let mut statuses = Vec::with_capacity(children.len());
            for c in children {
                statuses.push(tick_traced(c, ctx, handlers, trace)?);
            }
            Ok(parallel_policy(*success_threshold, &statuses))
        }
        BehaviorNode::Decorator { decorator, child } => {
            let s = tick_traced(child, ctx, handlers, trace)?;
            Ok(match (decorator, s) {
                (_, TickStatus::Running) => TickStatus::Running,
                (DecoratorKind::Inverter, TickStatus::Success) => TickStatus::Failure,
                (DecoratorKind::Inverter, TickStatus::Failure) => TickStatus::Success,
                (DecoratorKind::Succeeder, _) => TickStatus::Success,
            })
        }
        BehaviorNode::Action { name } => {
            let h = handlers
                .actions
                .get_mut(name)
                .ok_or_else(|| BehaviorError::UnknownLeaf { kind: LeafKind::Action, name: name.clone() })?;
            trace.push(name.clone());
            Ok(h(ctx))
        }
        BehaviorNode::Condition { name } => {
            let h = handlers
                .conditions
                .get_mut(name)
                .ok_or_else(|| BehaviorError::UnknownLeaf { kind: LeafKind::Condition, name: name.clone() })?;
            Ok(h(ctx))
        }
    }
}

/// M-of-N: success at `m` successes, failure once `m` is out of reach.
pub fn parallel_policy(m: usize, statuses: &[TickStatus]) -> TickStatus {
    let ok = statuses.iter().filter(|s| **s == TickStatus::Success).count();
    let failed = statuses.iter().filter(|s| **s == TickStatus::Failure).count();
    if ok >= m {
        TickStatus::Success
    } else if statuses.len() - failed < m {
        TickStatus::Failure
    } else {
        TickStatus::Running
    }
}

/// Follow when identified, else chase the prediction, else search by gaze and
/// then by way-point.
pub fn build_following_tree() -> BehaviorNode {
    BehaviorNode::fallback(vec![
        BehaviorNode::sequence(vec![BehaviorNode::condition(TARGET_IDENTIFIED), BehaviorNode::action(FOLLOW_TARGET)]),
        BehaviorNode::sequence(vec![
            BehaviorNode::condition(PREDICTION_VALID),
            BehaviorNode::action(NAVIGATE_TO_PREDICTION),
        ]),
        BehaviorNode::fallback(vec![BehaviorNode::action(GAZE_SEARCH), BehaviorNode::action(WAYPOINT_SEARCH)]),
    ])
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("command slot already written this tick")]
pub struct SlotTaken;

/// Holds at most one value per tick.
#[derive(Clone, Debug, PartialEq)]
pub struct CommandSlot<T> {
    value: Option<T>,
}

impl<T> Default for CommandSlot<T> {
    fn default() -> Self {
        Self { value: None }
    }
}

impl<T> CommandSlot<T> {
    pub fn set(&mut self, v: T) -> Result<(), SlotTaken> {
        if self.value.is_some() {
            return Err(SlotTaken);
        }
        self.value = Some(v);
        Ok(())
    }

    pub fn get(&self) -> Option<&T> {
        self.value.as_ref()
    }

    pub fn take(&mut self) -> Option<T> {
        self.value.take()
    }

    pub fn is_set(&self) -> bool {
        self.value.is_some()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PredictionSlot {
    pub points: Vec<PredictedPoint>,
    /// Simulation time the prediction was made.
    pub made_at: f64,
    /// Set once the robot reaches the predicted goal.
    pub consumed: bool,
}

impl PredictionSlot {
    /// Last point flagged valid.
    pub fn goal(&self) -> Option<Point2> {
        self.points.iter().rev().find(|p| p.valid).map(|p| Point2::new(p.x, p.y))
    }
}

/// Shared state between perception and the tree's leaves.
#[derive(Clone, Debug, Default)]
pub struct Blackboard {
    pub target_visible: bool,
    pub target_identified: bool,
    /// Position and velocity of the identified target.
    pub target_estimate: Option<(Point2, Point2)>,
    pub prediction: Option<PredictionSlot>,
    pub waypoint: Option<Point2>,
    pub belief: Option<Arc<BeliefGrid>>,
    pub nav: CommandSlot<NavCommand>,
    pub gaze: CommandSlot<GazeCommand>,
}

impl Blackboard {
    /// Empties the command slots before a tick.
    pub fn begin_tick(&mut self) {
        self.nav = CommandSlot::default();
        self.gaze = CommandSlot::default();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use TickStatus::*;

    #[derive(Default)]
    struct Counter {
        calls: BTreeMap<String, usize>,
    }

    fn counting(name: &'static str, s: TickStatus) -> impl FnMut(&mut Counter) -> TickStatus {
        move |c: &mut Counter| {
            *c.calls.entry(name.into()).or_default() += 1;
            s
        }
    }

    #[test]
    fn fallback_short_circuits() {
        let tree = BehaviorNode::fallback(vec![BehaviorNode::action("ok"), BehaviorNode::action("x")]);
        let mut h = Handlers::new().action("ok", counting("ok", Success)).action("x", counting("x", Success));
        let mut c = Counter::default();
        assert_eq!(tick(&tree, &mut c, &mut h).unwrap(), Success);
        assert_eq!(c.calls.get("x"), None);
    }

    #[test]
    fn sequence_stops_at_running() {
        let tree = BehaviorNode::sequence(vec![BehaviorNode::action("ok"), BehaviorNode::action("busy")]);
        let mut h = Handlers::new().action("ok", counting("ok", Success)).action("busy", counting("busy", Running));
        assert_eq!(tick(&tree, &mut Counter::default(), &mut h).unwrap(), Running);
    }

    #[test]
    fn two_of_three() {
        assert_eq!(parallel_policy(2, &[Success, Failure, Success]), Success);
        assert_eq!(parallel_policy(2, &[Failure, Failure, Running]), Failure);
        assert_eq!(parallel_policy(2, &[Success, Running, Failure]), Running);
    }

    #[test]
    fn decorators() {
        for (kind, input, want) in [
            (DecoratorKind::Inverter, Success, Failure),
            (DecoratorKind::Inverter, Failure, Success),
            (DecoratorKind::Inverter, Running, Running),
            (DecoratorKind::Succeeder, Failure, Success),
            (DecoratorKind::Succeeder, Running, Running),
        ] {
            let tree = BehaviorNode::decorator(kind, BehaviorNode::action("a"));
            let mut h = Handlers::new().action("a", move |_: &mut ()| input);
            assert_eq!(tick(&tree, &mut (), &mut h).unwrap(), want);
        }
    }

    #[test]
    fn unknown_leaf() {
        let tree = BehaviorNode::condition("Nope");
        let mut h: Handlers<()> = Handlers::new();
        assert_eq!(
            tick(&tree, &mut (), &mut h),
            Err(BehaviorError::UnknownLeaf { kind: LeafKind::Condition, name: "Nope".into() })
        );
        assert!(h.check(&build_following_tree()).is_err());
    }

    #[test]
    fn following_tree_shape() {
        let t = build_following_tree();
        assert_eq!((t.count_fallbacks(), t.count_sequences()), (2, 2));
        let json = serde_json::to_string(&t).unwrap();
        assert_eq!(serde_json::from_str::<BehaviorNode>(&json).unwrap(), t);
    }

    #[test]
    fn slot_written_once() {
        let mut s = CommandSlot::default();
        s.set(1).unwrap();
        assert_eq!(s.set(2), Err(SlotTaken));
        assert_eq!(s.take(), Some(1));
    }

    #[test]
    fn malformed_parallel() {
        assert!(BehaviorNode::parallel(3, vec![BehaviorNode::action("a")]).validate().is_err());
        assert!(BehaviorNode::sequence(vec![]).validate().is_err());
    }
}
