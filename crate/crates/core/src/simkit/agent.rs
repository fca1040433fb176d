//! The robot's onboard state and the leaf handlers of the following tree.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::scenario::{AlgorithmConfig, Scenario};
use crate::behavior::{
    Blackboard, Handlers, PredictionSlot, TickStatus, FOLLOW_TARGET, GAZE_SEARCH, NAVIGATE_TO_PREDICTION,
    PREDICTION_VALID, TARGET_IDENTIFIED, WAYPOINT_SEARCH,
};
use crate::control::{inflate_for_robot, nav_command_inflated, nearest_plannable, GazeCommand, GazeMode, GazePlanner, NavCommand};
use crate::geometry::{normalize_angle, Point2};
use crate::identity::{identify, learn_target, update_belief, BeliefGrid, HumanCandidate, TargetModel, ViewCone};
use crate::predict::{predict_trajectory, TrackHistory};
use crate::search::{waypoint_search, DistanceHistory};
use crate::tracking::{pair_legs, PersonEstimate, Tracker};
use crate::world::{LaserScan, OccupancyGrid, PersonDetection, Pose, RegionGraph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetStatus {
    /// Identified by vision this tick.
    Identified,
    /// Not identified this tick but within the loss timeout.
    Visible,
    Lost,
}

/// Onboard state of the robot.
pub struct Agent {
    pub cfg: AlgorithmConfig,
    pub v_max: f64,
    pub camera_half_fov: f64,
    pub camera_range: f64,
    pub dt: f64,
    pub now: f64,
    pub pose: Pose,
    pub occupancy: OccupancyGrid,
    inflated: Option<OccupancyGrid>,
    pub belief: BeliefGrid,
    pub tracker: Tracker,
    pub leg_persons: Vec<PersonEstimate>,
    pub model: Option<TargetModel>,
    pub bb: Blackboard,
    pub gaze_planner: GazePlanner,
    pub gaze_mode: Option<GazeMode>,
    pub regions: RegionGraph,
    pub distance_history: DistanceHistory,
    pub target_history: TrackHistory,
    pub status: TargetStatus,
    pub last_identified: Option<f64>,
    target_track_ids: Vec<u64>,
    pub gaze_search_started: Option<f64>,
    pub gaze_search_done: bool,
    pub waypoint: Option<Point2>,
    /// Whether the target was lost at least once after enrollment.
    pub was_lost: bool,
    /// Time of the last base translation.
    pub last_moved: f64,
    /// Per-tick details for the event log.
    pub aux: BTreeMap<String, Value>,
    /// Number of times each action leaf ran.
    pub action_calls: BTreeMap<String, u64>,
}

impl Agent {
    pub fn new(scenario: &Scenario) -> Self {
        let cfg = scenario.config.clone();
        let occupancy = OccupancyGrid::covering(scenario.map.bounds, scenario.map.resolution);
        let belief = BeliefGrid::like(&occupancy);
        Self {
            v_max: scenario.robot.v_max.min(cfg.control.v_max),
            camera_half_fov: scenario.sensors.camera_half_fov,
            camera_range: scenario.sensors.camera_range,
            dt: 1.0 / scenario.tick_hz,
            now: 0.0,
            pose: scenario.robot.start,
            occupancy,
            inflated: None,
            belief,
            tracker: Tracker::new(cfg.tracker.clone()),
            leg_persons: Vec::new(),
            model: None,
            bb: Blackboard::default(),
            gaze_planner: GazePlanner::new(),
            gaze_mode: None,
            regions: scenario.regions.clone(),
            distance_history: DistanceHistory::new(cfg.search.window),
            target_history: TrackHistory::new(cfg.predict.tau_w),
            status: TargetStatus::Lost,
            last_identified: None,
            target_track_ids: Vec::new(),
            gaze_search_started: None,
            gaze_search_done: false,
            waypoint: None,
            was_lost: false,
            last_moved: 0.0,
            aux: BTreeMap::new(),
            action_calls: BTreeMap::new(),
            cfg,
        }
    }

    pub fn enrolled(&self) -> bool {
        self.model.is_some()
    }

    fn inflated(&mut self) -> &OccupancyGrid {
        if self.inflated.is_none() {
            self.inflated = Some(inflate_for_robot(&self.occupancy, &self.cfg.control));
        }
        self.inflated.as_ref().expect("just filled")
    }

    fn view_cone(&self) -> ViewCone {
        ViewCone {
            apex: self.pose.position(),
            direction: self.pose.gaze_direction(),
            half_angle: self.camera_half_fov,
            range: self.camera_range,
        }
    }

    /// Mapping, tracking, enrollment, identification and belief update for one tick.
    ///
    /// `teacher` is the true target position, used only to pick the
    /// enrollment detection before a model exists.
    pub fn perceive(&mut self, now: f64, pose: Pose, scan: &LaserScan, detections: &[PersonDetection], teacher: Point2) {
        self.now = now;
        self.pose = pose;
        self.aux.clear();
        self.occupancy.integrate_scan(scan, &self.cfg.occupancy);
        self.inflated = None;
        self.tracker.step(&scan.leg_candidates, self.dt);
        self.leg_persons = pair_legs(self.tracker.tracks(), self.cfg.agent.leg_pair_distance);

        let gate = self.cfg.identity.leg_gate;
        let mut candidates: Vec<HumanCandidate> = detections
            .iter()
            .map(|d| {
                let fused = self
                    .leg_persons
                    .iter()
                    .filter(|p| p.position.distance(d.person_position) <= gate)
                    .min_by(|a, b| {
                        a.position.distance(d.person_position).total_cmp(&b.position.distance(d.person_position))
                    });
                let mut c = HumanCandidate::from_detection(d, fused.map(PersonEstimate::id));
                if let Some(p) = fused {
                    c.position = p.position;
                }
                c
            })
            .collect();
        candidates.extend(self.leg_persons.iter().map(|p| HumanCandidate::from_track(p.position, p.id())));

        if self.model.is_none() {
            let pick = detections
                .iter()
                .filter(|d| d.face.is_some() && d.person_position.distance(teacher) <= self.cfg.agent.enroll_gate)
                .min_by(|a, b| a.person_position.distance(teacher).total_cmp(&b.person_position.distance(teacher)));
            if let Some(d) = pick {
                if let Ok(m) = learn_target(d, self.cfg.identity.critical_similarity) {
                    self.aux.insert("enrolled".into(), json!(m.face_id));
                    self.model = Some(m);
                }
            }
        }

        let identified = self.model.as_ref().and_then(|m| identify(&candidates, m, &self.cfg.identity));
        let previous = self.status;
        let mut estimate = None;
        if let Some(hit) = &identified {
            let person = hit.track_id.and_then(|id| self.leg_persons.iter().find(|p| p.id() == id));
            let velocity = person.map_or(Point2::ORIGIN, |p| p.velocity);
            self.target_track_ids = person.map(|p| p.track_ids.clone()).unwrap_or_default();
            estimate = Some((hit.position, velocity));
            self.last_identified = Some(now);
            self.target_history.push(now, hit.position.x, hit.position.y);
            self.target_history.trim(self.cfg.predict.window + 1.0);
            self.status = TargetStatus::Identified;
            self.aux.insert("identified_by".into(), json!(hit.by));
        } else if self.last_identified.is_some_and(|t| now - t <= self.cfg.agent.lost_timeout + 1e-9) {
            // keep following the legs that carried the identity, if any
            let legs = self
                .leg_persons
                .iter()
                .find(|p| p.track_ids.iter().any(|id| self.target_track_ids.contains(id)));
            estimate = match legs {
                Some(p) => Some((p.position, p.velocity)),
                None => self.bb.target_estimate,
            };
            self.status = TargetStatus::Visible;
        } else {
            self.status = TargetStatus::Lost;
        }

        if previous != TargetStatus::Lost && self.status == TargetStatus::Lost {
            self.on_lost();
        }
        if previous == TargetStatus::Lost && self.status == TargetStatus::Identified && self.was_lost {
            self.aux.insert("reidentified".into(), json!(true));
            self.bb.prediction = None;
        }
        if self.status != TargetStatus::Lost {
            self.gaze_search_done = false;
            self.gaze_search_started = None;
            self.waypoint = None;
        }

        self.bb.target_visible = self.status == TargetStatus::Identified;
        self.bb.target_identified = self.status != TargetStatus::Lost;
        self.bb.target_estimate = if self.status == TargetStatus::Lost { None } else { estimate };

        let hits: Vec<Point2> = identified.iter().map(|h| h.position).collect();
        let cone = self.view_cone();
        self.belief = update_belief(&self.belief, &hits, &cone, Some(&self.occupancy), &self.cfg.identity);
        self.bb.belief = Some(Arc::new(self.belief.clone()));
    }

    fn on_lost(&mut self) {
        self.aux.insert("lost".into(), json!(true));
        self.was_lost = true;
        self.gaze_search_done = false;
        self.gaze_search_started = None;
        self.waypoint = None;
        let p = &self.cfg.predict;
        match predict_trajectory(&self.target_history, p.valid_horizon, 0.1, p) {
            Ok(points) => {
                self.aux.insert(
                    "prediction_made".into(),
                    json!(points.iter().map(|q| [q.t, q.x, q.y]).collect::<Vec<_>>()),
                );
                self.bb.prediction = Some(PredictionSlot { points, made_at: self.now, consumed: false });
            }
            Err(e) => {
                self.aux.insert("prediction_error".into(), json!(e.to_string()));
                self.bb.prediction = None;
            }
        }
        self.target_history.clear();
    }

    fn stalled(&self) -> bool {
        self.now - self.last_moved > self.cfg.agent.stall_time
    }

    /// Goal moved into the map and off the inflated obstacles.
    fn plannable(&mut self, goal: Point2) -> Option<Point2> {
        let tau = self.cfg.control.occ_threshold;
        let ext = self.occupancy.extent();
        let eps = 1e-6;
        let clamped = Point2::new(goal.x.clamp(ext.min_x + eps, ext.max_x - eps), goal.y.clamp(ext.min_y + eps, ext.max_y - eps));
        nearest_plannable(clamped, self.inflated(), tau)
    }

    fn navigate(&mut self, goal: Point2) -> NavCommand {
        let pose = self.pose;
        self.inflated();
        let inflated = self.inflated.as_ref().expect("cached");
        match nav_command_inflated(&pose, goal, &self.occupancy, inflated, &self.cfg.control) {
            Ok(cmd) => cmd,
            Err(e) => {
                self.aux.insert("nav_error".into(), json!(e.to_string()));
                NavCommand::Stop
            }
        }
    }

    fn set_nav(&mut self, cmd: NavCommand) {
        if self.bb.nav.set(cmd).is_err() {
            self.aux.insert("slot_conflict".into(), json!("nav"));
        }
    }

    fn set_gaze(&mut self, cmd: GazeCommand, mode: GazeMode) {
        self.gaze_mode = Some(mode);
        if self.bb.gaze.set(cmd).is_err() {
            self.aux.insert("slot_conflict".into(), json!("gaze"));
        }
    }

    fn plan_gaze(&mut self) {
        let tracks: Vec<Point2> = self.leg_persons.iter().map(|p| p.position).collect();
        let (cmd, mode) = self.gaze_planner.plan(&self.pose, &self.bb, Some(&self.belief), &tracks, &self.cfg.control);
        self.set_gaze(cmd, mode);
    }

    pub fn prediction_valid(&self) -> bool {
        self.bb.prediction.as_ref().is_some_and(|p| {
            !p.consumed && p.goal().is_some() && self.now - p.made_at <= self.cfg.agent.prediction_max_age
        })
    }
}

fn follow_target(a: &mut Agent) -> TickStatus {
    let Some((target, _)) = a.bb.target_estimate else { return TickStatus::Failure };
    let c = a.cfg.control.clone();
    let here = a.pose.position();
    let d = here.distance(target);
    let cmd = if d <= c.standoff + c.d_goal {
        let err = normalize_angle((target - here).angle() - a.pose.heading);
        if err.abs() > c.theta_tol {
            NavCommand::Turn { heading: (target - here).angle() }
        } else {
            NavCommand::Stop
        }
    } else {
        let goal = target - (target - here).normalized() * c.standoff;
        match a.plannable(goal) {
            Some(g) => a.navigate(g),
            None => NavCommand::Stop,
        }
    };
    a.set_nav(cmd);
    a.plan_gaze();
    TickStatus::Running
}

fn navigate_to_prediction(a: &mut Agent) -> TickStatus {
    let Some(goal) = a.bb.prediction.as_ref().and_then(PredictionSlot::goal) else { return TickStatus::Failure };
    let Some(goal) = a.plannable(goal) else {
        consume_prediction(a);
        return TickStatus::Failure;
    };
    if a.pose.position().distance(goal) <= a.cfg.control.d_goal || a.stalled() {
        consume_prediction(a);
        a.set_nav(NavCommand::Stop);
        a.plan_gaze();
        return TickStatus::Success;
    }
    let cmd = a.navigate(goal);
    if cmd == NavCommand::Stop {
        consume_prediction(a);
        return TickStatus::Failure;
    }
    a.aux.insert("goal".into(), json!([goal.x, goal.y]));
    a.set_nav(cmd);
    a.plan_gaze();
    TickStatus::Running
}

fn consume_prediction(a: &mut Agent) {
    if let Some(p) = a.bb.prediction.as_mut() {
        p.consumed = true;
    }
}

fn gaze_search(a: &mut Agent) -> TickStatus {
    if a.gaze_search_done {
        return TickStatus::Failure;
    }
    let start = *a.gaze_search_started.get_or_insert(a.now);
    if a.now - start >= a.cfg.agent.gaze_search_duration {
        a.gaze_search_done = true;
        a.gaze_search_started = None;
        return TickStatus::Failure;
    }
    a.set_nav(NavCommand::Stop);
    a.plan_gaze();
    TickStatus::Running
}

fn waypoint_search_action(a: &mut Agent) -> TickStatus {
    let here = a.pose.position();
    let arrived = a.waypoint.is_none_or(|w| here.distance(w) <= a.cfg.control.d_goal);
    if arrived || a.stalled() {
        a.waypoint = None;
        match waypoint_search(&a.pose, &a.regions, &a.occupancy, &a.distance_history, &a.cfg.search) {
            Ok(choice) => {
                a.aux.insert("heading_region".into(), json!(choice.heading_region));
                a.waypoint = a.plannable(choice.goal);
                // the stall clock restarts with every new way-point
                a.last_moved = a.now;
            }
            Err(e) => {
                a.aux.insert("search_error".into(), json!(e.to_string()));
            }
        }
    }
    let cmd = match a.waypoint {
        Some(w) => {
            a.aux.insert("waypoint".into(), json!([w.x, w.y]));
            a.navigate(w)
        }
        None => NavCommand::Stop,
    };
    if cmd == NavCommand::Stop {
        a.waypoint = None;
    }
    a.set_nav(cmd);
    a.plan_gaze();
    TickStatus::Running
}

fn counted(name: &'static str, f: fn(&mut Agent) -> TickStatus) -> impl FnMut(&mut Agent) -> TickStatus {
    move |a: &mut Agent| {
        *a.action_calls.entry(name.to_string()).or_default() += 1;
        f(a)
    }
}

/// Handlers for every leaf of the following tree.
pub fn following_handlers() -> Handlers<Agent> {
    Handlers::new()
        .condition(TARGET_IDENTIFIED, |a: &mut Agent| a.bb.target_identified)
        .action(FOLLOW_TARGET, counted(FOLLOW_TARGET, follow_target))
        .condition(PREDICTION_VALID, |a: &mut Agent| a.prediction_valid())
        .action(NAVIGATE_TO_PREDICTION, counted(NAVIGATE_TO_PREDICTION, navigate_to_prediction))
        .action(GAZE_SEARCH, counted(GAZE_SEARCH, gaze_search))
        .action(WAYPOINT_SEARCH, counted(WAYPOINT_SEARCH, waypoint_search_action))
}
