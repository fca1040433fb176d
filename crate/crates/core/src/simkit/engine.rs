use std::collections::BTreeMap;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::agent::{following_handlers, Agent, TargetStatus};
use super::scenario::Scenario;
use super::SimError;
use crate::behavior::{build_following_tree, tick_traced, BehaviorNode, Handlers};
use crate::control::NavCommand;
use crate::geometry::{normalize_angle, Point2};
use crate::search::map_entropy;
use crate::world::{cast_laser, detect_persons, disk_is_free, PersonState, Pose, WorldState};

/// One log line per tick.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimelineEvent {
    pub t: f64,
    pub robot: Pose,
    pub active_action: String,
    pub target_status: TargetStatus,
    pub belief_entropy: f64,
    pub aux: BTreeMap<String, Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub success: bool,
    /// Seconds from the first loss to the first re-identification; 0 if never lost.
    pub time_to_reacquire: Option<f64>,
    pub distance_traveled: f64,
    pub max_speed: f64,
    /// Smallest ground-truth distance between the robot center and an obstacle.
    pub min_clearance: f64,
    pub ticks: u64,
    pub final_status: TargetStatus,
}

/// Deterministic simulation state. All randomness comes from one seeded stream.
pub struct Simulation {
    scenario: Scenario,
    rng: ChaCha8Rng,
    world: WorldState,
    agent: Agent,
    tree: BehaviorNode,
    handlers: Handlers<Agent>,
    steer: BTreeMap<u32, Point2>,
    tick: u64,
    pan_rate: f64,
    first_lost: Option<f64>,
    reacquired: Option<f64>,
    ever_lost: bool,
    hold_since: Option<f64>,
    finished: Option<bool>,
    distance: f64,
    max_speed: f64,
    min_clearance: f64,
}

impl Simulation {
    pub fn new(scenario: Scenario) -> Result<Self, SimError> {
        scenario.validate()?;
        let tree = build_following_tree();
        let handlers = following_handlers();
        handlers.check(&tree)?;
        let mut world = WorldState::new(scenario.map.bounds, scenario.map.obstacles.clone());
        world.robot = scenario.robot.start;
        let bins = scenario.config.identity.histogram_bins;
        world.persons = scenario
            .persons
            .iter()
            .map(|p| {
                let (position, velocity) = p.scripted(0.0);
                PersonState { id: p.id, position, velocity, clothes_histogram: p.histogram(bins), face_id: p.face_id.clone() }
            })
            .collect();
        let min_clearance = world.clearance(world.robot.position());
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(scenario.seed),
            agent: Agent::new(&scenario),
            pan_rate: scenario.config.agent.pan_rate,
            world,
            tree,
            handlers,
            steer: BTreeMap::new(),
            tick: 0,
            first_lost: None,
            reacquired: None,
            ever_lost: false,
            hold_since: None,
            finished: None,
            distance: 0.0,
            max_speed: 0.0,
            min_clearance,
            scenario,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn world(&self) -> &WorldState {
        &self.world
    }

    pub fn agent(&self) -> &Agent {
        &self.agent
    }

    pub fn tree(&self) -> &BehaviorNode {
        &self.tree
    }

    pub fn tick_count(&self) -> u64 {
        self.tick
    }

    pub fn time(&self) -> f64 {
        self.tick as f64 / self.scenario.tick_hz
    }

    /// `Some(success)` once a terminal condition was reached.
    pub fn finished(&self) -> Option<bool> {
        self.finished
    }

    /// Overrides the scripted motion of person `id` with a constant velocity,
    /// clamped to that person's speed limit. Applies from the next tick on.
    pub fn steer(&mut self, id: u32, v: Point2) -> Point2 {
        let limit = self.scenario.persons.iter().find(|p| p.id == id).map_or(0.0, |p| p.v_max);
        let n = v.norm();
        let v = if n > limit { v * (limit / n) } else { v };
        self.steer.insert(id, v);
        v
    }

    pub fn summary(&self) -> RunSummary {
        RunSummary {
            success: self.finished == Some(true),
            time_to_reacquire: if self.ever_lost {
                self.reacquired.zip(self.first_lost).map(|(r, l)| r - l)
            } else {
                Some(0.0)
            },
            distance_traveled: self.distance,
            max_speed: self.max_speed,
            min_clearance: self.min_clearance,
            ticks: self.tick,
            final_status: self.agent.status,
        }
    }

    fn move_persons(&mut self, t: f64, dt: f64) {
        for (state, spec) in self.world.persons.iter_mut().zip(&self.scenario.persons) {
            match self.steer.get(&spec.id) {
                Some(&v) => {
                    let next = state.position + v * dt;
                    if self.world.bounds.contains(next) && disk_is_free(&self.world.obstacles, next, 0.2) {
                        state.position = next;
                        state.velocity = v;
                    } else {
                        state.velocity = Point2::ORIGIN;
                    }
                }
                None => {
                    let (p, v) = spec.scripted(t);
                    state.position = p;
                    state.velocity = v;
                }
            }
        }
    }

    /// Advances one tick and returns its event.
    pub fn step(&mut self) -> Result<TimelineEvent, SimError> {
        let hz = self.scenario.tick_hz;
        let dt = 1.0 / hz;
        let t = self.tick as f64 / hz;
        if self.tick > 0 {
            self.move_persons(t, dt);
        }
        self.world.time = t;
        let truth = self.world.robot;
        let sensors = &self.scenario.sensors;
        let mut scan = cast_laser(&self.world, &truth, sensors, &mut self.rng)?;
        let detections = detect_persons(&self.world, &truth, sensors, &mut self.rng);
        let mut believed = truth;
        if sensors.pose_noise > 0.0 {
            let n = Normal::new(0.0, sensors.pose_noise).expect("finite noise");
            believed.x += n.sample(&mut self.rng);
            believed.y += n.sample(&mut self.rng);
            scan.origin = believed;
        }
        let teacher = self
            .world
            .person(self.scenario.target_id)
            .map_or(Point2::ORIGIN, |p| p.position);

        self.agent.perceive(t, believed, &scan, &detections, teacher);
        self.agent.bb.begin_tick();
        let mut trace = Vec::new();
        tick_traced(&self.tree, &mut self.agent, &mut self.handlers, &mut trace)?;

        let nav = self.agent.bb.nav.take().unwrap_or(NavCommand::Stop);
        let pan_target = self.agent.bb.gaze.get().map(|g| g.pan_target);
        let mut aux = std::mem::take(&mut self.agent.aux);
        if self.tick == 0 {
            aux.insert("tree".into(), serde_json::to_value(&self.tree).expect("tree serializes"));
        }
        if trace.len() > 1 {
            aux.insert("invoked".into(), json!(trace));
        }
        aux.insert("nav".into(), json!(nav.name()));

        let (moved, blocked) = self.execute(&nav, pan_target, dt);
        if blocked {
            aux.insert("blocked".into(), json!(true));
        }
        if moved > 0.0 {
            let p = self.world.robot.position();
            self.agent.last_moved = t + dt;
            self.agent.distance_history.push(t + dt, p);
        }

        let status = self.agent.status;
        if !self.ever_lost && aux.contains_key("lost") {
            self.ever_lost = true;
            self.first_lost = Some(t);
        }
        if self.ever_lost && self.reacquired.is_none() && aux.contains_key("reidentified") {
            self.reacquired = Some(t);
        }
        self.check_terminal(t, teacher);
        if let Some(success) = self.finished {
            aux.insert("finished".into(), json!(if success { "success" } else { "failure" }));
        }

        let event = TimelineEvent {
            t,
            robot: truth,
            active_action: trace.last().cloned().unwrap_or_default(),
            target_status: status,
            belief_entropy: map_entropy(self.agent.belief.grid()),
            aux,
        };
        self.tick += 1;
        Ok(event)
    }

    fn check_terminal(&mut self, t: f64, target: Point2) {
        let a = &self.scenario.config.agent;
        let done_walking = t + 1e-9 >= self.scenario.target().script_end() || self.steer.contains_key(&self.scenario.target_id);
        let close = self.world.robot.position().distance(target) <= a.success_radius;
        if done_walking && close && self.agent.status != TargetStatus::Lost {
            let since = *self.hold_since.get_or_insert(t);
            if t - since + 1e-9 >= a.success_hold {
                self.finished = Some(true);
            }
        } else {
            self.hold_since = None;
        }
        if self.finished.is_none() && self.tick + 1 >= self.scenario.total_ticks() {
            self.finished = Some(false);
        }
    }

    /// Applies the commands for one tick. Returns the distance translated and
    /// whether a forward motion was refused because it would collide.
    fn execute(&mut self, nav: &NavCommand, pan_target: Option<f64>, dt: f64) -> (f64, bool) {
        let cfg = &self.scenario.config;
        let v_max = self.agent.v_max;
        let omega = cfg.agent.omega_max;
        let tol = cfg.control.theta_tol;
        let mut pose = self.world.robot;
        let turn = |pose: &mut Pose, heading: f64| {
            let err = normalize_angle(heading - pose.heading);
            pose.heading = normalize_angle(pose.heading + err.clamp(-omega * dt, omega * dt));
        };
        let mut speed = 0.0;
        match nav {
            NavCommand::Stop => {}
            NavCommand::Turn { heading } => turn(&mut pose, *heading),
            NavCommand::GoStraight { speed: s } => speed = s.clamp(0.0, v_max),
            NavCommand::MoveBase { path } => {
                let here = pose.position();
                if let Some(&next) = path.iter().skip(1).find(|p| p.distance(here) > 1e-6) {
                    let desired = (next - here).angle();
                    if normalize_angle(desired - pose.heading).abs() > tol {
                        turn(&mut pose, desired);
                    } else {
                        pose.heading = desired;
                        speed = v_max.min(here.distance(next) / dt);
                    }
                }
            }
        }
        let mut moved = 0.0;
        let mut blocked = false;
        if speed > 0.0 {
            let next = pose.position() + Point2::from_polar(speed * dt, pose.heading);
            if self.world.bounds.contains(next) && disk_is_free(&self.world.obstacles, next, cfg.agent.collision_radius) {
                pose.set_position(next);
                moved = speed * dt;
            } else {
                blocked = true;
            }
        }
        if let Some(target) = pan_target {
            let err = normalize_angle(target - pose.pan);
            let step = self.pan_rate * dt;
            pose.pan = normalize_angle(pose.pan + err.clamp(-step, step));
        }
        self.world.robot = pose;
        self.distance += moved;
        self.max_speed = self.max_speed.max(moved / dt);
        self.min_clearance = self.min_clearance.min(self.world.clearance(pose.position()));
        (moved, blocked)
    }
}

/// Steps until a terminal condition or `ticks` (default: the scenario's
/// budget), writing one JSON line per event to `sink`.
pub fn run(scenario: &Scenario, ticks: Option<u64>, sink: &mut dyn Write) -> Result<RunSummary, SimError> {
    let mut sim = Simulation::new(scenario.clone())?;
    let budget = ticks.unwrap_or_else(|| scenario.total_ticks());
    while sim.tick_count() < budget && sim.finished().is_none() {
        match sim.step() {
            Ok(event) => {
                serde_json::to_writer(&mut *sink, &event).map_err(std::io::Error::from)?;
                sink.write_all(b"\n")?;
            }
            Err(e) => {
                let failure = json!({
                    "t": sim.time(),
                    "aux": {"error": e.to_string(), "finished": "failure"},
                });
                serde_json::to_writer(&mut *sink, &failure).map_err(std::io::Error::from)?;
                sink.write_all(b"\n")?;
                return Err(e);
            }
        }
    }
    sink.flush()?;
    Ok(sim.summary())
}
