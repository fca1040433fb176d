use serde::{Deserialize, Serialize};

use super::SimError;
use crate::control::ControlConfig;
use crate::geometry::{Point2, Polygon, Rect};
use crate::identity::IdentityConfig;
use crate::predict::PredictConfig;
use crate::search::SearchConfig;
use crate::tracking::TrackerConfig;
use crate::world::{current_region, disk_is_free, hue_histogram, InverseSensorModel, Pose, RegionGraph, SensorConfig};

pub const HOUSE: &str = include_str!("../../scenarios/house.json");
pub const OPEN_ROOM: &str = include_str!("../../scenarios/open_room.json");

/// Bundled scenarios by name.
pub fn bundled() -> [(&'static str, &'static str); 2] {
    [("house", HOUSE), ("open_room", OPEN_ROOM)]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    pub bounds: Rect,
    #[serde(default = "default_resolution")]
    pub resolution: f64,
    #[serde(default)]
    pub obstacles: Vec<Polygon>,
}

fn default_resolution() -> f64 {
    0.1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotSpec {
    pub start: Pose,
    #[serde(default = "default_robot_vmax")]
    pub v_max: f64,
}

fn default_robot_vmax() -> f64 {
    0.22
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Waypoint {
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

impl Waypoint {
    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

/// Either an explicit histogram or a single smoothed hue band.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClothesSpec {
    Histogram(Vec<f64>),
    Hue { center_bin: usize, spread: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PersonSpec {
    pub id: u32,
    pub face_id: String,
    pub clothes: ClothesSpec,
    pub script: Vec<Waypoint>,
    #[serde(default = "default_person_vmax")]
    pub v_max: f64,
}

fn default_person_vmax() -> f64 {
    1.0
}

impl PersonSpec {
    pub fn histogram(&self, bins: usize) -> Vec<f64> {
        match &self.clothes {
            ClothesSpec::Histogram(h) => {
                let s: f64 = h.iter().sum();
                h.iter().map(|v| v / s).collect()
            }
            ClothesSpec::Hue { center_bin, spread } => hue_histogram(bins, *center_bin, *spread),
        }
    }

    /// Scripted position and velocity at time `t` (linear interpolation).
    pub fn scripted(&self, t: f64) -> (Point2, Point2) {
        let s = &self.script;
        if t <= s[0].t {
            return (s[0].position(), Point2::ORIGIN);
        }
        for w in s.windows(2) {
            if t <= w[1].t {
                let span = w[1].t - w[0].t;
                let v = (w[1].position() - w[0].position()) * (1.0 / span);
                return (w[0].position() + v * (t - w[0].t), v);
            }
        }
        (s[s.len() - 1].position(), Point2::ORIGIN)
    }

    pub fn script_end(&self) -> f64 {
        self.script.last().map_or(0.0, |w| w.t)
    }
}

/// Per-run parameters, separated from the robot's algorithm settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    /// Time without identification after which the target counts as lost (s).
    pub lost_timeout: f64,
    pub prediction_max_age: f64,
    pub gaze_search_duration: f64,
    /// Head pan rate (rad/s).
    pub pan_rate: f64,
    /// Base turn rate (rad/s).
    pub omega_max: f64,
    /// Physical footprint radius used for collision checks (m).
    pub collision_radius: f64,
    /// Success requires the target within this distance (m) ...
    pub success_radius: f64,
    /// ... for this long (s) after its script ends.
    pub success_hold: f64,
    /// Max distance between the teacher's target and the enrolled detection (m).
    pub enroll_gate: f64,
    /// Leg tracks closer than this form one person (m).
    pub leg_pair_distance: f64,
    /// Navigation without translation for this long counts as stalled (s).
    pub stall_time: f64,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            lost_timeout: 1.0,
            prediction_max_age: 30.0,
            gaze_search_duration: 5.0,
            pan_rate: 2.0,
            omega_max: 0.8,
            collision_radius: 0.15,
            success_radius: 1.6,
            success_hold: 5.0,
            enroll_gate: 0.5,
            leg_pair_distance: 0.5,
            stall_time: 6.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlgorithmConfig {
    pub occupancy: InverseSensorModel,
    pub tracker: TrackerConfig,
    pub identity: IdentityConfig,
    pub search: SearchConfig,
    pub predict: PredictConfig,
    pub control: ControlConfig,
    pub agent: AgentConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default = "default_name")]
    pub name: String,
    pub map: MapSpec,
    pub regions: RegionGraph,
    pub robot: RobotSpec,
    pub persons: Vec<PersonSpec>,
    pub target_id: u32,
    #[serde(default)]
    pub sensors: SensorConfig,
    pub seed: u64,
    #[serde(default = "default_tick_hz")]
    pub tick_hz: f64,
    /// Simulated-time budget of a run (s).
    #[serde(default = "default_max_time")]
    pub max_time: f64,
    #[serde(default)]
    pub config: AlgorithmConfig,
}

fn default_name() -> String {
    "scenario".into()
}

fn default_tick_hz() -> f64 {
    10.0
}

fn default_max_time() -> f64 {
    120.0
}

fn invalid(path: impl Into<String>, message: impl Into<String>) -> SimError {
    SimError::Scenario { path: path.into(), message: message.into() }
}

impl Scenario {
    pub fn target(&self) -> &PersonSpec {
        self.persons.iter().find(|p| p.id == self.target_id).expect("validated target")
    }

    pub fn total_ticks(&self) -> u64 {
        (self.max_time * self.tick_hz).round() as u64
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let m = &self.map;
        if !m.bounds.is_valid() {
            return Err(invalid("map.bounds", "bounds must have positive extent"));
        }
        if !(m.resolution > 0.0) || m.resolution > m.bounds.width().min(m.bounds.height()) {
            return Err(invalid("map.resolution", format!("resolution {} is not usable", m.resolution)));
        }
        for (i, poly) in m.obstacles.iter().enumerate() {
            if poly.vertices.len() < 3 || !poly.is_simple() {
                return Err(invalid(format!("map.obstacles[{i}]"), "obstacle must be a simple polygon"));
            }
        }
        self.regions.validate().map_err(|e| invalid("regions", e.to_string()))?;
        if !(self.tick_hz > 0.0 && self.tick_hz.is_finite()) {
            return Err(invalid("tick_hz", "must be positive"));
        }
        if !(self.max_time >= 0.0 && self.max_time.is_finite()) {
            return Err(invalid("max_time", "must be non-negative"));
        }
        if !(self.robot.v_max > 0.0 && self.robot.v_max.is_finite()) {
            return Err(invalid("robot.v_max", "must be positive"));
        }
        let start = self.robot.start.position();
        if !m.bounds.contains(start) || !disk_is_free(&m.obstacles, start, self.config.agent.collision_radius) {
            return Err(invalid("robot.start", "start pose must be inside the bounds and clear of obstacles"));
        }
        current_region(start, &self.regions).map_err(|e| invalid("robot.start", e.to_string()))?;
        if self.persons.is_empty() {
            return Err(invalid("persons", "at least one person is required"));
        }
        let mut ids = std::collections::BTreeSet::new();
        let bins = self.config.identity.histogram_bins;
        for (i, p) in self.persons.iter().enumerate() {
            if !ids.insert(p.id) {
                return Err(invalid(format!("persons[{i}].id"), format!("duplicate person id {}", p.id)));
            }
            if p.script.is_empty() {
                return Err(invalid(format!("persons[{i}].script"), "script needs at least one waypoint"));
            }
            if let Some(k) = p.script.windows(2).position(|w| w[1].t <= w[0].t) {
                return Err(invalid(
                    format!("persons[{i}].script[{}].t", k + 1),
                    "waypoint times must strictly increase",
                ));
            }
            for (k, w) in p.script.iter().enumerate() {
                if !m.bounds.contains(w.position()) {
                    return Err(invalid(format!("persons[{i}].script[{k}]"), "waypoint outside the map bounds"));
                }
            }
            match &p.clothes {
                ClothesSpec::Histogram(h) => {
                    if h.len() != bins || h.iter().any(|v| !(*v >= 0.0)) || h.iter().sum::<f64>() <= 0.0 {
                        return Err(invalid(
                            format!("persons[{i}].clothes"),
                            format!("histogram must have {bins} non-negative bins with positive mass"),
                        ));
                    }
                }
                ClothesSpec::Hue { center_bin, spread } => {
                    if *center_bin >= bins || !(*spread > 0.0) {
                        return Err(invalid(format!("persons[{i}].clothes"), "hue band out of range"));
                    }
                }
            }
            if !(p.v_max > 0.0) {
                return Err(invalid(format!("persons[{i}].v_max"), "must be positive"));
            }
        }
        if !ids.contains(&self.target_id) {
            return Err(invalid("target_id", format!("no person with id {}", self.target_id)));
        }
        Ok(())
    }

    /// Pretty JSON with every default filled in.
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

/// Parses and validates a scenario document.
pub fn load_scenario(text: &str) -> Result<Scenario, SimError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        SimError::Scenario { path, message: e.into_inner().to_string() }
    })?;
    scenario.validate()?;
    Ok(scenario)
}

/// A bundled scenario by name (`house`, `open_room`).
pub fn bundled_scenario(name: &str) -> Option<Scenario> {
    bundled()
        .into_iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| load_scenario(text).expect("bundled scenarios are valid"))
}
