//! Simulated laser scanner and person detector.
//!
//! The detectors emit the same downstream data a real perception stack would
//! (leg candidates, person detections with face labels and clothes
//! histograms) from ground truth, with configurable noise, misses and
//! clutter. All randomness flows through the caller's RNG.

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use super::{Pose, WorldError, WorldState};
use crate::geometry::{normalize_angle, Point2};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SensorConfig {
    /// Total laser field of view (rad).
    pub laser_fov: f64,
    pub laser_beams: usize,
    pub laser_max_range: f64,
    /// Std-dev of leg candidate position noise (m).
    pub sigma_leg: f64,
    /// Lateral offset of each leg from the person center (m).
    pub leg_offset: f64,
    /// Mean number of false-positive leg candidates per scan.
    pub clutter_rate: f64,
    /// Camera half field of view (rad).
    pub camera_half_fov: f64,
    pub camera_range: f64,
    pub face_range: f64,
    /// Faces are only recognized within this bearing of the camera axis (rad).
    pub face_half_angle: f64,
    /// Probability that a recognized face gets another person's label.
    pub p_confuse: f64,
    /// Probability that a visible person is not detected at all.
    pub p_miss: f64,
    /// Std-dev of detected person position noise (m).
    pub sigma_person: f64,
    /// Std-dev of per-bin clothes histogram noise before renormalization.
    pub sigma_hist: f64,
    /// Faces of persons walking away from the camera are not visible.
    pub face_requires_facing: bool,
    /// Std-dev of Gaussian noise on the robot's believed position (m); 0 = ground truth.
    pub pose_noise: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            laser_fov: 270f64.to_radians(),
            laser_beams: 270,
            laser_max_range: 10.0,
            sigma_leg: 0.02,
            leg_offset: 0.1,
            clutter_rate: 0.3,
            camera_half_fov: 30f64.to_radians(),
            camera_range: 6.0,
            face_range: 4.0,
            face_half_angle: 20f64.to_radians(),
            p_confuse: 0.02,
            p_miss: 0.1,
            sigma_person: 0.03,
            sigma_hist: 0.01,
            face_requires_facing: true,
            pose_noise: 0.0,
        }
    }
}

impl SensorConfig {
    /// Noise-free, miss-free, clutter-free configuration for deterministic checks.
    pub fn ideal() -> Self {
        Self {
            sigma_leg: 0.0,
            clutter_rate: 0.0,
            p_confuse: 0.0,
            p_miss: 0.0,
            sigma_person: 0.0,
            sigma_hist: 0.0,
            ..Self::default()
        }
    }

    pub fn beam_angles(&self) -> Vec<f64> {
        let n = self.laser_beams.max(1);
        if n == 1 {
            return vec![0.0];
        }
        let step = self.laser_fov / (n - 1) as f64;
        (0..n).map(|i| -self.laser_fov / 2.0 + i as f64 * step).collect()
    }

    pub fn beam_width(&self) -> f64 {
        if self.laser_beams > 1 {
            self.laser_fov / (self.laser_beams - 1) as f64
        } else {
            self.laser_fov
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaserScan {
    pub origin: Pose,
    /// Beam angles relative to the base heading.
    pub angles: Vec<f64>,
    pub ranges: Vec<f64>,
    pub max_range: f64,
    pub leg_candidates: Vec<Point2>,
}

impl LaserScan {
    pub fn endpoints(&self) -> impl Iterator<Item = Point2> + '_ {
        let o = self.origin.position();
        self.angles
            .iter()
            .zip(&self.ranges)
            .map(move |(&a, &r)| o + Point2::from_polar(r, self.origin.heading + a))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FaceObservation {
    pub label: String,
    pub confidence: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PersonDetection {
    pub person_position: Point2,
    pub face: Option<FaceObservation>,
    /// Normalized clothes histogram.
    pub clothes_histogram: Vec<f64>,
    pub distance: f64,
}

fn gaussian<R: Rng + ?Sized>(rng: &mut R, sigma: f64) -> f64 {
    if sigma > 0.0 {
        Normal::new(0.0, sigma).expect("finite sigma").sample(rng)
    } else {
        0.0
    }
}

fn jitter<R: Rng + ?Sized>(rng: &mut R, p: Point2, sigma: f64) -> Point2 {
    let dx = gaussian(rng, sigma);
    let dy = gaussian(rng, sigma);
    Point2::new(p.x + dx, p.y + dy)
}

/// Simulates one laser scan from `pose`.
pub fn cast_laser<R: Rng + ?Sized>(
    world: &WorldState,
    pose: &Pose,
    cfg: &SensorConfig,
    rng: &mut R,
) -> Result<LaserScan, WorldError> {
    let origin = pose.position();
    if !world.bounds.contains(origin) || !origin.is_finite() {
        return Err(WorldError::InvalidPose { x: pose.x, y: pose.y });
    }
    let angles = cfg.beam_angles();
    let ranges: Vec<f64> = angles
        .iter()
        .map(|&a| world.raycast(origin, pose.heading + a, cfg.laser_max_range).max(1e-6))
        .collect();

    let margin = 2.0 * cfg.beam_width();
    let mut legs = Vec::new();
    for person in &world.persons {
        let d = origin.distance(person.position);
        if d > cfg.laser_max_range || d < 1e-3 {
            continue;
        }
        let rel = pose.bearing_to(person.position);
        if rel.abs() > cfg.laser_fov / 2.0 + margin {
            continue;
        }
        if !world.segment_clear(origin, person.position) {
            continue;
        }
        let lateral = (person.position - origin).normalized().perp() * cfg.leg_offset;
        for side in [1.0, -1.0] {
            legs.push(jitter(rng, person.position + lateral * side, cfg.sigma_leg));
        }
    }

    if cfg.clutter_rate > 0.0 {
        let hits: Vec<usize> = (0..ranges.len()).filter(|&i| ranges[i] < cfg.laser_max_range).collect();
        let k = Poisson::new(cfg.clutter_rate).map(|p| p.sample(rng) as usize).unwrap_or(0);
        if !hits.is_empty() {
            for _ in 0..k {
                let i = hits[rng.gen_range(0..hits.len())];
                let r = (ranges[i] - 0.05).max(0.05);
                let p = origin + Point2::from_polar(r, pose.heading + angles[i]);
                legs.push(jitter(rng, p, cfg.sigma_leg));
            }
        }
    }

    Ok(LaserScan { origin: *pose, angles, ranges, max_range: cfg.laser_max_range, leg_candidates: legs })
}

fn perturb_histogram<R: Rng + ?Sized>(rng: &mut R, h: &[f64], sigma: f64) -> Vec<f64> {
    let noisy: Vec<f64> = h.iter().map(|&v| (v + gaussian(rng, sigma)).max(0.0)).collect();
    let s: f64 = noisy.iter().sum();
    if s > 0.0 {
        noisy.iter().map(|v| v / s).collect()
    } else {
        let s0: f64 = h.iter().sum();
        h.iter().map(|v| v / s0.max(f64::MIN_POSITIVE)).collect()
    }
}

/// Simulates the camera person detector looking along `pose.heading + pose.pan`.
pub fn detect_persons<R: Rng + ?Sized>(
    world: &WorldState,
    pose: &Pose,
    cfg: &SensorConfig,
    rng: &mut R,
) -> Vec<PersonDetection> {
    let origin = pose.position();
    let gaze = pose.gaze_direction();
    let mut out = Vec::new();
    for person in &world.persons {
        let d = origin.distance(person.position);
        if d > cfg.camera_range {
            continue;
        }
        let rel = normalize_angle((person.position - origin).angle() - gaze);
        if rel.abs() > cfg.camera_half_fov {
            continue;
        }
        if !world.segment_clear(origin, person.position) {
            continue;
        }
        if rng.gen::<f64>() < cfg.p_miss {
            continue;
        }
        let facing = !cfg.face_requires_facing
            || person.velocity.norm() < 0.05
            || person.velocity.dot(origin - person.position) > 0.0;
        let face = if d < cfg.face_range && rel.abs() <= cfg.face_half_angle && facing {
            if rng.gen::<f64>() < cfg.p_confuse {
                let others: Vec<&str> = world
                    .persons
                    .iter()
                    .filter(|o| o.id != person.id)
                    .map(|o| o.face_id.as_str())
                    .collect();
                let label = if others.is_empty() {
                    "unknown".to_string()
                } else {
                    others[rng.gen_range(0..others.len())].to_string()
                };
                Some(FaceObservation { label, confidence: rng.gen_range(0.55..0.9) })
            } else {
                Some(FaceObservation { label: person.face_id.clone(), confidence: rng.gen_range(0.85..0.99) })
            }
        } else {
            None
        };
        let pos = jitter(rng, person.position, cfg.sigma_person);
        out.push(PersonDetection {
            person_position: pos,
            face,
            clothes_histogram: perturb_histogram(rng, &person.clothes_histogram, cfg.sigma_hist),
            distance: origin.distance(pos),
        });
    }
    out
}

/// Histogram of a single hue band, smoothed over neighbouring bins.
pub fn hue_histogram(bins: usize, center_bin: usize, spread: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..bins)
        .map(|i| {
            let d = (i as f64 - center_bin as f64).abs();
            let d = d.min(bins as f64 - d);
            (-(d * d) / (2.0 * spread * spread)).exp()
        })
        .collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}
