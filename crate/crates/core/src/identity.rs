//! Target identification and the human-presence belief grid.
//!
//! Identification runs a three-stage cascade over person candidates: leg
//! corroboration filters, then face evidence decides, then clothes colour
//! similarity decides. The belief grid keeps, per cell, the probability that
//! the target is there; cells out of view keep their value.

use serde::{Deserialize, Serialize};

use crate::geometry::{normalize_angle, Point2};
use crate::world::{bayes_update, CellIndex, FaceObservation, OccupancyGrid, PersonDetection};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IdentityError {
    #[error("invalid histogram: {0}")]
    InvalidHistogram(String),
    #[error("insufficient enrollment: detection lacks {0}")]
    InsufficientEnrollment(&'static str),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IdentityConfig {
    pub face_threshold: f64,
    pub critical_similarity: f64,
    /// Max distance between a candidate and the leg track corroborating it (m).
    pub leg_gate: f64,
    pub p_det: f64,
    /// Cells within this distance of an identified detection count as hits (m).
    pub r_person: f64,
    pub belief_min: f64,
    pub belief_max: f64,
    pub histogram_bins: usize,
}

impl Default for IdentityConfig {
    fn default() -> Self {
        Self {
            face_threshold: 0.8,
            critical_similarity: 0.8,
            leg_gate: 0.5,
            p_det: 0.9,
            r_person: 0.3,
            belief_min: 0.02,
            belief_max: 0.98,
            histogram_bins: 16,
        }
    }
}

/// Histogram intersection `Σ min(I, T) / Σ T`.
pub fn similarity(observed: &[f64], template: &[f64]) -> Result<f64, IdentityError> {
    if observed.len() != template.len() {
        return Err(IdentityError::InvalidHistogram(format!(
            "bin count mismatch ({} vs {})",
            observed.len(),
            template.len()
        )));
    }
    if observed.iter().chain(template).any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(IdentityError::InvalidHistogram("negative or non-finite bin".into()));
    }
    let total: f64 = template.iter().sum();
    if total <= 0.0 {
        return Err(IdentityError::InvalidHistogram("template has zero mass".into()));
    }
    let overlap: f64 = observed.iter().zip(template).map(|(i, t)| i.min(*t)).sum();
    Ok(overlap / total)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetModel {
    pub face_id: String,
    /// Normalized clothes colour template.
    pub clothes_template: Vec<f64>,
    pub critical_similarity: f64,
}

/// Builds a target model from an enrollment detection.
pub fn learn_target(detection: &PersonDetection, critical_similarity: f64) -> Result<TargetModel, IdentityError> {
    let face = detection.face.as_ref().ok_or(IdentityError::InsufficientEnrollment("a face"))?;
    let hist = &detection.clothes_histogram;
    if hist.is_empty() {
        return Err(IdentityError::InsufficientEnrollment("a clothes histogram"));
    }
    if hist.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(IdentityError::InvalidHistogram("negative or non-finite bin".into()));
    }
    let total: f64 = hist.iter().sum();
    if total <= 0.0 {
        return Err(IdentityError::InsufficientEnrollment("a non-empty clothes histogram"));
    }
    if !(critical_similarity > 0.0 && critical_similarity <= 1.0) {
        return Err(IdentityError::InvalidHistogram(format!(
            "critical similarity {critical_similarity} outside (0, 1]"
        )));
    }
    Ok(TargetModel {
        face_id: face.label.clone(),
        clothes_template: hist.iter().map(|v| v / total).collect(),
        critical_similarity,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateSource {
    LegTrack,
    Vision,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HumanCandidate {
    pub position: Point2,
    pub source: CandidateSource,
    pub face_evidence: Option<FaceObservation>,
    pub clothes_histogram: Option<Vec<f64>>,
    /// Confirmed leg track (or leg pair) fused with this candidate.
    pub track_id: Option<u64>,
}

impl HumanCandidate {
    pub fn from_track(position: Point2, track_id: u64) -> Self {
        Self {
            position,
            source: CandidateSource::LegTrack,
            face_evidence: None,
            clothes_histogram: None,
            track_id: Some(track_id),
        }
    }

    pub fn from_detection(d: &PersonDetection, track_id: Option<u64>) -> Self {
        Self {
            position: d.person_position,
            source: CandidateSource::Vision,
            face_evidence: d.face.clone(),
            clothes_histogram: Some(d.clothes_histogram.clone()),
            track_id,
        }
    }

    /// The invariant "at least one evidence field present".
    pub fn has_evidence(&self) -> bool {
        self.source == CandidateSource::LegTrack
            || self.face_evidence.is_some()
            || self.clothes_histogram.is_some()
            || self.track_id.is_some()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IdentifiedBy {
    Face,
    Clothes,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IdentifiedTarget {
    pub position: Point2,
    pub track_id: Option<u64>,
    pub by: IdentifiedBy,
    /// Face confidence or clothes similarity, depending on `by`.
    pub score: f64,
    /// Index into the candidate list.
    pub candidate: usize,
}

/// Whether candidate `i` is backed by a confirmed leg track within the gate.
pub fn leg_corroborated(candidates: &[HumanCandidate], i: usize, leg_gate: f64) -> bool {
    let c = &candidates[i];
    if c.track_id.is_some() {
        return true;
    }
    candidates
        .iter()
        .any(|o| o.source == CandidateSource::LegTrack && o.position.distance(c.position) <= leg_gate)
}

/// Legs, then face, then clothes.
pub fn identify(candidates: &[HumanCandidate], model: &TargetModel, cfg: &IdentityConfig) -> Option<IdentifiedTarget> {
    let survivors: Vec<usize> = (0..candidates.len())
        .filter(|&i| leg_corroborated(candidates, i, cfg.leg_gate))
        .collect();

    let by_face = survivors
        .iter()
        .filter_map(|&i| {
            let f = candidates[i].face_evidence.as_ref()?;
            (f.label == model.face_id && f.confidence >= cfg.face_threshold).then_some((i, f.confidence))
        })
        .fold(None::<(usize, f64)>, |best, (i, s)| match best {
            Some((_, bs)) if bs >= s => best,
            _ => Some((i, s)),
        });
    if let Some((i, s)) = by_face {
        return Some(target(candidates, i, IdentifiedBy::Face, s));
    }

    let by_clothes = survivors
        .iter()
        .filter_map(|&i| {
            let h = candidates[i].clothes_histogram.as_ref()?;
            similarity(h, &model.clothes_template).ok().map(|s| (i, s))
        })
        .fold(None::<(usize, f64)>, |best, (i, s)| match best {
            Some((_, bs)) if bs >= s => best,
            _ => Some((i, s)),
        });
    match by_clothes {
        Some((i, s)) if s >= model.critical_similarity => Some(target(candidates, i, IdentifiedBy::Clothes, s)),
        _ => None,
    }
}

fn target(candidates: &[HumanCandidate], i: usize, by: IdentifiedBy, score: f64) -> IdentifiedTarget {
    IdentifiedTarget { position: candidates[i].position, track_id: candidates[i].track_id, by, score, candidate: i }
}

/// Camera field of view as a planar sector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ViewCone {
    pub apex: Point2,
    /// Absolute gaze direction (rad).
    pub direction: f64,
    pub half_angle: f64,
    pub range: f64,
}

impl ViewCone {
    pub fn contains(&self, p: Point2) -> bool {
        let d = p - self.apex;
        let r = d.norm();
        if r > self.range {
            return false;
        }
        r == 0.0 || normalize_angle(d.angle() - self.direction).abs() <= self.half_angle
    }

    /// Cells whose centers lie in the cone and are not hidden behind a cell
    /// above `tau_occ` in `occupancy` (when given). Cells are returned in
    /// row-major index order.
    pub fn visible_cells(&self, shape: &OccupancyGrid, occupancy: Option<&OccupancyGrid>, tau_occ: f64) -> Vec<CellIndex> {
        let res = shape.resolution();
        let mut mark = vec![false; shape.len()];
        let blocked = |c: CellIndex| occupancy.and_then(|g| g.get(c)).is_some_and(|p| p > tau_occ);
        // rays dense enough to hit every cell at full range
        let arc = 2.0 * self.half_angle * self.range;
        let rays = ((2.0 * arc / res).ceil() as usize).max(2);
        for k in 0..=rays {
            let a = self.direction - self.half_angle + 2.0 * self.half_angle * k as f64 / rays as f64;
            let end = self.apex + Point2::from_polar(self.range, a);
            for c in shape.traverse(self.apex, end, true) {
                let Some(i) = shape.index(c) else { continue };
                if blocked(c) {
                    break;
                }
                if self.contains(shape.cell_center(c)) {
                    mark[i] = true;
                }
            }
        }
        mark.iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(i, _)| shape.cell_at_index(i))
            .collect()
    }
}

/// Per-cell probability that the target occupies the cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BeliefGrid {
    grid: OccupancyGrid,
}

impl BeliefGrid {
    /// Belief with the same geometry as `shape`, every cell at 0.5.
    pub fn like(shape: &OccupancyGrid) -> Self {
        Self { grid: OccupancyGrid::new(shape.origin(), shape.resolution(), shape.width(), shape.height()) }
    }

    pub fn grid(&self) -> &OccupancyGrid {
        &self.grid
    }

    pub fn get(&self, c: CellIndex) -> Option<f64> {
        self.grid.get(c)
    }

    pub fn set(&mut self, c: CellIndex, p: f64) {
        self.grid.set(c, p);
    }

    pub fn max(&self) -> f64 {
        self.grid.cells().iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Center of the highest-belief cell; ties go to the cell nearest `from`.
    pub fn argmax(&self, from: Point2) -> Option<(Point2, f64)> {
        let mut best: Option<(Point2, f64, f64)> = None;
        for (i, &p) in self.grid.cells().iter().enumerate() {
            let c = self.grid.cell_center(self.grid.cell_at_index(i));
            let d = c.distance(from);
            let better = match best {
                None => true,
                Some((_, bp, bd)) => p > bp || (p == bp && d < bd),
            };
            if better {
                best = Some((c, p, d));
            }
        }
        best.map(|(c, p, _)| (c, p))
    }
}

/// Bayes update of the belief over the observed cells.
///
/// Every visible cell within `r_person` of an identified target detection is
/// updated with likelihood `p_det`, every other visible cell with
/// `1 − p_det`; cells out of view are untouched.
pub fn update_belief(
    belief: &BeliefGrid,
    detections: &[Point2],
    cone: &ViewCone,
    occupancy: Option<&OccupancyGrid>,
    cfg: &IdentityConfig,
) -> BeliefGrid {
    let mut out = belief.clone();
    let visible = cone.visible_cells(&belief.grid, occupancy, 0.65);
    update_cells(&mut out, &visible, detections, cfg);
    // detected targets are observed even if the sector clips their cell center
    for &d in detections {
        let c = out.grid.cell_of(d);
        if !visible.contains(&c) && out.grid.in_grid(c) && cone.contains(d) {
            update_cells(&mut out, &[c], detections, cfg);
        }
    }
    out
}

fn update_cells(b: &mut BeliefGrid, cells: &[CellIndex], detections: &[Point2], cfg: &IdentityConfig) {
    for &c in cells {
        let center = b.grid.cell_center(c);
        let hit = detections.iter().any(|d| d.distance(center) <= cfg.r_person);
        let p_z = if hit { cfg.p_det } else { 1.0 - cfg.p_det };
        let prior = b.grid.get(c).expect("visible cell is in grid");
        b.grid.set(c, bayes_update(prior, p_z).clamp(cfg.belief_min, cfg.belief_max));
    }
}
