//! Multi-target leg tracking: constant-velocity Kalman filters with
//! gated minimum-distance data association.
//!
//! The motion model is linear, so the extended filter's Jacobian equals the
//! transition matrix and the predict/update pair below is exact.

use nalgebra::{Matrix2, Matrix2x4, Matrix4, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::geometry::Point2;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrackingError {
    #[error("innovation covariance is numerically singular (condition number {condition:.3e})")]
    SingularInnovation { condition: f64 },
    #[error("measurement is not finite")]
    NonFiniteMeasurement,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrackStatus {
    Tentative,
    Confirmed,
    Dead,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Track {
    pub id: u64,
    /// `[x, y, vx, vy]`
    pub state: Vector4<f64>,
    pub covariance: Matrix4<f64>,
    pub hits: u32,
    pub misses: u32,
    pub status: TrackStatus,
}

impl Track {
    pub fn new(id: u64, position: Point2, covariance: Matrix4<f64>) -> Self {
        Self {
            id,
            state: Vector4::new(position.x, position.y, 0.0, 0.0),
            covariance,
            hits: 1,
            misses: 0,
            status: TrackStatus::Tentative,
        }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.state[0], self.state[1])
    }

    pub fn velocity(&self) -> Point2 {
        Point2::new(self.state[2], self.state[3])
    }

    pub fn is_confirmed(&self) -> bool {
        self.status == TrackStatus::Confirmed
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrackerConfig {
    /// White-noise acceleration intensity (m²/s³).
    pub q: f64,
    /// Measurement noise variance (m²).
    pub r: f64,
    /// Association gate (m).
    pub gate: f64,
    pub confirm_hits: u32,
    pub max_misses: u32,
    /// Initial position variance of a spawned track (m²).
    pub init_position_var: f64,
    /// Initial velocity variance of a spawned track (m²/s²).
    pub init_velocity_var: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            q: 0.5,
            r: 0.05 * 0.05,
            gate: 1.0,
            confirm_hits: 3,
            max_misses: 10,
            init_position_var: 0.1,
            init_velocity_var: 1.0,
        }
    }
}

impl TrackerConfig {
    pub fn spawn_covariance(&self) -> Matrix4<f64> {
        Matrix4::from_diagonal(&Vector4::new(
            self.init_position_var,
            self.init_position_var,
            self.init_velocity_var,
            self.init_velocity_var,
        ))
    }
}

/// Constant-velocity transition matrix.
pub fn transition(dt: f64) -> Matrix4<f64> {
    let mut f = Matrix4::identity();
    f[(0, 2)] = dt;
    f[(1, 3)] = dt;
    f
}

/// Discretized white-noise-acceleration process noise with intensity `q`.
pub fn process_noise(dt: f64, q: f64) -> Matrix4<f64> {
    let (d2, d3) = (dt * dt / 2.0, dt * dt * dt / 3.0);
    let mut m = Matrix4::zeros();
    for axis in 0..2 {
        let (p, v) = (axis, axis + 2);
        m[(p, p)] = d3 * q;
        m[(p, v)] = d2 * q;
        m[(v, p)] = d2 * q;
        m[(v, v)] = dt * q;
    }
    m
}

fn symmetrize(p: &Matrix4<f64>) -> Matrix4<f64> {
    (p + p.transpose()) * 0.5
}

/// Prediction with an explicit process-noise matrix.
pub fn predict_with(track: &Track, dt: f64, q: &Matrix4<f64>) -> Track {
    let f = transition(dt);
    let mut t = track.clone();
    t.state = f * track.state;
    t.covariance = symmetrize(&(f * track.covariance * f.transpose() + q));
    t
}

/// Constant-velocity prediction over `dt` seconds with noise intensity `q`.
pub fn predict(track: &Track, dt: f64, q: f64) -> Track {
    predict_with(track, dt, &process_noise(dt, q))
}

fn position_selector() -> Matrix2x4<f64> {
    Matrix2x4::new(1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0)
}

/// Kalman correction with a position measurement of variance `r`.
pub fn update(track: &Track, z: Point2, r: f64) -> Result<Track, TrackingError> {
    if !z.is_finite() {
        return Err(TrackingError::NonFiniteMeasurement);
    }
    let h = position_selector();
    let p = &track.covariance;
    let s: Matrix2<f64> = h * p * h.transpose() + Matrix2::identity() * r;
    let eig = s.symmetric_eigenvalues();
    let (lo, hi) = (eig.min().abs(), eig.max().abs());
    let condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    if condition > 1e12 {
        return Err(TrackingError::SingularInnovation { condition });
    }
    let s_inv = s.try_inverse().ok_or(TrackingError::SingularInnovation { condition })?;
    let k = p * h.transpose() * s_inv;
    let innovation = Vector2::new(z.x, z.y) - h * track.state;
    let mut t = track.clone();
    t.state = track.state + k * innovation;
    t.covariance = symmetrize(&((Matrix4::identity() - k * h) * p));
    Ok(t)
}

/// Result of gated data association.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Assignment {
    /// `(track id, detection index)` pairs.
    pub pairs: Vec<(u64, usize)>,
    pub unmatched_tracks: Vec<u64>,
    pub unmatched_detections: Vec<usize>,
}

impl Assignment {
    pub fn total_distance(&self, tracks: &[Track], detections: &[Point2]) -> f64 {
        self.pairs
            .iter()
            .map(|&(id, d)| {
                let t = tracks.iter().find(|t| t.id == id).expect("paired track exists");
                t.position().distance(detections[d])
            })
            .sum()
    }
}

/// Largest side count solved exactly; larger problems use greedy nearest-first.
pub const EXACT_ASSOCIATION_LIMIT: usize = 6;

/// Gated nearest-neighbor association.
///
/// Among all pairings whose every pair lies within `gate`, picks one with the
/// most pairs and, among those, the least total Euclidean distance. Exact
/// when the smaller side has at most [`EXACT_ASSOCIATION_LIMIT`] elements,
/// greedy nearest-first otherwise.
pub fn associate(tracks: &[Track], detections: &[Point2], gate: f64) -> Assignment {
    let n = tracks.len();
    let m = detections.len();
    let dist: Vec<Vec<f64>> = tracks
        .iter()
        .map(|t| detections.iter().map(|d| t.position().distance(*d)).collect())
        .collect();

    let pairs_idx = if n.min(m) <= EXACT_ASSOCIATION_LIMIT {
        if n <= m {
            exact_assignment(&dist, n, m, gate)
        } else {
            let transposed: Vec<Vec<f64>> = (0..m).map(|j| (0..n).map(|i| dist[i][j]).collect()).collect();
            exact_assignment(&transposed, m, n, gate).into_iter().map(|(j, i)| (i, j)).collect()
        }
    } else {
        greedy_assignment(&dist, n, m, gate)
    };

    let mut track_used = vec![false; n];
    let mut det_used = vec![false; m];
    let mut pairs = Vec::with_capacity(pairs_idx.len());
    for (i, j) in pairs_idx {
        track_used[i] = true;
        det_used[j] = true;
        pairs.push((tracks[i].id, j));
    }
    pairs.sort_unstable();
    Assignment {
        pairs,
        unmatched_tracks: (0..n).filter(|&i| !track_used[i]).map(|i| tracks[i].id).collect(),
        unmatched_detections: (0..m).filter(|&j| !det_used[j]).collect(),
    }
}

/// Exact solver over subsets of the small side (`rows`, at most 6 of them),
/// scanning the large side column by column.
fn exact_assignment(dist: &[Vec<f64>], rows: usize, cols: usize, gate: f64) -> Vec<(usize, usize)> {
    let full = 1usize << rows;
    // (pairs, cost) per subset of matched rows, after processing columns 0..j
    let mut best: Vec<Option<(u32, f64)>> = vec![None; full];
    best[0] = Some((0, 0.0));
    // choice[j][mask] = row matched to column j on the best path to `mask`, if any
    let mut choice: Vec<Vec<Option<Option<usize>>>> = Vec::with_capacity(cols);
    let better = |a: (u32, f64), b: Option<(u32, f64)>| match b {
        None => true,
        Some(b) => a.0 > b.0 || (a.0 == b.0 && a.1 < b.1 - 1e-12),
    };
    for j in 0..cols {
        let mut next = best.clone();
        let mut ch: Vec<Option<Option<usize>>> = best.iter().map(|b| b.map(|_| None)).collect();
        for mask in 0..full {
            let Some((k, c)) = best[mask] else { continue };
            for (i, row) in dist.iter().enumerate().take(rows) {
                if mask & (1 << i) != 0 || row[j] > gate {
                    continue;
                }
                let nm = mask | (1 << i);
                let cand = (k + 1, c + row[j]);
                if better(cand, next[nm]) {
                    next[nm] = Some(cand);
                    ch[nm] = Some(Some(i));
                }
            }
        }
        best = next;
        choice.push(ch);
    }
    let mut mask = (0..full)
        .filter(|&m| best[m].is_some())
        .fold(None::<usize>, |acc, m| match acc {
            None => Some(m),
            Some(a) if better(best[m].unwrap(), best[a]) => Some(m),
            keep => keep,
        })
        .unwrap_or(0);
    let mut pairs = Vec::new();
    for j in (0..cols).rev() {
        if let Some(Some(i)) = choice[j][mask] {
            pairs.push((i, j));
            mask &= !(1 << i);
        }
    }
    pairs.reverse();
    pairs
}

fn greedy_assignment(dist: &[Vec<f64>], n: usize, m: usize, gate: f64) -> Vec<(usize, usize)> {
    let mut cand: Vec<(f64, usize, usize)> = (0..n)
        .flat_map(|i| (0..m).map(move |j| (i, j)))
        .filter(|&(i, j)| dist[i][j] <= gate)
        .map(|(i, j)| (dist[i][j], i, j))
        .collect();
    cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let (mut ti, mut dj) = (vec![false; n], vec![false; m]);
    let mut out = Vec::new();
    for (_, i, j) in cand {
        if !ti[i] && !dj[j] {
            ti[i] = true;
            dj[j] = true;
            out.push((i, j));
        }
    }
    out
}

/// Track lifecycle: matched tracks are predicted and corrected, unmatched
/// tracks are only predicted (and die past `max_misses`), unmatched
/// detections spawn tentative tracks.
pub fn manage(
    tracks: &[Track],
    assignment: &Assignment,
    detections: &[Point2],
    dt: f64,
    cfg: &TrackerConfig,
    next_id: &mut u64,
) -> Vec<Track> {
    let mut out = Vec::with_capacity(tracks.len() + assignment.unmatched_detections.len());
    for track in tracks {
        let mut t = if dt > 0.0 { predict(track, dt, cfg.q) } else { track.clone() };
        let matched = assignment.pairs.iter().find(|&&(id, _)| id == track.id).map(|&(_, d)| d);
        match matched.map(|d| update(&t, detections[d], cfg.r)) {
            Some(Ok(updated)) => {
                t = updated;
                t.hits += 1;
                t.misses = 0;
            }
            Some(Err(_)) | None => {
                t.misses += 1;
            }
        }
        if t.misses > cfg.max_misses {
            t.status = TrackStatus::Dead;
        } else if t.hits >= cfg.confirm_hits {
            t.status = TrackStatus::Confirmed;
        }
        if t.status != TrackStatus::Dead {
            out.push(t);
        }
    }
    for &d in &assignment.unmatched_detections {
        let mut t = Track::new(*next_id, detections[d], cfg.spawn_covariance());
        *next_id += 1;
        if t.hits >= cfg.confirm_hits {
            t.status = TrackStatus::Confirmed;
        }
        out.push(t);
    }
    out
}

/// Stateful wrapper running predict → associate → manage once per scan.
#[derive(Clone, Debug)]
pub struct Tracker {
    pub config: TrackerConfig,
    tracks: Vec<Track>,
    next_id: u64,
}

impl Tracker {
    pub fn new(config: TrackerConfig) -> Self {
        Self { config, tracks: Vec::new(), next_id: 1 }
    }

    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    pub fn confirmed(&self) -> impl Iterator<Item = &Track> {
        self.tracks.iter().filter(|t| t.is_confirmed())
    }

    pub fn step(&mut self, detections: &[Point2], dt: f64) -> Assignment {
        let predicted: Vec<Track> = if dt > 0.0 {
            self.tracks.iter().map(|t| predict(t, dt, self.config.q)).collect()
        } else {
            self.tracks.clone()
        };
        let assignment = associate(&predicted, detections, self.config.gate);
        self.tracks = manage(&self.tracks, &assignment, detections, dt, &self.config, &mut self.next_id);
        assignment
    }
}

/// A person hypothesis assembled from one or two confirmed leg tracks.
#[derive(Clone, Debug, PartialEq)]
pub struct PersonEstimate {
    pub position: Point2,
    pub velocity: Point2,
    /// Contributing leg track ids, ascending.
    pub track_ids: Vec<u64>,
}

impl PersonEstimate {
    /// Stable handle: the smallest contributing leg track id.
    pub fn id(&self) -> u64 {
        self.track_ids[0]
    }
}

/// Pairs confirmed leg tracks closer than `max_separation` (closest pairs
/// first) into persons; unpaired legs become single-leg persons.
pub fn pair_legs(tracks: &[Track], max_separation: f64) -> Vec<PersonEstimate> {
    let legs: Vec<&Track> = tracks.iter().filter(|t| t.is_confirmed()).collect();
    let mut cand = Vec::new();
    for i in 0..legs.len() {
        for j in (i + 1)..legs.len() {
            let d = legs[i].position().distance(legs[j].position());
            if d <= max_separation {
                cand.push((d, i, j));
            }
        }
    }
    cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut used = vec![false; legs.len()];
    let mut out = Vec::new();
    for (_, i, j) in cand {
        if used[i] || used[j] {
            continue;
        }
        used[i] = true;
        used[j] = true;
        let (a, b) = (legs[i], legs[j]);
        let mut ids = vec![a.id, b.id];
        ids.sort_unstable();
        out.push(PersonEstimate {
            position: a.position().lerp(b.position(), 0.5),
            velocity: a.velocity().lerp(b.velocity(), 0.5),
            track_ids: ids,
        });
    }
    for (i, leg) in legs.iter().enumerate() {
        if !used[i] {
            out.push(PersonEstimate { position: leg.position(), velocity: leg.velocity(), track_ids: vec![leg.id] });
        }
    }
    out.sort_by_key(PersonEstimate::id);
    out
}
