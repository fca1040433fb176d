//! Gaze planning and base navigation.
//!
//! Navigation turns in place toward a visible goal and then drives straight;
//! when the straight segment is blocked it falls back to an A* path over the
//! inflated occupancy grid.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::behavior::Blackboard;
use crate::geometry::{normalize_angle, Point2};
use crate::identity::BeliefGrid;
use crate::world::{CellIndex, OccupancyGrid, Pose};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ControlError {
    #[error("goal ({x:.2}, {y:.2}) is unreachable")]
    Unreachable { x: f64, y: f64 },
    #[error("point ({x:.2}, {y:.2}) lies outside the map")]
    OutsideMap { x: f64, y: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ControlConfig {
    pub theta_tol: f64,
    pub d_goal: f64,
    pub standoff: f64,
    pub pan_limit: f64,
    pub k_v: f64,
    pub v_max: f64,
    pub robot_radius: f64,
    /// Cells above this are obstacles for planning and visibility.
    pub occ_threshold: f64,
    /// Pan change per tick while sweeping (rad).
    pub sweep_step: f64,
}

impl Default for ControlConfig {
    fn default() -> Self {
        Self {
            theta_tol: 0.15,
            d_goal: 0.4,
            standoff: 0.8,
            pan_limit: 1.2,
            k_v: 0.5,
            v_max: 0.22,
            robot_radius: 0.25,
            occ_threshold: 0.65,
            sweep_step: 0.1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NavCommand {
    /// Rotate in place to an absolute heading.
    Turn { heading: f64 },
    GoStraight { speed: f64 },
    MoveBase { path: Vec<Point2> },
    Stop,
}

impl NavCommand {
    pub fn name(&self) -> &'static str {
        match self {
            NavCommand::Turn { .. } => "TURN",
            NavCommand::GoStraight { .. } => "GO_STRAIGHT",
            NavCommand::MoveBase { .. } => "MOVE_BASE",
            NavCommand::Stop => "STOP",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GazeCommand {
    /// Pan relative to the base heading (rad).
    pub pan_target: f64,
}

/// Where the gaze planner decided to look.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GazeMode {
    Target,
    BeliefPeak,
    LegTrack,
    Sweep,
}

/// Gaze policy: target, then belief peak, then nearest leg track, then sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct GazePlanner {
    sweep_pan: f64,
    sweep_dir: f64,
}

impl Default for GazePlanner {
    fn default() -> Self {
        Self { sweep_pan: 0.0, sweep_dir: 1.0 }
    }
}

impl GazePlanner {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn plan(
        &mut self,
        robot: &Pose,
        bb: &Blackboard,
        belief: Option<&BeliefGrid>,
        tracks: &[Point2],
        cfg: &ControlConfig,
    ) -> (GazeCommand, GazeMode) {
        let look = |p: Point2| GazeCommand { pan_target: robot.bearing_to(p).clamp(-cfg.pan_limit, cfg.pan_limit) };
        if let Some((p, _)) = bb.target_estimate {
            return (look(p), GazeMode::Target);
        }
        if let Some((p, v)) = belief.and_then(|b| b.argmax(robot.position())) {
            if v > 0.5 {
                return (look(p), GazeMode::BeliefPeak);
            }
        }
        let here = robot.position();
        if let Some(&p) = tracks.iter().min_by(|a, b| a.distance(here).total_cmp(&b.distance(here))) {
            return (look(p), GazeMode::LegTrack);
        }
        (GazeCommand { pan_target: self.sweep(cfg) }, GazeMode::Sweep)
    }

    /// Saw-tooth sweep across `±pan_limit`.
    pub fn sweep(&mut self, cfg: &ControlConfig) -> f64 {
        let next = self.sweep_pan + self.sweep_dir * cfg.sweep_step;
        if next.abs() >= cfg.pan_limit {
            self.sweep_pan = next.clamp(-cfg.pan_limit, cfg.pan_limit);
            self.sweep_dir = -self.sweep_dir;
        } else {
            self.sweep_pan = next;
        }
        self.sweep_pan
    }
}

/// Inflated copy of `grid` used for planning.
pub fn inflate_for_robot(grid: &OccupancyGrid, cfg: &ControlConfig) -> OccupancyGrid {
    grid.inflate(cfg.occ_threshold, cfg.robot_radius)
}

/// Distance from the center of `c` to the nearest raw cell above `tau`,
/// searched out to `reach` metres (returns `reach` if none is closer).
pub fn raw_clearance(raw: &OccupancyGrid, c: CellIndex, tau: f64, reach: f64) -> f64 {
    let r = (reach / raw.resolution()).ceil() as i64;
    let mut best = reach;
    for dy in -r..=r {
        for dx in -r..=r {
            if raw.get((c.0 + dx, c.1 + dy)).is_some_and(|p| p > tau) {
                best = best.min(((dx * dx + dy * dy) as f64).sqrt() * raw.resolution());
            }
        }
    }
    best
}

/// Straight-line clearance on the inflated grid. A robot already inside the
/// inflation band may cross leading band cells that are free in the raw grid,
/// as long as each one is no closer to a raw obstacle than the one before.
pub fn corridor_clear(raw: &OccupancyGrid, inflated: &OccupancyGrid, a: Point2, b: Point2, tau: f64) -> bool {
    if a == b {
        return true;
    }
    let reach = 1.0;
    let mut escaping = true;
    let mut last = f64::NEG_INFINITY;
    for c in inflated.traverse(a, b, true) {
        let Some(p) = inflated.get(c) else {
            escaping = false;
            continue;
        };
        if p <= tau {
            escaping = false;
            continue;
        }
        let raw_free = raw.get(c).is_none_or(|q| q <= tau);
        if !(escaping && raw_free) {
            return false;
        }
        let clr = raw_clearance(raw, c, tau, reach);
        if clr + 1e-9 < last {
            return false;
        }
        last = clr;
    }
    true
}

/// TURN / GO_STRAIGHT when the goal is in clear sight, MOVE_BASE otherwise.
pub fn nav_command(robot: &Pose, goal: Point2, grid: &OccupancyGrid, cfg: &ControlConfig) -> Result<NavCommand, ControlError> {
    let inflated = inflate_for_robot(grid, cfg);
    nav_command_inflated(robot, goal, grid, &inflated, cfg)
}

/// [`nav_command`] with a precomputed inflated grid.
pub fn nav_command_inflated(
    robot: &Pose,
    goal: Point2,
    grid: &OccupancyGrid,
    inflated: &OccupancyGrid,
    cfg: &ControlConfig,
) -> Result<NavCommand, ControlError> {
    if !grid.contains_point(goal) {
        return Err(ControlError::OutsideMap { x: goal.x, y: goal.y });
    }
    let here = robot.position();
    let dist = here.distance(goal);
    if dist <= cfg.d_goal {
        return Ok(NavCommand::Stop);
    }
    if corridor_clear(grid, inflated, here, goal, cfg.occ_threshold) {
        let desired = (goal - here).angle();
        if normalize_angle(desired - robot.heading).abs() > cfg.theta_tol {
            return Ok(NavCommand::Turn { heading: desired });
        }
        return Ok(NavCommand::GoStraight { speed: (cfg.k_v * dist).min(cfg.v_max) });
    }
    plan_path_inflated(here, goal, grid, inflated, cfg).map(|path| NavCommand::MoveBase { path })
}

#[derive(PartialEq)]
struct Open {
    f: f64,
    g: f64,
    idx: usize,
}

impl Eq for Open {}

impl Ord for Open {
    fn cmp(&self, o: &Self) -> Ordering {
        o.f.total_cmp(&self.f).then_with(|| self.g.total_cmp(&o.g)).then_with(|| o.idx.cmp(&self.idx))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

fn octile(a: CellIndex, b: CellIndex) -> f64 {
    let dx = (a.0 - b.0).abs() as f64;
    let dy = (a.1 - b.1).abs() as f64;
    dx.max(dy) + (std::f64::consts::SQRT_2 - 1.0) * dx.min(dy)
}

/// 8-connected A* between cells; cost in cell units. The start cell is
/// always enterable; other cells must satisfy `passable`.
pub fn astar_with(
    grid: &OccupancyGrid,
    start: CellIndex,
    goal: CellIndex,
    passable: impl Fn(CellIndex) -> bool,
) -> Option<(Vec<CellIndex>, f64)> {
    let s = grid.index(start)?;
    let g_idx = grid.index(goal)?;
    if !passable(goal) && start != goal {
        return None;
    }
    let mut dist = vec![f64::INFINITY; grid.len()];
    let mut parent = vec![usize::MAX; grid.len()];
    let mut closed = vec![false; grid.len()];
    let mut open = BinaryHeap::new();
    dist[s] = 0.0;
    open.push(Open { f: octile(start, goal), g: 0.0, idx: s });
    while let Some(Open { g, idx, .. }) = open.pop() {
        if closed[idx] {
            continue;
        }
        closed[idx] = true;
        if idx == g_idx {
            let mut path = vec![grid.cell_at_index(idx)];
            let mut cur = idx;
            while parent[cur] != usize::MAX {
                cur = parent[cur];
                path.push(grid.cell_at_index(cur));
            }
            path.reverse();
            return Some((path, g));
        }
        let c = grid.cell_at_index(idx);
        for dy in -1..=1i64 {
            for dx in -1..=1i64 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let n = (c.0 + dx, c.1 + dy);
                let Some(ni) = grid.index(n) else { continue };
                if closed[ni] || !passable(n) {
                    continue;
                }
                let ng = g + if dx != 0 && dy != 0 { std::f64::consts::SQRT_2 } else { 1.0 };
                if ng < dist[ni] {
                    dist[ni] = ng;
                    parent[ni] = idx;
                    open.push(Open { f: ng + octile(n, goal), g: ng, idx: ni });
                }
            }
        }
    }
    None
}

/// A* over cells with probability at most `tau`; cost in cell units.
pub fn astar(grid: &OccupancyGrid, start: CellIndex, goal: CellIndex, tau: f64) -> Option<(Vec<CellIndex>, f64)> {
    if grid.get(start).is_none_or(|p| p > tau) {
        return None;
    }
    astar_with(grid, start, goal, |c| grid.get(c).is_some_and(|p| p <= tau))
}

/// Collision-free path from `start` to `goal` on the grid inflated by the
/// robot radius, shortcut greedily along clear lines of sight.
pub fn plan_path(start: Point2, goal: Point2, grid: &OccupancyGrid, cfg: &ControlConfig) -> Result<Vec<Point2>, ControlError> {
    let inflated = inflate_for_robot(grid, cfg);
    plan_path_inflated(start, goal, grid, &inflated, cfg)
}

/// [`plan_path`] with a precomputed inflated grid.
pub fn plan_path_inflated(
    start: Point2,
    goal: Point2,
    grid: &OccupancyGrid,
    inflated: &OccupancyGrid,
    cfg: &ControlConfig,
) -> Result<Vec<Point2>, ControlError> {
    for p in [start, goal] {
        if !grid.contains_point(p) {
            return Err(ControlError::OutsideMap { x: p.x, y: p.y });
        }
    }
    let unreachable = ControlError::Unreachable { x: goal.x, y: goal.y };
    let tau = cfg.occ_threshold;
    let (sc, gc) = (grid.cell_of(start), grid.cell_of(goal));
    if grid.get(sc).is_some_and(|p| p > tau) || inflated.get(gc).is_some_and(|p| p > tau) {
        return Err(unreachable);
    }
    // the start may sit inside the inflation band; let it drive out without
    // getting any closer to an obstacle than it already is
    let escape = cfg.robot_radius + 1.5 * grid.resolution();
    let reach = cfg.robot_radius + 2.0 * grid.resolution();
    let start_clearance = raw_clearance(grid, sc, tau, reach);
    let passable = |c: CellIndex| {
        let ok_inflated = inflated.get(c).is_some_and(|p| p <= tau);
        ok_inflated
            || (grid.get(c).is_some_and(|p| p <= tau)
                && grid.cell_center(c).distance(start) <= escape
                && raw_clearance(grid, c, tau, reach) + 1e-9 >= start_clearance)
    };
    let (cells, _) = astar_with(grid, sc, gc, passable).ok_or(unreachable)?;
    let mut pts: Vec<Point2> = cells.iter().map(|&c| grid.cell_center(c)).collect();
    pts[0] = start;
    *pts.last_mut().expect("non-empty path") = goal;
    if pts.len() == 1 {
        pts.push(goal);
    }

    let mut out = vec![pts[0]];
    let mut i = 0;
    while i < pts.len() - 1 {
        let mut j = pts.len() - 1;
        while j > i + 1 && !corridor_clear(grid, inflated, pts[i], pts[j], tau) {
            j -= 1;
        }
        out.push(pts[j]);
        i = j;
    }
    Ok(out)
}

/// Path length in metres.
pub fn path_length(path: &[Point2]) -> f64 {
    path.windows(2).map(|w| w[0].distance(w[1])).sum()
}

/// Free cell of the inflated grid nearest to `p` (by center distance), if any.
pub fn nearest_plannable(p: Point2, inflated: &OccupancyGrid, tau: f64) -> Option<Point2> {
    let c = inflated.cell_of(p);
    if inflated.get(c).is_some_and(|v| v <= tau) {
        return Some(p);
    }
    (0..inflated.len())
        .filter(|&i| inflated.cells()[i] <= tau)
        .map(|i| inflated.cell_center(inflated.cell_at_index(i)))
        .min_by(|a, b| a.distance(p).total_cmp(&b.distance(p)))
}
