//! Map entropy, frontier extraction and clustering, and way-point search.
//!
//! The frontier field is evaluated on the ternary view of the map
//! (free 0, unknown 0.5, occupied 1) with an 8-neighbour absolute-difference
//! gradient, so that with unit obstacle weight a cell scores above the
//! threshold exactly when it is free and touches unknown space.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::geometry::Point2;
use crate::world::{current_region, CellIndex, OccupancyGrid, Pose, RegionGraph, RegionId, WorldError};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SearchError {
    #[error(transparent)]
    World(#[from] WorldError),
    #[error("insufficient history: {0}")]
    InsufficientHistory(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SearchConfig {
    /// Obstacle-boundary weight β.
    pub beta: f64,
    pub f_thresh: f64,
    /// Cells below this are free.
    pub free_max: f64,
    /// Cells above this are occupied.
    pub occupied_min: f64,
    pub min_cluster: usize,
    /// Unknown-count radius around a cluster, in cells.
    pub r_n: f64,
    /// Information weight α (m per unknown cell).
    pub alpha: f64,
    /// Distance-history window (s).
    pub window: f64,
    /// Minimum history span for a query (s).
    pub min_span: f64,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            beta: 1.0,
            f_thresh: 0.75,
            free_max: 0.35,
            occupied_min: 0.65,
            min_cluster: 3,
            r_n: 5.0,
            alpha: 0.5,
            window: 2.0,
            min_span: 0.0,
        }
    }
}

/// `−Σ m log₂ m` over all cells, with `0 · log 0 = 0`.
pub fn map_entropy(grid: &OccupancyGrid) -> f64 {
    grid.cells().iter().map(|&m| plogp(m)).sum()
}

/// Binary-cell entropy `−Σ [m log₂ m + (1 − m) log₂(1 − m)]`.
pub fn binary_map_entropy(grid: &OccupancyGrid) -> f64 {
    grid.cells().iter().map(|&m| plogp(m) + plogp(1.0 - m)).sum()
}

fn plogp(m: f64) -> f64 {
    if m <= 0.0 {
        0.0
    } else {
        -m * m.log2()
    }
}

const NEIGHBORS: [(i64, i64); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

impl SearchConfig {
    fn ternary(&self, p: f64) -> f64 {
        if p < self.free_max {
            0.0
        } else if p > self.occupied_min {
            1.0
        } else {
            0.5
        }
    }

    pub fn is_free(&self, p: f64) -> bool {
        p < self.free_max
    }

    pub fn is_unknown(&self, p: f64) -> bool {
        (self.free_max..=self.occupied_min).contains(&p)
    }
}

fn gradient_l1(grid: &OccupancyGrid, c: CellIndex, field: impl Fn(f64) -> f64) -> f64 {
    let here = field(grid.get(c).expect("cell in grid"));
    NEIGHBORS
        .iter()
        .filter_map(|&(dx, dy)| {
            let v = grid.get((c.0 + dx, c.1 + dy))?;
            Some((dx.abs() + dy.abs()) as f64 * (field(v) - here).abs())
        })
        .sum()
}

/// Frontier field `F = ‖∇Λ‖₁ − β(‖∇Λ_o‖₁ + Λ_o − 0.5)` per cell, row-major.
pub fn frontier_map(grid: &OccupancyGrid, cfg: &SearchConfig) -> Vec<f64> {
    let lam = |p: f64| cfg.ternary(p);
    let lam_o = |p: f64| if p > cfg.occupied_min { 1.0 } else { 0.0 };
    (0..grid.len())
        .map(|i| {
            let c = grid.cell_at_index(i);
            let p = grid.cells()[i];
            gradient_l1(grid, c, lam) - cfg.beta * (gradient_l1(grid, c, lam_o) + lam_o(p) - 0.5)
        })
        .collect()
}

/// Free cells whose frontier field exceeds `f_thresh`, in row-major order.
pub fn extract_frontiers(grid: &OccupancyGrid, cfg: &SearchConfig) -> Vec<CellIndex> {
    frontier_map(grid, cfg)
        .into_iter()
        .enumerate()
        .filter(|&(i, f)| f > cfg.f_thresh && cfg.is_free(grid.cells()[i]))
        .map(|(i, _)| grid.cell_at_index(i))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrontierCluster {
    pub cells: Vec<CellIndex>,
    /// Unknown cells within `r_n` of the cluster.
    pub unknown_count: usize,
    /// Center of the cluster cell nearest the anchor point.
    pub representative: Point2,
}

/// 8-connected components of `cells` with at least `min_cluster` members.
/// The representative of each is the member whose center is closest to `anchor`.
pub fn cluster_frontiers(
    grid: &OccupancyGrid,
    cells: &[CellIndex],
    anchor: Point2,
    cfg: &SearchConfig,
) -> Vec<FrontierCluster> {
    let mut member = vec![false; grid.len()];
    for &c in cells {
        if let Some(i) = grid.index(c) {
            member[i] = true;
        }
    }
    let mut seen = vec![false; grid.len()];
    let mut out = Vec::new();
    for i in 0..grid.len() {
        if !member[i] || seen[i] {
            continue;
        }
        seen[i] = true;
        let mut comp = vec![grid.cell_at_index(i)];
        let mut queue = VecDeque::from([grid.cell_at_index(i)]);
        while let Some(c) = queue.pop_front() {
            for (dx, dy) in NEIGHBORS {
                let n = (c.0 + dx, c.1 + dy);
                if let Some(j) = grid.index(n) {
                    if member[j] && !seen[j] {
                        seen[j] = true;
                        comp.push(n);
                        queue.push_back(n);
                    }
                }
            }
        }
        if comp.len() < cfg.min_cluster {
            continue;
        }
        comp.sort_by_key(|&c| grid.index(c));
        let representative = comp
            .iter()
            .map(|&c| grid.cell_center(c))
            .min_by(|a, b| a.distance(anchor).total_cmp(&b.distance(anchor)))
            .expect("non-empty component");
        let unknown_count = count_unknown_near(grid, &comp, cfg);
        out.push(FrontierCluster { cells: comp, unknown_count, representative });
    }
    out
}

fn count_unknown_near(grid: &OccupancyGrid, comp: &[CellIndex], cfg: &SearchConfig) -> usize {
    let r = cfg.r_n.floor() as i64;
    let r2 = cfg.r_n * cfg.r_n;
    let mut counted = vec![false; grid.len()];
    let mut n = 0;
    for &c in comp {
        for dy in -r..=r {
            for dx in -r..=r {
                if (dx * dx + dy * dy) as f64 > r2 {
                    continue;
                }
                let q = (c.0 + dx, c.1 + dy);
                if let Some(j) = grid.index(q) {
                    if !counted[j] && cfg.is_unknown(grid.cells()[j]) {
                        counted[j] = true;
                        n += 1;
                    }
                }
            }
        }
    }
    n
}

/// `U = αN − (d(x, c) + d(c, l*))`.
pub fn utility(c: Point2, x: Point2, l_star: Point2, n: usize, alpha: f64) -> f64 {
    alpha * n as f64 - (x.distance(c) + c.distance(l_star))
}

/// Robot positions over the last `window` seconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceHistory {
    pub window: f64,
    samples: VecDeque<(f64, Point2)>,
}

impl DistanceHistory {
    pub fn new(window: f64) -> Self {
        Self { window, samples: VecDeque::new() }
    }

    /// Appends a sample; non-increasing timestamps are ignored.
    pub fn push(&mut self, t: f64, p: Point2) -> bool {
        if self.samples.back().is_some_and(|&(last, _)| t <= last) {
            return false;
        }
        self.samples.push_back((t, p));
        while self.samples.front().is_some_and(|&(t0, _)| t - t0 > self.window + 1e-9) {
            self.samples.pop_front();
        }
        true
    }

    pub fn samples(&self) -> impl ExactSizeIterator<Item = &(f64, Point2)> {
        self.samples.iter()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn span(&self) -> f64 {
        match (self.samples.front(), self.samples.back()) {
            (Some(a), Some(b)) => b.0 - a.0,
            _ => 0.0,
        }
    }

    pub fn clear(&mut self) {
        self.samples.clear();
    }

    /// Mean per-step change of the distance to `p` across the window.
    pub fn mean_distance_change(&self, p: Point2) -> f64 {
        let d: Vec<f64> = self.samples.iter().map(|&(_, q)| q.distance(p)).collect();
        if d.len() < 2 {
            return 0.0;
        }
        d.windows(2).map(|w| w[1] - w[0]).sum::<f64>() / (d.len() - 1) as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WaypointChoice {
    pub goal: Point2,
    pub l_star: Point2,
    /// Neighbouring region the robot was heading toward.
    pub heading_region: RegionId,
    pub clusters: Vec<FrontierCluster>,
    /// Utility of the chosen cluster, `None` when falling back to `l*`.
    pub utility: Option<f64>,
}

/// Picks the region most approached during the history window, then the
/// frontier cluster of highest utility relative to that region's centroid.
pub fn waypoint_search(
    x: &Pose,
    graph: &RegionGraph,
    grid: &OccupancyGrid,
    history: &DistanceHistory,
    cfg: &SearchConfig,
) -> Result<WaypointChoice, SearchError> {
    if history.len() < 2 {
        return Err(SearchError::InsufficientHistory(format!("{} samples, need at least 2", history.len())));
    }
    if history.span() < cfg.min_span {
        return Err(SearchError::InsufficientHistory(format!(
            "span {:.3} s below {:.3} s",
            history.span(),
            cfg.min_span
        )));
    }
    let here = current_region(x.position(), graph)?;
    let mut neighbors = graph.neighbors(here);
    if neighbors.is_empty() {
        neighbors.push(here);
    }
    let mut heading = (neighbors[0], f64::INFINITY);
    for id in neighbors {
        let centroid = graph.region(id).expect("validated adjacency").polygon.centroid();
        let change = history.mean_distance_change(centroid);
        if change < heading.1 {
            heading = (id, change);
        }
    }
    let l_star = graph.region(heading.0).expect("validated adjacency").polygon.centroid();

    let frontiers = extract_frontiers(grid, cfg);
    let clusters = cluster_frontiers(grid, &frontiers, l_star, cfg);
    let pos = x.position();
    let best = clusters
        .iter()
        .map(|c| (c.representative, utility(c.representative, pos, l_star, c.unknown_count, cfg.alpha)))
        .fold(None::<(Point2, f64)>, |acc, cand| match acc {
            Some((_, u)) if u >= cand.1 => acc,
            _ => Some(cand),
        });
    Ok(WaypointChoice {
        goal: best.map_or(l_star, |b| b.0),
        l_star,
        heading_region: heading.0,
        utility: best.map(|b| b.1),
        clusters,
    })
}
