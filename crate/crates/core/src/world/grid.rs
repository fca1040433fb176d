//! Occupancy grid with Bayesian per-cell updates.

use serde::{Deserialize, Serialize};

use super::sensors::LaserScan;
use crate::geometry::{Point2, Rect};

/// Prior of a never-observed cell.
pub const UNKNOWN: f64 = 0.5;

/// Integer cell coordinate. May lie outside the grid during traversal.
pub type CellIndex = (i64, i64);

/// Inverse sensor model for laser beams.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InverseSensorModel {
    /// p(m | z) for the cell where a beam ends on an obstacle.
    pub p_occ: f64,
    /// p(m | z) for cells a beam passes through.
    pub p_free: f64,
    pub p_min: f64,
    pub p_max: f64,
}

impl Default for InverseSensorModel {
    fn default() -> Self {
        Self { p_occ: 0.7, p_free: 0.3, p_min: 0.03, p_max: 0.97 }
    }
}

/// Posterior of a binary cell given prior `prior` and inverse-model value `p_z`:
/// `p_z·p / (p_z·p + (1 − p_z)(1 − p))`.
pub fn bayes_update(prior: f64, p_z: f64) -> f64 {
    let num = p_z * prior;
    let den = num + (1.0 - p_z) * (1.0 - prior);
    if den == 0.0 {
        prior
    } else {
        num / den
    }
}

/// Regular grid of per-cell probabilities anchored at `origin` (lower-left corner).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OccupancyGrid {
    origin: Point2,
    resolution: f64,
    width: usize,
    height: usize,
    cells: Vec<f64>,
}

impl OccupancyGrid {
    /// Grid with every cell at the unknown prior 0.5.
    pub fn new(origin: Point2, resolution: f64, width: usize, height: usize) -> Self {
        Self::filled(origin, resolution, width, height, UNKNOWN)
    }

    pub fn filled(origin: Point2, resolution: f64, width: usize, height: usize, value: f64) -> Self {
        assert!(resolution > 0.0, "grid resolution must be positive");
        Self { origin, resolution, width, height, cells: vec![value; width * height] }
    }

    /// Smallest grid of the given resolution covering `rect`.
    pub fn covering(rect: Rect, resolution: f64) -> Self {
        let w = (rect.width() / resolution).ceil().max(1.0) as usize;
        let h = (rect.height() / resolution).ceil().max(1.0) as usize;
        Self::new(Point2::new(rect.min_x, rect.min_y), resolution, w, h)
    }

    /// Build from row-major values (row 0 is the bottom row, y = origin.y).
    pub fn from_rows(origin: Point2, resolution: f64, rows: &[Vec<f64>]) -> Self {
        let height = rows.len();
        let width = rows.first().map_or(0, Vec::len);
        let mut cells = Vec::with_capacity(width * height);
        for row in rows {
            assert_eq!(row.len(), width, "ragged grid rows");
            cells.extend_from_slice(row);
        }
        Self { origin, resolution, width, height, cells }
    }

    pub fn origin(&self) -> Point2 {
        self.origin
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn cells_mut(&mut self) -> &mut [f64] {
        &mut self.cells
    }

    pub fn extent(&self) -> Rect {
        Rect::new(
            self.origin.x,
            self.origin.y,
            self.origin.x + self.width as f64 * self.resolution,
            self.origin.y + self.height as f64 * self.resolution,
        )
    }

    pub fn in_grid(&self, c: CellIndex) -> bool {
        c.0 >= 0 && c.1 >= 0 && (c.0 as usize) < self.width && (c.1 as usize) < self.height
    }

    pub fn index(&self, c: CellIndex) -> Option<usize> {
        self.in_grid(c).then(|| c.1 as usize * self.width + c.0 as usize)
    }

    pub fn cell_at_index(&self, i: usize) -> CellIndex {
        ((i % self.width) as i64, (i / self.width) as i64)
    }

    pub fn get(&self, c: CellIndex) -> Option<f64> {
        self.index(c).map(|i| self.cells[i])
    }

    pub fn set(&mut self, c: CellIndex, p: f64) {
        if let Some(i) = self.index(c) {
            self.cells[i] = p;
        }
    }

    /// Cell containing `p` (not bounds-checked).
    pub fn cell_of(&self, p: Point2) -> CellIndex {
        (
            ((p.x - self.origin.x) / self.resolution).floor() as i64,
            ((p.y - self.origin.y) / self.resolution).floor() as i64,
        )
    }

    pub fn cell_center(&self, c: CellIndex) -> Point2 {
        Point2::new(
            self.origin.x + (c.0 as f64 + 0.5) * self.resolution,
            self.origin.y + (c.1 as f64 + 0.5) * self.resolution,
        )
    }

    pub fn contains_point(&self, p: Point2) -> bool {
        self.in_grid(self.cell_of(p))
    }

    /// Applies the update `p ← bayes_update(p, p_z)` to one cell, then clamps.
    pub fn update_cell(&mut self, c: CellIndex, p_z: f64, p_min: f64, p_max: f64) {
        if let Some(i) = self.index(c) {
            self.cells[i] = bayes_update(self.cells[i], p_z).clamp(p_min, p_max);
        }
    }

    /// Cells crossed by segment `a–b`, from `a`'s cell to `b`'s cell.
    ///
    /// With `supercover` set, both side cells are emitted when the segment
    /// passes exactly through a cell corner, so every cell the closed segment
    /// touches is visited.
    pub fn traverse(&self, a: Point2, b: Point2, supercover: bool) -> Vec<CellIndex> {
        let ga = (a - self.origin) * (1.0 / self.resolution);
        let gb = (b - self.origin) * (1.0 / self.resolution);
        let mut cell = (ga.x.floor() as i64, ga.y.floor() as i64);
        let end = (gb.x.floor() as i64, gb.y.floor() as i64);
        let d = gb - ga;
        let step = (d.x.signum() as i64, d.y.signum() as i64);
        let axis_init = |g: f64, c: i64, s: i64, dd: f64| -> (f64, f64) {
            if dd == 0.0 {
                (f64::INFINITY, f64::INFINITY)
            } else {
                let boundary = if s > 0 { (c + 1) as f64 } else { c as f64 };
                ((boundary - g) / dd, (1.0 / dd).abs())
            }
        };
        let (mut tx, dtx) = axis_init(ga.x, cell.0, step.0, d.x);
        let (mut ty, dty) = axis_init(ga.y, cell.1, step.1, d.y);

        let mut out = vec![cell];
        let max_steps = (end.0 - cell.0).unsigned_abs() + (end.1 - cell.1).unsigned_abs() + 2;
        for _ in 0..max_steps {
            if cell == end {
                break;
            }
            let t = tx.min(ty);
            if t > 1.0 {
                break;
            }
            if (tx - ty).abs() < 1e-12 {
                if supercover {
                    out.push((cell.0 + step.0, cell.1));
                    out.push((cell.0, cell.1 + step.1));
                }
                cell = (cell.0 + step.0, cell.1 + step.1);
                tx += dtx;
                ty += dty;
            } else if tx < ty {
                cell.0 += step.0;
                tx += dtx;
            } else {
                cell.1 += step.1;
                ty += dty;
            }
            out.push(cell);
        }
        out
    }

    /// In-place integration of one scan with the per-scan rule "hit wins over free".
    pub fn integrate_scan(&mut self, scan: &LaserScan, model: &InverseSensorModel) {
        const FREE: u8 = 1;
        const HIT: u8 = 2;
        let mut marks: Vec<(usize, u8)> = Vec::new();
        let mut seen = vec![0u8; self.cells.len()];
        let origin = scan.origin.position();
        for (&angle, &range) in scan.angles.iter().zip(&scan.ranges) {
            let dir = Point2::from_polar(1.0, scan.origin.heading + angle);
            let hit = range < scan.max_range;
            let end = origin + dir * range;
            let path = self.traverse(origin, end, false);
            let hit_cell = hit.then(|| self.cell_of(origin + dir * (range + 1e-6)));
            for c in path {
                if Some(c) == hit_cell {
                    continue;
                }
                if let Some(i) = self.index(c) {
                    if seen[i] == 0 {
                        marks.push((i, FREE));
                        seen[i] = FREE;
                    }
                }
            }
            if let Some(i) = hit_cell.and_then(|c| self.index(c)) {
                if seen[i] == 0 {
                    marks.push((i, HIT));
                }
                seen[i] = HIT;
            }
        }
        for (i, _) in marks {
            let p_z = if seen[i] == HIT { model.p_occ } else { model.p_free };
            self.cells[i] = bayes_update(self.cells[i], p_z).clamp(model.p_min, model.p_max);
        }
    }

    /// Copy in which every cell within `radius` of a cell above `threshold` is set to 1.
    pub fn inflate(&self, threshold: f64, radius: f64) -> OccupancyGrid {
        let mut out = self.clone();
        let r = (radius / self.resolution).ceil() as i64;
        let r2 = (radius / self.resolution).powi(2);
        let mut stencil = Vec::new();
        for dy in -r..=r {
            for dx in -r..=r {
                if (dx * dx + dy * dy) as f64 <= r2 + 1e-9 {
                    stencil.push((dx, dy));
                }
            }
        }
        for (i, &p) in self.cells.iter().enumerate() {
            if p > threshold {
                let c = self.cell_at_index(i);
                for &(dx, dy) in &stencil {
                    out.set((c.0 + dx, c.1 + dy), 1.0);
                }
            }
        }
        out
    }
}

/// Returns a copy of `grid` updated with `scan`.
pub fn update_occupancy(grid: &OccupancyGrid, scan: &LaserScan, model: &InverseSensorModel) -> OccupancyGrid {
    let mut g = grid.clone();
    g.integrate_scan(scan, model);
    g
}

/// True iff no cell with probability above `tau_occ` touches segment `a–b`.
pub fn line_of_sight(a: Point2, b: Point2, grid: &OccupancyGrid, tau_occ: f64) -> bool {
    if a == b {
        return true;
    }
    grid.traverse(a, b, true)
        .into_iter()
        .all(|c| grid.get(c).is_none_or(|p| p <= tau_occ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::Pose;

    #[test]
    fn uniform_prior_returns_sensor_model() {
        assert!((bayes_update(0.5, 0.7) - 0.7).abs() < 1e-15);
    }

    #[test]
    fn second_hit_matches_hand_value() {
        let expected = 0.49 / (0.49 + 0.09);
        assert!((bayes_update(0.7, 0.7) - expected).abs() < 1e-15);
        assert!((expected - 0.844_827_586_206_896_5).abs() < 1e-15);
    }

    #[test]
    fn cells_outside_beams_are_untouched() {
        let mut g = OccupancyGrid::new(Point2::ORIGIN, 0.1, 50, 50);
        g.set((45, 45), 0.3);
        let scan = LaserScan {
            origin: Pose::new(1.0, 1.0, 0.0),
            angles: vec![0.0],
            ranges: vec![2.0],
            max_range: 10.0,
            leg_candidates: vec![],
        };
        g.integrate_scan(&scan, &InverseSensorModel::default());
        assert_eq!(g.get((45, 45)), Some(0.3));
        // beam ends at (3.0, 1.0): hit cell x = 30
        assert!((g.get((30, 10)).unwrap() - 0.7).abs() < 1e-12);
        assert!((g.get((20, 10)).unwrap() - 0.3).abs() < 1e-12);
    }

    #[test]
    fn traversal_is_contiguous() {
        let g = OccupancyGrid::new(Point2::ORIGIN, 0.1, 100, 100);
        let cells = g.traverse(Point2::new(0.05, 0.05), Point2::new(3.33, 1.21), false);
        for w in cells.windows(2) {
            let d = (w[1].0 - w[0].0).abs() + (w[1].1 - w[0].1).abs();
            assert!(d >= 1 && d <= 2);
        }
        assert_eq!(*cells.last().unwrap(), g.cell_of(Point2::new(3.33, 1.21)));
    }

    #[test]
    fn los_edge_cases() {
        let mut g = OccupancyGrid::new(Point2::ORIGIN, 1.0, 10, 10);
        let a = Point2::new(0.5, 5.5);
        let b = Point2::new(9.5, 5.5);
        assert!(line_of_sight(a, a, &g, 0.65));
        for y in 0..10 {
            g.set((5, y), 0.5);
        }
        assert!(line_of_sight(a, b, &g, 0.65));
        for y in 0..10 {
            g.set((5, y), 0.9);
        }
        assert!(!line_of_sight(a, b, &g, 0.65));
    }

    #[test]
    fn inflation_marks_disk() {
        let mut g = OccupancyGrid::filled(Point2::ORIGIN, 0.1, 20, 20, 0.1);
        g.set((10, 10), 0.9);
        let inf = g.inflate(0.65, 0.2);
        assert_eq!(inf.get((12, 10)), Some(1.0));
        assert_eq!(inf.get((12, 12)), Some(0.1));
        assert_eq!(inf.get((13, 10)), Some(0.1));
    }
}
