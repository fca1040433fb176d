use serde::{Deserialize, Serialize};

use crate::geometry::{normalize_angle, point_segment_distance, Point2, Polygon, Rect};

/// Robot base pose plus the head pan offset.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    /// Base heading, radians in (−π, π].
    pub heading: f64,
    /// Gaze offset relative to the heading, radians in (−π, π].
    #[serde(default)]
    pub pan: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self { x, y, heading: normalize_angle(heading), pan: 0.0 }
    }

    pub fn with_pan(mut self, pan: f64) -> Self {
        self.pan = normalize_angle(pan);
        self
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn set_position(&mut self, p: Point2) {
        self.x = p.x;
        self.y = p.y;
    }

    /// Absolute direction the camera is looking.
    pub fn gaze_direction(&self) -> f64 {
        normalize_angle(self.heading + self.pan)
    }

    /// Bearing of `p` relative to the base heading.
    pub fn bearing_to(&self, p: Point2) -> f64 {
        normalize_angle((p - self.position()).angle() - self.heading)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PersonState {
    pub id: u32,
    pub position: Point2,
    pub velocity: Point2,
    pub clothes_histogram: Vec<f64>,
    pub face_id: String,
}

/// Ground truth of the simulated environment at one instant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub time: f64,
    pub robot: Pose,
    pub persons: Vec<PersonState>,
    pub obstacles: Vec<Polygon>,
    pub bounds: Rect,
}

impl WorldState {
    pub fn new(bounds: Rect, obstacles: Vec<Polygon>) -> Self {
        Self {
            time: 0.0,
            robot: Pose::new(bounds.min_x, bounds.min_y, 0.0),
            persons: Vec::new(),
            obstacles,
            bounds,
        }
    }

    /// Ground-truth visibility: no obstacle polygon touches segment `a–b`.
    pub fn segment_clear(&self, a: Point2, b: Point2) -> bool {
        !self.obstacles.iter().any(|poly| poly.intersects_segment(a, b))
    }

    /// Distance along a ray to the first obstacle, clipped to `max_range`.
    pub fn raycast(&self, origin: Point2, angle: f64, max_range: f64) -> f64 {
        let dir = Point2::from_polar(1.0, angle);
        self.obstacles
            .iter()
            .filter_map(|poly| poly.ray_hit(origin, dir))
            .fold(max_range, f64::min)
    }

    /// Distance from `p` to the nearest obstacle (0 inside one).
    pub fn clearance(&self, p: Point2) -> f64 {
        self.obstacles
            .iter()
            .map(|poly| poly.distance_to(p))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn inside_obstacle(&self, p: Point2) -> bool {
        self.obstacles.iter().any(|poly| poly.contains(p))
    }

    pub fn person(&self, id: u32) -> Option<&PersonState> {
        self.persons.iter().find(|p| p.id == id)
    }
}

/// True when the closed axis-aligned square `[x0,x1]×[y0,y1]` meets the polygon.
pub fn square_meets_polygon(poly: &Polygon, x0: f64, y0: f64, x1: f64, y1: f64) -> bool {
    let sq = Polygon::rect(x0, y0, x1, y1);
    if poly.vertices.iter().any(|&v| sq.contains(v)) {
        return true;
    }
    if sq.vertices.iter().any(|&v| poly.contains(v)) {
        return true;
    }
    let crossing = sq
        .edges()
        .any(|(a, b)| poly.edges().any(|(p, q)| crate::geometry::segments_intersect(a, b, p, q)));
    crossing
}

/// Whether a disk of `radius` at `p` stays off every obstacle.
pub fn disk_is_free(obstacles: &[Polygon], p: Point2, radius: f64) -> bool {
    obstacles.iter().all(|poly| {
        !poly.contains(p) && poly.edges().all(|(a, b)| point_segment_distance(p, a, b) >= radius)
    })
}
