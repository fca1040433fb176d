use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::WorldError;
use crate::geometry::{Point2, Polygon};

pub type RegionId = u32;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub id: RegionId,
    pub name: String,
    pub polygon: Polygon,
}

/// Polygonal decomposition of the environment plus room connectivity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionGraph {
    pub regions: Vec<Region>,
    /// Undirected adjacency, one entry per connected pair.
    pub adjacency: Vec<(RegionId, RegionId)>,
}

impl RegionGraph {
    pub fn new(regions: Vec<Region>, adjacency: Vec<(RegionId, RegionId)>) -> Result<Self, WorldError> {
        let g = Self { regions, adjacency };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        let bad = |msg: String| Err(WorldError::InvalidRegionGraph(msg));
        if self.regions.is_empty() {
            return bad("no regions".into());
        }
        let mut ids = BTreeSet::new();
        for r in &self.regions {
            if !ids.insert(r.id) {
                return bad(format!("duplicate region id {}", r.id));
            }
            if !r.polygon.is_simple() {
                return bad(format!("region {} ({}) polygon is not simple", r.id, r.name));
            }
        }
        for &(a, b) in &self.adjacency {
            if !ids.contains(&a) || !ids.contains(&b) {
                return bad(format!("adjacency ({a}, {b}) references an unknown region"));
            }
            if a == b {
                return bad(format!("region {a} is adjacent to itself"));
            }
        }
        if self.regions.len() > 1 {
            for r in &self.regions {
                if self.neighbors(r.id).is_empty() {
                    return bad(format!("region {} ({}) has no neighbor", r.id, r.name));
                }
            }
        }
        Ok(())
    }

    pub fn region(&self, id: RegionId) -> Option<&Region> {
        self.regions.iter().find(|r| r.id == id)
    }

    pub fn region_by_name(&self, name: &str) -> Option<&Region> {
        self.regions.iter().find(|r| r.name == name)
    }

    /// Neighbor ids in ascending order.
    pub fn neighbors(&self, id: RegionId) -> Vec<RegionId> {
        let set: BTreeSet<_> = self
            .adjacency
            .iter()
            .filter_map(|&(a, b)| {
                if a == id {
                    Some(b)
                } else if b == id {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        set.into_iter().collect()
    }
}

/// Region containing `p`; shared boundaries resolve to the lowest id.
pub fn current_region(p: Point2, graph: &RegionGraph) -> Result<RegionId, WorldError> {
    graph
        .regions
        .iter()
        .filter(|r| r.polygon.contains(p))
        .map(|r| r.id)
        .min()
        .ok_or(WorldError::NoRegion { x: p.x, y: p.y })
}
