//! Frontier extraction, clustering and way-point selection on a partially
//! explored house map.

use activefollow::search::{cluster_frontiers, extract_frontiers, waypoint_search, DistanceHistory, SearchConfig};
use activefollow::simkit::bundled_scenario;
use activefollow::geometry::Point2;
use activefollow::world::{cast_laser, InverseSensorModel, OccupancyGrid, Pose, SensorConfig, WorldState};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let house = bundled_scenario("house").expect("bundled");
    let world = WorldState::new(house.map.bounds, house.map.obstacles.clone());
    let mut grid = OccupancyGrid::covering(house.map.bounds, house.map.resolution);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let sensors = SensorConfig::ideal();
    for pose in [Pose::new(2.0, 2.5, 0.0), Pose::new(6.0, 3.0, 1.57), Pose::new(6.0, 4.5, 1.57)] {
        let scan = cast_laser(&world, &pose, &sensors, &mut rng)?;
        grid.integrate_scan(&scan, &InverseSensorModel::default());
    }

    let cfg = SearchConfig::default();
    let frontiers = extract_frontiers(&grid, &cfg);
    println!("{} frontier cells", frontiers.len());

    // the robot drove north up the hallway
    let mut history = DistanceHistory::new(cfg.window);
    for k in 0..=20 {
        history.push(k as f64 * 0.1, Point2::new(6.0 + 0.01 * k as f64, 3.5 + 0.05 * k as f64));
    }
    let robot = Pose::new(6.2, 4.5, 1.2);
    let choice = waypoint_search(&robot, &house.regions, &grid, &history, &cfg)?;
    let name = &house.regions.region(choice.heading_region).expect("region").name;
    println!("heading toward region {} ({name}), centroid ({:.2}, {:.2})", choice.heading_region, choice.l_star.x, choice.l_star.y);
    for c in cluster_frontiers(&grid, &frontiers, choice.l_star, &cfg).iter().take(8) {
        println!(
            "  cluster of {:3} cells, {:3} unknown nearby, representative ({:.2}, {:.2})",
            c.cells.len(),
            c.unknown_count,
            c.representative.x,
            c.representative.y
        );
    }
    println!("way-point ({:.2}, {:.2}), utility {:?}", choice.goal.x, choice.goal.y, choice.utility);
    Ok(())
}
