//! Builds an occupancy grid of the bundled house from a handful of laser
//! scans and prints it as ASCII, with the map entropy after each scan.

use activefollow::search::{binary_map_entropy, map_entropy};
use activefollow::simkit::bundled_scenario;
use activefollow::world::{cast_laser, InverseSensorModel, OccupancyGrid, Pose, SensorConfig, WorldState};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let house = bundled_scenario("house").expect("bundled");
    let world = WorldState::new(house.map.bounds, house.map.obstacles.clone());
    let mut grid = OccupancyGrid::covering(house.map.bounds, 0.2);
    let model = InverseSensorModel::default();
    let sensors = SensorConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);

    for pose in [Pose::new(1.5, 2.5, 0.0), Pose::new(4.0, 2.5, 0.0), Pose::new(6.0, 2.6, 1.57), Pose::new(6.0, 5.6, 0.0)] {
        let scan = cast_laser(&world, &pose, &sensors, &mut rng)?;
        grid.integrate_scan(&scan, &model);
        println!(
            "scan at ({:.1}, {:.1}): entropy {:.1} (verbatim), {:.1} bits (binary)",
            pose.x,
            pose.y,
            map_entropy(&grid),
            binary_map_entropy(&grid)
        );
    }

    for y in (0..grid.height() as i64).rev() {
        let row: String = (0..grid.width() as i64)
            .map(|x| match grid.get((x, y)).unwrap_or(0.5) {
                p if p > 0.65 => '#',
                p if p < 0.35 => '.',
                _ => ' ',
            })
            .collect();
        println!("{row}");
    }
    Ok(())
}
