//! Rasterizes the house into an occupancy grid and plans from the kitchen to
//! the office with 8-connected A*, then shows the first navigation command.

use activefollow::control::{nav_command, path_length, plan_path, ControlConfig};
use activefollow::geometry::Point2;
use activefollow::simkit::bundled_scenario;
use activefollow::world::{square_meets_polygon, OccupancyGrid, Pose};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let house = bundled_scenario("house").expect("bundled");
    let res = house.map.resolution;
    let mut grid = OccupancyGrid::covering(house.map.bounds, res);
    for i in 0..grid.len() {
        let c = grid.cell_at_index(i);
        let p = grid.cell_center(c);
        let h = res / 2.0;
        let hit = house.map.obstacles.iter().any(|o| square_meets_polygon(o, p.x - h, p.y - h, p.x + h, p.y + h));
        grid.set(c, if hit { 0.97 } else { 0.03 });
    }

    let cfg = ControlConfig::default();
    let (start, goal) = (Point2::new(1.5, 2.5), Point2::new(9.5, 6.0));
    let path = plan_path(start, goal, &grid, &cfg)?;
    println!("{} way-points, {:.2} m", path.len(), path_length(&path));
    for p in &path {
        println!("  ({:.2}, {:.2})", p.x, p.y);
    }
    let cmd = nav_command(&Pose::new(start.x, start.y, 0.0), goal, &grid, &cfg)?;
    println!("first command: {}", cmd.name());
    Ok(())
}
