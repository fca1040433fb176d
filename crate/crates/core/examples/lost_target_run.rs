//! Runs the bundled house scenario, where the target walks out of the
//! kitchen and around a corner, and prints the behavior timeline.
//!
//! `cargo run --release --example lost_target_run -- [seed]`

use activefollow::simkit::{bundled_scenario, Simulation};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut scenario = bundled_scenario("house").expect("bundled");
    if let Some(seed) = std::env::args().nth(1) {
        scenario.seed = seed.parse()?;
    }
    let mut sim = Simulation::new(scenario)?;
    let mut last = String::new();
    while sim.finished().is_none() {
        let e = sim.step()?;
        let label = format!("{} ({:?})", e.active_action, e.target_status);
        let notable: Vec<&str> = ["enrolled", "lost", "prediction_made", "reidentified", "heading_region"]
            .into_iter()
            .filter(|k| e.aux.contains_key(*k))
            .collect();
        if label != last || !notable.is_empty() {
            println!(
                "t={:6.1}  robot=({:5.2},{:5.2})  {label}  {}",
                e.t,
                e.robot.x,
                e.robot.y,
                notable.join(",")
            );
            last = label;
        }
    }
    let s = sim.summary();
    println!(
        "success={} reacquire={:?} distance={:.2} m max_speed={:.3} m/s min_clearance={:.3} m",
        s.success, s.time_to_reacquire, s.distance_traveled, s.max_speed, s.min_clearance
    );
    Ok(())
}
