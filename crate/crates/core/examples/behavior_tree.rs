//! Ticks the person-following tree against a scripted context and prints the
//! action chosen each tick, plus the tree as JSON.

use activefollow::behavior::*;

#[derive(Default)]
struct World {
    identified: bool,
    prediction: bool,
    gaze_ticks: u32,
}

fn main() -> Result<(), BehaviorError> {
    let tree = build_following_tree();
    println!("{}", serde_json::to_string_pretty(&tree).expect("serializable"));
    println!("{} fallbacks, {} sequences", tree.count_fallbacks(), tree.count_sequences());

    let mut handlers = Handlers::new()
        .condition(TARGET_IDENTIFIED, |w: &mut World| w.identified)
        .action(FOLLOW_TARGET, |_: &mut World| TickStatus::Running)
        .condition(PREDICTION_VALID, |w: &mut World| w.prediction)
        .action(NAVIGATE_TO_PREDICTION, |w: &mut World| {
            w.prediction = false;
            TickStatus::Success
        })
        .action(GAZE_SEARCH, |w: &mut World| {
            w.gaze_ticks += 1;
            if w.gaze_ticks > 2 { TickStatus::Failure } else { TickStatus::Running }
        })
        .action(WAYPOINT_SEARCH, |_: &mut World| TickStatus::Running);
    handlers.check(&tree)?;

    let script = [(true, false), (false, true), (false, false), (false, false), (false, false), (false, false), (true, false)];
    let mut w = World::default();
    for (k, (identified, prediction)) in script.into_iter().enumerate() {
        w.identified = identified;
        w.prediction |= prediction;
        let mut trace = Vec::new();
        let status = tick_traced(&tree, &mut w, &mut handlers, &mut trace)?;
        println!("tick {k}: {:<40} -> {status:?}", trace.join(" then "));
    }
    Ok(())
}
