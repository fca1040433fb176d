//! Starts the WebSocket service on the open-room scenario at 5x speed,
//! connects a headless client, steers the target and prints a few frames.

use std::time::{Duration, Instant};

use activefollow::simkit::bundled_scenario;
use activefollow::simkit::service::{serve, ServiceOptions};
use serde_json::Value;
use tungstenite::Message;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scenario = bundled_scenario("open_room").expect("bundled");
    let handle = serve(scenario, "127.0.0.1:0", ServiceOptions { rate: 5.0, ..ServiceOptions::default() })?;
    let (mut ws, _) = tungstenite::connect(format!("ws://{}", handle.local_addr()))?;

    let start = Instant::now();
    let mut steered = false;
    while start.elapsed() < Duration::from_secs(2) {
        let Message::Text(text) = ws.read()? else { continue };
        let frame: Value = serde_json::from_str(text.as_str())?;
        if frame["type"] != "state" {
            println!("{frame}");
            continue;
        }
        let target = &frame["persons"][0];
        println!(
            "t={:5.1} action={:<14} target at ({:.2}, {:.2}) v=({:.2}, {:.2})",
            frame["t"].as_f64().unwrap_or(0.0),
            frame["active_action"].as_str().unwrap_or(""),
            target["x"].as_f64().unwrap_or(0.0),
            target["y"].as_f64().unwrap_or(0.0),
            target["vx"].as_f64().unwrap_or(0.0),
            target["vy"].as_f64().unwrap_or(0.0),
        );
        if !steered && frame["t"].as_f64().unwrap_or(0.0) > 1.0 {
            ws.send(Message::text(r#"{"type":"steer","vx":0.0,"vy":0.4}"#))?;
            ws.send(Message::text("not json"))?;
            steered = true;
        }
    }
    ws.close(None)?;
    handle.shutdown();
    Ok(())
}
