use std::net::TcpStream;
use std::time::{Duration, Instant};

use activefollow::simkit::service::{parse_command, serve, Command, ServiceHandle, ServiceOptions};
use activefollow::simkit::{bundled_scenario, Scenario, Simulation};
use serde_json::{json, Value};
use tungstenite::stream::MaybeTlsStream;
use tungstenite::{Message, WebSocket};

type Client = WebSocket<MaybeTlsStream<TcpStream>>;

fn start(scenario: Scenario, rate: f64) -> ServiceHandle {
    serve(scenario, "127.0.0.1:0", ServiceOptions { rate, ..ServiceOptions::default() }).unwrap()
}

fn connect(h: &ServiceHandle) -> Client {
    connect_to(&format!("ws://{}", h.local_addr())).unwrap()
}

fn connect_to(url: &str) -> Result<Client, tungstenite::Error> {
    let (ws, _) = tungstenite::connect(url)?;
    if let MaybeTlsStream::Plain(s) = ws.get_ref() {
        s.set_read_timeout(Some(Duration::from_millis(50))).unwrap();
    }
    Ok(ws)
}

/// Every text frame received within `window`.
fn collect(ws: &mut Client, window: Duration) -> Vec<Value> {
    let end = Instant::now() + window;
    let mut out = Vec::new();
    while Instant::now() < end {
        match ws.read() {
            Ok(Message::Text(t)) => out.push(serde_json::from_str(t.as_str()).unwrap()),
            Ok(_) => {}
            Err(tungstenite::Error::Io(e))
                if matches!(e.kind(), std::io::ErrorKind::WouldBlock | std::io::ErrorKind::TimedOut) => {}
            Err(e) => panic!("read failed: {e}"),
        }
    }
    out
}

fn states(frames: &[Value]) -> Vec<&Value> {
    frames.iter().filter(|f| f["type"] == "state").collect()
}

fn send(ws: &mut Client, v: Value) {
    ws.send(Message::text(v.to_string())).unwrap();
}

#[test]
fn commands_parse_strictly() {
    assert_eq!(parse_command(r#"{"type":"steer","vx":0.1,"vy":-0.2}"#), Ok(Command::Steer { vx: 0.1, vy: -0.2 }));
    assert_eq!(parse_command(r#"{"type":"reset"}"#), Ok(Command::Reset));
    assert!(parse_command(r#"{"type":"steer","vx":0.1}"#).is_err());
    assert!(parse_command(r#"{"type":"pause","extra":1}"#).is_err());
    assert!(parse_command(r#"{"type":"jump"}"#).is_err());
    assert!(parse_command("steer").is_err());
}

#[test]
fn frames_arrive_in_order_at_tick_rate() {
    let h = start(bundled_scenario("house").unwrap(), 1.0);
    let mut ws = connect(&h);
    let frames = collect(&mut ws, Duration::from_millis(2000));
    let s = states(&frames);
    assert!(s.len() >= 16, "{} frames in 2 s", s.len());
    let ts: Vec<f64> = s.iter().map(|f| f["t"].as_f64().unwrap()).collect();
    assert!(ts.windows(2).all(|w| w[1] > w[0]), "{ts:?}");
    let f = s[0];
    for key in ["robot", "persons", "target_id", "belief_summary", "frontiers", "active_action", "target_status", "prediction", "paused", "finished"] {
        assert!(f.get(key).is_some(), "missing {key}");
    }
    h.shutdown();
}

#[test]
fn steering_moves_the_target() {
    let s = bundled_scenario("house").unwrap();
    let target = s.target_id;
    let h = start(s, 2.0);
    let mut ws = connect(&h);
    collect(&mut ws, Duration::from_millis(300));
    send(&mut ws, json!({"type": "steer", "vx": 0.0, "vy": 0.3}));
    let frames = collect(&mut ws, Duration::from_millis(500));
    let person = |f: &Value| f["persons"].as_array().unwrap().iter().find(|p| p["id"] == target).cloned().unwrap();
    let steered = states(&frames)
        .into_iter()
        .map(person)
        .any(|p| p["vx"].as_f64().unwrap() == 0.0 && (p["vy"].as_f64().unwrap() - 0.3).abs() < 1e-12);
    assert!(steered);
    h.shutdown();
}

#[test]
fn malformed_frames_get_an_error_reply() {
    let h = start(bundled_scenario("house").unwrap(), 1.0);
    let mut ws = connect(&h);
    ws.send(Message::text("{not json")).unwrap();
    ws.send(Message::binary(vec![1u8, 2, 3])).unwrap();
    send(&mut ws, json!({"type": "steer", "vx": "fast", "vy": 0}));
    let frames = collect(&mut ws, Duration::from_millis(600));
    let errors: Vec<&Value> = frames.iter().filter(|f| f["type"] == "error").collect();
    assert_eq!(errors.len(), 3);
    assert!(errors.iter().all(|e| e["msg"].as_str().is_some_and(|m| !m.is_empty())));
    assert!(!states(&frames).is_empty(), "service keeps streaming");
    h.shutdown();
}

#[test]
fn pause_resume_and_reset() {
    let h = start(bundled_scenario("house").unwrap(), 2.0);
    let mut ws = connect(&h);
    collect(&mut ws, Duration::from_millis(500));
    send(&mut ws, json!({"type": "pause"}));
    collect(&mut ws, Duration::from_millis(200));
    let held = collect(&mut ws, Duration::from_millis(400));
    let ts: Vec<f64> = states(&held).iter().map(|f| f["t"].as_f64().unwrap()).collect();
    assert!(!ts.is_empty() && ts.iter().all(|&t| t == ts[0]), "{ts:?}");
    assert!(states(&held).iter().all(|f| f["paused"] == true));

    send(&mut ws, json!({"type": "resume"}));
    let moving = collect(&mut ws, Duration::from_millis(400));
    let last = states(&moving).last().unwrap()["t"].as_f64().unwrap();
    assert!(last > ts[0]);

    send(&mut ws, json!({"type": "reset"}));
    let fresh = collect(&mut ws, Duration::from_millis(300));
    let min_t = states(&fresh).iter().map(|f| f["t"].as_f64().unwrap()).fold(f64::INFINITY, f64::min);
    assert!(min_t < last, "reset went back in time: {min_t} vs {last}");
    h.shutdown();
}

#[test]
fn client_reconnects_after_restart() {
    let s = bundled_scenario("house").unwrap();
    let h = start(s.clone(), 1.0);
    let addr = h.local_addr();
    let mut ws = connect(&h);
    assert!(!states(&collect(&mut ws, Duration::from_millis(300))).is_empty());
    h.shutdown();
    drop(ws);

    let h = serve(s, addr, ServiceOptions::default()).unwrap();
    let url = format!("ws://{addr}");
    let mut ws = (0..20)
        .find_map(|_| connect_to(&url).ok().or_else(|| {
            std::thread::sleep(Duration::from_millis(100));
            None
        }))
        .expect("reconnected");
    assert!(!states(&collect(&mut ws, Duration::from_millis(300))).is_empty());
    h.shutdown();
}

#[test]
fn watching_does_not_change_the_run() {
    let s = bundled_scenario("open_room").unwrap();
    let h = start(s.clone(), 4.0);
    let mut ws = connect(&h);
    let frames = collect(&mut ws, Duration::from_millis(1200));
    h.shutdown();

    let mut sim = Simulation::new(s).unwrap();
    let mut compared = 0;
    for f in states(&frames) {
        if f["active_action"] == "" {
            continue;
        }
        let t = f["t"].as_f64().unwrap();
        while sim.time() <= t && sim.finished().is_none() {
            sim.step().unwrap();
        }
        let r = sim.world().robot;
        assert_eq!(f["robot"]["x"].as_f64().unwrap(), r.x, "t = {t}");
        assert_eq!(f["robot"]["y"].as_f64().unwrap(), r.y, "t = {t}");
        assert_eq!(f["robot"]["heading"].as_f64().unwrap(), r.heading, "t = {t}");
        compared += 1;
    }
    assert!(compared >= 10, "only {compared} frames compared");
}
