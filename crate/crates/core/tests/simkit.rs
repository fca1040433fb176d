use std::collections::BTreeMap;

use activefollow::geometry::Point2;
use activefollow::simkit::{bundled_scenario, load_scenario, run, SimError, Simulation, TargetStatus, HOUSE, OPEN_ROOM};
use serde_json::Value;

fn edited(text: &str, f: impl FnOnce(&mut Value)) -> String {
    let mut v: Value = serde_json::from_str(text).unwrap();
    f(&mut v);
    v.to_string()
}

fn error_path(text: &str) -> String {
    match load_scenario(text) {
        Err(SimError::Scenario { path, .. }) => path,
        other => panic!("expected a scenario error, got {:?}", other.map(|s| s.name)),
    }
}

#[test]
fn scenario_errors_name_the_field() {
    assert_eq!(error_path(&edited(HOUSE, |v| v["target_id"] = 99.into())), "target_id");
    assert_eq!(error_path(&edited(HOUSE, |v| v["tick_hz"] = "fast".into())), "tick_hz");
    let swapped = edited(HOUSE, |v| {
        let s = v["persons"][0]["script"].as_array_mut().unwrap();
        let t0 = s[0]["t"].clone();
        s[1]["t"] = t0;
    });
    assert_eq!(error_path(&swapped), "persons[0].script[1].t");
    let unknown = edited(OPEN_ROOM, |v| v["robot"]["wheels"] = 3.into());
    assert!(error_path(&unknown).starts_with("robot"));
}

#[test]
fn omitted_fields_take_defaults() {
    let text = edited(HOUSE, |v| {
        v.as_object_mut().unwrap().remove("tick_hz");
        v["robot"].as_object_mut().unwrap().remove("v_max");
    });
    let s = load_scenario(&text).unwrap();
    assert_eq!(s.tick_hz, 10.0);
    assert_eq!(s.robot.v_max, 0.22);
    assert_eq!(s.config.tracker.gate, 1.0);
}

#[test]
fn house_has_five_connected_regions() {
    let s = bundled_scenario("house").unwrap();
    assert_eq!(s.regions.regions.len(), 5);
    for r in &s.regions.regions {
        assert!(!s.regions.neighbors(r.id).is_empty());
    }
}

#[test]
fn logs_are_byte_identical_across_runs() {
    for name in ["open_room", "house"] {
        let s = bundled_scenario(name).unwrap();
        let (mut a, mut b) = (Vec::new(), Vec::new());
        let ra = run(&s, None, &mut a).unwrap();
        let rb = run(&s, None, &mut b).unwrap();
        assert_eq!(ra, rb);
        assert!(a == b, "{name} logs differ");
    }
}

#[test]
fn ticks_are_evenly_spaced_and_complete() {
    let s = bundled_scenario("house").unwrap();
    let mut sim = Simulation::new(s.clone()).unwrap();
    let mut from_log: BTreeMap<String, u64> = BTreeMap::new();
    let mut k = 0u64;
    while sim.finished().is_none() {
        let e = sim.step().unwrap();
        assert_eq!(e.t, k as f64 / s.tick_hz);
        match e.aux.get("invoked") {
            Some(list) => {
                for n in list.as_array().unwrap() {
                    *from_log.entry(n.as_str().unwrap().to_string()).or_default() += 1;
                }
                assert_eq!(list.as_array().unwrap().last().unwrap(), e.active_action.as_str());
            }
            None if !e.active_action.is_empty() => *from_log.entry(e.active_action.clone()).or_default() += 1,
            None => {}
        }
        assert!(e.aux.contains_key("nav"));
        assert_eq!(k == 0, e.aux.contains_key("tree"));
        k += 1;
    }
    assert_eq!(&from_log, &sim.agent().action_calls);
    assert_eq!(from_log.len(), 4, "every action ran: {from_log:?}");
}

#[test]
fn exhausted_budget_is_a_failure() {
    let mut s = bundled_scenario("house").unwrap();
    s.max_time = 5.0;
    let mut log = Vec::new();
    let summary = run(&s, None, &mut log).unwrap();
    assert!(!summary.success);
    assert_eq!(summary.ticks, 50);
    let last: Value = serde_json::from_slice(log.split(|&b| b == b'\n').rev().nth(1).unwrap()).unwrap();
    assert_eq!(last["aux"]["finished"], "failure");
}

#[test]
fn open_room_summary() {
    let s = bundled_scenario("open_room").unwrap();
    let summary = run(&s, None, &mut std::io::sink()).unwrap();
    assert!(summary.success);
    assert_eq!(summary.time_to_reacquire, Some(0.0));
    assert!(summary.max_speed <= s.robot.v_max + 1e-12);
    assert_ne!(summary.final_status, TargetStatus::Lost);
}

#[test]
fn steering_is_clamped_and_applied_next_tick() {
    let s = bundled_scenario("open_room").unwrap();
    let limit = s.target().v_max;
    let mut sim = Simulation::new(s.clone()).unwrap();
    sim.step().unwrap();
    let v = sim.steer(s.target_id, Point2::new(3.0, 4.0));
    assert!((v.norm() - limit).abs() < 1e-12);
    assert!((v.x / v.y - 0.75).abs() < 1e-12);
    let before = sim.world().person(s.target_id).unwrap().position;
    sim.step().unwrap();
    let p = sim.world().person(s.target_id).unwrap();
    assert_eq!(p.velocity, v);
    assert!((p.position.distance(before) - limit / s.tick_hz).abs() < 1e-12);
}
