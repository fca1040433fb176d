//! Live simulation over a WebSocket.
//!
//! The simulation runs on its own thread at `tick_hz` (times `rate`) and owns
//! all state. Each client has a reader/writer thread. Steering commands reach
//! the simulation through a bounded channel that blocks rather than drops;
//! snapshots fan out through per-client bounded queues that drop the oldest
//! frame when full.
//!
//! Client to server: `{"type":"steer","vx":f,"vy":f}`, `{"type":"pause"}`,
//! `{"type":"resume"}`, `{"type":"reset"}`. Server to client: `state` frames
//! (see [`snapshot`]) and `{"type":"error","msg":s}`.

use std::collections::VecDeque;
use std::io::ErrorKind;
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc::{self, Receiver, SyncSender, TryRecvError};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use serde::Deserialize;
use serde_json::{json, Value};
use tungstenite::{Message, WebSocket};

use super::engine::{Simulation, TimelineEvent};
use super::scenario::Scenario;
use super::SimError;
use crate::geometry::Point2;
use crate::search::extract_frontiers;

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Command {
    Steer { vx: f64, vy: f64 },
    Pause,
    Resume,
    Reset,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ServiceOptions {
    /// Wall-clock speed multiplier (1 = real time).
    pub rate: f64,
    /// Snapshot frames buffered per client before the oldest is dropped.
    pub queue_capacity: usize,
    /// Steering commands buffered before senders block.
    pub command_capacity: usize,
}

impl Default for ServiceOptions {
    fn default() -> Self {
        Self { rate: 1.0, queue_capacity: 64, command_capacity: 256 }
    }
}

/// Parses one client frame.
pub fn parse_command(text: &str) -> Result<Command, String> {
    let v: Value = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let keys = v.as_object().map_or(0, |o| o.len());
    let c = Command::deserialize(v).map_err(|e| e.to_string())?;
    match c {
        Command::Steer { vx, vy } if !(vx.is_finite() && vy.is_finite()) => Err("steer velocity must be finite".into()),
        Command::Pause | Command::Resume | Command::Reset if keys != 1 => Err(format!("unexpected fields in {c:?} command")),
        _ => Ok(c),
    }
}

pub fn error_frame(msg: &str) -> String {
    json!({"type": "error", "msg": msg}).to_string()
}

/// The `state` frame for the current simulation state.
pub fn snapshot(sim: &Simulation, last: Option<&TimelineEvent>, paused: bool) -> Value {
    let world = sim.world();
    let agent = sim.agent();
    let occ = &agent.occupancy;
    let r = world.robot;
    let persons: Vec<Value> = world
        .persons
        .iter()
        .map(|p| json!({"id": p.id, "x": p.position.x, "y": p.position.y, "vx": p.velocity.x, "vy": p.velocity.y}))
        .collect();
    let peak = agent.belief.argmax(r.position());
    let frontiers: Vec<[f64; 2]> = extract_frontiers(occ, &agent.cfg.search)
        .into_iter()
        .map(|c| {
            let p = occ.cell_center(c);
            [p.x, p.y]
        })
        .collect();
    let prediction: Vec<Value> = agent
        .bb
        .prediction
        .as_ref()
        .map(|p| p.points.iter().map(|q| json!({"t": q.t, "x": q.x, "y": q.y, "valid": q.valid})).collect())
        .unwrap_or_default();
    json!({
        "type": "state",
        "t": last.map_or(0.0, |e| e.t),
        "robot": {"x": r.x, "y": r.y, "heading": r.heading, "pan": r.pan},
        "persons": persons,
        "target_id": sim.scenario().target_id,
        "belief_summary": {
            "max": agent.belief.max(),
            "argmax": peak.map(|(p, _)| [p.x, p.y]),
            "entropy": last.map_or(0.0, |e| e.belief_entropy),
        },
        "frontiers": frontiers,
        "active_action": last.map_or("", |e| e.active_action.as_str()),
        "target_status": last.map(|e| e.target_status),
        "prediction": prediction,
        "paused": paused,
        "finished": sim.finished().map(|s| if s { "success" } else { "failure" }),
    })
}

struct ClientQueue {
    frames: Mutex<VecDeque<Arc<str>>>,
    capacity: usize,
    closed: AtomicBool,
    dropped: AtomicU64,
}

impl ClientQueue {
    fn push(&self, frame: Arc<str>) {
        let mut q = self.frames.lock().expect("queue lock");
        if q.len() >= self.capacity {
            q.pop_front();
            self.dropped.fetch_add(1, Ordering::Relaxed);
        }
        q.push_back(frame);
    }

    fn drain(&self) -> Vec<Arc<str>> {
        self.frames.lock().expect("queue lock").drain(..).collect()
    }
}

type Clients = Arc<Mutex<Vec<Arc<ClientQueue>>>>;

/// Running service; dropping it without [`ServiceHandle::shutdown`] leaves the threads running.
pub struct ServiceHandle {
    addr: SocketAddr,
    stop: Arc<AtomicBool>,
    threads: Vec<JoinHandle<()>>,
    clients: Clients,
}

impl ServiceHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    /// Snapshot frames dropped so far across connected clients.
    pub fn dropped_frames(&self) -> u64 {
        self.clients.lock().expect("clients lock").iter().map(|c| c.dropped.load(Ordering::Relaxed)).sum()
    }

    /// Stops all threads and waits for them.
    pub fn shutdown(mut self) {
        self.stop.store(true, Ordering::SeqCst);
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }

    /// Blocks until the service stops.
    pub fn join(mut self) {
        for t in self.threads.drain(..) {
            let _ = t.join();
        }
    }
}

/// Binds `addr` and starts the simulation and accept threads.
pub fn serve(scenario: Scenario, addr: impl ToSocketAddrs, opts: ServiceOptions) -> Result<ServiceHandle, SimError> {
    if !(opts.rate > 0.0 && opts.rate.is_finite()) || opts.queue_capacity == 0 || opts.command_capacity == 0 {
        return Err(SimError::Service("rate and capacities must be positive".into()));
    }
    let listener = TcpListener::bind(addr)?;
    listener.set_nonblocking(true)?;
    let local = listener.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let clients: Clients = Arc::new(Mutex::new(Vec::new()));
    let (tx, rx) = mpsc::sync_channel::<Command>(opts.command_capacity);

    Simulation::new(scenario.clone())?;
    let sim_thread = {
        let stop = stop.clone();
        let clients = clients.clone();
        thread::spawn(move || simulation_loop(scenario, rx, clients, stop, opts.rate))
    };
    let accept_thread = {
        let stop = stop.clone();
        let clients = clients.clone();
        thread::spawn(move || accept_loop(listener, tx, clients, stop, opts.queue_capacity))
    };
    Ok(ServiceHandle { addr: local, stop, threads: vec![sim_thread, accept_thread], clients })
}

fn broadcast(clients: &Clients, frame: Arc<str>) {
    let mut list = clients.lock().expect("clients lock");
    list.retain(|c| !c.closed.load(Ordering::Relaxed));
    for c in list.iter() {
        c.push(frame.clone());
    }
}

fn simulation_loop(
    scenario: Scenario,
    rx: Receiver<Command>,
    clients: Clients,
    stop: Arc<AtomicBool>,
    rate: f64,
) {
    let mut sim = Simulation::new(scenario.clone()).expect("validated before spawning");
    let period = Duration::from_secs_f64(1.0 / (scenario.tick_hz * rate));
    let mut paused = false;
    let mut last: Option<TimelineEvent> = None;
    let mut next = Instant::now();
    while !stop.load(Ordering::SeqCst) {
        loop {
            match rx.try_recv() {
                Ok(Command::Steer { vx, vy }) => {
                    sim.steer(scenario.target_id, Point2::new(vx, vy));
                }
                Ok(Command::Pause) => paused = true,
                Ok(Command::Resume) => paused = false,
                Ok(Command::Reset) => {
                    if let Ok(fresh) = Simulation::new(scenario.clone()) {
                        sim = fresh;
                        last = None;
                    }
                }
                Err(TryRecvError::Empty) | Err(TryRecvError::Disconnected) => break,
            }
        }
        if !paused && sim.finished().is_none() {
            match sim.step() {
                Ok(e) => last = Some(e),
                Err(e) => {
                    broadcast(&clients, error_frame(&e.to_string()).into());
                    paused = true;
                }
            }
        }
        let frame: Arc<str> = snapshot(&sim, last.as_ref(), paused).to_string().into();
        broadcast(&clients, frame);
        next += period;
        let now = Instant::now();
        if next > now {
            thread::sleep(next - now);
        } else {
            next = now;
        }
    }
}

fn accept_loop(listener: TcpListener, tx: SyncSender<Command>, clients: Clients, stop: Arc<AtomicBool>, capacity: usize) {
    let mut workers = Vec::new();
    while !stop.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, _)) => {
                let queue = Arc::new(ClientQueue {
                    frames: Mutex::new(VecDeque::new()),
                    capacity,
                    closed: AtomicBool::new(false),
                    dropped: AtomicU64::new(0),
                });
                let (tx, stop) = (tx.clone(), stop.clone());
                let clients = clients.clone();
                workers.push(thread::spawn(move || {
                    if let Some(ws) = handshake(stream) {
                        clients.lock().expect("clients lock").push(queue.clone());
                        client_loop(ws, &queue, &tx, &stop);
                    }
                    queue.closed.store(true, Ordering::Relaxed);
                }));
            }
            Err(e) if e.kind() == ErrorKind::WouldBlock => thread::sleep(Duration::from_millis(5)),
            Err(_) => thread::sleep(Duration::from_millis(5)),
        }
        workers.retain(|w: &JoinHandle<()>| !w.is_finished());
    }
    for w in workers {
        let _ = w.join();
    }
}

fn handshake(stream: TcpStream) -> Option<WebSocket<TcpStream>> {
    stream.set_nonblocking(false).ok()?;
    stream.set_read_timeout(Some(Duration::from_secs(5))).ok()?;
    let ws = tungstenite::accept(stream).ok()?;
    ws.get_ref().set_read_timeout(Some(Duration::from_millis(5))).ok()?;
    Some(ws)
}

fn is_timeout(e: &tungstenite::Error) -> bool {
    matches!(e, tungstenite::Error::Io(io) if matches!(io.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut))
}

fn client_loop(mut ws: WebSocket<TcpStream>, queue: &ClientQueue, tx: &SyncSender<Command>, stop: &AtomicBool) {
    loop {
        if stop.load(Ordering::SeqCst) {
            let _ = ws.close(None);
            let _ = ws.flush();
            return;
        }
        for frame in queue.drain() {
            if ws.send(Message::text(frame.as_ref())).is_err() {
                return;
            }
        }
        match ws.read() {
            Ok(Message::Text(text)) => match parse_command(text.as_str()) {
                Ok(cmd) => {
                    if tx.send(cmd).is_err() {
                        return;
                    }
                }
                Err(msg) => {
                    if ws.send(Message::text(error_frame(&msg))).is_err() {
                        return;
                    }
                }
            },
            Ok(Message::Binary(_)) => {
                if ws.send(Message::text(error_frame("expected a JSON text frame"))).is_err() {
                    return;
                }
            }
            Ok(Message::Close(_)) => {
                let _ = ws.flush();
                return;
            }
            Ok(_) => {}
            Err(e) if is_timeout(&e) => {}
            Err(_) => return,
        }
    }
}
