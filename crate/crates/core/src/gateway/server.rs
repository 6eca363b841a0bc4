use std::collections::{BTreeMap, VecDeque};
use std::io::{self, BufRead, BufReader, Write};
use std::net::{Shutdown, SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use super::protocol::*;
use crate::channel::{symbols, Symbol, SILENCE};
use crate::learners::{Contestant, Learner, LearnerError};
use crate::session::{Session, SessionConfig, SessionError, SessionReport};

pub const HEARTBEAT: Duration = Duration::from_secs(5);
/// Pace used for human players unless a speed has been set.
pub const HUMAN_TICKS_PER_SECOND: f64 = 8.0;

pub enum Seat {
    /// Wait for a learner-role client.
    Remote,
    InProcess(Contestant),
}

pub struct ServeConfig {
    pub session: SessionConfig,
    pub seat: Seat,
    pub heartbeat: Duration,
    pub ticks_per_second: Option<f64>,
    pub start_paused: bool,
}

impl ServeConfig {
    pub fn new(session: SessionConfig, seat: Seat) -> Self {
        ServeConfig { session, seat, heartbeat: HEARTBEAT, ticks_per_second: None, start_paused: false }
    }
}

enum LearnerMsg {
    Output(u64, Symbol),
    Text(Vec<Symbol>),
    Gone,
}

enum AttachReply {
    Accepted(Option<Sender<LearnerMsg>>),
    Rejected,
}

enum Control {
    Attach { id: u64, role: Role, mode: Mode, writer: Sender<String>, done: JoinHandle<()>, reply: Sender<AttachReply> },
    Reject { writer: Sender<String>, done: JoinHandle<()>, message: String },
    Command { id: u64, cmd: ClientRecord },
    Violation { id: u64, message: String },
    Detach { id: u64 },
}

#[derive(Default)]
struct SeatState {
    attached: Option<u64>,
    mode: Mode,
    writer: Option<Sender<String>>,
    rx: Option<Receiver<LearnerMsg>>,
    buffer: VecDeque<Symbol>,
}

/// The session's view of a wire-attached learner.
struct RemoteLearner {
    seat: Arc<Mutex<SeatState>>,
    tick: u64,
}

impl Learner for RemoteLearner {
    fn next(&mut self, input: Symbol, reward: i8) -> Result<Symbol, LearnerError> {
        let tick = self.tick;
        self.tick += 1;
        let mut seat = self.seat.lock().expect("seat poisoned");
        if seat.attached.is_none() {
            return Ok(SILENCE);
        }
        match seat.mode {
            Mode::Human => {
                let mut gone = false;
                if let Some(rx) = &seat.rx {
                    let mut got = Vec::new();
                    while let Ok(m) = rx.try_recv() {
                        match m {
                            LearnerMsg::Text(s) => got.extend(s),
                            LearnerMsg::Gone => gone = true,
                            LearnerMsg::Output(..) => {}
                        }
                    }
                    seat.buffer.extend(got);
                }
                if gone {
                    seat.attached = None;
                }
                Ok(seat.buffer.pop_front().unwrap_or(SILENCE))
            }
            Mode::Lockstep => {
                if let Some(w) = &seat.writer {
                    let _ = w.send(encode(&ServerRecord::Prompt { tick, input: sym(input), reward }));
                }
                loop {
                    let msg = seat.rx.as_ref().map(|rx| rx.recv().unwrap_or(LearnerMsg::Gone)).unwrap_or(LearnerMsg::Gone);
                    match msg {
                        LearnerMsg::Output(t, s) if t == tick => return Ok(s),
                        LearnerMsg::Output(t, _) => log::warn!("stale learner output for tick {t} at tick {tick}"),
                        LearnerMsg::Text(_) => {}
                        LearnerMsg::Gone => {
                            seat.attached = None;
                            return Ok(SILENCE);
                        }
                    }
                }
            }
        }
    }

    fn name(&self) -> &str {
        "remote"
    }
}

struct Client {
    role: Role,
    writer: Sender<String>,
}

pub struct Server {
    listener: TcpListener,
}

impl Server {
    pub fn bind(addr: impl ToSocketAddrs) -> io::Result<Self> {
        Ok(Server { listener: TcpListener::bind(addr)? })
    }

    pub fn local_addr(&self) -> io::Result<SocketAddr> {
        self.listener.local_addr()
    }

    /// Run one session to completion, serving clients meanwhile.
    pub fn run(self, cfg: ServeConfig) -> Result<SessionReport, SessionError> {
        let (ctl_tx, ctl_rx) = mpsc::channel::<Control>();
        let stop = Arc::new(AtomicBool::new(false));
        let acceptor = spawn_acceptor(self.listener, ctl_tx, Arc::clone(&stop))?;
        let result = Loop::new(cfg, ctl_rx).and_then(|l| l.run());
        stop.store(true, Ordering::SeqCst);
        let _ = acceptor.join();
        result
    }
}

/// Bind to localhost and serve until the session ends.
pub fn serve(cfg: ServeConfig, port: u16) -> Result<SessionReport, SessionError> {
    let server = Server::bind(("127.0.0.1", port))?;
    log::info!("gateway listening on {}", server.local_addr().map(|a| a.to_string()).unwrap_or_default());
    server.run(cfg)
}

fn spawn_acceptor(listener: TcpListener, ctl: Sender<Control>, stop: Arc<AtomicBool>) -> Result<JoinHandle<()>, SessionError> {
    listener.set_nonblocking(true)?;
    Ok(thread::spawn(move || {
        let mut next_id = 1;
        while !stop.load(Ordering::SeqCst) {
            match listener.accept() {
                Ok((stream, peer)) => {
                    log::debug!("client {next_id} connected from {peer}");
                    let ctl = ctl.clone();
                    let id = next_id;
                    next_id += 1;
                    thread::spawn(move || handle_client(id, stream, ctl));
                }
                Err(e) if e.kind() == io::ErrorKind::WouldBlock => thread::sleep(Duration::from_millis(10)),
                Err(e) => {
                    log::warn!("accept failed: {e}");
                    thread::sleep(Duration::from_millis(10));
                }
            }
        }
    }))
}

fn spawn_writer(stream: TcpStream) -> (Sender<String>, JoinHandle<()>) {
    let (tx, rx) = mpsc::channel::<String>();
    let handle = thread::spawn(move || {
        let mut w = io::BufWriter::new(&stream);
        for line in rx {
            if w.write_all(line.as_bytes()).and_then(|_| w.write_all(b"\n")).and_then(|_| w.flush()).is_err() {
                break;
            }
        }
        drop(w);
        let _ = stream.shutdown(Shutdown::Write);
    });
    (tx, handle)
}

fn handle_client(id: u64, stream: TcpStream, ctl: Sender<Control>) {
    let _ = stream.set_nonblocking(false);
    let _ = stream.set_nodelay(true);
    let Ok(write_half) = stream.try_clone() else { return };
    let (writer, done) = spawn_writer(write_half);
    let mut lines = BufReader::new(stream).lines();
    let hello = match lines.next() {
        Some(Ok(l)) => serde_json::from_str::<ClientRecord>(&l).map_err(|e| e.to_string()),
        _ => Err("connection closed before hello".into()),
    };
    let (role, mode) = match hello {
        Ok(ClientRecord::Hello { version, role, mode }) if version == PROTOCOL_VERSION => (role, mode),
        Ok(ClientRecord::Hello { version, .. }) => {
            let message = format!("protocol version {version} not supported; server speaks {PROTOCOL_VERSION}");
            let _ = ctl.send(Control::Reject { writer, done, message });
            return;
        }
        Ok(_) => {
            let _ = ctl.send(Control::Reject { writer, done, message: "expected hello".into() });
            return;
        }
        Err(e) => {
            let _ = ctl.send(Control::Reject { writer, done, message: format!("bad hello: {e}") });
            return;
        }
    };
    let (reply_tx, reply_rx) = mpsc::channel();
    if ctl.send(Control::Attach { id, role, mode, writer, done, reply: reply_tx }).is_err() {
        return;
    }
    let learner_tx = match reply_rx.recv() {
        Ok(AttachReply::Accepted(tx)) => tx,
        _ => return,
    };
    let violation = |message: String| {
        let _ = ctl.send(Control::Violation { id, message });
    };
    for line in lines {
        let Ok(line) = line else { break };
        if line.trim().is_empty() {
            continue;
        }
        let rec = match serde_json::from_str::<ClientRecord>(&line) {
            Ok(r) => r,
            Err(e) => {
                violation(format!("unreadable record: {e}"));
                break;
            }
        };
        match rec {
            ClientRecord::LearnerOutput { tick, symbol } => match (&learner_tx, mode, parse_sym(&symbol)) {
                (Some(tx), Mode::Lockstep, Ok(s)) => {
                    let _ = tx.send(LearnerMsg::Output(tick, s));
                }
                (_, _, Err(e)) => {
                    violation(e);
                    break;
                }
                _ => {
                    violation("learner_output is for the lockstep learner only".into());
                    break;
                }
            },
            ClientRecord::HumanOutput { text } => match (&learner_tx, mode, symbols(&text)) {
                (Some(tx), Mode::Human, Ok(s)) => {
                    let _ = tx.send(LearnerMsg::Text(s));
                }
                (Some(_), Mode::Human, Err(e)) => {
                    violation(e.to_string());
                    break;
                }
                _ => {
                    violation("human_output is for the human learner only".into());
                    break;
                }
            },
            ClientRecord::Hello { .. } => {
                violation("duplicate hello".into());
                break;
            }
            ClientRecord::Bye => break,
            cmd => {
                if ctl.send(Control::Command { id, cmd }).is_err() {
                    break;
                }
            }
        }
    }
    if let Some(tx) = learner_tx {
        let _ = tx.send(LearnerMsg::Gone);
    }
    let _ = ctl.send(Control::Detach { id });
}

struct Loop {
    session: Session,
    remote: Option<Arc<Mutex<SeatState>>>,
    ctl: Receiver<Control>,
    clients: BTreeMap<u64, Client>,
    writers: Vec<JoinHandle<()>>,
    seq: u64,
    paused: bool,
    steps: u64,
    speed: Option<f64>,
    speed_set: bool,
    heartbeat: Duration,
    last_sent: Instant,
}

impl Loop {
    fn new(cfg: ServeConfig, ctl: Receiver<Control>) -> Result<Self, SessionError> {
        let (learner, door, remote): (Box<dyn Learner>, _, _) = match cfg.seat {
            Seat::Remote => {
                let seat = Arc::new(Mutex::new(SeatState::default()));
                (Box::new(RemoteLearner { seat: Arc::clone(&seat), tick: 0 }), None, Some(seat))
            }
            Seat::InProcess(c) => (c.learner, c.door, None),
        };
        let mut session = Session::new(cfg.session, learner)?;
        if let Some(d) = door {
            session.attach_side_door(d);
        }
        session.record_events();
        Ok(Loop {
            session,
            remote,
            ctl,
            clients: BTreeMap::new(),
            writers: Vec::new(),
            seq: 0,
            paused: cfg.start_paused,
            steps: 0,
            speed: cfg.ticks_per_second,
            speed_set: cfg.ticks_per_second.is_some(),
            heartbeat: cfg.heartbeat,
            last_sent: Instant::now(),
        })
    }

    fn send_to(&mut self, id: u64, rec: &ServerRecord) {
        if let Some(c) = self.clients.get(&id) {
            let _ = c.writer.send(encode(rec));
        }
    }

    fn broadcast(&mut self, event: WireEvent) {
        let rec = ServerRecord::Event { seq: self.seq, event };
        self.seq += 1;
        let line = encode(&rec);
        for c in self.clients.values() {
            let _ = c.writer.send(line.clone());
        }
        self.last_sent = Instant::now();
    }

    fn control_state(&mut self) {
        let tick = self.session.tick();
        let (paused, ticks_per_second) = (self.paused, self.speed);
        self.broadcast(WireEvent::ControlState { tick, paused, ticks_per_second });
    }

    fn seat_ready(&self) -> bool {
        self.remote.as_ref().map_or(true, |s| s.lock().expect("seat poisoned").attached.is_some())
    }

    fn drop_client(&mut self, id: u64) {
        self.clients.remove(&id);
        if let Some(seat) = &self.remote {
            let mut s = seat.lock().expect("seat poisoned");
            if s.attached == Some(id) {
                s.attached = None;
                s.writer = None;
                s.buffer.clear();
            }
        }
    }

    fn handle(&mut self, msg: Control) {
        match msg {
            Control::Reject { writer, done, message } => {
                let _ = writer.send(encode(&ServerRecord::Error { message }));
                self.writers.push(done);
            }
            Control::Attach { id, role, mode, writer, done, reply } => {
                self.writers.push(done);
                let refuse = |writer: Sender<String>, reply: Sender<AttachReply>, message: &str| {
                    let _ = writer.send(encode(&ServerRecord::Error { message: message.into() }));
                    let _ = reply.send(AttachReply::Rejected);
                };
                let mut learner_tx = None;
                if role == Role::Learner {
                    let Some(seat) = &self.remote else {
                        return refuse(writer, reply, "the learner seat is taken by an in-process learner");
                    };
                    let mut s = seat.lock().expect("seat poisoned");
                    if s.attached.is_some() {
                        drop(s);
                        return refuse(writer, reply, "the learner seat is taken");
                    }
                    let (tx, rx) = mpsc::channel();
                    *s = SeatState { attached: Some(id), mode, writer: Some(writer.clone()), rx: Some(rx), buffer: VecDeque::new() };
                    learner_tx = Some(tx);
                    if mode == Mode::Human {
                        self.session.budget_suspended = true;
                        if !self.speed_set {
                            self.speed = Some(HUMAN_TICKS_PER_SECOND);
                        }
                    }
                }
                self.clients.insert(id, Client { role, writer });
                let tick = self.session.tick();
                self.send_to(id, &ServerRecord::Welcome { version: PROTOCOL_VERSION, role, mode, tick });
                // late joiners get the current state before live events
                let snapshot = self.session.world.snapshot();
                self.send_to(id, &ServerRecord::Event { seq: self.seq, event: WireEvent::WorldSnapshot { tick, snapshot } });
                self.seq += 1;
                let _ = reply.send(AttachReply::Accepted(learner_tx));
                // keep seq contiguous for everyone else
                let rec = ServerRecord::Event {
                    seq: self.seq - 1,
                    event: WireEvent::ControlState { tick, paused: self.paused, ticks_per_second: self.speed },
                };
                let line = encode(&rec);
                for (cid, c) in &self.clients {
                    if *cid != id {
                        let _ = c.writer.send(line.clone());
                    }
                }
                log::info!("client {id} attached as {:?}", self.clients[&id].role);
            }
            Control::Command { id, cmd } => {
                match cmd {
                    ClientRecord::Pause => self.paused = true,
                    ClientRecord::Resume => {
                        self.paused = false;
                        self.steps = 0;
                        if self.speed == Some(0.0) {
                            self.speed = None;
                        }
                    }
                    ClientRecord::Step { n } => {
                        self.paused = true;
                        self.steps += n;
                    }
                    ClientRecord::SetSpeed { ticks_per_second } if ticks_per_second.is_finite() && ticks_per_second >= 0.0 => {
                        self.speed_set = true;
                        if ticks_per_second == 0.0 {
                            self.paused = true;
                        }
                        self.speed = Some(ticks_per_second);
                    }
                    other => {
                        self.send_to(id, &ServerRecord::Error { message: format!("rejected command {other:?}") });
                        return;
                    }
                }
                self.control_state();
            }
            Control::Violation { id, message } => {
                log::warn!("client {id}: {message}");
                self.send_to(id, &ServerRecord::Error { message });
                self.drop_client(id);
            }
            Control::Detach { id } => {
                log::info!("client {id} detached");
                self.drop_client(id);
            }
        }
    }

    fn drain_control(&mut self) {
        while let Ok(m) = self.ctl.try_recv() {
            self.handle(m);
        }
    }

    fn wait(&mut self, up_to: Duration) {
        let left = self.heartbeat.saturating_sub(self.last_sent.elapsed());
        match self.ctl.recv_timeout(up_to.min(left).max(Duration::from_millis(1))) {
            Ok(m) => self.handle(m),
            Err(RecvTimeoutError::Timeout) => {}
            Err(RecvTimeoutError::Disconnected) => thread::sleep(up_to.min(Duration::from_millis(10))),
        }
        if self.last_sent.elapsed() >= self.heartbeat {
            let line = encode(&ServerRecord::Heartbeat { tick: self.session.tick() });
            for c in self.clients.values() {
                let _ = c.writer.send(line.clone());
            }
            self.last_sent = Instant::now();
        }
    }

    fn run(mut self) -> Result<SessionReport, SessionError> {
        let mut next_at = Instant::now();
        let mut aborted = None;
        loop {
            self.drain_control();
            if self.session.done() {
                break;
            }
            let runnable = !self.paused || self.steps > 0;
            if !runnable || !self.seat_ready() {
                self.wait(Duration::from_millis(100));
                continue;
            }
            if let Some(tps) = self.speed.filter(|t| *t > 0.0) {
                let now = Instant::now();
                if now < next_at {
                    self.wait(next_at - now);
                    continue;
                }
                next_at = now.max(next_at) + Duration::from_secs_f64(1.0 / tps);
            }
            if let Err(e) = self.session.step() {
                log::error!("session aborted at tick {}: {e}", self.session.tick());
                aborted = Some(e.to_string());
                break;
            }
            if self.paused && self.steps > 0 {
                self.steps -= 1;
            }
            for e in self.session.drain_events() {
                for w in WireEvent::from_session(e) {
                    self.broadcast(w);
                }
            }
        }
        let mut report = self.session.report();
        report.aborted = aborted;
        self.broadcast(WireEvent::SessionEnd { report: Box::new(report.clone()) });
        self.clients.clear();
        if let Some(seat) = &self.remote {
            let mut s = seat.lock().expect("seat poisoned");
            s.writer = None;
        }
        drop(self.session);
        for w in self.writers {
            let _ = w.join();
        }
        Ok(report)
    }
}
