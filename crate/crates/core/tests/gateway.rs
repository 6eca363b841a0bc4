use std::net::SocketAddr;
use std::thread;
use std::time::Duration;

use kindergarten::gateway::protocol::encode;
use kindergarten::gateway::{observe, run_learner, Client, ClientRecord, Mode, Role, Seat, ServeConfig, Server, ServerRecord, WireEvent};
use kindergarten::learners::{Learner, ScriptedLearner};
use kindergarten::session::{Session, SessionConfig, SessionReport, TaskSource};
use kindergarten::tasks::parse_scripts;

const WALK: &str = "task walk\nlevel 0\nworld grid 1 4\n.\n.\n.\n^\ndeadline 400\nsay \"move\"\nexpect world moved(1)\nreward +1\n";

fn walk_config(ticks: u64) -> SessionConfig {
    let scripts = parse_scripts(WALK, "walk").unwrap();
    SessionConfig {
        tasks: TaskSource::Inline(scripts),
        ..SessionConfig::playlist(1, ticks, vec![("walk".into(), 1), ("walk".into(), 2)])
    }
}

fn start(cfg: ServeConfig) -> (SocketAddr, thread::JoinHandle<SessionReport>) {
    let server = Server::bind("127.0.0.1:0").unwrap();
    let addr = server.local_addr().unwrap();
    (addr, thread::spawn(move || server.run(cfg).unwrap()))
}

fn scripted() -> ScriptedLearner {
    ScriptedLearner::new(["@E: I look.", "@T: hello.", "@E: I move.", "@E: I turn left.", "@E: I move."])
}

fn in_process(cfg: SessionConfig, learner: impl Learner + 'static) -> SessionReport {
    Session::new(cfg, Box::new(learner)).unwrap().run()
}

fn events(records: &[ServerRecord]) -> Vec<(u64, &WireEvent)> {
    records
        .iter()
        .filter_map(|r| match r {
            ServerRecord::Event { seq, event } => Some((*seq, event)),
            _ => None,
        })
        .collect()
}

#[test]
fn wire_learner_matches_in_process() {
    let cfg = SessionConfig::new(5, 1500);
    let local = in_process(cfg.clone(), scripted());
    let (addr, server) = start(ServeConfig::new(cfg, Seat::Remote));
    let mut l = scripted();
    let remote = run_learner(addr, &mut l).unwrap();
    let served = server.join().unwrap();
    assert_eq!(remote.transcript_hash, local.transcript_hash);
    assert_eq!(served.deterministic(), local.deterministic());
}

#[test]
fn observers_do_not_perturb_and_see_ordered_events() {
    let cfg = walk_config(600);
    let local = in_process(cfg.clone(), scripted());
    let (addr, server) = start(ServeConfig { start_paused: true, ..ServeConfig::new(cfg, Seat::Remote) });
    // a slow observer and one that leaves early
    let slow = thread::spawn(move || {
        let (mut c, _) = Client::connect(addr, Role::Observer, Mode::Lockstep).unwrap();
        let mut got = Vec::new();
        while let Some(r) = c.recv().unwrap() {
            if got.len() % 50 == 0 {
                thread::sleep(Duration::from_millis(2));
            }
            got.push(r);
        }
        got
    });
    let (quitter, _) = Client::connect(addr, Role::Observer, Mode::Lockstep).unwrap();
    let learner = thread::spawn(move || run_learner(addr, &mut scripted()).unwrap());
    thread::sleep(Duration::from_millis(50));
    quitter.close().unwrap();
    let (mut ctl, _) = Client::connect(addr, Role::Observer, Mode::Lockstep).unwrap();
    ctl.send(&ClientRecord::Resume).unwrap();
    let remote = learner.join().unwrap();
    server.join().unwrap();
    assert_eq!(remote.transcript_hash, local.transcript_hash);

    let got = slow.join().unwrap();
    let ev = events(&got);
    assert!(matches!(ev[0].1, WireEvent::WorldSnapshot { .. }), "late-join snapshot first");
    for w in ev.windows(2) {
        assert_eq!(w[1].0, w[0].0 + 1, "sequence numbers are contiguous");
    }
    let ticks: Vec<u64> = ev
        .iter()
        .filter_map(|(_, e)| match e {
            WireEvent::Tick { tick, .. } => Some(*tick),
            _ => None,
        })
        .collect();
    assert_eq!(ticks, (0..ticks.len() as u64).collect::<Vec<_>>());
    assert!(matches!(ev.last().unwrap().1, WireEvent::SessionEnd { .. }));
}

#[test]
fn pause_then_step_emits_one_tick() {
    let cfg = walk_config(300);
    let seat = Seat::InProcess(kindergarten::learners::Contestant::plain(scripted()));
    let (addr, server) = start(ServeConfig { start_paused: true, ..ServeConfig::new(cfg, seat) });
    let (mut c, _) = Client::connect(addr, Role::Observer, Mode::Lockstep).unwrap();
    c.send(&ClientRecord::Step { n: 1 }).unwrap();
    let mut ticks = Vec::new();
    let read_until_ack = |c: &mut Client, ticks: &mut Vec<u64>| {
        while let Some(r) = c.recv().unwrap() {
            match r {
                ServerRecord::Event { event: WireEvent::Tick { tick, .. }, .. } => ticks.push(tick),
                ServerRecord::Event { event: WireEvent::ControlState { .. }, .. } => return,
                _ => {}
            }
        }
    };
    read_until_ack(&mut c, &mut ticks);
    thread::sleep(Duration::from_millis(200));
    c.send(&ClientRecord::Pause).unwrap();
    read_until_ack(&mut c, &mut ticks);
    assert_eq!(ticks, vec![0]);
    c.send(&ClientRecord::Resume).unwrap();
    server.join().unwrap();
}

#[test]
fn human_text_drains_one_symbol_per_tick() {
    let cfg = walk_config(400);
    let (addr, server) = start(ServeConfig { ticks_per_second: Some(2000.0), ..ServeConfig::new(cfg, Seat::Remote) });
    let obs = thread::spawn(move || {
        thread::sleep(Duration::from_millis(20));
        observe(addr).unwrap()
    });
    let (mut h, _) = Client::connect(addr, Role::Learner, Mode::Human).unwrap();
    // let the Teacher finish "T: move." first
    let mut said = false;
    let mut outputs = Vec::new();
    let mut lines = Vec::new();
    let mut rewarded_ticks = Vec::new();
    while let Some(r) = h.recv().unwrap() {
        match r {
            ServerRecord::Event { event: WireEvent::MessageComplete { text, tick, .. }, .. } => {
                if text == "T: move." && !said {
                    h.send(&ClientRecord::HumanOutput { text: "@E: I move.".into() }).unwrap();
                    said = true;
                }
                lines.push((tick, text));
            }
            ServerRecord::Event { event: WireEvent::LearnerOutput { tick, symbol }, .. } if symbol != " " => {
                outputs.push(tick)
            }
            ServerRecord::Event { event: WireEvent::Tick { tick, reward: 1, .. }, .. } => rewarded_ticks.push(tick),
            ServerRecord::Event { event: WireEvent::SessionEnd { .. }, .. } => break,
            _ => {}
        }
    }
    server.join().unwrap();
    obs.join().unwrap();
    // 11 symbols, of which the two spaces look like silence
    assert_eq!(outputs.len(), 9, "{outputs:?}");
    assert_eq!(outputs.last().unwrap() - outputs[0], 10, "one symbol per tick");
    assert!(lines.iter().any(|(_, t)| t == "E: you moved."), "{lines:?}");
    assert!(lines.iter().any(|(_, t)| t == "R: 1."), "{lines:?}");
    assert_eq!(rewarded_ticks.len(), 1);
}

#[test]
fn seat_and_version_and_violations() {
    let cfg = walk_config(20_000);
    let (addr, server) = start(ServeConfig { start_paused: true, ..ServeConfig::new(cfg, Seat::Remote) });
    let (mut first, _) = Client::connect(addr, Role::Learner, Mode::Human).unwrap();
    let taken = Client::connect(addr, Role::Learner, Mode::Lockstep).err().unwrap();
    assert!(taken.to_string().contains("seat is taken"), "{taken}");

    let mut raw = std::net::TcpStream::connect(addr).unwrap();
    use std::io::{BufRead, Write};
    writeln!(raw, "{}", r#"{"type":"hello","version":99,"role":"observer"}"#).unwrap();
    let mut line = String::new();
    std::io::BufReader::new(raw.try_clone().unwrap()).read_line(&mut line).unwrap();
    assert!(line.contains("not supported") && line.contains("\"error\""), "{line}");

    let (mut rude, _) = Client::connect(addr, Role::Observer, Mode::Lockstep).unwrap();
    rude.send(&ClientRecord::HumanOutput { text: "@E: I move.".into() }).unwrap();
    let mut saw_error = false;
    while let Some(r) = rude.recv().unwrap() {
        saw_error |= matches!(r, ServerRecord::Error { .. });
    }
    assert!(saw_error);

    let (mut garbage, _) = Client::connect(addr, Role::Observer, Mode::Lockstep).unwrap();
    garbage.send_raw("not json").unwrap();
    let mut saw_error = false;
    while let Some(r) = garbage.recv().unwrap() {
        saw_error |= matches!(r, ServerRecord::Error { .. });
    }
    assert!(saw_error);

    // the session still runs to completion for the seated learner
    first.send(&ClientRecord::SetSpeed { ticks_per_second: 0.0 }).unwrap();
    first.send(&ClientRecord::Resume).unwrap();
    let mut end = None;
    while let Some(r) = first.recv().unwrap() {
        if let ServerRecord::Event { event: WireEvent::SessionEnd { report }, .. } = r {
            end = Some(report);
        }
    }
    let report = end.unwrap();
    assert_eq!(report.episodes, 2);
    assert!(report.aborted.is_none());
    server.join().unwrap();
    let _ = encode(&ClientRecord::Bye);
}

#[test]
fn heartbeat_when_idle() {
    let cfg = walk_config(100);
    let (addr, server) = start(ServeConfig {
        start_paused: true,
        heartbeat: Duration::from_millis(50),
        ..ServeConfig::new(cfg, Seat::Remote)
    });
    let (mut c, _) = Client::connect(addr, Role::Observer, Mode::Lockstep).unwrap();
    let mut beats = 0;
    while beats < 2 {
        if let Some(ServerRecord::Heartbeat { tick }) = c.recv().unwrap() {
            assert_eq!(tick, 0);
            beats += 1;
        }
    }
    thread::spawn(move || run_learner(addr, &mut scripted()).unwrap());
    c.send(&ClientRecord::Resume).unwrap();
    server.join().unwrap();
}
