//! Serve a session on localhost, attach a learner and an observer over the
//! wire, and check the transcript against an in-process run.

use std::thread;

use kindergarten::gateway::{observe, run_learner, Seat, ServeConfig, ServerRecord, Server, WireEvent};
use kindergarten::learners::EchoLearner;
use kindergarten::session::{Session, SessionConfig};

fn main() {
    let cfg = SessionConfig::new(3, 3000);
    let server = Server::bind("127.0.0.1:0").unwrap();
    let addr = server.local_addr().unwrap();
    println!("serving on {addr}");
    let served = thread::spawn(move || server.run(ServeConfig::new(cfg, Seat::Remote)).unwrap());

    let watcher = thread::spawn(move || observe(addr).unwrap());
    let remote = run_learner(addr, &mut EchoLearner::new()).unwrap();
    served.join().unwrap();

    let records = watcher.join().unwrap();
    for r in &records {
        if let ServerRecord::Event { seq, event: WireEvent::MessageComplete { tick, text, .. } } = r {
            if *tick < 400 {
                println!("#{seq:<5} {tick:>4}  {text}");
            }
        }
    }
    let local = Session::new(SessionConfig::new(3, 3000), Box::new(EchoLearner::new())).unwrap().run();
    println!("\nover the wire {}\nin process    {}", remote.transcript_hash, local.transcript_hash);
    assert_eq!(remote.transcript_hash, local.transcript_hash);
}
