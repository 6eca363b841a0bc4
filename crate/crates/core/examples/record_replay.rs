//! Record a session to a replay file and re-derive its report.

use kindergarten::harness::replay;
use kindergarten::learners::EchoLearner;
use kindergarten::session::{Session, SessionConfig};

fn main() {
    let cfg = SessionConfig::new(11, 4000);
    let mut session = Session::new(cfg.clone(), Box::new(EchoLearner::new())).unwrap();
    let report = session.run();

    let dir = std::env::temp_dir().join("kindergarten-example");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("echo.kgr");
    replay::save(&path, &cfg, &session.frames).unwrap();
    println!("wrote {} ({} frames)", path.display(), session.frames.len());

    let again = replay::replay(&replay::load(&path).unwrap()).unwrap();
    println!("recorded hash {}", report.transcript_hash);
    println!("replayed hash {}", again.transcript_hash);
    assert_eq!(again.deterministic(), report.deterministic());

    // chop the file and the replay names the first tick it cannot vouch for
    let text = std::fs::read_to_string(&path).unwrap();
    let cut: String = text.lines().take(1000).map(|l| format!("{l}\n")).collect();
    let rec = replay::read(cut.as_bytes()).unwrap();
    println!("truncated: {}", replay::replay(&rec).unwrap_err());
}
