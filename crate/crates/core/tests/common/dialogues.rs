//! Reference dialogues and the oracle runs that should reproduce them.

use std::path::Path;

use kindergarten::channel::transcript;
use kindergarten::session::{run_oracle, SessionConfig};
use kindergarten::tasks::TaskSet;

pub const DIALOGUES: &[(&str, &[&str], u64)] = &[
    ("give-order", &["give-order"], 3),
    ("give-orders", &["give-orders"], 0),
    ("move-and-look", &["move-and-look"], 0),
    ("move-turn-move", &["move-turn-move"], 0),
    ("turn-and-move", &["turn-and-move"], 0),
    ("pick-object-dark", &["pick-object-dark"], 0),
    ("pick-object", &["pick-object"], 0),
    ("move-n-times", &["move-and-move", "move-two-times", "move-and-move-and-move", "move-three-times"], 0),
    ("find-apple", &["find-apple-demo"], 0),
    ("howto-find-apple", &["howto-find-apple"], 0),
];

/// Transcript lines and the raw symbol streams of an oracle run.
pub fn oracle_dialogue(ids: &[&str], seed: u64) -> Result<(Vec<String>, String, String), String> {
    let list = ids.iter().map(|i| (i.to_string(), seed)).collect();
    let (report, s) = run_oracle(SessionConfig::playlist(seed, 20_000, list), TaskSet::builtin()).map_err(|e| e.to_string())?;
    if report.tasks_succeeded as usize != ids.len() {
        return Err(format!("{ids:?}: {} of {} accepted", report.tasks_succeeded, ids.len()));
    }
    let lines = transcript(&s.frames).into_iter().map(|l| l.text).collect();
    let input: String = s.frames.iter().map(|f| f.input.as_char()).collect();
    let output: String = s.frames.iter().map(|f| f.output.as_char()).collect();
    Ok((lines, input, output))
}

pub fn golden(name: &str) -> Vec<String> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(format!("{name}.txt"));
    std::fs::read_to_string(&path).expect("golden file").lines().map(str::to_string).collect()
}

/// Every golden line must appear in the symbol stream of its side, in order,
/// each symbol on its own tick.
fn symbols_in_order(stream: &str, lines: &[String]) -> bool {
    let mut rest = stream;
    for l in lines {
        match rest.find(l.as_str()) {
            Some(i) => rest = &rest[i + l.len()..],
            None => return false,
        }
    }
    true
}

pub fn check(name: &str, ids: &[&str], seed: u64) -> Result<(), String> {
    let want = golden(name);
    let (got, input, output) = oracle_dialogue(ids, seed)?;
    if got != want {
        return Err(format!("{name}: expected\n{}\ngot\n{}", want.join("\n"), got.join("\n")));
    }
    let (outs, ins): (Vec<String>, Vec<String>) = want.into_iter().partition(|l| l.starts_with('@'));
    if !symbols_in_order(&input, &ins) || !symbols_in_order(&output, &outs) {
        return Err(format!("{name}: lines are not contiguous in the symbol streams"));
    }
    Ok(())
}
