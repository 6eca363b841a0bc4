//! The same task in a language nobody has heard before.

use kindergarten::channel::transcript;
use kindergarten::session::{run_oracle, SessionConfig};
use kindergarten::tasks::{Lexicon, TaskSet};

fn main() {
    let tasks = TaskSet::builtin();
    let vocab = tasks.vocabulary();
    let lexicon = Lexicon::scrambled(vocab.iter().map(String::as_str), 2024);
    for w in ["say", "order", "move", "apple", "find"] {
        println!("{w:>6} -> {}", lexicon.get(w).unwrap_or(w));
    }
    println!();
    for id in ["give-order", "find-apple-demo"] {
        let cfg = SessionConfig { lexicon: lexicon.clone(), ..SessionConfig::playlist(0, 3000, vec![(id.into(), 3)]) };
        let (report, session) = run_oracle(cfg, tasks.clone()).unwrap();
        for line in transcript(&session.frames) {
            println!("  {line}");
        }
        println!("  -> {} accepted\n", report.tasks_succeeded);
    }
}
