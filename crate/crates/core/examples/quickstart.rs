//! Run the oracle through the opening levels and print what was said.

use kindergarten::channel::transcript;
use kindergarten::session::{run_oracle, SessionConfig};
use kindergarten::tasks::TaskSet;

fn main() {
    let (report, session) = run_oracle(SessionConfig::new(7, 1500), TaskSet::builtin()).expect("session starts");
    for line in transcript(&session.frames).iter().take(40) {
        println!("{:>5}  {}", line.tick, line);
    }
    println!();
    println!(
        "{} ticks, {} of {} tasks accepted, average reward {:.4}",
        report.ticks, report.tasks_succeeded, report.tasks_attempted, report.average_reward
    );
}
