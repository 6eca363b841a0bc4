//! Plug in your own learner: one symbol in, one symbol out, plus reward.

use kindergarten::channel::{Symbol, SILENCE};
use kindergarten::learners::{Learner, LearnerError};
use kindergarten::session::{Session, SessionConfig};

/// Parrots every input symbol back, delayed by one tick, and counts rewards.
struct Parrot {
    last: Symbol,
    earned: i64,
}

impl Learner for Parrot {
    fn next(&mut self, input: Symbol, reward: i8) -> Result<Symbol, LearnerError> {
        self.earned += reward as i64;
        Ok(std::mem::replace(&mut self.last, input))
    }

    fn name(&self) -> &str {
        "parrot"
    }
}

fn main() {
    let mut session = Session::new(SessionConfig::new(1, 5000), Box::new(Parrot { last: SILENCE, earned: 0 })).unwrap();
    let report = session.run();
    println!("{}", report.to_json());
}
