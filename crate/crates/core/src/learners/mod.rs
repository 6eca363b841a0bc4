//! The learner contract and reference learners.

pub mod echo;
pub mod memo;
pub mod oracle;

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::channel::{Symbol, SILENCE};

pub use echo::EchoLearner;
pub use memo::MemoLearner;
pub use oracle::{Briefing, OracleLearner, SideDoor};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LearnerError {
    #[error("learner crashed: {0}")]
    Crashed(String),
}

/// One symbol in, one symbol out, once per tick.
///
/// The interface carries only the input symbol and the side-band reward;
/// learners see nothing else of the session.
pub trait Learner: Send {
    fn next(&mut self, input: Symbol, reward: i8) -> Result<Symbol, LearnerError>;

    fn session_start(&mut self) {}

    fn session_end(&mut self) {}

    fn name(&self) -> &str;
}

impl<L: Learner + ?Sized> Learner for Box<L> {
    fn next(&mut self, input: Symbol, reward: i8) -> Result<Symbol, LearnerError> {
        (**self).next(input, reward)
    }
    fn session_start(&mut self) {
        (**self).session_start()
    }
    fn session_end(&mut self) {
        (**self).session_end()
    }
    fn name(&self) -> &str {
        (**self).name()
    }
}

/// A learner plus, for the oracle, the side door the session must feed.
pub struct Contestant {
    pub learner: Box<dyn Learner>,
    pub door: Option<SideDoor>,
}

impl Contestant {
    pub fn plain(learner: impl Learner + 'static) -> Self {
        Contestant { learner: Box::new(learner), door: None }
    }
}

pub const NAMES: [&str; 5] = ["null", "random", "echo", "memo", "oracle"];

/// Build a reference learner by name.
pub fn by_name(name: &str, seed: u64) -> Option<Contestant> {
    Some(match name {
        "null" => Contestant::plain(NullLearner),
        "random" => Contestant::plain(RandomLearner::new(seed)),
        "echo" => Contestant::plain(EchoLearner::new()),
        "memo" => Contestant::plain(MemoLearner::new(seed)),
        "oracle" => {
            let door = SideDoor::default();
            Contestant { learner: Box::new(OracleLearner::new(door.clone())), door: Some(door) }
        }
        _ => return None,
    })
}

/// Always silent.
#[derive(Debug, Default, Clone)]
pub struct NullLearner;

impl Learner for NullLearner {
    fn next(&mut self, _: Symbol, _: i8) -> Result<Symbol, LearnerError> {
        Ok(SILENCE)
    }
    fn name(&self) -> &str {
        "null"
    }
}

/// Uniform over the alphabet.
#[derive(Debug, Clone)]
pub struct RandomLearner {
    rng: ChaCha8Rng,
    alphabet: Vec<Symbol>,
}

impl RandomLearner {
    pub fn new(seed: u64) -> Self {
        RandomLearner { rng: ChaCha8Rng::seed_from_u64(seed), alphabet: Symbol::alphabet() }
    }
}

impl Learner for RandomLearner {
    fn next(&mut self, _: Symbol, _: i8) -> Result<Symbol, LearnerError> {
        Ok(*self.alphabet.choose(&mut self.rng).expect("alphabet is not empty"))
    }
    fn name(&self) -> &str {
        "random"
    }
}

/// Plays a fixed output stream, then silence.
#[derive(Debug, Clone)]
pub struct ReplayLearner {
    outputs: VecDeque<Symbol>,
}

impl ReplayLearner {
    pub fn new(outputs: impl IntoIterator<Item = Symbol>) -> Self {
        ReplayLearner { outputs: outputs.into_iter().collect() }
    }
}

impl Learner for ReplayLearner {
    fn next(&mut self, _: Symbol, _: i8) -> Result<Symbol, LearnerError> {
        Ok(self.outputs.pop_front().unwrap_or(SILENCE))
    }
    fn name(&self) -> &str {
        "replay"
    }
}

/// Speaks a queue of messages, each once the input has been silent for a tick.
#[derive(Debug, Clone)]
pub struct ScriptedLearner {
    messages: VecDeque<String>,
    current: VecDeque<Symbol>,
}

impl ScriptedLearner {
    pub fn new<S: Into<String>>(messages: impl IntoIterator<Item = S>) -> Self {
        ScriptedLearner { messages: messages.into_iter().map(Into::into).collect(), current: VecDeque::new() }
    }
}

impl Learner for ScriptedLearner {
    fn next(&mut self, input: Symbol, _: i8) -> Result<Symbol, LearnerError> {
        if self.current.is_empty() && input.is_silence() {
            if let Some(m) = self.messages.pop_front() {
                self.current = crate::channel::symbols(&m).map_err(|e| LearnerError::Crashed(e.to_string()))?.into();
            }
        }
        Ok(self.current.pop_front().unwrap_or(SILENCE))
    }
    fn name(&self) -> &str {
        "scripted"
    }
}
