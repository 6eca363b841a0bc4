use std::collections::{BTreeMap, HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::echo::echo_reply;
use super::{Learner, LearnerError};
use crate::channel::{AgentId, StreamParser, StreamSide, Symbol, SILENCE};

pub const CONTEXT: usize = 32;
pub const CAPACITY: usize = 100_000;
/// Random symbol edits applied to the echo guess on later attempts.
pub const MAX_EDITS: usize = 2;

/// Context window to rewarded output, least-recently-used eviction.
#[derive(Debug, Clone, Default)]
pub struct MemoTable {
    entries: HashMap<Vec<u8>, (Vec<u8>, u64)>,
    order: BTreeMap<u64, Vec<u8>>,
    clock: u64,
    pub hits: u64,
    pub misses: u64,
    capacity: usize,
}

impl MemoTable {
    pub fn new(capacity: usize) -> Self {
        MemoTable { capacity: capacity.max(1), ..Default::default() }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn touch(&mut self, key: &[u8]) {
        self.clock += 1;
        if let Some((_, stamp)) = self.entries.get_mut(key) {
            self.order.remove(stamp);
            *stamp = self.clock;
            self.order.insert(self.clock, key.to_vec());
        }
    }

    pub fn get(&mut self, key: &[u8]) -> Option<Vec<u8>> {
        match self.entries.get(key).map(|(v, _)| v.clone()) {
            Some(v) => {
                self.hits += 1;
                self.touch(key);
                Some(v)
            }
            None => {
                self.misses += 1;
                None
            }
        }
    }

    pub fn insert(&mut self, key: Vec<u8>, value: Vec<u8>) {
        if self.entries.contains_key(&key) {
            self.entries.get_mut(&key).expect("present").0 = value;
            self.touch(&key);
            return;
        }
        if self.entries.len() >= self.capacity {
            if let Some((_, oldest)) = self.order.pop_first() {
                self.entries.remove(&oldest);
            }
        }
        self.clock += 1;
        self.order.insert(self.clock, key.clone());
        self.entries.insert(key, (value, self.clock));
    }
}

/// A lookup-table learner: echo-style guesses with random variation, and
/// verbatim recall of whatever earned +1 in the same input context.
#[derive(Debug, Clone)]
pub struct MemoLearner {
    rng: ChaCha8Rng,
    parser: StreamParser,
    /// Input since the start of the current message, capped at [`CONTEXT`].
    window: VecDeque<u8>,
    pub table: MemoTable,
    attempts: HashMap<Vec<u8>, u32>,
    pending: Option<(Vec<u8>, Vec<u8>)>,
    out: VecDeque<Symbol>,
    alphabet: Vec<Symbol>,
}

impl MemoLearner {
    pub fn new(seed: u64) -> Self {
        Self::with_capacity(seed, CAPACITY)
    }

    pub fn with_capacity(seed: u64, capacity: usize) -> Self {
        MemoLearner {
            rng: ChaCha8Rng::seed_from_u64(seed),
            parser: StreamParser::new(StreamSide::Input),
            window: VecDeque::new(),
            table: MemoTable::new(capacity),
            attempts: HashMap::new(),
            pending: None,
            out: VecDeque::new(),
            alphabet: Symbol::alphabet(),
        }
    }

    fn mutate(&mut self, mut guess: Vec<u8>) -> Vec<u8> {
        // keep the addressee prefix and terminator; vary the body
        let lo = 4.min(guess.len());
        let edits = self.rng.gen_range(1..=MAX_EDITS);
        for _ in 0..edits {
            let hi = guess.len().saturating_sub(1).max(lo);
            let pick = |rng: &mut ChaCha8Rng, alphabet: &[Symbol]| loop {
                let s = alphabet[rng.gen_range(0..alphabet.len())];
                if !s.is_terminator() {
                    break s.byte();
                }
            };
            match self.rng.gen_range(0..3) {
                0 if hi > lo => {
                    let i = self.rng.gen_range(lo..hi);
                    guess[i] = pick(&mut self.rng, &self.alphabet);
                }
                1 if hi > lo => {
                    let i = self.rng.gen_range(lo..hi);
                    guess.remove(i);
                }
                _ => {
                    let i = self.rng.gen_range(lo..=hi);
                    let b = pick(&mut self.rng, &self.alphabet);
                    guess.insert(i, b);
                }
            }
        }
        guess
    }

    fn respond(&mut self, body: &str) {
        let key: Vec<u8> = self.window.iter().copied().collect();
        let reply = match self.table.get(&key) {
            Some(stored) => stored,
            None => {
                let n = self.attempts.entry(key.clone()).or_insert(0);
                *n += 1;
                let first = *n == 1;
                let guess: Vec<u8> = echo_reply(body).concat().into_bytes();
                if first || guess.is_empty() {
                    guess
                } else {
                    self.mutate(guess)
                }
            }
        };
        self.out.extend(reply.iter().filter_map(|b| Symbol::new(*b).ok()));
        self.pending = Some((key, reply));
    }
}

impl Learner for MemoLearner {
    fn next(&mut self, input: Symbol, reward: i8) -> Result<Symbol, LearnerError> {
        if reward > 0 {
            if let Some((k, v)) = self.pending.take() {
                self.table.insert(k, v);
            }
        }
        if !self.parser.mid_message() && input.is_silence() {
            // between messages: nothing to remember
        } else {
            if !self.parser.mid_message() {
                self.window.clear();
            }
            self.window.push_back(input.byte());
            while self.window.len() > CONTEXT {
                self.window.pop_front();
            }
        }
        if let Some(m) = self.parser.push(input) {
            if m.speaker == AgentId::Teacher {
                self.respond(&m.body);
            }
        }
        Ok(self.out.pop_front().unwrap_or(SILENCE))
    }

    fn name(&self) -> &str {
        "memo"
    }
}
