//! Wire records: one JSON object per line, tagged by `type`.
//!
//! A client opens with `hello`; the server answers `welcome` or `error`.
//! Afterwards the server sends `event` records with contiguous `seq`
//! numbers, plus `prompt` records to a lockstep learner, which answers each
//! with `learner_output`. Symbols travel as one-character strings.

use serde::{Deserialize, Serialize};

use crate::channel::{AgentId, Symbol};
use crate::session::{SessionEvent, SessionReport};
use crate::tasks::Verdict;
use crate::world::Snapshot;

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Learner,
    Observer,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// The client answers every `prompt` with exactly one symbol.
    #[default]
    Lockstep,
    /// Typed text is buffered and drained one symbol per tick.
    Human,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientRecord {
    Hello {
        version: u32,
        role: Role,
        #[serde(default)]
        mode: Mode,
    },
    LearnerOutput { tick: u64, symbol: String },
    HumanOutput { text: String },
    Pause,
    Resume,
    Step { n: u64 },
    /// Zero pauses.
    SetSpeed { ticks_per_second: f64 },
    Bye,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerRecord {
    Welcome { version: u32, role: Role, mode: Mode, tick: u64 },
    Error { message: String },
    Prompt { tick: u64, input: String, reward: i8 },
    Event { seq: u64, #[serde(flatten)] event: WireEvent },
    Heartbeat { tick: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum WireEvent {
    Tick { tick: u64, input: String, reward: i8 },
    LearnerOutput { tick: u64, symbol: String },
    MessageComplete { tick: u64, speaker: AgentId, text: String },
    WorldSnapshot { tick: u64, snapshot: Snapshot },
    TaskEvent { tick: u64, episode: u64, id: Option<String>, verdict: Option<Verdict> },
    LedgerUpdate { tick: u64, cumulative: i64, average: f64 },
    ControlState { tick: u64, paused: bool, ticks_per_second: Option<f64> },
    SessionEnd { report: Box<SessionReport> },
}

pub fn sym(s: Symbol) -> String {
    s.as_char().to_string()
}

pub fn parse_sym(s: &str) -> Result<Symbol, String> {
    let mut it = s.chars();
    match (it.next(), it.next()) {
        (Some(c), None) => Symbol::from_char(c).map_err(|e| e.to_string()),
        _ => Err(format!("expected one symbol, got {s:?}")),
    }
}

impl WireEvent {
    /// A session event as one or two wire events; ticks split into input and output.
    pub fn from_session(e: SessionEvent) -> Vec<WireEvent> {
        match e {
            SessionEvent::Tick { tick, input, reward, output } => vec![
                WireEvent::Tick { tick, input: sym(input), reward },
                WireEvent::LearnerOutput { tick, symbol: sym(output) },
            ],
            SessionEvent::MessageComplete { tick, speaker, text } => vec![WireEvent::MessageComplete { tick, speaker, text }],
            SessionEvent::WorldSnapshot { tick, snapshot } => vec![WireEvent::WorldSnapshot { tick, snapshot }],
            SessionEvent::TaskEvent { tick, episode, id, verdict } => vec![WireEvent::TaskEvent { tick, episode, id, verdict }],
            SessionEvent::LedgerUpdate { tick, cumulative, average } => vec![WireEvent::LedgerUpdate { tick, cumulative, average }],
        }
    }
}

pub fn encode<T: Serialize>(r: &T) -> String {
    serde_json::to_string(r).expect("wire records serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_are_flat_json() {
        let e = ServerRecord::Event { seq: 3, event: WireEvent::Tick { tick: 7, input: " ".into(), reward: 1 } };
        assert_eq!(encode(&e), r#"{"type":"event","seq":3,"event":"tick","tick":7,"input":" ","reward":1}"#);
        let back: ServerRecord = serde_json::from_str(&encode(&e)).unwrap();
        assert_eq!(back, e);
        let hello: ClientRecord = serde_json::from_str(r#"{"type":"hello","version":1,"role":"observer"}"#).unwrap();
        assert_eq!(hello, ClientRecord::Hello { version: 1, role: Role::Observer, mode: Mode::Lockstep });
    }

    #[test]
    fn symbols_on_the_wire() {
        assert_eq!(parse_sym("@").unwrap().as_char(), '@');
        assert!(parse_sym("ab").is_err());
        assert!(parse_sym("").is_err());
        assert!(parse_sym("\u{e9}").is_err());
    }
}
