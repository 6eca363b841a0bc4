//! Byte channels between the Learner and everyone else.
//!
//! One [`Symbol`] flows in each direction per tick. Messages are framed
//! with a speaker prefix (`T: `, `E: `, `R: ` on the input side, `@T: `,
//! `@E: ` on the output side) and closed by a full stop.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const TERMINATOR: u8 = b'.';
pub const SILENCE: Symbol = Symbol(b' ');

const PUNCTUATION: &[u8] = b" .:@-,$#%;/'";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChannelError {
    #[error("symbol {0:?} is outside the channel alphabet")]
    BadSymbol(char),
    #[error("message body contains the terminator")]
    EmbeddedTerminator,
    #[error("empty message body")]
    EmptyBody,
    #[error("a second nonzero reward was issued for tick {0}")]
    DoubleReward(u64),
    #[error("reward value {0} is not -1, 0 or +1")]
    BadReward(i8),
}

/// One 8-bit unit of the channel alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Symbol(u8);

impl Symbol {
    pub fn new(byte: u8) -> Result<Self, ChannelError> {
        if Self::in_alphabet(byte) {
            Ok(Symbol(byte))
        } else {
            Err(ChannelError::BadSymbol(byte as char))
        }
    }

    pub fn from_char(c: char) -> Result<Self, ChannelError> {
        if c.is_ascii() {
            Symbol::new(c as u8)
        } else {
            Err(ChannelError::BadSymbol(c))
        }
    }

    pub fn in_alphabet(byte: u8) -> bool {
        byte.is_ascii_alphanumeric() || PUNCTUATION.contains(&byte)
    }

    /// Every symbol of the alphabet, in byte order.
    pub fn alphabet() -> Vec<Symbol> {
        (0u8..=127).filter(|b| Self::in_alphabet(*b)).map(Symbol).collect()
    }

    pub fn byte(self) -> u8 {
        self.0
    }

    pub fn as_char(self) -> char {
        self.0 as char
    }

    pub fn is_silence(self) -> bool {
        self == SILENCE
    }

    pub fn is_terminator(self) -> bool {
        self.0 == TERMINATOR
    }

    /// Escaped form used in replay files: space is written as `\s`.
    pub fn escape(self) -> String {
        if self.is_silence() {
            "\\s".to_string()
        } else {
            (self.0 as char).to_string()
        }
    }

    pub fn unescape(text: &str) -> Result<Self, ChannelError> {
        match text {
            "\\s" => Ok(SILENCE),
            _ => {
                let mut chars = text.chars();
                match (chars.next(), chars.next()) {
                    (Some(c), None) if c != ' ' => Symbol::from_char(c),
                    _ => Err(ChannelError::BadSymbol(text.chars().next().unwrap_or('\0'))),
                }
            }
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0 as char)
    }
}

/// Convert text into symbols, rejecting anything outside the alphabet.
pub fn symbols(text: &str) -> Result<Vec<Symbol>, ChannelError> {
    text.chars().map(Symbol::from_char).collect()
}

pub fn text_of(symbols: &[Symbol]) -> String {
    symbols.iter().map(|s| s.as_char()).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AgentId {
    Teacher,
    Environment,
    Learner,
    Human,
    External,
    /// Pseudo-speaker for the textual reward echo.
    Reward,
}

impl AgentId {
    pub fn tag(self) -> &'static str {
        match self {
            AgentId::Teacher => "T",
            AgentId::Environment => "E",
            AgentId::Learner => "L",
            AgentId::Human => "H",
            AgentId::External => "X",
            AgentId::Reward => "R",
        }
    }

    fn from_tag(tag: &str) -> Option<AgentId> {
        match tag {
            "T" => Some(AgentId::Teacher),
            "E" => Some(AgentId::Environment),
            "R" => Some(AgentId::Reward),
            _ => None,
        }
    }

    /// Agents the Learner may address with an `@X: ` prefix.
    fn addressable(self) -> bool {
        matches!(self, AgentId::Teacher | AgentId::Environment)
    }
}

/// A framed, prefix-routed utterance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub speaker: AgentId,
    pub addressee: Option<AgentId>,
    pub body: String,
    pub raw: String,
}

impl Message {
    /// Build a well-formed message; `raw` is produced by [`frame`].
    pub fn new(speaker: AgentId, addressee: Option<AgentId>, body: &str) -> Result<Self, ChannelError> {
        let target = addressee.unwrap_or(speaker);
        let raw = frame_allowing_empty(body, target, speaker)?;
        let addressee = if speaker == AgentId::Learner { addressee } else { None };
        Ok(Message { speaker, addressee, body: body.to_string(), raw })
    }
}

fn check_body(body: &str) -> Result<(), ChannelError> {
    for c in body.chars() {
        if c == TERMINATOR as char {
            return Err(ChannelError::EmbeddedTerminator);
        }
        Symbol::from_char(c)?;
    }
    Ok(())
}

/// Frame `body` with the prefix for (`speaker`, `addressee`) and a closing full stop.
///
/// Learner output is prefixed with the addressee (`@E: `); everything the
/// Learner hears is prefixed with its speaker (`T: `). An empty body is
/// rejected here; use [`frame_allowing_empty`] for the edge case.
pub fn frame(body: &str, addressee: AgentId, speaker: AgentId) -> Result<String, ChannelError> {
    if body.is_empty() {
        return Err(ChannelError::EmptyBody);
    }
    frame_allowing_empty(body, addressee, speaker)
}

pub fn frame_allowing_empty(body: &str, addressee: AgentId, speaker: AgentId) -> Result<String, ChannelError> {
    check_body(body)?;
    let prefix = if speaker == AgentId::Learner {
        format!("@{}: ", addressee.tag())
    } else {
        format!("{}: ", speaker.tag())
    };
    Ok(format!("{prefix}{body}."))
}

/// Apply the whitespace rules to one message's worth of raw text:
/// line breaks and tabs become spaces, hyphens between two letters are
/// dropped, whitespace runs collapse, ends are trimmed.
pub fn normalize(text: &str) -> String {
    let chars: Vec<char> = text
        .chars()
        .map(|c| if c == '\n' || c == '\r' || c == '\t' { ' ' } else { c })
        .collect();
    let mut out = String::with_capacity(chars.len());
    for (i, &c) in chars.iter().enumerate() {
        if c == '-' {
            let prev = i.checked_sub(1).map(|j| chars[j]);
            let next = chars.get(i + 1);
            if matches!(prev, Some(p) if p.is_ascii_alphabetic())
                && matches!(next, Some(n) if n.is_ascii_alphabetic())
            {
                continue;
            }
        }
        if c == ' ' && (out.is_empty() || out.ends_with(' ')) {
            continue;
        }
        out.push(c);
    }
    while out.ends_with(' ') {
        out.pop();
    }
    out
}

/// Which side of the Learner a stream belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StreamSide {
    /// Learner's input: the speaker is read from the `T: `/`E: `/`R: ` prefix.
    Input,
    /// Learner's output: speaker is the Learner, the addressee comes from `@X: `.
    Output,
}

fn parse_message(text: &str, side: StreamSide) -> Message {
    let norm = normalize(text);
    let raw = format!("{norm}.");
    match side {
        StreamSide::Input => {
            if let Some((tag, rest)) = norm.split_once(": ") {
                if let Some(speaker) = AgentId::from_tag(tag) {
                    return Message { speaker, addressee: None, body: rest.to_string(), raw };
                }
            }
            // "T: ." has no text after the colon.
            if let Some(tag) = norm.strip_suffix(':') {
                if let Some(speaker) = AgentId::from_tag(tag) {
                    return Message { speaker, addressee: None, body: String::new(), raw };
                }
            }
            Message { speaker: AgentId::External, addressee: None, body: norm, raw }
        }
        StreamSide::Output => {
            if let Some(rest) = norm.strip_prefix('@') {
                if let Some((tag, body)) = rest.split_once(": ") {
                    if let Some(to) = AgentId::from_tag(tag).filter(|a| a.addressable()) {
                        return Message {
                            speaker: AgentId::Learner,
                            addressee: Some(to),
                            body: body.to_string(),
                            raw,
                        };
                    }
                }
            }
            Message { speaker: AgentId::Learner, addressee: None, body: norm, raw }
        }
    }
}

/// Split a symbol sequence into messages plus the unterminated remainder.
pub fn parse_stream(symbols: &[Symbol], side: StreamSide) -> (Vec<Message>, String) {
    let mut parser = StreamParser::new(side);
    let messages = symbols.iter().filter_map(|s| parser.push(*s)).collect();
    (messages, parser.pending())
}

/// Incremental form of [`parse_stream`].
#[derive(Debug, Clone)]
pub struct StreamParser {
    side: StreamSide,
    buf: String,
}

impl StreamParser {
    pub fn new(side: StreamSide) -> Self {
        StreamParser { side, buf: String::new() }
    }

    pub fn push(&mut self, symbol: Symbol) -> Option<Message> {
        if symbol.is_terminator() {
            let text = std::mem::take(&mut self.buf);
            return Some(parse_message(&text, self.side));
        }
        if symbol.is_silence() && self.buf.is_empty() {
            return None;
        }
        self.buf.push(symbol.as_char());
        None
    }

    /// True while a message has started but not yet terminated.
    pub fn mid_message(&self) -> bool {
        !self.buf.is_empty()
    }

    pub fn pending(&self) -> String {
        normalize(&self.buf)
    }
}

const OUTPUT_PREFIXES: [(&str, AgentId); 2] = [("@T: ", AgentId::Teacher), ("@E: ", AgentId::Environment)];

/// Split a Learner message into per-addressee segments.
///
/// Each segment runs from an `@X: ` prefix to the next prefix or the end of
/// the message. Text before the first prefix reaches no one.
pub fn route(message: &Message) -> Vec<(AgentId, String)> {
    let text = message.raw.strip_suffix('.').unwrap_or(&message.raw);
    route_text(text)
}

pub fn route_text(text: &str) -> Vec<(AgentId, String)> {
    let mut marks: Vec<(usize, AgentId)> = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let hit = OUTPUT_PREFIXES.iter().find(|(p, _)| text[i..].starts_with(p));
        if let Some((p, agent)) = hit {
            marks.push((i, *agent));
            i += p.len();
        } else {
            i += 1;
        }
    }
    let mut out = Vec::with_capacity(marks.len());
    for (k, (start, agent)) in marks.iter().enumerate() {
        let body_start = start + 4;
        let end = marks.get(k + 1).map(|m| m.0).unwrap_or(text.len());
        out.push((*agent, text[body_start..end].trim().to_string()));
    }
    out
}

/// Input-side writers in arbitration order: the reward echo first, then
/// the Teacher, then the Environment, then anyone else.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Writer {
    Reward,
    Teacher,
    Environment,
    Other,
}

impl Writer {
    pub fn of(agent: AgentId) -> Writer {
        match agent {
            AgentId::Reward => Writer::Reward,
            AgentId::Teacher => Writer::Teacher,
            AgentId::Environment => Writer::Environment,
            _ => Writer::Other,
        }
    }
}

/// A message fully delivered by the mux this tick.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Delivered {
    pub writer: Writer,
    pub tag: Option<u64>,
    pub text: String,
}

#[derive(Debug, Clone)]
struct Outgoing {
    text: Vec<u8>,
    tag: Option<u64>,
}

#[derive(Debug, Clone)]
struct InFlight {
    writer: Writer,
    msg: Outgoing,
    pos: usize,
}

/// Polite-mode multiplexer for the Learner's input stream.
///
/// A writer may start only when nothing is mid-stream; when several are
/// ready, [`Writer`] order decides.
#[derive(Debug, Clone, Default)]
pub struct Mux {
    queues: [VecDeque<Outgoing>; 4],
    current: Option<InFlight>,
}

impl Mux {
    pub fn new() -> Self {
        Self::default()
    }

    fn slot(writer: Writer) -> usize {
        match writer {
            Writer::Reward => 0,
            Writer::Teacher => 1,
            Writer::Environment => 2,
            Writer::Other => 3,
        }
    }

    pub fn enqueue(&mut self, writer: Writer, raw: &str, tag: Option<u64>) {
        self.queues[Self::slot(writer)].push_back(Outgoing { text: raw.as_bytes().to_vec(), tag });
    }

    pub fn is_idle(&self) -> bool {
        self.current.is_none() && self.queues.iter().all(|q| q.is_empty())
    }

    pub fn queued(&self, writer: Writer) -> usize {
        self.queues[Self::slot(writer)].len()
            + usize::from(self.current.as_ref().is_some_and(|c| c.writer == writer))
    }

    /// Emit the next input symbol, reporting a message that just finished.
    pub fn next_symbol(&mut self) -> (Symbol, Option<Delivered>) {
        if self.current.is_none() {
            let order = [Writer::Reward, Writer::Teacher, Writer::Environment, Writer::Other];
            for writer in order {
                if let Some(msg) = self.queues[Self::slot(writer)].pop_front() {
                    self.current = Some(InFlight { writer, msg, pos: 0 });
                    break;
                }
            }
        }
        let Some(flight) = self.current.as_mut() else {
            return (SILENCE, None);
        };
        let byte = flight.msg.text[flight.pos];
        flight.pos += 1;
        let sym = Symbol::new(byte).unwrap_or(SILENCE);
        if flight.pos == flight.msg.text.len() {
            let done = self.current.take().expect("in flight");
            let delivered = Delivered {
                writer: done.writer,
                tag: done.msg.tag,
                text: String::from_utf8_lossy(&done.msg.text).into_owned(),
            };
            return (sym, Some(delivered));
        }
        (sym, None)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RewardSignal {
    pub value: i8,
    pub tick: u64,
}

impl RewardSignal {
    pub fn new(value: i8, tick: u64) -> Result<Self, ChannelError> {
        if !(-1..=1).contains(&value) {
            return Err(ChannelError::BadReward(value));
        }
        Ok(RewardSignal { value, tick })
    }
}

/// Side-band reward scheduling.
///
/// A reward issued during tick `t` rides on the side-band of tick `t + 1`;
/// if that slot is taken the reward moves to the next free tick.
#[derive(Debug, Clone, Default)]
pub struct RewardChannel {
    scheduled: VecDeque<RewardSignal>,
}

impl RewardChannel {
    pub fn new() -> Self {
        Self::default()
    }

    /// Queue a reward earned at `tick` and echo it into the input stream.
    pub fn deliver_reward(&mut self, value: i8, tick: u64, mux: &mut Mux) -> Result<Option<RewardSignal>, ChannelError> {
        if value == 0 {
            return Ok(None);
        }
        if value != 1 && value != -1 {
            return Err(ChannelError::BadReward(value));
        }
        let earliest = tick + 1;
        let slot = match self.scheduled.back() {
            Some(last) if last.tick >= earliest => last.tick + 1,
            _ => earliest,
        };
        let signal = RewardSignal { value, tick: slot };
        self.scheduled.push_back(signal);
        mux.enqueue(Writer::Reward, &reward_echo(value), None);
        Ok(Some(signal))
    }

    /// The side-band value for `tick`.
    pub fn take(&mut self, tick: u64) -> Result<RewardSignal, ChannelError> {
        match self.scheduled.front() {
            Some(s) if s.tick == tick => Ok(self.scheduled.pop_front().expect("front")),
            Some(s) if s.tick < tick => Err(ChannelError::DoubleReward(s.tick)),
            _ => Ok(RewardSignal { value: 0, tick }),
        }
    }

    pub fn pending(&self) -> usize {
        self.scheduled.len()
    }
}

pub fn reward_echo(value: i8) -> String {
    format!("R: {value}.")
}

/// Everything that crossed the Learner boundary during one tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TickFrame {
    pub tick: u64,
    pub input: Symbol,
    pub reward: i8,
    pub output: Symbol,
}

impl TickFrame {
    /// One replay-file line: tick, input, reward, output, tab separated.
    pub fn to_line(&self) -> String {
        format!("{}\t{}\t{}\t{}", self.tick, self.input.escape(), self.reward, self.output.escape())
    }

    pub fn from_line(line: &str) -> Result<Self, String> {
        let parts: Vec<&str> = line.split('\t').collect();
        if parts.len() != 4 {
            return Err(format!("expected 4 tab-separated fields, found {}", parts.len()));
        }
        let tick = parts[0].parse().map_err(|e| format!("tick: {e}"))?;
        let input = Symbol::unescape(parts[1]).map_err(|e| format!("input: {e}"))?;
        let reward: i8 = parts[2].parse().map_err(|e| format!("reward: {e}"))?;
        if !(-1..=1).contains(&reward) {
            return Err(format!("reward {reward} out of range"));
        }
        let output = Symbol::unescape(parts[3]).map_err(|e| format!("output: {e}"))?;
        Ok(TickFrame { tick, input, reward, output })
    }
}

/// SHA-256 over the replay lines of `frames`, newline terminated.
pub fn transcript_hash(frames: &[TickFrame]) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    for f in frames {
        h.update(f.to_line().as_bytes());
        h.update(b"\n");
    }
    hex::encode(h.finalize())
}

/// A transcript line: one complete message on either channel.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptLine {
    pub tick: u64,
    pub side: Side,
    pub text: String,
}

/// Just the text; output lines already start with an `@` addressee.
impl fmt::Display for TranscriptLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Input,
    Output,
}

/// Reassemble complete messages from a frame log, input before output on
/// the same tick.
pub fn transcript(frames: &[TickFrame]) -> Vec<TranscriptLine> {
    let mut input = StreamParser::new(StreamSide::Input);
    let mut output = StreamParser::new(StreamSide::Output);
    let mut lines = Vec::new();
    for f in frames {
        if let Some(m) = input.push(f.input) {
            lines.push(TranscriptLine { tick: f.tick, side: Side::Input, text: m.raw });
        }
        if let Some(m) = output.push(f.output) {
            lines.push(TranscriptLine { tick: f.tick, side: Side::Output, text: m.raw });
        }
    }
    lines
}
