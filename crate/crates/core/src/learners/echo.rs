use std::collections::VecDeque;

use super::{Learner, LearnerError};
use crate::channel::{route_text, AgentId, StreamParser, StreamSide, Symbol, SILENCE};

/// The echo heuristic's reply to one Teacher utterance.
///
/// After a "give order(s)" marker, each `@E:` segment is relayed as its own
/// message with a dangling "and" dropped; "say X" becomes "@T: X"; anything
/// else is repeated back to the Teacher.
pub fn echo_reply(body: &str) -> Vec<String> {
    if let Some(pos) = body.find("@E: ") {
        let head = &body[..pos];
        if head.contains("order") {
            return route_text(&body[pos..])
                .into_iter()
                .filter(|(to, _)| *to == AgentId::Environment)
                .map(|(_, seg)| {
                    let seg = seg.strip_suffix(" and").unwrap_or(&seg).trim().to_string();
                    format!("@E: {seg}.")
                })
                .filter(|m| m.len() > "@E: .".len())
                .collect();
        }
    }
    let text = body.strip_prefix("say ").unwrap_or(body);
    if text.is_empty() {
        return Vec::new();
    }
    vec![format!("@T: {text}.")]
}

#[derive(Debug, Clone)]
pub struct EchoLearner {
    parser: StreamParser,
    out: VecDeque<Symbol>,
}

impl Default for EchoLearner {
    fn default() -> Self {
        Self::new()
    }
}

impl EchoLearner {
    pub fn new() -> Self {
        EchoLearner { parser: StreamParser::new(StreamSide::Input), out: VecDeque::new() }
    }
}

impl Learner for EchoLearner {
    fn next(&mut self, input: Symbol, _: i8) -> Result<Symbol, LearnerError> {
        if let Some(m) = self.parser.push(input) {
            if m.speaker == AgentId::Teacher {
                for reply in echo_reply(&m.body) {
                    // the Teacher's alphabet is ours, so this cannot fail
                    if let Ok(s) = crate::channel::symbols(&reply) {
                        self.out.extend(s);
                    }
                }
            }
        }
        Ok(self.out.pop_front().unwrap_or(SILENCE))
    }

    fn name(&self) -> &str {
        "echo"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{symbols, text_of};

    fn run(input: &str, ticks: usize) -> String {
        let mut l = EchoLearner::new();
        let mut out = Vec::new();
        let mut syms = symbols(input).unwrap();
        syms.resize(syms.len().max(ticks), SILENCE);
        for s in syms {
            out.push(l.next(s, 0).unwrap());
        }
        text_of(&out).trim().to_string()
    }

    #[test]
    fn replies() {
        assert_eq!(run("T: say apple.", 40), "@T: apple.");
        assert_eq!(run("T: give order @E: I move.", 40), "@E: I move.");
        assert_eq!(run("T: give orders @E: I move and @E: I look.", 80), "@E: I move.@E: I look.");
        assert_eq!(run("T: move and look.", 50), "@T: move and look.");
        assert_eq!(run("E: you moved.", 30), "");
        assert_eq!(run("", 10), "");
    }
}
