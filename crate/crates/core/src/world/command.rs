use std::fmt;

use serde::{Deserialize, Serialize};

use super::ObjectKind;

/// A parsed Environment command.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EnvCommand {
    Move,
    TurnLeft,
    TurnRight,
    Look,
    Pick(ObjectKind),
    /// "I turn" without a direction.
    Underspecified(String),
    Unknown(String),
}

impl EnvCommand {
    /// The command text the Learner sends after `@E: `.
    pub fn utterance(&self) -> String {
        match self {
            EnvCommand::Move => "I move".into(),
            EnvCommand::TurnLeft => "I turn left".into(),
            EnvCommand::TurnRight => "I turn right".into(),
            EnvCommand::Look => "I look".into(),
            EnvCommand::Pick(o) => format!("I pick the {o}"),
            EnvCommand::Underspecified(raw) | EnvCommand::Unknown(raw) => raw.clone(),
        }
    }

    /// Teacher-side wording used in instructions ("turn right", "pick the apple").
    pub fn verbalize(&self) -> String {
        match self {
            EnvCommand::Move => "move".into(),
            EnvCommand::TurnLeft => "turn left".into(),
            EnvCommand::TurnRight => "turn right".into(),
            EnvCommand::Look => "look".into(),
            EnvCommand::Pick(o) => format!("pick the {o}"),
            EnvCommand::Underspecified(raw) | EnvCommand::Unknown(raw) => raw.clone(),
        }
    }

    /// Inverse of [`EnvCommand::verbalize`] for the navigation vocabulary.
    pub fn from_verbal(text: &str) -> Option<EnvCommand> {
        match text.trim() {
            "move" => Some(EnvCommand::Move),
            "turn left" => Some(EnvCommand::TurnLeft),
            "turn right" => Some(EnvCommand::TurnRight),
            "look" => Some(EnvCommand::Look),
            other => other
                .strip_prefix("pick the ")
                .and_then(ObjectKind::from_word)
                .map(EnvCommand::Pick),
        }
    }
}

impl fmt::Display for EnvCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.verbalize())
    }
}

/// Exact-grammar parse of the controlled Environment language.
pub fn parse_command(body: &str) -> EnvCommand {
    let text = body.trim();
    match text {
        "I move" => EnvCommand::Move,
        "I turn left" => EnvCommand::TurnLeft,
        "I turn right" => EnvCommand::TurnRight,
        "I look" => EnvCommand::Look,
        "I turn" => EnvCommand::Underspecified(text.to_string()),
        _ => match text.strip_prefix("I pick the ").and_then(ObjectKind::from_word) {
            Some(obj) => EnvCommand::Pick(obj),
            None => EnvCommand::Unknown(text.to_string()),
        },
    }
}

/// What the faced cell looks like.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sight {
    Object(ObjectKind),
    Grass,
    Wall,
    Water,
}

/// The Environment's fixed response vocabulary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EnvResponse {
    Moved,
    CantMove,
    TurnedLeft,
    TurnedRight,
    See(Sight),
    /// Older wording for an object sighting: "there is an apple."
    ThereIs(ObjectKind),
    Picked(ObjectKind),
    Silence,
}

impl EnvResponse {
    /// Message body without prefix or terminator; `None` for silence.
    pub fn text(&self) -> Option<String> {
        Some(match self {
            EnvResponse::Moved => "you moved".into(),
            EnvResponse::CantMove => "you can't move".into(),
            EnvResponse::TurnedLeft => "you turned left".into(),
            EnvResponse::TurnedRight => "you turned right".into(),
            EnvResponse::See(Sight::Object(o)) => format!("you see {} {o}", o.article()),
            EnvResponse::See(Sight::Grass) => "you see grass".into(),
            EnvResponse::See(Sight::Wall) => "you see a wall".into(),
            EnvResponse::See(Sight::Water) => "you see water".into(),
            EnvResponse::ThereIs(o) => format!("there is {} {o}", o.article()),
            EnvResponse::Picked(o) => format!("you picked the {o}"),
            EnvResponse::Silence => return None,
        })
    }

    /// True when the command had its intended effect and was confirmed.
    pub fn confirms(&self) -> bool {
        !matches!(self, EnvResponse::CantMove | EnvResponse::Silence)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_examples() {
        assert_eq!(parse_command("I turn left"), EnvCommand::TurnLeft);
        assert_eq!(parse_command("I turn"), EnvCommand::Underspecified("I turn".into()));
        assert_eq!(parse_command("I pick an object"), EnvCommand::Unknown("I pick an object".into()));
        assert_eq!(parse_command("I pick the object"), EnvCommand::Unknown("I pick the object".into()));
        assert_eq!(parse_command("I pick the pear"), EnvCommand::Pick(ObjectKind::Pear));
        assert_eq!(parse_command("i move"), EnvCommand::Unknown("i move".into()));
        assert_eq!(parse_command("I move and"), EnvCommand::Unknown("I move and".into()));
    }

    #[test]
    fn response_texts() {
        assert_eq!(EnvResponse::See(Sight::Object(ObjectKind::Apple)).text().unwrap(), "you see an apple");
        assert_eq!(EnvResponse::See(Sight::Object(ObjectKind::Pear)).text().unwrap(), "you see a pear");
        assert_eq!(EnvResponse::ThereIs(ObjectKind::Apple).text().unwrap(), "there is an apple");
        assert_eq!(EnvResponse::CantMove.text().unwrap(), "you can't move");
        assert_eq!(EnvResponse::Silence.text(), None);
    }

    #[test]
    fn verbal_roundtrip() {
        for c in [
            EnvCommand::Move,
            EnvCommand::TurnLeft,
            EnvCommand::TurnRight,
            EnvCommand::Look,
            EnvCommand::Pick(ObjectKind::Mug),
        ] {
            assert_eq!(EnvCommand::from_verbal(&c.verbalize()), Some(c.clone()));
            assert_eq!(parse_command(&c.utterance()), c);
        }
    }
}
