//! Declarative task scripts and their line-oriented file format.
//!
//! ```text
//! task give-order
//! level 1
//! slot cmd move|look
//! world gen w=5 h=5 clear=1
//! deadline 400
//! say "give order @E: I {cmd}."
//! expect output "@E: I {cmd}" within 200
//! reward +1
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{file}:{line}: {message}")]
pub struct ParseError {
    pub file: String,
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum WorldSpec {
    /// `grid W H` plus rows.
    Literal(String),
    /// `key=value` generator parameters; values may contain slots.
    Gen(String),
    /// Reuse whatever world the session currently holds.
    Persistent,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum HowtoAnswer {
    Text(String),
    /// Shortest path to pick the named object, verbalized at request time.
    Path(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HowtoEntry {
    pub request: String,
    pub answer: HowtoAnswer,
}

/// One scripted step. Text fields are templates that may contain `{slot}`s.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Step {
    Say(String),
    /// Alternatives are written framed, e.g. `@T: apple`.
    ExpectOutput { alts: Vec<String>, window: Option<u64> },
    ExpectWorld { pred: String, window: Option<u64> },
    /// Accept whatever the step labelled `label` accepted.
    ExpectSkill { label: String, window: Option<u64> },
    /// Run `body` until `until` holds after an iteration.
    Repeat { body: Vec<Step>, until: String, max: u32 },
    GiveReward(i8),
    NameSkill(String),
}

impl Step {
    pub fn is_expect(&self) -> bool {
        matches!(self, Step::ExpectOutput { .. } | Step::ExpectWorld { .. } | Step::ExpectSkill { .. } | Step::Repeat { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ScriptOptions {
    pub legacy_look: bool,
    pub no_look: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskScript {
    pub id: String,
    pub level: u32,
    pub world: WorldSpec,
    pub steps: Vec<Step>,
    pub deadline_ticks: u64,
    pub on_timeout_reward: i8,
    pub howto: Vec<HowtoEntry>,
    pub slots: BTreeMap<String, Vec<String>>,
    pub options: ScriptOptions,
    /// Where the script was read from, for lint messages.
    pub origin: String,
    pub line: usize,
}

/// Built-in slot domains, used when a script does not declare its own.
pub fn builtin_slot(name: &str) -> Option<Vec<String>> {
    let v: &[&str] = match name {
        "obj" => &["apple", "pear", "banana", "mug"],
        "dir" => &["left", "right"],
        "count" => &["two", "three"],
        _ => return None,
    };
    Some(v.iter().map(|s| s.to_string()).collect())
}

/// Slot names referenced as `{name}` or `{a:name}` in `text`.
pub fn slot_refs(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut rest = text;
    while let Some(open) = rest.find('{') {
        let Some(close) = rest[open..].find('}') else { break };
        let inner = &rest[open + 1..open + close];
        let name = inner.strip_prefix("a:").unwrap_or(inner);
        out.push(name.to_string());
        rest = &rest[open + close + 1..];
    }
    out
}

fn unquote(s: &str) -> Option<(String, &str)> {
    let s = s.trim_start();
    let body = s.strip_prefix('"')?;
    let end = body.find('"')?;
    Some((body[..end].to_string(), &body[end + 1..]))
}

fn split_within(s: &str) -> Result<(&str, Option<u64>), String> {
    match s.rsplit_once(" within ") {
        Some((head, n)) => {
            let ticks = n.trim().parse::<u64>().map_err(|_| format!("bad tick count {:?}", n.trim()))?;
            if ticks == 0 {
                return Err("window must be positive".into());
            }
            Ok((head.trim(), Some(ticks)))
        }
        None => Ok((s.trim(), None)),
    }
}

struct Builder {
    id: String,
    line: usize,
    level: Option<u32>,
    world: Option<WorldSpec>,
    deadline: Option<u64>,
    timeout: i8,
    howto: Vec<HowtoEntry>,
    slots: BTreeMap<String, Vec<String>>,
    options: ScriptOptions,
    // stack of open step lists; the bottom one is the script body
    frames: Vec<(Vec<Step>, Option<(String, u32, usize)>)>,
}

impl Builder {
    fn new(id: String, line: usize) -> Self {
        Builder {
            id,
            line,
            level: None,
            world: None,
            deadline: None,
            timeout: 0,
            howto: Vec::new(),
            slots: BTreeMap::new(),
            options: ScriptOptions::default(),
            frames: vec![(Vec::new(), None)],
        }
    }

    fn push(&mut self, step: Step) {
        self.frames.last_mut().expect("bottom frame").0.push(step);
    }

    fn finish(mut self, origin: &str) -> Result<TaskScript, ParseError> {
        let err = |line: usize, message: String| ParseError { file: origin.to_string(), line, message };
        if self.frames.len() > 1 {
            let (_, open) = self.frames.pop().expect("open frame");
            let line = open.map(|o| o.2).unwrap_or(self.line);
            return Err(err(line, "`repeat` without matching `end`".into()));
        }
        let steps = self.frames.pop().expect("bottom").0;
        Ok(TaskScript {
            level: self.level.ok_or_else(|| err(self.line, format!("task {} has no `level`", self.id)))?,
            world: self.world.ok_or_else(|| err(self.line, format!("task {} has no `world`", self.id)))?,
            deadline_ticks: self.deadline.ok_or_else(|| err(self.line, format!("task {} has no `deadline`", self.id)))?,
            id: self.id,
            steps,
            on_timeout_reward: self.timeout,
            howto: self.howto,
            slots: self.slots,
            options: self.options,
            origin: origin.to_string(),
            line: self.line,
        })
    }
}

/// Parse every `task` block in `text`. `origin` names the source in errors.
pub fn parse_scripts(text: &str, origin: &str) -> Result<Vec<TaskScript>, ParseError> {
    let err = |line: usize, message: String| ParseError { file: origin.to_string(), line, message };
    let lines: Vec<&str> = text.lines().collect();
    let mut scripts = Vec::new();
    let mut cur: Option<Builder> = None;
    let mut i = 0;
    while i < lines.len() {
        let lineno = i + 1;
        let line = lines[i].trim();
        i += 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (word, rest) = line.split_once(' ').map(|(a, b)| (a, b.trim())).unwrap_or((line, ""));
        if word == "task" {
            if let Some(b) = cur.take() {
                scripts.push(b.finish(origin)?);
            }
            if rest.is_empty() || rest.contains(char::is_whitespace) {
                return Err(err(lineno, "`task` needs a single identifier".into()));
            }
            cur = Some(Builder::new(rest.to_string(), lineno));
            continue;
        }
        let b = cur.as_mut().ok_or_else(|| err(lineno, format!("`{word}` before any `task`")))?;
        match word {
            "level" => b.level = Some(rest.parse().map_err(|_| err(lineno, format!("bad level {rest:?}")))?),
            "deadline" => {
                let d: u64 = rest.parse().map_err(|_| err(lineno, format!("bad deadline {rest:?}")))?;
                if d == 0 {
                    return Err(err(lineno, "deadline must be positive".into()));
                }
                b.deadline = Some(d);
            }
            "timeout" => {
                b.timeout = match rest {
                    "0" => 0,
                    "-1" => -1,
                    _ => return Err(err(lineno, format!("timeout reward must be 0 or -1, got {rest:?}"))),
                }
            }
            "option" => match rest {
                "legacy-look" => b.options.legacy_look = true,
                "no-look" => b.options.no_look = true,
                _ => return Err(err(lineno, format!("unknown option {rest:?}"))),
            },
            "slot" => {
                let (name, values) = rest
                    .split_once(' ')
                    .ok_or_else(|| err(lineno, "`slot <name> <v1>|<v2>...`".into()))?;
                let values: Vec<String> = values.split('|').map(|v| v.trim().to_string()).collect();
                if values.iter().any(String::is_empty) {
                    return Err(err(lineno, "empty slot value".into()));
                }
                b.slots.insert(name.to_string(), values);
            }
            "world" => {
                let spec = if rest == "persistent" {
                    WorldSpec::Persistent
                } else if let Some(params) = rest.strip_prefix("gen") {
                    WorldSpec::Gen(params.trim().to_string())
                } else if rest.starts_with("grid ") {
                    let h: usize = rest
                        .split_whitespace()
                        .nth(2)
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| err(lineno, format!("bad grid header {rest:?}")))?;
                    if i + h > lines.len() {
                        return Err(err(lineno, "world literal is missing rows".into()));
                    }
                    let mut lit = rest.to_string();
                    for row in &lines[i..i + h] {
                        lit.push('\n');
                        lit.push_str(row.trim());
                    }
                    i += h;
                    crate::world::World::from_literal(&lit).map_err(|e| err(lineno, e.to_string()))?;
                    WorldSpec::Literal(lit)
                } else {
                    return Err(err(lineno, format!("`world` expects `grid`, `gen` or `persistent`, got {rest:?}")));
                };
                b.world = Some(spec);
            }
            "say" => {
                let (text, tail) = unquote(rest).ok_or_else(|| err(lineno, "`say` needs a quoted template".into()))?;
                if !tail.trim().is_empty() {
                    return Err(err(lineno, format!("trailing text after `say`: {tail:?}")));
                }
                let text = text.strip_suffix('.').unwrap_or(&text).to_string();
                b.push(Step::Say(text));
            }
            "expect" => {
                let (kind, spec) = rest.split_once(' ').ok_or_else(|| err(lineno, "incomplete `expect`".into()))?;
                let (head, window) = split_within(spec).map_err(|m| err(lineno, m))?;
                let step = match kind {
                    "output" => {
                        let mut alts = Vec::new();
                        let mut s = head;
                        loop {
                            let (alt, tail) =
                                unquote(s).ok_or_else(|| err(lineno, "expected a quoted alternative".into()))?;
                            alts.push(alt);
                            let tail = tail.trim();
                            if tail.is_empty() {
                                break;
                            }
                            s = tail.strip_prefix('|').ok_or_else(|| err(lineno, format!("unexpected {tail:?}")))?;
                        }
                        Step::ExpectOutput { alts, window }
                    }
                    "world" => Step::ExpectWorld { pred: head.to_string(), window },
                    "skill" => {
                        let (label, _) = unquote(head).ok_or_else(|| err(lineno, "`expect skill` needs a quoted label".into()))?;
                        Step::ExpectSkill { label, window }
                    }
                    _ => return Err(err(lineno, format!("unknown expectation {kind:?}"))),
                };
                b.push(step);
            }
            "repeat" => {
                let spec = rest
                    .strip_prefix("until ")
                    .ok_or_else(|| err(lineno, "`repeat until <predicate> max <n>`".into()))?;
                let (pred, max) = spec
                    .rsplit_once(" max ")
                    .ok_or_else(|| err(lineno, "`repeat` needs `max <n>`".into()))?;
                let max: u32 = max.trim().parse().map_err(|_| err(lineno, format!("bad max {max:?}")))?;
                b.frames.push((Vec::new(), Some((pred.trim().to_string(), max, lineno))));
            }
            "end" => {
                if b.frames.len() < 2 {
                    return Err(err(lineno, "`end` without `repeat`".into()));
                }
                let (body, open) = b.frames.pop().expect("checked");
                let (until, max, _) = open.expect("repeat frame");
                b.push(Step::Repeat { body, until, max });
            }
            "reward" => {
                let v = match rest {
                    "+1" | "1" => 1,
                    "-1" => -1,
                    _ => return Err(err(lineno, format!("reward must be +1 or -1, got {rest:?}"))),
                };
                b.push(Step::GiveReward(v));
            }
            "name" => {
                let (label, _) = unquote(rest).ok_or_else(|| err(lineno, "`name` needs a quoted label".into()))?;
                b.push(Step::NameSkill(label));
            }
            "howto" => {
                let (request, tail) = unquote(rest).ok_or_else(|| err(lineno, "`howto` needs a quoted request".into()))?;
                let tail = tail
                    .trim()
                    .strip_prefix("->")
                    .ok_or_else(|| err(lineno, "`howto \"<request>\" -> <answer>`".into()))?
                    .trim();
                let answer = if let Some(goal) = tail.strip_prefix("path(").and_then(|t| t.strip_suffix(')')) {
                    HowtoAnswer::Path(goal.trim().to_string())
                } else {
                    let (text, _) = unquote(tail).ok_or_else(|| err(lineno, "answer must be quoted or path(<object>)".into()))?;
                    HowtoAnswer::Text(text.strip_suffix('.').unwrap_or(&text).to_string())
                };
                b.howto.push(HowtoEntry { request: request.strip_suffix('.').unwrap_or(&request).to_string(), answer });
            }
            _ => return Err(err(lineno, format!("unknown directive {word:?}"))),
        }
    }
    if let Some(b) = cur.take() {
        scripts.push(b.finish(origin)?);
    }
    Ok(scripts)
}

/// Read every `*.task` file under `dir`, sorted by file name.
pub fn load_dir(dir: &Path) -> Result<Vec<TaskScript>, ParseError> {
    let io_err = |e: std::io::Error| ParseError { file: dir.display().to_string(), line: 0, message: e.to_string() };
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io_err)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "task"))
        .collect();
    files.sort();
    let mut out = Vec::new();
    for f in files {
        let text = std::fs::read_to_string(&f).map_err(io_err)?;
        out.extend(parse_scripts(&text, &f.display().to_string())?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
# comment
task find-apple-demo
level 4
world grid 1 4
a
.
.
^
deadline 900
repeat until faced(apple) max 6
  say "move and look."
  expect world executed(move, look) within 300
end
reward +1
say "this is called find an apple."
name "find an apple"
howto "how to find an apple" -> path(apple)
howto "how to wait" -> "do nothing."

task second
level 0
slot w red|blue
world gen w=3 h=3
deadline 10
timeout -1
say "say {w}"
expect output "@T: {w}" | "@T: {w} {w}"
reward +1
"#;

    #[test]
    fn parses_blocks() {
        let scripts = parse_scripts(SAMPLE, "sample").unwrap();
        assert_eq!(scripts.len(), 2);
        let a = &scripts[0];
        assert_eq!(a.id, "find-apple-demo");
        assert!(matches!(a.world, WorldSpec::Literal(ref l) if l.starts_with("grid 1 4\na")));
        let Step::Repeat { body, until, max } = &a.steps[0] else { panic!("{:?}", a.steps[0]) };
        assert_eq!((until.as_str(), *max), ("faced(apple)", 6));
        assert_eq!(body[0], Step::Say("move and look".into()));
        assert_eq!(body[1], Step::ExpectWorld { pred: "executed(move, look)".into(), window: Some(300) });
        assert_eq!(a.steps[3], Step::NameSkill("find an apple".into()));
        assert_eq!(a.howto[0].answer, HowtoAnswer::Path("apple".into()));
        assert_eq!(a.howto[1].answer, HowtoAnswer::Text("do nothing".into()));

        let b = &scripts[1];
        assert_eq!(b.on_timeout_reward, -1);
        assert_eq!(b.slots["w"], vec!["red", "blue"]);
        assert_eq!(
            b.steps[1],
            Step::ExpectOutput { alts: vec!["@T: {w}".into(), "@T: {w} {w}".into()], window: None }
        );
    }

    #[test]
    fn errors_carry_lines() {
        let e = parse_scripts("task x\nlevel 0\nbogus 1\n", "f.task").unwrap_err();
        assert_eq!((e.file.as_str(), e.line), ("f.task", 3));
        let e = parse_scripts("task x\nlevel 0\nworld gen\nrepeat until faced(apple) max 2\n", "f").unwrap_err();
        assert!(e.message.contains("repeat"), "{e}");
        let e = parse_scripts("task x\nworld gen\ndeadline 5\n", "f").unwrap_err();
        assert!(e.message.contains("level"), "{e}");
        assert!(parse_scripts("task x\nlevel 0\nworld grid 2 2\n^.\n", "f").is_err());
    }

    #[test]
    fn slot_references() {
        assert_eq!(slot_refs("pick {a:obj} and {dir}"), vec!["obj", "dir"]);
        assert!(slot_refs("plain").is_empty());
    }
}
