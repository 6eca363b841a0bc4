//! Task scripts, instantiation, judging and the Teacher engine.

pub mod howto;
pub mod instance;
pub mod judge;
pub mod lexicon;
pub mod script;
pub mod teacher;

use std::collections::BTreeMap;
use std::path::Path;

pub use howto::{answer_howto, generate_instructions};
pub use instance::{instantiate, Answer, Pred, RStep, Skill, SkillTable, TaskError, TaskInstance};
pub use judge::{judge, Event, EventKind, Need, Progress, Verdict};
pub use lexicon::Lexicon;
pub use script::{parse_scripts, ParseError, Step, TaskScript, WorldSpec};
pub use teacher::Teacher;

/// The scripts that ship with the crate, by file.
pub const BUILTIN: &[(&str, &str)] = &[
    ("L0-repeat.task", include_str!("../../tasks/L0-repeat.task")),
    ("L1-orders.task", include_str!("../../tasks/L1-orders.task")),
    ("L2-effects.task", include_str!("../../tasks/L2-effects.task")),
    ("L3-generalize.task", include_str!("../../tasks/L3-generalize.task")),
    ("L4-higher-order.task", include_str!("../../tasks/L4-higher-order.task")),
    ("L5-howto.task", include_str!("../../tasks/L5-howto.task")),
];

/// A consistent collection of scripts with their shared skill table.
#[derive(Debug, Clone)]
pub struct TaskSet {
    scripts: Vec<TaskScript>,
    skills: SkillTable,
}

fn lint_err(s: &TaskScript, message: String) -> ParseError {
    ParseError { file: s.origin.clone(), line: s.line, message: format!("task {}: {message}", s.id) }
}

/// Schema checks that need no instantiation.
pub fn lint_script(s: &TaskScript) -> Result<(), ParseError> {
    if s.steps.is_empty() {
        return Err(lint_err(s, "has no steps".into()));
    }
    let plus: Vec<usize> = s
        .steps
        .iter()
        .enumerate()
        .filter(|(_, st)| matches!(st, Step::GiveReward(1)))
        .map(|(i, _)| i)
        .collect();
    match plus.as_slice() {
        [] => return Err(lint_err(s, "never rewards +1".into())),
        [i] => {
            if s.steps[*i..].iter().any(Step::is_expect) {
                return Err(lint_err(s, "`reward +1` must follow every expectation".into()));
            }
        }
        _ => return Err(lint_err(s, "rewards +1 more than once".into())),
    }
    if !s.steps.iter().any(Step::is_expect) {
        return Err(lint_err(s, "has no expectation".into()));
    }
    fn nested_reward(steps: &[Step]) -> bool {
        steps.iter().any(|st| match st {
            Step::Repeat { body, .. } => body.iter().any(|b| matches!(b, Step::GiveReward(_) | Step::NameSkill(_) | Step::Repeat { .. })) || nested_reward(body),
            _ => false,
        })
    }
    if nested_reward(&s.steps) {
        return Err(lint_err(s, "repeat bodies may only say and expect".into()));
    }
    for name in instance::referenced_slots(s) {
        if !s.slots.contains_key(&name) && script::builtin_slot(&name).is_none() {
            return Err(lint_err(s, format!("undeclared slot {{{name}}}")));
        }
    }
    Ok(())
}

impl TaskSet {
    pub fn new(scripts: Vec<TaskScript>) -> Result<Self, ParseError> {
        let mut skills = SkillTable::new();
        let mut ids = BTreeMap::new();
        for s in &scripts {
            if let Some(prev) = ids.insert(s.id.clone(), s.origin.clone()) {
                return Err(lint_err(s, format!("duplicate id (also in {prev})")));
            }
            lint_script(s)?;
            for (i, st) in s.steps.iter().enumerate() {
                let Step::NameSkill(label) = st else { continue };
                if !script::slot_refs(label).is_empty() {
                    return Err(lint_err(s, format!("skill name {label:?} uses slots")));
                }
                let bound = s.steps[..i]
                    .iter()
                    .rev()
                    .find(|p| p.is_expect())
                    .ok_or_else(|| lint_err(s, format!("`name {label:?}` has no preceding expectation")))?;
                let skill = instance::skill_of(bound, &s.id).map_err(|m| lint_err(s, m))?;
                if let Some(old) = skills.get(label) {
                    if *old != skill {
                        return Err(lint_err(s, format!("skill {label:?} is defined twice differently")));
                    }
                }
                skills.insert(label.clone(), skill);
            }
        }
        for s in &scripts {
            check_skill_refs(s, &s.steps, &skills)?;
        }
        Ok(TaskSet { scripts, skills })
    }

    pub fn builtin() -> Self {
        let mut all = Vec::new();
        for (name, text) in BUILTIN {
            all.extend(parse_scripts(text, name).expect("shipped scripts parse"));
        }
        TaskSet::new(all).expect("shipped scripts are consistent")
    }

    pub fn load_dir(dir: &Path) -> Result<Self, ParseError> {
        TaskSet::new(script::load_dir(dir)?)
    }

    pub fn scripts(&self) -> &[TaskScript] {
        &self.scripts
    }

    pub fn skills(&self) -> &SkillTable {
        &self.skills
    }

    pub fn get(&self, id: &str) -> Option<&TaskScript> {
        self.scripts.iter().find(|s| s.id == id)
    }

    /// Script ids grouped by level, ascending.
    pub fn levels(&self) -> BTreeMap<u32, Vec<String>> {
        let mut out: BTreeMap<u32, Vec<String>> = BTreeMap::new();
        for s in &self.scripts {
            out.entry(s.level).or_default().push(s.id.clone());
        }
        out
    }

    /// Keep only the listed ids, in the given order.
    pub fn subset(&self, ids: &[&str]) -> Result<Self, ParseError> {
        let mut scripts = Vec::new();
        for id in ids {
            let s = self.get(id).ok_or_else(|| ParseError { file: String::new(), line: 0, message: format!("no task {id:?}") })?;
            scripts.push(s.clone());
        }
        Ok(TaskSet { scripts, skills: self.skills.clone() })
    }

    pub fn instantiate(&self, id: &str, seed: u64, lexicon: &Lexicon) -> Result<TaskInstance, TaskError> {
        let s = self.get(id).ok_or_else(|| TaskError::Invalid { task: id.into(), message: "unknown task".into() })?;
        instantiate(s, seed, &self.skills, lexicon)
    }

    /// Every Teacher content word a script can utter, over all slot values.
    pub fn vocabulary(&self) -> Vec<String> {
        let mut words = std::collections::BTreeSet::new();
        for s in &self.scripts {
            let mut texts = Vec::new();
            collect_texts(&s.steps, &mut texts);
            texts.extend(s.howto.iter().map(|h| h.request.clone()));
            for h in &s.howto {
                if let script::HowtoAnswer::Text(t) = &h.answer {
                    texts.push(t.clone());
                }
            }
            for t in texts {
                for variant in slot_variants(s, &t) {
                    words.extend(lexicon::content_words(&variant));
                }
            }
        }
        // generated instructions use the navigation vocabulary
        for w in ["turn", "left", "right", "move", "look", "pick", "apple", "pear", "banana", "mug"] {
            words.insert(w.to_string());
        }
        words.into_iter().collect()
    }
}

fn collect_texts(steps: &[Step], out: &mut Vec<String>) {
    for st in steps {
        match st {
            Step::Say(t) => out.push(t.clone()),
            Step::ExpectOutput { alts, .. } => out.extend(alts.iter().cloned()),
            Step::Repeat { body, .. } => collect_texts(body, out),
            _ => {}
        }
    }
}

fn slot_variants(s: &TaskScript, text: &str) -> Vec<String> {
    let mut variants = vec![text.to_string()];
    for name in script::slot_refs(text) {
        let values = s.slots.get(&name).cloned().or_else(|| script::builtin_slot(&name)).unwrap_or_default();
        let mut next = Vec::new();
        for v in &variants {
            for value in &values {
                next.push(v.replace(&format!("{{{name}}}"), value).replace(&format!("{{a:{name}}}"), value));
            }
        }
        variants = next;
    }
    variants
}

fn check_skill_refs(s: &TaskScript, steps: &[Step], skills: &SkillTable) -> Result<(), ParseError> {
    for st in steps {
        match st {
            Step::ExpectSkill { label, .. } if script::slot_refs(label).is_empty() && !skills.contains_key(label) => {
                return Err(lint_err(s, format!("no script names a skill {label:?}")));
            }
            Step::Repeat { body, .. } => check_skill_refs(s, body, skills)?,
            _ => {}
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_scripts_instantiate() {
        let set = TaskSet::builtin();
        let levels = set.levels();
        assert_eq!(levels.keys().copied().collect::<Vec<_>>(), vec![0, 1, 2, 3, 4, 5]);
        for s in set.scripts() {
            for seed in 0..30 {
                set.instantiate(&s.id, seed, &Lexicon::identity()).unwrap_or_else(|e| panic!("{e}"));
            }
        }
        assert!(matches!(set.skills()["find an apple"], Skill::World(Pred::Loop { .. })));
    }

    #[test]
    fn schema_errors() {
        let bad = |text: &str| TaskSet::new(parse_scripts(text, "f").unwrap()).unwrap_err().message;
        assert!(bad("task a\nlevel 0\nworld persistent\ndeadline 5\nsay \"x\"\n").contains("never rewards"));
        assert!(bad("task a\nlevel 0\nworld persistent\ndeadline 5\nreward +1\nexpect output \"@T: x\"\n").contains("follow"));
        assert!(bad("task a\nlevel 0\nworld persistent\ndeadline 5\nexpect skill \"fly\"\nreward +1\n").contains("fly"));
        let e = TaskSet::new(parse_scripts("task a\nlevel 0\nworld persistent\ndeadline 5\n", "f").unwrap()).unwrap_err();
        assert!(e.message.contains("no steps"));
    }

    #[test]
    fn vocabulary_covers_slot_values() {
        let v = TaskSet::builtin().vocabulary();
        for w in ["say", "give", "order", "stone", "find", "apple"] {
            assert!(v.iter().any(|x| x == w), "{w}");
        }
        assert!(!v.iter().any(|x| x == "and"));
    }
}
