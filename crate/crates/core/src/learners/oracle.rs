//! Validation-only learner with side-door access to the running task.

use std::collections::VecDeque;
use std::sync::{Arc, Mutex};

use super::{Learner, LearnerError};
use crate::channel::{symbols, AgentId, StreamParser, StreamSide, Symbol, SILENCE};
use crate::tasks::instance::holds_statically;
use crate::tasks::{Need, Pred, Progress, RStep, TaskInstance};
use crate::world::{plan_pattern, reachable, shortest_path_to, EnvCommand, ObjectKind, World};

/// What the session tells the oracle before each tick.
#[derive(Debug, Clone, Default)]
pub struct Briefing {
    pub episode: u64,
    pub instance: Option<TaskInstance>,
    pub world: Option<World>,
    pub progress: Option<Progress>,
}

pub type SideDoor = Arc<Mutex<Briefing>>;

/// Locate the step a judging key points at ("2", "0.3.1", ...).
pub fn step_at<'a>(steps: &'a [RStep], key: &str) -> Option<&'a RStep> {
    let mut parts = key.split('.').map(|p| p.parse::<usize>().ok());
    let mut step = steps.get(parts.next()??)?;
    loop {
        let Some(_iteration) = parts.next() else { return Some(step) };
        let RStep::Repeat { body, .. } = step else { return None };
        step = body.get(parts.next()??)?;
    }
}

fn env(cmd: &EnvCommand) -> String {
    format!("@E: {}.", cmd.utterance())
}

fn unit_loop(world: &World, unit: &[EnvCommand], until: &Pred) -> Option<Vec<EnvCommand>> {
    let mut w = world.clone();
    let mut out = Vec::new();
    for _ in 0..64 {
        for c in unit {
            if !w.apply(c).confirms() {
                return None;
            }
            out.push(c.clone());
        }
        if holds_statically(&w, until) {
            return Some(out);
        }
    }
    None
}

/// A command sequence that satisfies `pred` from `world`.
fn solve(world: &World, pred: &Pred) -> Option<Vec<EnvCommand>> {
    match pred {
        Pred::Executed(cmds) => plan_pattern(world, std::slice::from_ref(cmds)),
        Pred::Moved(n) => plan_pattern(world, &[vec![EnvCommand::Move; *n as usize]]),
        Pred::Holds(Some(o), _) => reachable(world, *o).1,
        Pred::Holds(None, _) => {
            let mut path = shortest_path_to(world, |w| w.faced_object().is_some())?;
            let mut w = world.clone();
            for c in &path {
                w.apply(c);
            }
            let target = w.faced_object()?;
            if w.look_enabled {
                path.push(EnvCommand::Look);
                path.push(EnvCommand::Pick(target));
            } else {
                // no sight: try every object name in order until one sticks
                for o in ObjectKind::ALL {
                    path.push(EnvCommand::Pick(o));
                    if o == target {
                        break;
                    }
                }
            }
            Some(path)
        }
        Pred::Faced(o) => shortest_path_to(world, |w| w.faced_object() == Some(*o)),
        Pred::At(c) => shortest_path_to(world, |w| w.body.position == *c),
        Pred::Loop { unit, until } => unit_loop(world, unit, until),
        Pred::Or(ps) => {
            let executed: Vec<Vec<EnvCommand>> = ps
                .iter()
                .filter_map(|p| match p {
                    Pred::Executed(c) => Some(c.clone()),
                    _ => None,
                })
                .collect();
            if executed.len() == ps.len() {
                plan_pattern(world, &executed)
            } else {
                ps.iter().find_map(|p| solve(world, p))
            }
        }
    }
}

/// The literal reading of an order, tried before any repair.
fn first_attempt(world: &World, pred: &Pred) -> Option<Vec<EnvCommand>> {
    match pred {
        Pred::Executed(cmds) => Some(cmds.clone()),
        Pred::Or(ps) => ps.first().and_then(|p| first_attempt(world, p)),
        other => solve(world, other),
    }
}

#[derive(Debug)]
pub struct OracleLearner {
    door: SideDoor,
    parser: StreamParser,
    out: VecDeque<Symbol>,
    plan: VecDeque<String>,
    plan_for: Option<(u64, String)>,
    /// Instructions heard from the Teacher, in Environment commands.
    heard: Option<Vec<EnvCommand>>,
}

impl OracleLearner {
    pub fn new(door: SideDoor) -> Self {
        OracleLearner {
            door,
            parser: StreamParser::new(StreamSide::Input),
            out: VecDeque::new(),
            plan: VecDeque::new(),
            plan_for: None,
            heard: None,
        }
    }

    fn parse_instructions(instance: &TaskInstance, body: &str) -> Option<Vec<EnvCommand>> {
        let plain = instance.lexicon.inverse().apply(body);
        plain.split(" and ").map(EnvCommand::from_verbal).collect()
    }

    fn plan_step(&mut self, inst: &TaskInstance, world: &World, step: &RStep, fresh: bool) -> Vec<String> {
        match step {
            RStep::ExpectOutput { alts, .. } => alts
                .first()
                .map(|(to, body)| vec![format!("@{}: {body}.", to.tag())])
                .unwrap_or_default(),
            RStep::ExpectWorld { pred, .. } => {
                let cmds = if let Some(h) = self.heard.take().filter(|_| fresh && !inst.howto.is_empty()) {
                    Some(h)
                } else if fresh {
                    first_attempt(world, pred)
                } else {
                    solve(world, pred)
                };
                cmds.unwrap_or_default().iter().map(env).collect()
            }
            _ => Vec::new(),
        }
    }

    fn refill(&mut self) {
        let door = Arc::clone(&self.door);
        let b = door.lock().expect("side door poisoned");
        let (Some(inst), Some(world), Some(progress)) = (&b.instance, &b.world, &b.progress) else {
            self.plan.clear();
            self.plan_for = None;
            return;
        };
        if progress.need.as_ref().is_some_and(|n| !matches!(n, Need::Name(_))) || progress.complete {
            return;
        }
        let Some(key) = progress.at.clone() else { return };
        let Some(step) = step_at(&inst.steps, &key) else { return };
        let id = (b.episode, key);
        if self.plan_for.as_ref() != Some(&id) {
            self.plan = self.plan_step(inst, world, step, true).into();
            self.plan_for = Some(id);
        } else if self.plan.is_empty() {
            self.plan = self.plan_step(inst, world, step, false).into();
        }
    }
}

impl Learner for OracleLearner {
    fn next(&mut self, input: Symbol, _: i8) -> Result<Symbol, LearnerError> {
        if let Some(m) = self.parser.push(input) {
            if m.speaker == AgentId::Teacher {
                let b = self.door.lock().expect("side door poisoned");
                if let Some(inst) = &b.instance {
                    if let Some(cmds) = Self::parse_instructions(inst, &m.body) {
                        self.heard = Some(cmds);
                    }
                }
            }
        }
        if self.out.is_empty() && input.is_silence() && !self.parser.mid_message() {
            if self.plan.is_empty() {
                self.refill();
            }
            if let Some(msg) = self.plan.pop_front() {
                self.out = symbols(&msg).map_err(|e| LearnerError::Crashed(e.to_string()))?.into();
            }
        }
        Ok(self.out.pop_front().unwrap_or(SILENCE))
    }

    fn name(&self) -> &str {
        "oracle"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::Heading;

    #[test]
    fn step_keys() {
        let steps = vec![
            RStep::Say("a".into()),
            RStep::Repeat { body: vec![RStep::Say("b".into()), RStep::Reward(1)], until: Pred::Moved(1), max: 3 },
        ];
        assert_eq!(step_at(&steps, "0"), Some(&steps[0]));
        assert_eq!(step_at(&steps, "1.2.1"), Some(&RStep::Reward(1)));
        assert_eq!(step_at(&steps, "1.2.5"), None);
        assert_eq!(step_at(&steps, "0.1.0"), None);
    }

    #[test]
    fn dark_pick_is_exhaustive() {
        let mut w = World::from_literal("grid 1 2\np\n^").unwrap();
        w.look_enabled = false;
        assert_eq!(
            solve(&w, &Pred::Holds(None, 1)).unwrap(),
            vec![EnvCommand::Pick(ObjectKind::Apple), EnvCommand::Pick(ObjectKind::Pear)]
        );
        w.look_enabled = true;
        assert_eq!(solve(&w, &Pred::Holds(None, 1)).unwrap(), vec![EnvCommand::Look, EnvCommand::Pick(ObjectKind::Pear)]);
    }

    #[test]
    fn literal_then_repair() {
        let w = World::from_literal("grid 3 2\n...\n#^.").unwrap();
        assert_eq!(w.body.heading, Heading::North);
        let p = Pred::Or(vec![
            Pred::Executed(vec![EnvCommand::TurnLeft, EnvCommand::Move]),
            Pred::Executed(vec![EnvCommand::TurnRight, EnvCommand::Move]),
        ]);
        assert_eq!(first_attempt(&w, &p).unwrap(), vec![EnvCommand::TurnLeft, EnvCommand::Move]);
        let mut after = w.clone();
        after.apply(&EnvCommand::TurnLeft);
        assert_eq!(solve(&after, &p).unwrap(), vec![EnvCommand::TurnRight, EnvCommand::Move]);
    }
}
