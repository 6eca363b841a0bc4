//! Episode event log and the pure judging function.

use serde::{Deserialize, Serialize};

use super::instance::{Pred, RStep, TaskInstance};
use crate::channel::AgentId;
use crate::world::{EnvCommand, EnvResponse, Pose};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    /// Episode start, with the learner's pose at that moment.
    Begin { pose: Pose },
    /// The Teacher finished uttering the Say step with this key.
    Said { key: String },
    /// A learner segment reached its addressee.
    Routed { to: AgentId, body: String },
    Env { cmd: EnvCommand, response: EnvResponse, pose: Pose },
    Rewarded { value: i8 },
    Named { label: String },
    Answered { request: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub tick: u64,
    #[serde(flatten)]
    pub kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pending,
    Accept,
    Reject,
}

/// What the Teacher must do next for the walk to continue.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Need {
    Say { key: String, text: String },
    Reward(i8),
    Name(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Progress {
    pub verdict: Verdict,
    pub need: Option<Need>,
    /// Every step, including trailing utterances, is done.
    pub complete: bool,
    /// Key of the step the walk is blocked on.
    pub at: Option<String>,
}

#[derive(Debug, Clone, Copy)]
struct Cursor {
    /// Events at indices `< idx` are consumed.
    idx: usize,
    tick: u64,
}

enum Walk {
    Done(Cursor),
    Blocked { key: String, need: Option<Need>, reject: bool },
}

struct Ctx<'a> {
    log: &'a [Event],
    now: u64,
    begin: &'a Pose,
}

impl Ctx<'_> {
    fn pose_before(&self, idx: usize) -> &Pose {
        self.log[..idx]
            .iter()
            .rev()
            .find_map(|e| match &e.kind {
                EventKind::Env { pose, .. } => Some(pose),
                _ => None,
            })
            .unwrap_or(self.begin)
    }

    fn state_holds(&self, pred: &Pred, pose: &Pose) -> bool {
        match pred {
            Pred::Holds(obj, n) => {
                let gained = |o| pose.inventory.get(o).copied().unwrap_or(0).saturating_sub(self.begin.inventory.get(o).copied().unwrap_or(0));
                let got: u32 = match obj {
                    Some(o) => gained(o),
                    None => pose.inventory.keys().map(gained).sum(),
                };
                got >= *n
            }
            Pred::At(c) => pose.position == *c,
            Pred::Faced(o) => pose.faced == Some(*o),
            Pred::Or(ps) => ps.iter().any(|p| self.state_holds(p, pose)),
            _ => false,
        }
    }

    /// Evaluate `pred` at the Env event `e`, counting history after `from`.
    fn holds_at(&self, pred: &Pred, from: usize, e: usize) -> bool {
        let EventKind::Env { pose, .. } = &self.log[e].kind else { return false };
        let history: Vec<(&EnvCommand, &EnvResponse)> = self.log[from..=e]
            .iter()
            .filter_map(|ev| match &ev.kind {
                EventKind::Env { cmd, response, .. } => Some((cmd, response)),
                _ => None,
            })
            .collect();
        match pred {
            Pred::Executed(cmds) => suffix_matches(&history, cmds),
            Pred::Moved(n) => {
                history.iter().filter(|(c, r)| **c == EnvCommand::Move && r.confirms()).count() as u32 >= *n
            }
            Pred::Or(ps) => ps.iter().any(|p| self.holds_at(p, from, e)),
            Pred::Loop { unit, until } => {
                if unit.is_empty() || !self.state_holds(until, pose) {
                    return false;
                }
                let mut end = history.len();
                let mut reps = 0;
                while end >= unit.len() && suffix_matches(&history[..end], unit) {
                    end -= unit.len();
                    reps += 1;
                }
                reps >= 1
            }
            state => self.state_holds(state, pose),
        }
    }

    fn find(&self, cur: Cursor, until_tick: Option<u64>, mut ok: impl FnMut(usize, &Event) -> bool) -> Option<Cursor> {
        (cur.idx..self.log.len())
            .take_while(|&i| until_tick.map_or(true, |t| self.log[i].tick <= t))
            .find(|&i| ok(i, &self.log[i]))
            .map(|i| Cursor { idx: i + 1, tick: self.log[i].tick })
    }

    fn walk(&self, steps: &[RStep], prefix: &str, mut cur: Cursor) -> Walk {
        for (i, step) in steps.iter().enumerate() {
            let key = if prefix.is_empty() { i.to_string() } else { format!("{prefix}.{i}") };
            let blocked = |need: Option<Need>, reject: bool| Walk::Blocked { key: key.clone(), need, reject };
            let next = match step {
                RStep::Say(text) => self.find(cur, None, |_, e| matches!(&e.kind, EventKind::Said { key: k } if *k == key)).ok_or_else(|| blocked(Some(Need::Say { key: key.clone(), text: text.clone() }), false)),
                RStep::Reward(v) => self
                    .find(cur, None, |_, e| matches!(e.kind, EventKind::Rewarded { value } if value == *v))
                    .ok_or_else(|| blocked(Some(Need::Reward(*v)), false)),
                RStep::Name(label) => self
                    .find(cur, None, |_, e| matches!(&e.kind, EventKind::Named { label: l } if l == label))
                    .ok_or_else(|| blocked(Some(Need::Name(label.clone())), false)),
                RStep::ExpectOutput { alts, window } => {
                    let limit = cur.tick + window;
                    self.find(cur, Some(limit), |_, e| match &e.kind {
                        EventKind::Routed { to, body } => alts.iter().any(|(t, b)| t == to && b == body),
                        _ => false,
                    })
                    .ok_or_else(|| blocked(None, self.now > limit))
                }
                RStep::ExpectWorld { pred, window } => {
                    let limit = window.map(|w| cur.tick + w);
                    let from = cur.idx;
                    self.find(cur, limit, |i, _| self.holds_at(pred, from, i))
                        .ok_or_else(|| blocked(None, limit.is_some_and(|l| self.now > l)))
                }
                RStep::Repeat { body, until, max } => {
                    let mut inner = cur;
                    let mut result = None;
                    for it in 0..*max {
                        match self.walk(body, &format!("{key}.{it}"), inner) {
                            Walk::Done(c) => {
                                inner = c;
                                if self.state_holds(until, self.pose_before(c.idx)) {
                                    result = Some(Ok(c));
                                    break;
                                }
                            }
                            blocked => {
                                result = Some(Err(blocked));
                                break;
                            }
                        }
                    }
                    result.unwrap_or_else(|| Err(blocked(None, true)))
                }
            };
            match next {
                Ok(c) => cur = c,
                Err(b) => return b,
            }
        }
        Walk::Done(cur)
    }
}

fn suffix_matches(history: &[(&EnvCommand, &EnvResponse)], cmds: &[EnvCommand]) -> bool {
    history.len() >= cmds.len()
        && history[history.len() - cmds.len()..]
            .iter()
            .zip(cmds)
            .all(|((c, r), want)| *c == want && r.confirms())
}

/// Judge an episode. Pure in (instance, log, now); the log must start with `Begin`.
pub fn judge(instance: &TaskInstance, log: &[Event], now: u64) -> Progress {
    let Some(Event { tick: start, kind: EventKind::Begin { pose } }) = log.first() else {
        return Progress { verdict: Verdict::Pending, need: None, complete: false, at: None };
    };
    let ctx = Ctx { log, now, begin: pose };
    let cur = Cursor { idx: 1, tick: *start };
    let past_deadline = now >= start + instance.deadline;
    match ctx.walk(&instance.steps, "", cur) {
        Walk::Done(_) => Progress { verdict: Verdict::Accept, need: None, complete: true, at: None },
        Walk::Blocked { key, need, reject } => {
            let top: usize = key.split('.').next().and_then(|k| k.parse().ok()).unwrap_or(0);
            let nested = key.contains('.');
            let expects_left = nested || instance.steps[top..].iter().any(RStep::is_expect);
            let verdict = if !expects_left {
                Verdict::Accept
            } else if reject || past_deadline {
                Verdict::Reject
            } else {
                Verdict::Pending
            };
            Progress { verdict, need, complete: false, at: Some(key) }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::instance::{instantiate, SkillTable};
    use crate::tasks::lexicon::Lexicon;
    use crate::tasks::script::parse_scripts;
    use crate::world::World;
    use proptest::prelude::*;

    fn inst(text: &str) -> TaskInstance {
        let s = parse_scripts(text, "t").unwrap().remove(0);
        instantiate(&s, 0, &SkillTable::new(), &Lexicon::identity()).unwrap()
    }

    struct Log {
        events: Vec<Event>,
        world: World,
    }

    impl Log {
        fn new(world: &World) -> Self {
            Log { events: vec![Event { tick: 0, kind: EventKind::Begin { pose: world.pose() } }], world: world.clone() }
        }
        fn push(&mut self, tick: u64, kind: EventKind) {
            self.events.push(Event { tick, kind });
        }
        fn env(&mut self, tick: u64, cmd: EnvCommand) {
            let response = self.world.apply(&cmd);
            let pose = self.world.pose();
            self.push(tick, EventKind::Env { cmd, response, pose });
        }
    }

    const GIVE_ORDER: &str = "task g\nlevel 1\nworld grid 1 3\n.\n.\n^\ndeadline 500\nsay \"give order @E: I move\"\nexpect output \"@E: I move\"\nreward +1\n";

    #[test]
    fn give_order_accepts_then_needs_reward() {
        let i = inst(GIVE_ORDER);
        let mut log = Log::new(i.world.as_ref().unwrap());
        let p = judge(&i, &log.events, 0);
        assert_eq!(p.need, Some(Need::Say { key: "0".into(), text: "give order @E: I move".into() }));
        log.push(25, EventKind::Said { key: "0".into() });
        assert_eq!(judge(&i, &log.events, 30).verdict, Verdict::Pending);
        log.push(40, EventKind::Routed { to: AgentId::Environment, body: "I move".into() });
        let p = judge(&i, &log.events, 40);
        assert_eq!((p.verdict, p.need.clone()), (Verdict::Accept, Some(Need::Reward(1))));
        log.push(40, EventKind::Rewarded { value: 1 });
        assert!(judge(&i, &log.events, 41).complete);
    }

    #[test]
    fn character_soup_is_pending_then_rejected() {
        let i = inst(GIVE_ORDER);
        let mut log = Log::new(i.world.as_ref().unwrap());
        log.push(25, EventKind::Said { key: "0".into() });
        log.push(40, EventKind::Routed { to: AgentId::Environment, body: "fglk4$3wfgg".into() });
        let p = judge(&i, &log.events, 41);
        assert_eq!((p.verdict, p.need), (Verdict::Pending, None));
        // default window is 16 per framed symbol of "@E: I move."
        assert_eq!(judge(&i, &log.events, 25 + 16 * 11 + 1).verdict, Verdict::Reject);
        assert_eq!(judge(&i, &log.events, 25 + 16 * 11).verdict, Verdict::Pending);
    }

    const BARRIER: &str = "task b\nlevel 2\nworld grid 3 4\n...\n.#.\n...\n.^.\ndeadline 900\nsay \"move and turn right and move\"\nexpect world executed(move, turn right, move)\nreward +1\n";

    #[test]
    fn blocked_order_is_not_accepted_until_carried_out() {
        // learner at (1,3) facing north; a wall at (1,1)
        let i = inst("task b\nlevel 2\nworld grid 3 4\n...\n...\n.#.\n.^.\ndeadline 900\nsay \"move and turn right and move\"\nexpect world executed(move, turn right, move)\nreward +1\n");
        let mut log = Log::new(i.world.as_ref().unwrap());
        log.push(30, EventKind::Said { key: "0".into() });
        log.env(40, EnvCommand::Move);
        assert_eq!(judge(&i, &log.events, 40).verdict, Verdict::Pending);
        let i2 = inst(BARRIER);
        let mut log2 = Log::new(i2.world.as_ref().unwrap());
        log2.push(30, EventKind::Said { key: "0".into() });
        log2.env(40, EnvCommand::Move);
        log2.env(50, EnvCommand::TurnRight);
        log2.env(60, EnvCommand::TurnLeft);
        log2.env(70, EnvCommand::Move);
        assert!(matches!(log2.events.last().unwrap().kind, EventKind::Env { response: EnvResponse::CantMove, .. }));
        log2.env(80, EnvCommand::TurnRight);
        log2.env(90, EnvCommand::Move);
        assert_eq!(judge(&i2, &log2.events, 90).verdict, Verdict::Pending);
        let mut w = i2.world.clone().unwrap();
        for c in [EnvCommand::TurnLeft, EnvCommand::Move, EnvCommand::TurnRight] {
            w.apply(&c);
        }
        // (0,3) facing north: move, turn right, move is now open
        let mut log3 = Log::new(&w);
        log3.push(1, EventKind::Said { key: "0".into() });
        log3.env(10, EnvCommand::Move);
        log3.env(20, EnvCommand::TurnRight);
        log3.env(30, EnvCommand::Move);
        let p = judge(&i2, &log3.events, 30);
        assert_eq!(p.verdict, Verdict::Accept);
    }

    #[test]
    fn repeat_until_and_loop_skill() {
        let i = inst("task f\nlevel 4\nworld grid 1 4\na\n.\n.\n^\ndeadline 900\nrepeat until faced(apple) max 5\nsay \"move and look\"\nexpect world executed(move, look)\nend\nreward +1\n");
        let mut log = Log::new(i.world.as_ref().unwrap());
        for it in 0..2u64 {
            let p = judge(&i, &log.events, it * 100);
            assert_eq!(p.need, Some(Need::Say { key: format!("0.{it}.0"), text: "move and look".into() }));
            log.push(it * 100 + 10, EventKind::Said { key: format!("0.{it}.0") });
            log.env(it * 100 + 20, EnvCommand::Move);
            log.env(it * 100 + 30, EnvCommand::Look);
        }
        let p = judge(&i, &log.events, 300);
        assert_eq!((p.verdict, p.need), (Verdict::Accept, Some(Need::Reward(1))));

        let lp = Pred::Loop { unit: vec![EnvCommand::Move, EnvCommand::Look], until: Box::new(Pred::Faced(crate::world::ObjectKind::Apple)) };
        let skill = TaskInstance {
            steps: vec![RStep::ExpectWorld { pred: lp, window: None }, RStep::Reward(1)],
            ..i.clone()
        };
        let mut log = Log::new(i.world.as_ref().unwrap());
        log.env(5, EnvCommand::Move);
        assert_eq!(judge(&skill, &log.events, 5).verdict, Verdict::Pending);
        log.env(6, EnvCommand::Look);
        assert_eq!(judge(&skill, &log.events, 6).verdict, Verdict::Pending);
        log.env(7, EnvCommand::Move);
        log.env(8, EnvCommand::Look);
        assert_eq!(judge(&skill, &log.events, 8).verdict, Verdict::Accept);
    }

    #[test]
    fn deadline_rejects() {
        let i = inst("task d\nlevel 4\nworld grid 1 3\na\n.\n^\ndeadline 100\nsay \"get\"\nexpect world holds(apple, 1)\nreward +1\n");
        let log = Log::new(i.world.as_ref().unwrap());
        assert_eq!(judge(&i, &log.events, 99).verdict, Verdict::Pending);
        assert_eq!(judge(&i, &log.events, 100).verdict, Verdict::Reject);
    }

    #[test]
    fn naming_does_not_change_verdicts() {
        let with = inst("task n\nlevel 4\nworld grid 1 4\n.\n.\n.\n^\ndeadline 500\nsay \"move and move\"\nexpect world executed(move, move)\nname \"move two times\"\nreward +1\n");
        let without = TaskInstance { steps: with.steps.iter().filter(|s| !matches!(s, RStep::Name(_))).cloned().collect(), ..with.clone() };
        let mut log = Log::new(with.world.as_ref().unwrap());
        log.push(20, EventKind::Said { key: "0".into() });
        for t in [30, 40] {
            log.env(t, EnvCommand::Move);
            for now in [t, t + 1, 600] {
                assert_eq!(judge(&with, &log.events, now).verdict, judge(&without, &log.events, now).verdict);
            }
        }
    }

    proptest! {
        #[test]
        fn one_symbol_perturbation_never_accepts(pos in 0usize..6, c in proptest::sample::select(crate::channel::Symbol::alphabet())) {
            let i = inst(GIVE_ORDER);
            let mut body: Vec<char> = "I move".chars().collect();
            prop_assume!(body[pos] != c.as_char());
            body[pos] = c.as_char();
            let body: String = body.into_iter().collect();
            let mut log = Log::new(i.world.as_ref().unwrap());
            log.push(25, EventKind::Said { key: "0".into() });
            log.push(40, EventKind::Routed { to: AgentId::Environment, body });
            prop_assert_ne!(judge(&i, &log.events, 41).verdict, Verdict::Accept);
        }
    }
}
