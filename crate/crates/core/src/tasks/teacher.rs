//! The scripted Teacher: turns judging progress into utterances and rewards.

use crate::channel::{frame, AgentId, ChannelError, Mux, RewardChannel, Writer};
use crate::world::{EnvCommand, EnvResponse, Pose, World};

use super::howto::answer_howto;
use super::instance::TaskInstance;
use super::judge::{judge, Event, EventKind, Need, Progress, Verdict};

/// One episode's worth of Teacher state.
#[derive(Debug, Clone)]
pub struct Teacher {
    pub instance: TaskInstance,
    pub log: Vec<Event>,
    in_flight: Option<(u64, String)>,
    next_tag: u64,
    timeout_paid: bool,
    last: Option<Progress>,
}

impl Teacher {
    /// Start an episode at `tick`; tags issued to the mux start at `tag_base`.
    pub fn begin(instance: TaskInstance, pose: Pose, tick: u64, tag_base: u64) -> Self {
        Teacher {
            instance,
            log: vec![Event { tick, kind: EventKind::Begin { pose } }],
            in_flight: None,
            next_tag: tag_base,
            timeout_paid: false,
            last: None,
        }
    }

    pub fn start_tick(&self) -> u64 {
        self.log[0].tick
    }

    /// A tagged Teacher message finished crossing the channel.
    pub fn on_delivered(&mut self, tag: u64, tick: u64) {
        if let Some((t, key)) = &self.in_flight {
            if *t == tag {
                self.log.push(Event { tick, kind: EventKind::Said { key: key.clone() } });
                self.in_flight = None;
            }
        }
    }

    /// A learner segment arrived. Requests to the Teacher may be how-to questions.
    pub fn on_routed(&mut self, to: AgentId, body: &str, tick: u64, world: &World, mux: &mut Mux) {
        self.log.push(Event { tick, kind: EventKind::Routed { to, body: body.to_string() } });
        if to != AgentId::Teacher {
            return;
        }
        if let Some(answer) = answer_howto(body, &self.instance, world) {
            match frame(&answer, AgentId::Learner, AgentId::Teacher) {
                Ok(raw) => {
                    mux.enqueue(Writer::Teacher, &raw, None);
                    self.log.push(Event { tick, kind: EventKind::Answered { request: body.to_string() } });
                }
                Err(e) => log::warn!("how-to answer {answer:?} cannot be framed: {e}"),
            }
        }
    }

    pub fn on_env(&mut self, cmd: EnvCommand, response: EnvResponse, pose: Pose, tick: u64) {
        self.log.push(Event { tick, kind: EventKind::Env { cmd, response, pose } });
    }

    pub fn progress(&self, now: u64) -> Progress {
        judge(&self.instance, &self.log, now)
    }

    /// Act on the current progress: speak, reward, or record a name.
    ///
    /// Utterances and rewards wait until the input channel is idle so they
    /// never interleave with Environment replies.
    pub fn act(&mut self, tick: u64, mux: &mut Mux, rewards: &mut RewardChannel) -> Result<Progress, ChannelError> {
        loop {
            let p = self.progress(tick);
            self.last = Some(p.clone());
            if p.complete {
                return Ok(p);
            }
            if p.verdict == Verdict::Reject {
                if !self.timeout_paid && self.instance.timeout_reward != 0 && mux.is_idle() {
                    rewards.deliver_reward(self.instance.timeout_reward, tick, mux)?;
                    self.log.push(Event { tick, kind: EventKind::Rewarded { value: self.instance.timeout_reward } });
                    self.timeout_paid = true;
                }
                return Ok(p);
            }
            match &p.need {
                Some(Need::Name(label)) => {
                    self.log.push(Event { tick, kind: EventKind::Named { label: label.clone() } });
                }
                Some(Need::Reward(v)) if mux.is_idle() => {
                    rewards.deliver_reward(*v, tick, mux)?;
                    self.log.push(Event { tick, kind: EventKind::Rewarded { value: *v } });
                }
                Some(Need::Say { key, text }) if mux.is_idle() && self.in_flight.is_none() => {
                    let raw = frame(text, AgentId::Learner, AgentId::Teacher)?;
                    let tag = self.next_tag;
                    self.next_tag += 1;
                    mux.enqueue(Writer::Teacher, &raw, Some(tag));
                    self.in_flight = Some((tag, key.clone()));
                    return Ok(p);
                }
                _ => return Ok(p),
            }
        }
    }

    /// The episode is over: all steps done, or rejected (with any timeout
    /// penalty already issued).
    pub fn finished(&self) -> Option<Verdict> {
        let p = self.last.as_ref()?;
        if p.complete {
            return Some(Verdict::Accept);
        }
        if p.verdict == Verdict::Reject && (self.timeout_paid || self.instance.timeout_reward == 0) {
            return Some(Verdict::Reject);
        }
        None
    }

    /// Whether the +1 has gone out.
    pub fn rewarded(&self) -> bool {
        self.log.iter().any(|e| matches!(e.kind, EventKind::Rewarded { value: 1 }))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::text_of;
    use crate::tasks::instance::{instantiate, SkillTable};
    use crate::tasks::lexicon::Lexicon;
    use crate::tasks::script::parse_scripts;

    fn drain(mux: &mut Mux, tick: &mut u64, teacher: &mut Teacher) -> String {
        let mut out = Vec::new();
        while !mux.is_idle() {
            *tick += 1;
            let (s, d) = mux.next_symbol();
            out.push(s);
            if let Some(d) = d {
                if let Some(tag) = d.tag {
                    teacher.on_delivered(tag, *tick);
                }
            }
        }
        text_of(&out)
    }

    #[test]
    fn speaks_waits_and_rewards_once() {
        let s = parse_scripts(
            "task g\nlevel 1\nworld grid 1 3\n.\n.\n^\ndeadline 500\nsay \"give order @E: I move\"\nexpect output \"@E: I move\"\nreward +1\nsay \"well done\"\n",
            "t",
        )
        .unwrap()
        .remove(0);
        let inst = instantiate(&s, 0, &SkillTable::new(), &Lexicon::identity()).unwrap();
        let mut world = inst.world.clone().unwrap();
        let mut t = Teacher::begin(inst, world.pose(), 0, 0);
        let (mut mux, mut rc) = (Mux::new(), RewardChannel::new());
        let mut tick = 0;
        t.act(tick, &mut mux, &mut rc).unwrap();
        // a second act must not enqueue the utterance twice
        t.act(tick, &mut mux, &mut rc).unwrap();
        assert_eq!(drain(&mut mux, &mut tick, &mut t), "T: give order @E: I move.");
        assert!(t.act(tick, &mut mux, &mut rc).unwrap().need.is_none());
        tick += 10;
        t.on_routed(AgentId::Environment, "I move", tick, &world, &mut mux);
        let resp = world.apply(&EnvCommand::Move);
        t.on_env(EnvCommand::Move, resp, world.pose(), tick);
        mux.enqueue(Writer::Environment, "E: you moved.", None);
        // reward waits for the Environment reply
        t.act(tick, &mut mux, &mut rc).unwrap();
        assert!(!t.rewarded());
        assert_eq!(drain(&mut mux, &mut tick, &mut t), "E: you moved.");
        t.act(tick, &mut mux, &mut rc).unwrap();
        assert!(t.rewarded());
        assert_eq!(drain(&mut mux, &mut tick, &mut t), "R: 1.");
        t.act(tick, &mut mux, &mut rc).unwrap();
        assert_eq!(drain(&mut mux, &mut tick, &mut t), "T: well done.");
        assert_eq!(t.act(tick, &mut mux, &mut rc).unwrap().verdict, Verdict::Accept);
        assert_eq!(t.finished(), Some(Verdict::Accept));
        let rewards = t.log.iter().filter(|e| matches!(e.kind, EventKind::Rewarded { .. })).count();
        assert_eq!(rewards, 1);
    }

    #[test]
    fn timeout_penalty_is_opt_in() {
        for (line, expect) in [("", 0), ("timeout -1\n", 1)] {
            let s = parse_scripts(
                &format!("task g\nlevel 1\nworld grid 1 3\n.\n.\n^\ndeadline 50\n{line}say \"x\"\nexpect output \"@T: x\"\nreward +1\n"),
                "t",
            )
            .unwrap()
            .remove(0);
            let inst = instantiate(&s, 0, &SkillTable::new(), &Lexicon::identity()).unwrap();
            let world = inst.world.clone().unwrap();
            let mut t = Teacher::begin(inst, world.pose(), 0, 0);
            let (mut mux, mut rc) = (Mux::new(), RewardChannel::new());
            let mut tick = 0;
            t.act(tick, &mut mux, &mut rc).unwrap();
            drain(&mut mux, &mut tick, &mut t);
            let p = t.act(60, &mut mux, &mut rc).unwrap();
            assert_eq!(p.verdict, Verdict::Reject);
            assert_eq!(t.finished(), Some(Verdict::Reject));
            assert_eq!(rc.pending(), expect);
        }
    }
}
