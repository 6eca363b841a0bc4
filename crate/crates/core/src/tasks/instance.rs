//! Seeded, fully resolved task instances.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::lexicon::Lexicon;
use super::script::{builtin_slot, slot_refs, HowtoAnswer, ScriptOptions, Step, TaskScript, WorldSpec};
use crate::channel::{route_text, AgentId};
use crate::world::{plan_pattern, reachable, Cell, EnvCommand, GenSpec, ObjectKind, World};

/// Generator retries before an instance is declared unsolvable.
pub const MAX_GEN_RETRIES: usize = 100;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TaskError {
    #[error("task {task}: {message}")]
    Invalid { task: String, message: String },
    #[error("task {task}: no solvable world after {tries} draws ({last})")]
    Unsolvable { task: String, tries: usize, last: String },
}

/// The closed predicate library.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pred {
    /// Picked at least `n` of the kind (any kind for `None`) during the episode.
    Holds(Option<ObjectKind>, u32),
    At(Cell),
    Faced(ObjectKind),
    /// The most recent Environment commands were exactly these, all confirmed.
    Executed(Vec<EnvCommand>),
    /// At least `n` confirmed moves since the step began.
    Moved(u32),
    Or(Vec<Pred>),
    /// `unit` repeated one or more times, confirmed, ending where `until` holds.
    Loop { unit: Vec<EnvCommand>, until: Box<Pred> },
}

fn parse_args(inner: &str) -> Vec<String> {
    inner.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
}

fn parse_object(s: &str) -> Result<ObjectKind, String> {
    ObjectKind::from_word(s).ok_or_else(|| format!("unknown object {s:?}"))
}

fn parse_count(s: &str) -> Result<u32, String> {
    match s {
        "one" => Ok(1),
        "two" => Ok(2),
        "three" => Ok(3),
        _ => s.parse().map_err(|_| format!("bad count {s:?}")),
    }
}

impl Pred {
    pub fn parse(text: &str) -> Result<Pred, String> {
        let alts: Vec<&str> = text.split('|').map(str::trim).collect();
        if alts.len() > 1 {
            return alts.into_iter().map(Pred::parse).collect::<Result<_, _>>().map(Pred::Or);
        }
        let text = text.trim();
        let (name, rest) = text.split_once('(').ok_or_else(|| format!("predicate expected, got {text:?}"))?;
        let inner = rest.strip_suffix(')').ok_or_else(|| format!("unclosed predicate {text:?}"))?;
        let args = parse_args(inner);
        let arity = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(format!("{name} takes {n} argument(s), got {}", args.len()))
            }
        };
        match name.trim() {
            "holds" => {
                arity(2)?;
                let obj = if args[0] == "any" { None } else { Some(parse_object(&args[0])?) };
                Ok(Pred::Holds(obj, parse_count(&args[1])?))
            }
            "at" => {
                arity(2)?;
                let n = |s: &str| s.parse::<usize>().map_err(|_| format!("bad coordinate {s:?}"));
                Ok(Pred::At(Cell::new(n(&args[0])?, n(&args[1])?)))
            }
            "faced" => {
                arity(1)?;
                Ok(Pred::Faced(parse_object(&args[0])?))
            }
            "moved" | "position_changed" => {
                arity(1)?;
                Ok(Pred::Moved(parse_count(&args[0])?))
            }
            "executed" => {
                if args.is_empty() {
                    return Err("executed needs at least one command".into());
                }
                args.iter()
                    .map(|a| EnvCommand::from_verbal(a).ok_or_else(|| format!("unknown command {a:?}")))
                    .collect::<Result<_, _>>()
                    .map(Pred::Executed)
            }
            other => Err(format!("unknown predicate {other:?}")),
        }
    }

    /// Objects this predicate asks the learner to reach.
    pub fn goal_objects(&self) -> Vec<ObjectKind> {
        match self {
            Pred::Holds(Some(o), _) | Pred::Faced(o) => vec![*o],
            Pred::Or(ps) => ps.iter().flat_map(Pred::goal_objects).collect(),
            Pred::Loop { until, .. } => until.goal_objects(),
            _ => Vec::new(),
        }
    }
}

/// A routed output the Teacher accepts, e.g. `(Environment, "I move")`.
pub type Segment = (AgentId, String);

/// Acceptance pattern recorded under a skill name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Skill {
    Output(Vec<Segment>),
    World(Pred),
}

pub type SkillTable = BTreeMap<String, Skill>;

/// A step with slots bound, lexicon applied and predicates parsed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RStep {
    Say(String),
    ExpectOutput { alts: Vec<Segment>, window: u64 },
    /// Without a window the episode deadline bounds the step.
    ExpectWorld { pred: Pred, window: Option<u64> },
    Repeat { body: Vec<RStep>, until: Pred, max: u32 },
    Reward(i8),
    Name(String),
}

impl RStep {
    pub fn is_expect(&self) -> bool {
        matches!(self, RStep::ExpectOutput { .. } | RStep::ExpectWorld { .. } | RStep::Repeat { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Answer {
    Text(String),
    Path(ObjectKind),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskInstance {
    pub script_id: String,
    pub level: u32,
    pub seed: u64,
    pub slots: BTreeMap<String, String>,
    /// `None` when the task runs in whatever world the session holds.
    pub world: Option<World>,
    pub steps: Vec<RStep>,
    pub deadline: u64,
    pub timeout_reward: i8,
    pub howto: Vec<(String, Answer)>,
    pub options: ScriptOptions,
    pub lexicon: Lexicon,
}

impl TaskInstance {
    /// Configure look behaviour on a world the instance runs in.
    pub fn apply_options(&self, world: &mut World) {
        world.legacy_look = self.options.legacy_look;
        world.look_enabled = !self.options.no_look;
    }

    pub fn answer_for(&self, request: &str) -> Option<&Answer> {
        self.howto.iter().find(|(r, _)| r == request).map(|(_, a)| a)
    }
}

/// Default window for an output expectation: 16 ticks per framed symbol.
pub fn default_output_window(alts: &[Segment]) -> u64 {
    let longest = alts.iter().map(|(_, body)| body.len() + "@T: .".len()).max().unwrap_or(1);
    16 * longest as u64
}

/// Stable per-script seed mixing (FNV-1a); std hashers are not stable across releases.
pub fn mix_seed(seed: u64, id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    seed ^ h
}

fn domain(script: &TaskScript, name: &str) -> Option<Vec<String>> {
    script.slots.get(name).cloned().or_else(|| builtin_slot(name))
}

/// Every slot referenced anywhere in the script.
pub fn referenced_slots(script: &TaskScript) -> Vec<String> {
    fn walk(steps: &[Step], out: &mut Vec<String>) {
        for s in steps {
            match s {
                Step::Say(t) | Step::NameSkill(t) => out.extend(slot_refs(t)),
                Step::ExpectOutput { alts, .. } => alts.iter().for_each(|a| out.extend(slot_refs(a))),
                Step::ExpectWorld { pred, .. } => out.extend(slot_refs(pred)),
                Step::ExpectSkill { label, .. } => out.extend(slot_refs(label)),
                Step::Repeat { body, until, .. } => {
                    out.extend(slot_refs(until));
                    walk(body, out);
                }
                Step::GiveReward(_) => {}
            }
        }
    }
    let mut out = Vec::new();
    walk(&script.steps, &mut out);
    if let WorldSpec::Gen(p) = &script.world {
        out.extend(slot_refs(p));
    }
    for h in &script.howto {
        out.extend(slot_refs(&h.request));
        match &h.answer {
            HowtoAnswer::Text(t) | HowtoAnswer::Path(t) => out.extend(slot_refs(t)),
        }
    }
    let mut seen = Vec::new();
    for s in out {
        if !seen.contains(&s) {
            seen.push(s);
        }
    }
    seen
}

pub fn expand(template: &str, slots: &BTreeMap<String, String>) -> Result<String, String> {
    let mut out = String::new();
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let close = rest[open..].find('}').ok_or_else(|| format!("unclosed slot in {template:?}"))?;
        let inner = &rest[open + 1..open + close];
        let (article, name) = match inner.strip_prefix("a:") {
            Some(n) => (true, n),
            None => (false, inner),
        };
        let value = slots.get(name).ok_or_else(|| format!("unbound slot {{{name}}}"))?;
        if article {
            let art = ObjectKind::from_word(value).map(|o| o.article()).unwrap_or("a");
            out.push_str(art);
            out.push(' ');
        }
        out.push_str(value);
        rest = &rest[open + close + 1..];
    }
    out.push_str(rest);
    Ok(out)
}

/// Parse an acceptance alternative such as `@E: I move`.
pub fn parse_segment(alt: &str) -> Result<Segment, String> {
    let alt = alt.trim();
    let alt = alt.strip_suffix('.').unwrap_or(alt);
    match route_text(alt).as_slice() {
        [(to, body)] if !body.is_empty() => Ok((*to, body.clone())),
        _ => Err(format!("alternative must be one addressed segment, got {alt:?}")),
    }
}

fn parse_gen(params: &str) -> Result<GenSpec, String> {
    let mut spec = GenSpec::default();
    for kv in params.split_whitespace() {
        let (k, v) = kv.split_once('=').ok_or_else(|| format!("bad generator parameter {kv:?}"))?;
        let num = || v.parse::<usize>().map_err(|_| format!("bad number for {k}: {v:?}"));
        match k {
            "w" => spec.width = num()?,
            "h" => spec.height = num()?,
            "walls" => spec.walls = num()?,
            "water" => spec.water = num()?,
            "clear" => spec.clear = num()?,
            "side" => spec.clear_side = num()?,
            "place" => spec.place = v.split(',').map(parse_object).collect::<Result<_, _>>()?,
            "ahead" => {
                let (obj, range) = v.split_once('@').ok_or_else(|| format!("ahead=<obj>@<min>-<max>, got {v:?}"))?;
                let (lo, hi) = range.split_once('-').unwrap_or((range, range));
                let n = |s: &str| s.parse::<usize>().map_err(|_| format!("bad distance {s:?}"));
                let (lo, hi) = (n(lo)?, n(hi)?);
                if lo == 0 || hi < lo {
                    return Err(format!("bad distance range {range:?}"));
                }
                spec.ahead = Some((parse_object(obj)?, lo, hi));
            }
            _ => return Err(format!("unknown generator parameter {k:?}")),
        }
    }
    Ok(spec)
}

/// The acceptance pattern of a step, for skill binding.
pub fn skill_of(step: &Step, task: &str) -> Result<Skill, String> {
    let has_slots = |t: &str| !slot_refs(t).is_empty();
    match step {
        Step::ExpectOutput { alts, .. } => {
            if alts.iter().any(|a| has_slots(a)) {
                return Err(format!("named step in {task} uses slots"));
            }
            alts.iter().map(|a| parse_segment(a)).collect::<Result<_, _>>().map(Skill::Output)
        }
        Step::ExpectWorld { pred, .. } => {
            if has_slots(pred) {
                return Err(format!("named step in {task} uses slots"));
            }
            Pred::parse(pred).map(Skill::World)
        }
        Step::Repeat { body, until, .. } => {
            let unit = body
                .iter()
                .find_map(|s| match s {
                    Step::ExpectWorld { pred, .. } => match Pred::parse(pred) {
                        Ok(Pred::Executed(cmds)) => Some(cmds),
                        _ => None,
                    },
                    _ => None,
                })
                .ok_or_else(|| format!("named loop in {task} has no executed(...) step"))?;
            if has_slots(until) {
                return Err(format!("named step in {task} uses slots"));
            }
            Ok(Skill::World(Pred::Loop { unit, until: Box::new(Pred::parse(until)?) }))
        }
        _ => Err(format!("`name` in {task} must follow an expectation")),
    }
}

struct Resolver<'a> {
    slots: &'a BTreeMap<String, String>,
    skills: &'a SkillTable,
    lexicon: &'a Lexicon,
}

impl Resolver<'_> {
    fn text(&self, t: &str) -> Result<String, String> {
        Ok(self.lexicon.apply(&expand(t, self.slots)?))
    }

    fn steps(&self, steps: &[Step]) -> Result<Vec<RStep>, String> {
        steps.iter().map(|s| self.step(s)).collect()
    }

    fn segments(&self, alts: &[Segment]) -> Vec<Segment> {
        alts.iter()
            .map(|(to, body)| {
                let body = if *to == AgentId::Teacher { self.lexicon.apply(body) } else { body.clone() };
                (*to, body)
            })
            .collect()
    }

    fn step(&self, s: &Step) -> Result<RStep, String> {
        Ok(match s {
            Step::Say(t) => RStep::Say(self.text(t)?),
            Step::ExpectOutput { alts, window } => {
                let alts: Vec<Segment> = alts
                    .iter()
                    .map(|a| parse_segment(&expand(a, self.slots)?))
                    .collect::<Result<_, _>>()?;
                let alts = self.segments(&alts);
                let window = window.unwrap_or_else(|| default_output_window(&alts));
                RStep::ExpectOutput { alts, window }
            }
            Step::ExpectWorld { pred, window } => {
                RStep::ExpectWorld { pred: Pred::parse(&expand(pred, self.slots)?)?, window: *window }
            }
            Step::ExpectSkill { label, window } => {
                let label = expand(label, self.slots)?;
                match self.skills.get(&label) {
                    Some(Skill::Output(alts)) => {
                        let alts = self.segments(alts);
                        let window = window.unwrap_or_else(|| default_output_window(&alts));
                        RStep::ExpectOutput { alts, window }
                    }
                    Some(Skill::World(pred)) => RStep::ExpectWorld { pred: pred.clone(), window: *window },
                    None => return Err(format!("no skill named {label:?}")),
                }
            }
            Step::Repeat { body, until, max } => RStep::Repeat {
                body: self.steps(body)?,
                until: Pred::parse(&expand(until, self.slots)?)?,
                max: *max,
            },
            Step::GiveReward(v) => RStep::Reward(*v),
            Step::NameSkill(l) => RStep::Name(expand(l, self.slots)?),
        })
    }
}

/// Cheap solvability screen on the initial world; the oracle certifies fully.
fn plausible(world: &World, steps: &[RStep], howto: &[(String, Answer)]) -> Result<(), String> {
    fn check(world: &World, pred: &Pred) -> Result<(), String> {
        match pred {
            Pred::Holds(None, _) => {
                if ObjectKind::ALL.iter().any(|o| reachable(world, *o).0) {
                    Ok(())
                } else {
                    Err("no object reachable".into())
                }
            }
            Pred::Executed(cmds) => plan_pattern(world, std::slice::from_ref(cmds))
                .map(|_| ())
                .ok_or_else(|| format!("cannot execute {cmds:?}")),
            Pred::Loop { unit, until } => {
                let mut w = world.clone();
                for _ in 0..64 {
                    if !unit.iter().all(|c| w.apply(c).confirms()) {
                        return Err("loop unit blocked".into());
                    }
                    if holds_statically(&w, until) {
                        return Ok(());
                    }
                }
                Err("loop never terminates".into())
            }
            Pred::Or(ps) => {
                if ps.iter().any(|p| check(world, p).is_ok()) {
                    Ok(())
                } else {
                    Err("no alternative satisfiable".into())
                }
            }
            p => {
                for o in p.goal_objects() {
                    if !reachable(world, o).0 {
                        return Err(format!("{o} unreachable"));
                    }
                }
                Ok(())
            }
        }
    }
    fn walk(world: &World, steps: &[RStep]) -> Result<(), String> {
        for s in steps {
            match s {
                RStep::ExpectWorld { pred, .. } => check(world, pred)?,
                RStep::Repeat { body, until, .. } => {
                    walk(world, body)?;
                    check(world, until)?;
                }
                _ => {}
            }
        }
        Ok(())
    }
    walk(world, steps)?;
    for (_, a) in howto {
        if let Answer::Path(o) = a {
            if !reachable(world, *o).0 {
                return Err(format!("how-to goal {o} unreachable"));
            }
        }
    }
    Ok(())
}

/// Predicates that depend only on the current world (used by loop checks).
pub fn holds_statically(world: &World, pred: &Pred) -> bool {
    match pred {
        Pred::Faced(o) => world.faced_object() == Some(*o),
        Pred::At(c) => world.body.position == *c,
        Pred::Holds(Some(o), n) => world.body.holding(*o) >= *n,
        Pred::Holds(None, n) => world.body.holding_total() >= *n,
        Pred::Or(ps) => ps.iter().any(|p| holds_statically(world, p)),
        _ => false,
    }
}

/// Bind slots, build the world, resolve steps. Deterministic in (script, seed).
pub fn instantiate(
    script: &TaskScript,
    seed: u64,
    skills: &SkillTable,
    lexicon: &Lexicon,
) -> Result<TaskInstance, TaskError> {
    let invalid = |message: String| TaskError::Invalid { task: script.id.clone(), message };
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, &script.id));
    let mut slots = BTreeMap::new();
    for name in referenced_slots(script) {
        let values = domain(script, &name).ok_or_else(|| invalid(format!("undeclared slot {{{name}}}")))?;
        let v = values.choose(&mut rng).ok_or_else(|| invalid(format!("slot {{{name}}} is empty")))?;
        slots.insert(name, v.clone());
    }
    let r = Resolver { slots: &slots, skills, lexicon };
    let steps = r.steps(&script.steps).map_err(invalid)?;
    let mut howto = Vec::new();
    for h in &script.howto {
        let request = r.text(&h.request).map_err(invalid)?;
        let answer = match &h.answer {
            HowtoAnswer::Text(t) => Answer::Text(r.text(t).map_err(invalid)?),
            HowtoAnswer::Path(goal) => {
                let g = expand(goal, &slots).map_err(invalid)?;
                Answer::Path(parse_object(&g).map_err(invalid)?)
            }
        };
        howto.push((request, answer));
    }
    let world = match &script.world {
        WorldSpec::Persistent => None,
        WorldSpec::Literal(lit) => {
            let w = World::from_literal(lit).map_err(|e| invalid(e.to_string()))?;
            plausible(&w, &steps, &howto).map_err(|m| invalid(format!("fixed world is unsolvable: {m}")))?;
            Some(w)
        }
        WorldSpec::Gen(params) => {
            let spec = parse_gen(&expand(params, &slots).map_err(invalid)?).map_err(invalid)?;
            let mut last = String::new();
            let mut found = None;
            for _ in 0..MAX_GEN_RETRIES {
                match World::generate(&spec, &mut rng) {
                    Ok(w) => match plausible(&w, &steps, &howto) {
                        Ok(()) => {
                            found = Some(w);
                            break;
                        }
                        Err(m) => last = m,
                    },
                    Err(e) => last = e.to_string(),
                }
            }
            Some(found.ok_or_else(|| TaskError::Unsolvable {
                task: script.id.clone(),
                tries: MAX_GEN_RETRIES,
                last,
            })?)
        }
    };
    let mut inst = TaskInstance {
        script_id: script.id.clone(),
        level: script.level,
        seed,
        slots,
        world,
        steps,
        deadline: script.deadline_ticks,
        timeout_reward: script.on_timeout_reward,
        howto,
        options: script.options.clone(),
        lexicon: lexicon.clone(),
    };
    if let Some(mut w) = inst.world.take() {
        inst.apply_options(&mut w);
        inst.world = Some(w);
    }
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::script::parse_scripts;

    fn one(text: &str) -> TaskScript {
        parse_scripts(text, "t").unwrap().remove(0)
    }

    #[test]
    fn predicates() {
        assert_eq!(Pred::parse("holds(any, 1)").unwrap(), Pred::Holds(None, 1));
        assert_eq!(Pred::parse("holds(apple,two)").unwrap(), Pred::Holds(Some(ObjectKind::Apple), 2));
        assert_eq!(
            Pred::parse("executed(move, turn right, pick the pear)").unwrap(),
            Pred::Executed(vec![EnvCommand::Move, EnvCommand::TurnRight, EnvCommand::Pick(ObjectKind::Pear)])
        );
        assert_eq!(
            Pred::parse("faced(mug) | at(1, 2)").unwrap(),
            Pred::Or(vec![Pred::Faced(ObjectKind::Mug), Pred::At(Cell::new(1, 2))])
        );
        assert!(Pred::parse("flies(apple)").is_err());
        assert!(Pred::parse("holds(apple)").is_err());
        assert!(Pred::parse("executed(jump)").is_err());
    }

    #[test]
    fn template_expansion() {
        let slots: BTreeMap<String, String> = [("obj".to_string(), "apple".to_string())].into();
        assert_eq!(expand("pick {a:obj} now", &slots).unwrap(), "pick an apple now");
        assert_eq!(expand("say {obj}", &slots).unwrap(), "say apple");
        assert!(expand("say {dir}", &slots).is_err());
    }

    #[test]
    fn repeat_word_instance() {
        let s = one("task rw\nlevel 0\nslot w apple|pear\nworld gen w=3 h=3\ndeadline 50\nsay \"say {w}\"\nexpect output \"@T: {w}\"\nreward +1\n");
        for seed in 0..20 {
            let inst = instantiate(&s, seed, &SkillTable::new(), &Lexicon::identity()).unwrap();
            let w = &inst.slots["w"];
            assert_eq!(inst.steps[0], RStep::Say(format!("say {w}")));
            let alts = vec![(AgentId::Teacher, w.clone())];
            assert_eq!(inst.steps[1], RStep::ExpectOutput { window: default_output_window(&alts), alts });
        }
        let a = instantiate(&s, 7, &SkillTable::new(), &Lexicon::identity()).unwrap();
        assert_eq!(a, instantiate(&s, 7, &SkillTable::new(), &Lexicon::identity()).unwrap());
    }

    #[test]
    fn fixed_world_is_seed_independent() {
        let s = one("task f\nlevel 2\nworld grid 1 3\n.\n.\n^\ndeadline 50\nsay \"move\"\nexpect world executed(move)\nreward +1\n");
        let a = instantiate(&s, 1, &SkillTable::new(), &Lexicon::identity()).unwrap();
        let b = instantiate(&s, 99, &SkillTable::new(), &Lexicon::identity()).unwrap();
        assert_eq!(TaskInstance { seed: 0, ..a }, TaskInstance { seed: 0, ..b });
    }

    #[test]
    fn generated_apple_is_reachable() {
        let s = one("task fa\nlevel 4\nworld gen w=6 h=6 walls=6 water=2 place=apple\ndeadline 500\nsay \"get an apple\"\nexpect world holds(apple, 1)\nreward +1\n");
        for seed in 0..50 {
            let inst = instantiate(&s, seed, &SkillTable::new(), &Lexicon::identity()).unwrap();
            assert!(reachable(inst.world.as_ref().unwrap(), ObjectKind::Apple).0);
        }
    }

    #[test]
    fn unsolvable_generator_reports() {
        // every cell but the learner's is wall, so nothing can be placed
        let s = one("task bad\nlevel 4\nworld gen w=2 h=1 walls=1 place=apple\ndeadline 50\nsay \"get\"\nexpect world holds(apple, 1)\nreward +1\n");
        assert!(matches!(
            instantiate(&s, 0, &SkillTable::new(), &Lexicon::identity()),
            Err(TaskError::Unsolvable { .. })
        ));
    }

    #[test]
    fn lexicon_touches_teacher_segments_only() {
        let s = one("task g\nlevel 1\nworld gen w=3 h=3\ndeadline 50\nsay \"give order @E: I move\"\nexpect output \"@E: I move\" | \"@T: order\"\nreward +1\n");
        let lex = Lexicon::from_pairs([("give", "zub"), ("order", "plim"), ("move", "dak")]).unwrap();
        let inst = instantiate(&s, 0, &SkillTable::new(), &lex).unwrap();
        assert_eq!(inst.steps[0], RStep::Say("zub plim @E: I move".into()));
        let RStep::ExpectOutput { alts, .. } = &inst.steps[1] else { panic!() };
        assert_eq!(alts, &vec![(AgentId::Environment, "I move".into()), (AgentId::Teacher, "plim".into())]);
    }
}
