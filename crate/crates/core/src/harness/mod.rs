//! Evaluation: suites, held-out transformations, oracle certification and scoring.

pub mod replay;
pub mod stats;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curriculum::CurriculumConfig;
use crate::learners::{Contestant, Learner, SideDoor};
use crate::session::{ComputeStats, Session, SessionConfig, SessionError, TaskSource, TaskStats};
use crate::tasks::script::{HowtoAnswer, HowtoEntry};
use crate::tasks::{Lexicon, ParseError, Step, TaskScript, TaskSet, Verdict, WorldSpec};
use crate::world::ObjectKind;

pub use stats::two_proportion_test;

/// Oracle time times this must not exceed a script's deadline.
pub const DEADLINE_SAFETY: f64 = 1.5;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Tasks(#[from] ParseError),
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error("no transformation of {suite} survived certification after {tries} tries: {last}")]
    Uncertifiable { suite: String, tries: u32, last: String },
    #[error("bad budget {0:?}: expected ticks or wallclock:<n>(ms|s|m)")]
    Budget(String),
    #[error("suite file: {0}")]
    SuiteFile(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// What was done to a base suite.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transform {
    /// Seed of the pseudo-word lexicon; `None` keeps English.
    pub lexicon_seed: Option<u64>,
    /// Replaces the suite seed, so generated worlds differ.
    pub topography_seed: Option<u64>,
    /// Object renaming, as a permutation.
    pub objects: Vec<(ObjectKind, ObjectKind)>,
}

impl Transform {
    pub fn identity() -> Self {
        Transform::default()
    }

    pub fn sample(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut perm = ObjectKind::ALL.to_vec();
        // a derangement-free shuffle may leave some objects fixed, which is fine
        perm.shuffle(&mut rng);
        Transform {
            lexicon_seed: Some(rng.gen()),
            topography_seed: Some(rng.gen()),
            objects: ObjectKind::ALL.into_iter().zip(perm).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSuite {
    pub name: String,
    pub scripts: Vec<TaskScript>,
    pub lexicon: Lexicon,
    pub curriculum: Option<CurriculumConfig>,
    pub seed: u64,
    pub transform: Transform,
}

impl EvalSuite {
    pub fn new(name: &str, tasks: &TaskSet, seed: u64) -> Self {
        EvalSuite {
            name: name.into(),
            scripts: tasks.scripts().to_vec(),
            lexicon: Lexicon::identity(),
            curriculum: None,
            seed,
            transform: Transform::identity(),
        }
    }

    pub fn tasks(&self) -> Result<TaskSet, ParseError> {
        TaskSet::new(self.scripts.clone())
    }

    pub fn session_config(&self, ticks: u64) -> SessionConfig {
        SessionConfig {
            tasks: TaskSource::Inline(self.scripts.clone()),
            curriculum: self.curriculum.clone(),
            lexicon: self.lexicon.clone(),
            ..SessionConfig::new(self.seed, ticks)
        }
    }
}

/// `seed`, `tasks` ("builtin" or a directory), optional `levels` and `heldout_seed`.
#[derive(Debug, Clone, Deserialize)]
pub struct SuiteFile {
    pub name: Option<String>,
    pub seed: u64,
    #[serde(default = "builtin_name")]
    pub tasks: String,
    #[serde(default)]
    pub levels: Vec<u32>,
    pub heldout_seed: Option<u64>,
}

fn builtin_name() -> String {
    "builtin".into()
}

impl SuiteFile {
    pub fn load(path: &Path) -> Result<EvalSuite, HarnessError> {
        let text = std::fs::read_to_string(path)?;
        let f: SuiteFile = toml::from_str(&text).map_err(|e| HarnessError::SuiteFile(e.to_string()))?;
        let base = if f.tasks == "builtin" {
            TaskSet::builtin()
        } else {
            let dir = PathBuf::from(&f.tasks);
            let dir = if dir.is_relative() { path.parent().unwrap_or(Path::new(".")).join(dir) } else { dir };
            TaskSet::load_dir(&dir)?
        };
        let tasks = if f.levels.is_empty() {
            base
        } else {
            let ids: Vec<&str> =
                base.scripts().iter().filter(|s| f.levels.contains(&s.level)).map(|s| s.id.as_str()).collect();
            base.subset(&ids)?
        };
        let name = f.name.clone().unwrap_or_else(|| path.display().to_string());
        let suite = EvalSuite::new(&name, &tasks, f.seed);
        match f.heldout_seed {
            Some(h) => make_heldout(&suite, h),
            None => Ok(suite),
        }
    }
}

fn map_object_words(text: &str, map: &BTreeMap<&str, &str>) -> String {
    let mut out = String::with_capacity(text.len());
    let mut word = String::new();
    let flush = |word: &mut String, out: &mut String| {
        out.push_str(map.get(word.as_str()).copied().unwrap_or(word));
        word.clear();
    };
    for c in text.chars() {
        if c.is_ascii_lowercase() {
            word.push(c);
        } else {
            flush(&mut word, &mut out);
            out.push(c);
        }
    }
    flush(&mut word, &mut out);
    out
}

fn map_steps(steps: &[Step], f: &dyn Fn(&str) -> String) -> Vec<Step> {
    steps
        .iter()
        .map(|st| match st {
            Step::Say(t) => Step::Say(f(t)),
            Step::ExpectOutput { alts, window } => {
                Step::ExpectOutput { alts: alts.iter().map(|a| f(a)).collect(), window: *window }
            }
            Step::ExpectWorld { pred, window } => Step::ExpectWorld { pred: f(pred), window: *window },
            Step::ExpectSkill { label, window } => Step::ExpectSkill { label: f(label), window: *window },
            Step::Repeat { body, until, max } => Step::Repeat { body: map_steps(body, f), until: f(until), max: *max },
            Step::NameSkill(l) => Step::NameSkill(f(l)),
            Step::GiveReward(v) => Step::GiveReward(*v),
        })
        .collect()
}

/// Rename objects throughout a script: utterances, predicates, slots and worlds.
pub fn rename_objects(script: &TaskScript, perm: &[(ObjectKind, ObjectKind)]) -> TaskScript {
    if perm.iter().all(|(a, b)| a == b) {
        return script.clone();
    }
    let words: BTreeMap<&str, &str> = perm.iter().map(|(a, b)| (a.word(), b.word())).collect();
    let glyphs: BTreeMap<char, char> = perm.iter().map(|(a, b)| (a.glyph(), b.glyph())).collect();
    let f = |t: &str| map_object_words(t, &words);
    let world = match &script.world {
        WorldSpec::Literal(lit) => {
            let mut lines = lit.lines();
            let head = lines.next().unwrap_or_default().to_string();
            let rows = lines.map(|l| l.chars().map(|c| *glyphs.get(&c).unwrap_or(&c)).collect::<String>());
            WorldSpec::Literal(std::iter::once(head).chain(rows).collect::<Vec<_>>().join("\n"))
        }
        WorldSpec::Gen(g) => WorldSpec::Gen(f(g)),
        WorldSpec::Persistent => WorldSpec::Persistent,
    };
    TaskScript {
        world,
        steps: map_steps(&script.steps, &f),
        howto: script
            .howto
            .iter()
            .map(|h| HowtoEntry {
                request: f(&h.request),
                answer: match &h.answer {
                    HowtoAnswer::Text(t) => HowtoAnswer::Text(f(t)),
                    HowtoAnswer::Path(o) => HowtoAnswer::Path(f(o)),
                },
            })
            .collect(),
        slots: script.slots.iter().map(|(k, vs)| (k.clone(), vs.iter().map(|v| f(v)).collect())).collect(),
        ..script.clone()
    }
}

/// Apply `t` to `base`. Certification is the caller's business.
pub fn apply_transform(base: &EvalSuite, t: &Transform) -> Result<EvalSuite, ParseError> {
    let scripts: Vec<TaskScript> = base.scripts.iter().map(|s| rename_objects(s, &t.objects)).collect();
    let tasks = TaskSet::new(scripts)?;
    let lexicon = match t.lexicon_seed {
        Some(seed) => {
            let vocab = tasks.vocabulary();
            Lexicon::scrambled(vocab.iter().map(String::as_str), seed)
        }
        None => base.lexicon.clone(),
    };
    Ok(EvalSuite {
        name: base.name.clone(),
        scripts: tasks.scripts().to_vec(),
        lexicon,
        curriculum: base.curriculum.clone(),
        seed: t.topography_seed.unwrap_or(base.seed),
        transform: t.clone(),
    })
}

/// Seeds per script used to re-certify a held-out suite.
pub const HELDOUT_CERT_SEEDS: u64 = 10;

/// A lexicon-permuted, reseeded, object-renamed copy of `base`, re-certified.
pub fn make_heldout(base: &EvalSuite, seed: u64) -> Result<EvalSuite, HarnessError> {
    const TRIES: u32 = 8;
    let mut last = String::new();
    for attempt in 0..TRIES {
        let t = Transform::sample(seed.wrapping_add(attempt as u64 * 0x9e37_79b9));
        let suite = match apply_transform(base, &t) {
            Ok(s) => s,
            Err(e) => {
                last = e.to_string();
                continue;
            }
        };
        let tasks = suite.tasks()?;
        let seeds: Vec<u64> = (0..HELDOUT_CERT_SEEDS).map(|i| suite.seed.wrapping_add(i)).collect();
        let report = certify_all(&tasks, &suite.lexicon, &seeds);
        if let Some(f) = report.failures().next() {
            last = f.to_string();
            continue;
        }
        log::info!("held-out suite from seed {seed} certified on attempt {attempt}");
        return Ok(EvalSuite { name: format!("{}-heldout", base.name), ..suite });
    }
    Err(HarnessError::Uncertifiable { suite: base.name.clone(), tries: TRIES, last })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub script: String,
    pub seed: u64,
    pub accepted: bool,
    /// Ticks the oracle needed, including the final reward delivery.
    pub ticks: u64,
    pub deadline: u64,
    pub problem: Option<String>,
}

impl Certificate {
    pub fn ok(&self) -> bool {
        self.problem.is_none()
    }
}

impl std::fmt::Display for Certificate {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} seed {}: {}", self.script, self.seed, self.problem.as_deref().unwrap_or("ok"))
    }
}

/// Run the oracle on one (script, seed) and check it Accepts in good time.
pub fn certify(tasks: &TaskSet, lexicon: &Lexicon, id: &str, seed: u64) -> Certificate {
    let deadline = tasks.get(id).map_or(0, |s| s.deadline_ticks);
    let mut cert = Certificate { script: id.into(), seed, accepted: false, ticks: 0, deadline, problem: None };
    let cfg = SessionConfig {
        lexicon: lexicon.clone(),
        ..SessionConfig::playlist(seed, deadline * 2 + 200, vec![(id.into(), seed)])
    };
    let door = SideDoor::default();
    let learner = crate::learners::OracleLearner::new(door.clone());
    let mut s = match Session::with_tasks(cfg, tasks.clone(), Box::new(learner)) {
        Ok(s) => s,
        Err(e) => {
            cert.problem = Some(e.to_string());
            return cert;
        }
    };
    s.attach_side_door(door);
    let r = s.run();
    cert.ticks = r.ticks;
    cert.accepted = s.records.first().and_then(|e| e.verdict) == Some(Verdict::Accept);
    cert.problem = if let Some(a) = r.aborted {
        Some(format!("not solvable: {a}"))
    } else if !cert.accepted {
        Some(match s.records.first().and_then(|e| e.verdict) {
            Some(v) => format!("oracle verdict {v:?}"),
            None => "oracle did not finish".into(),
        })
    } else if (r.ticks as f64) * DEADLINE_SAFETY > deadline as f64 {
        Some(format!("deadline {deadline} is tight: oracle took {} ticks", r.ticks))
    } else {
        None
    };
    cert
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub certificates: Vec<Certificate>,
}

impl CertificationReport {
    pub fn failures(&self) -> impl Iterator<Item = &Certificate> {
        self.certificates.iter().filter(|c| !c.ok())
    }

    pub fn all_ok(&self) -> bool {
        self.failures().next().is_none()
    }
}

/// Certify every script in `tasks` for every seed, in parallel.
pub fn certify_all(tasks: &TaskSet, lexicon: &Lexicon, seeds: &[u64]) -> CertificationReport {
    let jobs: Vec<(String, u64)> =
        tasks.scripts().iter().flat_map(|s| seeds.iter().map(move |seed| (s.id.clone(), *seed))).collect();
    let workers = std::thread::available_parallelism().map_or(4, |n| n.get()).min(jobs.len().max(1));
    let chunk = jobs.len().div_ceil(workers.max(1)).max(1);
    let certificates = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .chunks(chunk)
            .map(|part| scope.spawn(move || part.iter().map(|(id, seed)| certify(tasks, lexicon, id, *seed)).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("certifier panicked")).collect()
    });
    CertificationReport { certificates }
}

/// Lint plus oracle certification of a task directory.
pub fn validate(dir: &Path, seeds: &[u64]) -> Result<CertificationReport, ParseError> {
    let tasks = TaskSet::load_dir(dir)?;
    Ok(certify_all(&tasks, &Lexicon::identity(), seeds))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    Ticks(u64),
    Wallclock(Duration),
}

impl FromStr for Budget {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || HarnessError::Budget(s.into());
        if let Some(d) = s.strip_prefix("wallclock:") {
            let (num, unit) = d.split_at(d.find(|c: char| !c.is_ascii_digit()).unwrap_or(d.len()));
            let n: u64 = num.parse().map_err(|_| bad())?;
            let dur = match unit {
                "ms" => Duration::from_millis(n),
                "s" | "" => Duration::from_secs(n),
                "m" => Duration::from_secs(60 * n),
                _ => return Err(bad()),
            };
            return Ok(Budget::Wallclock(dur));
        }
        match s.parse() {
            Ok(n) if n > 0 => Ok(Budget::Ticks(n)),
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub suite: String,
    pub learner: String,
    /// "ticks" or "wallclock".
    pub mode: String,
    pub seed: u64,
    pub ticks: u64,
    pub tasks_succeeded: u64,
    pub tasks_attempted: u64,
    pub per_task: BTreeMap<String, TaskStats>,
    pub average_reward: f64,
    pub cumulative_reward: i64,
    pub compute: ComputeStats,
    pub transcript_hash: String,
}

/// One continuous session over the suite's curriculum; every attempt counts.
///
/// Returns the result and the finished session, so a learner can be carried on.
pub fn evaluate(contestant: Contestant, suite: &EvalSuite, budget: Budget) -> Result<(EvalResult, Session), HarnessError> {
    let Contestant { learner, door } = contestant;
    let name = learner.name().to_string();
    let ticks = match budget {
        Budget::Ticks(n) => n,
        Budget::Wallclock(_) => u64::MAX,
    };
    let mut session = Session::with_tasks(suite.session_config(ticks), suite.tasks()?, learner)?;
    if let Some(d) = door {
        session.attach_side_door(d);
    }
    let report = match budget {
        Budget::Ticks(_) => session.run(),
        Budget::Wallclock(limit) => {
            let start = Instant::now();
            let mut aborted = None;
            while start.elapsed() < limit {
                match session.step() {
                    Ok(true) => {}
                    Ok(false) => break,
                    Err(e) => {
                        aborted = Some(e.to_string());
                        break;
                    }
                }
            }
            let mut r = session.report();
            r.aborted = aborted;
            r
        }
    };
    if let Some(a) = &report.aborted {
        return Err(HarnessError::Session(SessionError::Learner(crate::learners::LearnerError::Crashed(a.clone()))));
    }
    let mode = match budget {
        Budget::Ticks(_) => "ticks",
        Budget::Wallclock(_) => "wallclock",
    };
    let result = EvalResult {
        suite: suite.name.clone(),
        learner: name,
        mode: mode.into(),
        seed: suite.seed,
        ticks: report.ticks,
        tasks_succeeded: report.tasks_succeeded,
        tasks_attempted: report.tasks_attempted,
        per_task: report.per_task,
        average_reward: report.average_reward,
        cumulative_reward: report.cumulative_reward,
        compute: report.compute,
        transcript_hash: report.transcript_hash,
    };
    Ok((result, session))
}

/// Independent evaluations, one thread each; results in input order.
pub fn evaluate_many(runs: Vec<(Contestant, EvalSuite, Budget)>) -> Vec<Result<EvalResult, HarnessError>> {
    std::thread::scope(|scope| {
        let handles: Vec<_> =
            runs.into_iter().map(|(c, s, b)| scope.spawn(move || evaluate(c, &s, b).map(|(r, _)| r))).collect();
        handles.into_iter().map(|h| h.join().expect("evaluation panicked")).collect()
    })
}

/// Learner carried between evaluations; keeps its state.
pub fn carry(session: Session) -> Box<dyn Learner> {
    session.into_learner()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learners::{by_name, NullLearner};

    #[test]
    fn budgets_parse() {
        assert_eq!("500".parse::<Budget>().unwrap(), Budget::Ticks(500));
        assert_eq!("wallclock:250ms".parse::<Budget>().unwrap(), Budget::Wallclock(Duration::from_millis(250)));
        assert_eq!("wallclock:2m".parse::<Budget>().unwrap(), Budget::Wallclock(Duration::from_secs(120)));
        assert!("0".parse::<Budget>().is_err());
        assert!("wallclock:3h".parse::<Budget>().is_err());
    }

    #[test]
    fn identity_transform_is_a_no_op() {
        let base = EvalSuite::new("dev", &TaskSet::builtin(), 3);
        assert_eq!(apply_transform(&base, &Transform::identity()).unwrap(), base);
    }

    #[test]
    fn renaming_touches_words_and_glyphs() {
        let tasks = TaskSet::builtin();
        let s = tasks.get("pick-object").unwrap();
        let perm = [(ObjectKind::Pear, ObjectKind::Mug), (ObjectKind::Mug, ObjectKind::Pear)];
        let r = rename_objects(s, &perm);
        let WorldSpec::Literal(lit) = &r.world else { panic!() };
        assert!(lit.contains('m') && !lit.lines().skip(1).any(|l| l.contains('p')), "{lit}");
        assert_eq!(map_object_words("pick up the pear, appear", &[("pear", "mug")].into_iter().collect()), "pick up the mug, appear");
    }

    #[test]
    fn null_learner_scores_zero() {
        let suite = EvalSuite::new("dev", &TaskSet::builtin(), 1);
        let (r, _) = evaluate(Contestant::plain(NullLearner), &suite, Budget::Ticks(3000)).unwrap();
        assert_eq!(r.tasks_succeeded, 0);
        assert!(r.tasks_attempted > 0);
    }

    #[test]
    fn wallclock_mode_is_reported() {
        let suite = EvalSuite::new("dev", &TaskSet::builtin(), 1);
        let (r, _) = evaluate(by_name("random", 1).unwrap(), &suite, Budget::Wallclock(Duration::from_millis(50))).unwrap();
        assert_eq!(r.mode, "wallclock");
        assert!(r.ticks > 0);
    }

    #[test]
    fn unreachable_object_fails_certification_by_name() {
        let text = "task boxed-in\nlevel 0\nworld grid 3 3\n.#.\n#^#\n.#a\ndeadline 400\nsay \"pick up the apple\"\nexpect world holds(apple, 1)\nreward +1\n";
        let tasks = TaskSet::new(crate::tasks::parse_scripts(text, "fixture").unwrap()).unwrap();
        let c = certify(&tasks, &Lexicon::identity(), "boxed-in", 0);
        assert!(!c.ok());
        assert!(c.to_string().starts_with("boxed-in seed 0"), "{c}");
    }
}
