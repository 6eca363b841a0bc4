//! Level-gated episode scheduling with time off.

use std::collections::{BTreeMap, VecDeque};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tasks::{Lexicon, TaskError, TaskInstance, TaskSet, Verdict};

#[derive(Debug, Error)]
pub enum CurriculumError {
    #[error("level {0} has no scripts")]
    EmptyLevel(usize),
    #[error("unknown script {0:?}")]
    UnknownScript(String),
    #[error("bad curriculum config: {0}")]
    Config(String),
    #[error(transparent)]
    Task(#[from] TaskError),
}

fn default_window() -> usize {
    20
}
fn default_threshold() -> f64 {
    0.9
}
fn default_p_timeoff() -> f64 {
    0.1
}
fn default_timeoff_ticks() -> u64 {
    500
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSpec {
    pub scripts: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurriculumConfig {
    #[serde(default = "default_window")]
    pub window: usize,
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default = "default_p_timeoff")]
    pub p_timeoff: f64,
    #[serde(default = "default_timeoff_ticks")]
    pub timeoff_ticks: u64,
    /// Keep the world across episodes for scripts that ask for it.
    #[serde(default)]
    pub persistent_world: bool,
    #[serde(rename = "level", default)]
    pub levels: Vec<LevelSpec>,
}

impl CurriculumConfig {
    /// One level per distinct script level, in order.
    pub fn from_tasks(tasks: &TaskSet) -> Self {
        CurriculumConfig {
            window: default_window(),
            threshold: default_threshold(),
            p_timeoff: default_p_timeoff(),
            timeoff_ticks: default_timeoff_ticks(),
            persistent_world: false,
            levels: tasks.levels().into_values().map(|scripts| LevelSpec { scripts }).collect(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, CurriculumError> {
        toml::from_str(text).map_err(|e| CurriculumError::Config(e.to_string()))
    }

    pub fn validate(&self, tasks: &TaskSet) -> Result<(), CurriculumError> {
        if self.window == 0 || !(0.0..=1.0).contains(&self.threshold) || !(0.0..=1.0).contains(&self.p_timeoff) {
            return Err(CurriculumError::Config("window must be positive; threshold and p_timeoff in [0, 1]".into()));
        }
        if self.levels.is_empty() {
            return Err(CurriculumError::Config("no levels".into()));
        }
        let mut seen = BTreeMap::new();
        for (i, l) in self.levels.iter().enumerate() {
            if l.scripts.is_empty() {
                return Err(CurriculumError::EmptyLevel(i));
            }
            for s in &l.scripts {
                if tasks.get(s).is_none() {
                    return Err(CurriculumError::UnknownScript(s.clone()));
                }
                if let Some(prev) = seen.insert(s.clone(), i) {
                    return Err(CurriculumError::Config(format!("{s} is in levels {prev} and {i}")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum Episode {
    Task(Box<TaskInstance>),
    TimeOff { ticks: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: u64,
    /// `None` for time off.
    pub script: Option<String>,
    pub level: usize,
    pub verdict: Option<Verdict>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CurriculumState {
    pub level: usize,
    pub history: BTreeMap<String, VecDeque<bool>>,
    pub episodes: u64,
    /// (episode count at promotion, level reached)
    pub promotions: Vec<(u64, usize)>,
}

#[derive(Debug, Clone)]
pub struct Curriculum {
    pub config: CurriculumConfig,
    tasks: TaskSet,
    lexicon: Lexicon,
    rng: ChaCha8Rng,
    pub state: CurriculumState,
    schedule: Option<VecDeque<(String, u64)>>,
    current_level: BTreeMap<String, usize>,
}

impl Curriculum {
    pub fn new(tasks: TaskSet, config: CurriculumConfig, seed: u64) -> Result<Self, CurriculumError> {
        config.validate(&tasks)?;
        let current_level = config
            .levels
            .iter()
            .enumerate()
            .flat_map(|(i, l)| l.scripts.iter().map(move |s| (s.clone(), i)))
            .collect();
        Ok(Curriculum {
            config,
            tasks,
            lexicon: Lexicon::identity(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            state: CurriculumState::default(),
            schedule: None,
            current_level,
        })
    }

    /// A fixed playlist of (script, seed); no time off, no gating.
    pub fn fixed(tasks: TaskSet, playlist: Vec<(String, u64)>) -> Result<Self, CurriculumError> {
        for (s, _) in &playlist {
            if tasks.get(s).is_none() {
                return Err(CurriculumError::UnknownScript(s.clone()));
            }
        }
        let config = CurriculumConfig { p_timeoff: 0.0, ..CurriculumConfig::from_tasks(&tasks) };
        let mut c = Curriculum::new(tasks, config, 0)?;
        c.schedule = Some(playlist.into());
        Ok(c)
    }

    pub fn with_lexicon(mut self, lexicon: Lexicon) -> Self {
        self.lexicon = lexicon;
        self
    }

    pub fn tasks(&self) -> &TaskSet {
        &self.tasks
    }

    pub fn level_of(&self, script: &str) -> Option<usize> {
        self.current_level.get(script).copied()
    }

    /// `None` once a fixed playlist is exhausted.
    pub fn next_episode(&mut self) -> Result<Option<Episode>, CurriculumError> {
        self.state.episodes += 1;
        if let Some(queue) = &mut self.schedule {
            let Some((id, seed)) = queue.pop_front() else { return Ok(None) };
            let inst = self.tasks.instantiate(&id, seed, &self.lexicon)?;
            return Ok(Some(Episode::Task(Box::new(inst))));
        }
        if self.rng.gen_bool(self.config.p_timeoff) {
            return Ok(Some(Episode::TimeOff { ticks: self.config.timeoff_ticks }));
        }
        let level = &self.config.levels[self.state.level];
        let id = level.scripts.choose(&mut self.rng).ok_or(CurriculumError::EmptyLevel(self.state.level))?.clone();
        let mut last = None;
        for _ in 0..8 {
            let seed = self.rng.gen::<u64>();
            match self.tasks.instantiate(&id, seed, &self.lexicon) {
                Ok(inst) => return Ok(Some(Episode::Task(Box::new(inst)))),
                Err(e @ TaskError::Unsolvable { .. }) => last = Some(e),
                Err(e) => return Err(e.into()),
            }
        }
        Err(last.expect("at least one attempt").into())
    }

    pub fn record_outcome(&mut self, script: &str, verdict: Verdict) -> Result<(), CurriculumError> {
        if verdict == Verdict::Pending {
            return Ok(());
        }
        let lvl = self.level_of(script).ok_or_else(|| CurriculumError::UnknownScript(script.into()))?;
        let h = self.state.history.entry(script.to_string()).or_default();
        h.push_back(verdict == Verdict::Accept);
        while h.len() > self.config.window {
            h.pop_front();
        }
        if self.schedule.is_none() && lvl == self.state.level && self.promotable(lvl) && lvl + 1 < self.config.levels.len() {
            self.state.level += 1;
            self.state.promotions.push((self.state.episodes, self.state.level));
            log::info!("promoted to level {} after {} episodes", self.state.level, self.state.episodes);
        }
        Ok(())
    }

    /// Every script in `level` has a full window at or above the threshold.
    pub fn promotable(&self, level: usize) -> bool {
        let w = self.config.window;
        self.config.levels[level].scripts.iter().all(|s| {
            self.state.history.get(s).is_some_and(|h| {
                h.len() == w && h.iter().filter(|ok| **ok).count() as f64 >= self.config.threshold * w as f64
            })
        })
    }
}

/// The gating invariant over an episode log: a level is only ever drawn
/// after every script of the level below has a full window at or above
/// the threshold. Recomputed from scratch, independent of the scheduler.
pub fn gating_holds(records: &[EpisodeRecord], config: &CurriculumConfig) -> Result<(), String> {
    let mut history: BTreeMap<&str, VecDeque<bool>> = BTreeMap::new();
    let mut unlocked = 0usize;
    let ok_level = |history: &BTreeMap<&str, VecDeque<bool>>, l: usize| {
        config.levels[l].scripts.iter().all(|s| {
            history.get(s.as_str()).is_some_and(|h| {
                h.len() == config.window && h.iter().filter(|x| **x).count() as f64 >= config.threshold * config.window as f64
            })
        })
    };
    for r in records {
        let Some(script) = &r.script else { continue };
        if r.level > unlocked {
            return Err(format!("episode {} drew level {} while only {} was unlocked", r.episode, r.level, unlocked));
        }
        if let Some(v) = r.verdict {
            let h = history.entry(script.as_str()).or_default();
            h.push_back(v == Verdict::Accept);
            while h.len() > config.window {
                h.pop_front();
            }
        }
        while unlocked + 1 < config.levels.len() && ok_level(&history, unlocked) {
            unlocked += 1;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cur(p_timeoff: f64, seed: u64) -> Curriculum {
        let tasks = TaskSet::builtin();
        let config = CurriculumConfig { p_timeoff, ..CurriculumConfig::from_tasks(&tasks) };
        Curriculum::new(tasks, config, seed).unwrap()
    }

    #[test]
    fn uniform_within_level() {
        let mut c = cur(0.0, 3);
        let mut counts: BTreeMap<String, u64> = BTreeMap::new();
        let n = 10_000;
        for _ in 0..n {
            let Some(Episode::Task(i)) = c.next_episode().unwrap() else { panic!("time off with p=0") };
            *counts.entry(i.script_id.clone()).or_default() += 1;
        }
        let k = counts.len() as f64;
        assert_eq!(k as usize, c.config.levels[0].scripts.len());
        let expected = n as f64 / k;
        let chi2: f64 = counts.values().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
        // 99.9th percentile of chi-square with 3 degrees of freedom
        assert!(chi2 < 16.27, "chi2 = {chi2}, {counts:?}");
    }

    #[test]
    fn promotion_at_threshold_and_no_demotion() {
        let mut c = cur(0.0, 1);
        let l0 = c.config.levels[0].scripts.clone();
        for s in &l0 {
            for i in 0..20 {
                let v = if i < 2 { Verdict::Reject } else { Verdict::Accept };
                c.record_outcome(s, v).unwrap();
            }
        }
        assert_eq!(c.state.level, 1);
        for s in &l0 {
            c.record_outcome(s, Verdict::Reject).unwrap();
        }
        assert_eq!(c.state.level, 1);
        assert!(c.state.history.values().all(|h| h.len() <= 20));
        assert!(matches!(c.record_outcome("nope", Verdict::Accept), Err(CurriculumError::UnknownScript(_))));
    }

    #[test]
    fn below_threshold_stays() {
        let mut c = cur(0.0, 1);
        let l0 = c.config.levels[0].scripts.clone();
        for s in &l0 {
            for i in 0..20 {
                c.record_outcome(s, if i < 3 { Verdict::Reject } else { Verdict::Accept }).unwrap();
            }
        }
        assert_eq!(c.state.level, 0);
    }

    #[test]
    fn timeoff_fraction() {
        let mut c = cur(0.1, 9);
        let n = 10_000;
        let off = (0..n).filter(|_| matches!(c.next_episode().unwrap(), Some(Episode::TimeOff { .. }))).count();
        assert!((off as f64 / n as f64 - 0.1).abs() < 0.02, "{off}");
        let mut never = cur(0.0, 9);
        assert!((0..1000).all(|_| matches!(never.next_episode().unwrap(), Some(Episode::Task(_)))));
    }

    #[test]
    fn config_from_toml() {
        let c = CurriculumConfig::from_toml("window = 5\np_timeoff = 0.0\n[[level]]\nscripts = [\"repeat-char\"]\n[[level]]\nscripts = [\"give-order\"]\n").unwrap();
        assert_eq!((c.window, c.threshold, c.levels.len()), (5, 0.9, 2));
        c.validate(&TaskSet::builtin()).unwrap();
        let dup = CurriculumConfig::from_toml("[[level]]\nscripts = [\"repeat-char\"]\n[[level]]\nscripts = [\"repeat-char\"]\n").unwrap();
        assert!(dup.validate(&TaskSet::builtin()).is_err());
        let empty = CurriculumConfig::from_toml("[[level]]\nscripts = []\n").unwrap();
        assert!(matches!(empty.validate(&TaskSet::builtin()), Err(CurriculumError::EmptyLevel(0))));
    }

    #[test]
    fn gating_checker_catches_early_draws() {
        let config = CurriculumConfig { window: 2, threshold: 1.0, ..CurriculumConfig::from_tasks(&TaskSet::builtin()) };
        let rec = |e, s: &str, level| EpisodeRecord { episode: e, script: Some(s.into()), level, verdict: Some(Verdict::Accept) };
        assert!(gating_holds(&[rec(1, "give-order", 1)], &config).is_err());
        let mut ok = Vec::new();
        let mut e = 0;
        for s in &config.levels[0].scripts {
            for _ in 0..2 {
                e += 1;
                ok.push(rec(e, s, 0));
            }
        }
        ok.push(rec(e + 1, "give-order", 1));
        gating_holds(&ok, &config).unwrap();
    }
}
