//! A curriculum from TOML: promotion after a full window of successes.

use kindergarten::curriculum::{gating_holds, Curriculum, CurriculumConfig, Episode, EpisodeRecord};
use kindergarten::tasks::{TaskSet, Verdict};
use rand::{Rng, SeedableRng};

const CONFIG: &str = r#"
window = 10
threshold = 0.8
p_timeoff = 0.1
timeoff_ticks = 200

[[level]]
scripts = ["repeat-char", "repeat-word"]

[[level]]
scripts = ["give-order"]

[[level]]
scripts = ["move-turn-move-gen", "turn-and-move-gen"]
"#;

fn main() {
    let tasks = TaskSet::builtin();
    let config = CurriculumConfig::from_toml(CONFIG).unwrap();
    let mut cur = Curriculum::new(tasks, config.clone(), 3).unwrap();
    // a learner that succeeds 90% of the time
    let mut luck = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let mut records = Vec::new();
    for n in 0..200 {
        let level = cur.state.level;
        match cur.next_episode().unwrap().unwrap() {
            Episode::TimeOff { .. } => records.push(EpisodeRecord { episode: n, script: None, level, verdict: None }),
            Episode::Task(inst) => {
                let v = if luck.gen_bool(0.9) { Verdict::Accept } else { Verdict::Reject };
                let level = cur.level_of(&inst.script_id).unwrap();
                cur.record_outcome(&inst.script_id, v).unwrap();
                records.push(EpisodeRecord { episode: n, script: Some(inst.script_id.clone()), level, verdict: Some(v) });
            }
        }
        if n % 25 == 0 {
            println!("episode {n:>3}: level {}", cur.state.level);
        }
    }
    println!("promotions at episodes {:?}", cur.state.promotions);
    println!("gating invariant: {:?}", gating_holds(&records, &config));
}
