//! Write a task script, instantiate it and judge a hand-written event log.

use kindergarten::channel::AgentId;
use kindergarten::tasks::{judge, parse_scripts, Event, EventKind, Lexicon, TaskSet};
use kindergarten::world::{EnvCommand, EnvResponse, World};

const SCRIPT: &str = r#"
task step-back
level 0
world grid 1 3
.
^
.
deadline 300
say "turn around and move"
expect world executed(turn left, turn left, move) | executed(turn right, turn right, move)
reward +1
"#;

fn main() {
    let tasks = TaskSet::new(parse_scripts(SCRIPT, "inline").unwrap()).unwrap();
    let inst = tasks.instantiate("step-back", 0, &Lexicon::identity()).unwrap();
    let mut world: World = inst.world.clone().unwrap();
    let mut log = vec![Event { tick: 0, kind: EventKind::Begin { pose: world.pose() } }];
    log.push(Event { tick: 1, kind: EventKind::Said { key: "0".into() } });
    for (i, cmd) in [EnvCommand::TurnRight, EnvCommand::TurnRight, EnvCommand::Move].into_iter().enumerate() {
        let tick = 10 + 20 * i as u64;
        let order = cmd.utterance();
        log.push(Event { tick, kind: EventKind::Routed { to: AgentId::Environment, body: order.clone() } });
        let response: EnvResponse = world.apply(&cmd);
        log.push(Event { tick, kind: EventKind::Env { cmd, response, pose: world.pose() } });
        let p = judge(&inst, &log, tick + 1);
        println!("@E: {order:<12} -> {:?}", p.verdict);
    }
}
