//! Breadth-first planning over (cell, heading) states.

use std::collections::{HashMap, VecDeque};

use super::{Cell, EnvCommand, Heading, ObjectKind, World};

type State = (Cell, Heading);

const MOVES: [EnvCommand; 3] = [EnvCommand::Move, EnvCommand::TurnLeft, EnvCommand::TurnRight];

fn successor(world: &World, (cell, heading): State, cmd: &EnvCommand) -> Option<State> {
    match cmd {
        EnvCommand::Move => world.grid.step(cell, heading).filter(|c| world.grid.walkable(*c)).map(|c| (c, heading)),
        EnvCommand::TurnLeft => Some((cell, heading.left())),
        EnvCommand::TurnRight => Some((cell, heading.right())),
        _ => None,
    }
}

/// All states reachable from the learner's pose, in BFS order, with the
/// path that first reached each.
fn explore(world: &World) -> Vec<(State, Vec<EnvCommand>)> {
    let start = (world.body.position, world.body.heading);
    let mut parent: HashMap<State, (State, usize)> = HashMap::new();
    let mut order = vec![start];
    let mut queue = VecDeque::from([start]);
    parent.insert(start, (start, usize::MAX));
    while let Some(s) = queue.pop_front() {
        for (i, cmd) in MOVES.iter().enumerate() {
            if let Some(n) = successor(world, s, cmd) {
                if let std::collections::hash_map::Entry::Vacant(e) = parent.entry(n) {
                    e.insert((s, i));
                    order.push(n);
                    queue.push_back(n);
                }
            }
        }
    }
    order
        .into_iter()
        .map(|s| {
            let mut path = Vec::new();
            let mut cur = s;
            while cur != start {
                let (prev, i) = parent[&cur];
                path.push(MOVES[i].clone());
                cur = prev;
            }
            path.reverse();
            (s, path)
        })
        .collect()
}

/// Shortest Move/Turn sequence to a pose satisfying `goal`.
pub fn shortest_path_to(world: &World, goal: impl Fn(&World) -> bool) -> Option<Vec<EnvCommand>> {
    let mut probe = world.clone();
    explore(world).into_iter().find_map(|((c, h), path)| {
        probe.body.position = c;
        probe.body.heading = h;
        goal(&probe).then_some(path)
    })
}

/// Whether `object` can be faced, and the minimal path to face it followed by Pick.
pub fn reachable(world: &World, object: ObjectKind) -> (bool, Option<Vec<EnvCommand>>) {
    match shortest_path_to(world, |w| w.faced_object() == Some(object)) {
        Some(mut path) => {
            path.push(EnvCommand::Pick(object));
            (true, Some(path))
        }
        None => (false, None),
    }
}

/// Does `commands` run from the current pose with every step confirmed?
pub fn runs_confirmed(world: &World, commands: &[EnvCommand]) -> bool {
    let mut w = world.clone();
    commands.iter().all(|c| w.apply(c).confirms())
}

/// Cheapest way to end with one of `alternatives` executed back to back and
/// confirmed: a Move/Turn prefix followed by the alternative.
pub fn plan_pattern(world: &World, alternatives: &[Vec<EnvCommand>]) -> Option<Vec<EnvCommand>> {
    let mut best: Option<(usize, Vec<EnvCommand>)> = None;
    let mut probe = world.clone();
    for ((c, h), prefix) in explore(world) {
        if best.as_ref().is_some_and(|(cost, _)| prefix.len() >= *cost) {
            break;
        }
        probe.body.position = c;
        probe.body.heading = h;
        for alt in alternatives {
            let cost = prefix.len() + alt.len();
            if best.as_ref().is_some_and(|(b, _)| cost >= *b) {
                continue;
            }
            if runs_confirmed(&probe, alt) {
                let mut plan = prefix.clone();
                plan.extend(alt.iter().cloned());
                best = Some((cost, plan));
            }
        }
    }
    best.map(|(_, plan)| plan)
}
