//! How-to answers and instruction generation.

use thiserror::Error;

use super::instance::{Answer, TaskInstance};
use crate::world::{reachable, ObjectKind, World};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("cannot reach a {0} from the current position")]
pub struct Unreachable(pub ObjectKind);

/// Verbalize the shortest path to pick `goal`, joined by " and ".
pub fn generate_instructions(world: &World, goal: ObjectKind) -> Result<String, Unreachable> {
    let (_, path) = reachable(world, goal);
    let path = path.ok_or(Unreachable(goal))?;
    Ok(path.iter().map(|c| c.verbalize()).collect::<Vec<_>>().join(" and "))
}

/// Exact-match lookup in the instance's how-to list; `None` means silence.
pub fn answer_howto(request: &str, instance: &TaskInstance, world: &World) -> Option<String> {
    match instance.answer_for(request)? {
        Answer::Text(t) => Some(t.clone()),
        Answer::Path(goal) => generate_instructions(world, *goal).ok().map(|t| instance.lexicon.apply(&t)),
    }
}
