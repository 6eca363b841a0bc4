//! Every reference learner on the same suite and tick budget.

use kindergarten::harness::{evaluate_many, Budget, EvalSuite};
use kindergarten::learners::{by_name, NAMES};
use kindergarten::tasks::TaskSet;

fn main() {
    let suite = EvalSuite::new("dev", &TaskSet::builtin(), 42);
    let runs = NAMES.iter().map(|n| (by_name(n, 1).unwrap(), suite.clone(), Budget::Ticks(20_000))).collect();
    println!("{:<8} {:>9} {:>9} {:>10}", "learner", "succeeded", "attempted", "avg reward");
    for r in evaluate_many(runs) {
        let r = r.unwrap();
        println!("{:<8} {:>9} {:>9} {:>10.5}", r.learner, r.tasks_succeeded, r.tasks_attempted, r.average_reward);
    }
}
