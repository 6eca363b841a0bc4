//! A lookup-table learner does well on what it has seen and collapses on a
//! held-out suite: new words, new topography, renamed objects.

use kindergarten::harness::{carry, evaluate, make_heldout, two_proportion_test, Budget, EvalSuite};
use kindergarten::learners::{by_name, Contestant, MemoLearner};
use kindergarten::tasks::TaskSet;

fn main() {
    let tasks = TaskSet::builtin();
    let l0 = tasks.subset(&["repeat-char", "repeat-word", "repeat-string", "join-words"]).unwrap();
    let dev = EvalSuite::new("dev", &l0, 1);
    let held = make_heldout(&dev, 99).expect("a certifiable transformation");
    println!("held-out lexicon: {} words, e.g. say -> {:?}", held.lexicon.len(), held.lexicon.get("say"));

    let budget = Budget::Ticks(30_000);
    let (trained, session) = evaluate(Contestant::plain(MemoLearner::new(5)), &dev, budget).unwrap();
    let memo = Contestant { learner: carry(session), door: None };
    let (on_held, _) = evaluate(memo, &held, budget).unwrap();
    let (random, _) = evaluate(by_name("random", 5).unwrap(), &held, budget).unwrap();

    for r in [&trained, &on_held, &random] {
        println!("{:<6} on {:<14} {:>4} / {:<4}", r.learner, r.suite, r.tasks_succeeded, r.tasks_attempted);
    }
    let p = two_proportion_test(on_held.tasks_succeeded, on_held.tasks_attempted, random.tasks_succeeded, random.tasks_attempted);
    println!("memo vs random on held-out: p = {p:.3}");
}
