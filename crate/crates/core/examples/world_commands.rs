//! Drive the grid world directly with Environment commands.

use kindergarten::world::{parse_command, World};

fn main() {
    let mut world = World::from_literal("grid 3 4\n.a.\n...\n.^.\n...").unwrap();
    println!("{}\n", world.to_literal());
    for order in ["I look", "I move", "I look", "I pick the apple", "I turn left", "I move", "I jump"] {
        let cmd = parse_command(order);
        let response = world.apply(&cmd);
        let text = response.text().unwrap_or_else(|| "(no reply)".into());
        println!("@E: {order:<18} E: {text}");
    }
    let pose = world.pose();
    println!("\nat {:?} facing {:?}, holding {:?}", pose.position, pose.heading, pose.inventory);
    println!("snapshot hash {}", world.snapshot().hash());
}
