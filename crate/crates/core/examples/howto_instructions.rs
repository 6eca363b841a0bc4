//! Verbal directions to an object, as the Teacher gives them on request.

use kindergarten::tasks::generate_instructions;
use kindergarten::world::{parse_command, ObjectKind, World};

fn main() {
    let mut world = World::from_literal("grid 5 3\n..#..\n.^#.b\n.....").unwrap();
    println!("{}\n", world.to_literal());
    let directions = generate_instructions(&world, ObjectKind::Banana).unwrap();
    println!("T: {directions}.\n");
    for step in directions.split(" and ") {
        let order = format!("I {}", step.trim());
        let reply = world.apply(&parse_command(&order)).text().unwrap_or_default();
        println!("@E: {order}.  E: {reply}.");
    }
    println!("\nholding {:?}", world.pose().inventory);
}
