//! Lint and oracle-certify a directory of task scripts.
//!
//! `cargo run --example validate_tasks -- path/to/tasks`; defaults to the
//! shipped scripts.

use std::path::PathBuf;

use kindergarten::harness::validate;

fn main() {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tasks"));
    let seeds: Vec<u64> = (0..25).collect();
    match validate(&dir, &seeds) {
        Err(e) => {
            eprintln!("{e}");
            std::process::exit(2);
        }
        Ok(report) => {
            let mut worst = std::collections::BTreeMap::new();
            for c in &report.certificates {
                let w = worst.entry(c.script.clone()).or_insert((0, c.deadline));
                w.0 = w.0.max(c.ticks);
            }
            for (id, (ticks, deadline)) in worst {
                println!("{id:<24} oracle {ticks:>5} / deadline {deadline}");
            }
            for f in report.failures() {
                println!("FAIL {f}");
            }
        }
    }
}
