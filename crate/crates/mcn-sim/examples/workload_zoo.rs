//! Generate one instance of each workload shape and inspect its structure:
//! task and edge counts, entry/exit widths, and computation-to-
//! communication granularity.
//!
//! ```text
//! cargo run -p mcn-sim --example workload_zoo
//! ```

use mcn_sim::{generate, granularity, Platform, WorkloadSpec};

fn main() {
    let p = Platform::uniform((2, 2), 4, 480.0, 2.0, 0.5, 0.1, 10.0);
    let specs = [
        ("data_parallel", WorkloadSpec::data_parallel(16, 7)),
        ("pipeline", WorkloadSpec::pipeline(3, 7)),
        ("fine_grained", WorkloadSpec::fine_grained(16, 7)),
        ("layered_random", WorkloadSpec::layered_random(16, 4, 7)),
    ];
    println!(
        "{:<16} {:>5} {:>6} {:>7} {:>6} {:>12}",
        "kind", "tasks", "edges", "entries", "exits", "granularity"
    );
    for (name, spec) in specs {
        let g = generate(&spec, &p).unwrap();
        let gran = granularity(&g, &p);
        println!(
            "{name:<16} {:>5} {:>6} {:>7} {:>6} {:>12.3}",
            g.num_tasks(),
            g.edges().len(),
            g.entry_tasks().len(),
            g.exit_tasks().len(),
            gran
        );
    }
    println!("\ncoarse shapes sit far above 1, communication-bound shapes far below");
}
