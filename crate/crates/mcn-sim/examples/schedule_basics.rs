//! Build a small task DAG by hand and walk through the scheduling math:
//! topological order, communication times, earliest start/finish times,
//! and the makespan of a manual placement.
//!
//! ```text
//! cargo run -p mcn-sim --example schedule_basics
//! ```

use mcn_sim::{comm_time, topological_order, Platform, ScheduleState, TaskGraph};

fn main() {
    // A diamond: task 0 fans out to 1 and 2, which join at 3.
    // Two cores; task 1 is much faster on core 1.
    let g = TaskGraph::new(
        4,
        vec![(0, 1, 200.0), (0, 2, 50.0), (1, 3, 100.0), (2, 3, 100.0)],
        vec![
            vec![4.0, 4.0],
            vec![9.0, 3.0],
            vec![5.0, 5.0],
            vec![6.0, 6.0],
        ],
    )
    .unwrap();
    let p = Platform::uniform((1, 2), 1, 25.0, 1.0, 0.5, 0.1, 10.0);

    println!("topological order: {:?}", topological_order(&g).unwrap());
    println!(
        "comm 0->1 same core: {}",
        comm_time(0, 1, 0, 0, &g, &p).unwrap()
    );
    println!(
        "comm 0->1 across cores: {} (startup 1 + 200 bytes / 25 per unit)",
        comm_time(0, 1, 0, 1, &g, &p).unwrap()
    );

    // Place the diamond: 0 and 2 on core 0, 1 on its fast core, join on 0.
    let mut st = ScheduleState::new(&g, &p);
    for (task, core) in [(0, 0), (1, 1), (2, 0), (3, 0)] {
        let t = st.place(task, core, &g, &p).unwrap();
        println!(
            "task {} on core {}: start {:>5.1}, finish {:>5.1}",
            t.task, t.core, t.ast, t.aft
        );
    }
    println!("makespan: {}", st.makespan(&g));
}
