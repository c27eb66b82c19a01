//! Explore the mesh: node coordinates, XY routes, and packet latency with
//! and without per-link queue delays.
//!
//! ```text
//! cargo run -p mcn-sim --example mesh_latency
//! ```

use mcn_sim::{Link, LinkDelays, NodeCoord, Platform};

fn main() {
    // The default platform: a 4x4 mesh of 16-core memory nodes.
    let p = Platform::default_mcn();
    println!(
        "{} nodes x {} cores = {} cores, hop latency {}",
        p.num_nodes(),
        p.cores_per_node(),
        p.num_cores(),
        p.hop_latency()
    );

    let corner = 0; // node (0,0)
    let far = p.num_cores() - 1; // node (3,3)
    println!("core {corner} sits on {:?}", p.node_of(corner).unwrap());
    println!("core {far} sits on {:?}", p.node_of(far).unwrap());

    let route = p.route(p.node_of(corner).unwrap(), p.node_of(far).unwrap());
    println!("XY route, column first then row:");
    for link in &route {
        println!("  ({},{}) -> ({},{})", link.from.row, link.from.col, link.to.row, link.to.col);
    }

    let quiet = LinkDelays::new();
    println!("uncongested latency corner->corner: {}", p.packet_latency(corner, far, &quiet));
    println!("same-node latency is always zero: {}", p.packet_latency(0, 15, &quiet));

    // Charge a queue delay to the first link of the route.
    let mut busy = LinkDelays::new();
    busy.insert(
        Link {
            from: NodeCoord { row: 0, col: 0 },
            to: NodeCoord { row: 0, col: 1 },
        },
        4.0,
    );
    println!(
        "with a 4-unit queue on the first link: {}",
        p.packet_latency(corner, far, &busy)
    );
}
