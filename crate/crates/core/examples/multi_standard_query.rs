//! Rectangle query on an overlay keyed by z-order keys.

use zskip::{build, run_query, BuildConfig, Geometry, NodeId, NodeSpec, RangeQuery, Variant};

fn main() {
    let g = Geometry::new(2, 3).unwrap();
    let coords = [[0, 1], [2, 0], [2, 1], [0, 7], [6, 1], [5, 5], [7, 6]];
    let nodes: Vec<NodeSpec> = coords.iter().enumerate().map(|(i, &c)| NodeSpec::at(i as u64 + 1, c)).collect();
    let overlay = build(&nodes, &BuildConfig::new(Variant::MultiStandard, g, 2006)).unwrap();

    for level in overlay.levels() {
        for (prefix, list) in level.lists() {
            let ids: Vec<u64> = list.iter().map(|id| id.0).collect();
            println!("L{} [{prefix}] {ids:?}", level.index());
        }
    }

    // the key interval of (0,1)-(2,1) also covers (2,0)
    let trace = run_query(&overlay, &RangeQuery::rect([0, 1], [2, 1], NodeId(7))).unwrap();
    println!("key range hits: {:?}", trace.results);
    println!("inside rect:    {:?}", trace.exact());
    println!("messages: {}, stopped: {}", trace.messages(), trace.terminated_by.name());
}
