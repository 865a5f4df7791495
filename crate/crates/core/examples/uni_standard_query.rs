//! Scalar range query over sensor readings.

use zskip::{build, run_query, BuildConfig, Geometry, NodeId, NodeSpec, RangeQuery, Variant};

fn main() {
    let readings = [2, 3, 4, 7, 10, 12, 17, 20];
    let nodes: Vec<NodeSpec> = readings
        .iter()
        .enumerate()
        .map(|(i, &r)| NodeSpec::reading(i as u64 + 1, r))
        .collect();

    let config = BuildConfig { reading_bits: 8, ..BuildConfig::new(Variant::UniStandard, Geometry::new(1, 1).unwrap(), 7) };
    let overlay = build(&nodes, &config).unwrap();
    println!("{} levels", overlay.levels().len());

    let trace = run_query(&overlay, &RangeQuery::scalar(2, 4, NodeId(4))).unwrap();
    println!("readings in [2,4]: {:?}", trace.results);
    println!("messages: {}", trace.messages());
    for hop in &trace.hops {
        println!("  {} -> {} at level {}", hop.from.0, hop.to.0, hop.level);
    }
}
