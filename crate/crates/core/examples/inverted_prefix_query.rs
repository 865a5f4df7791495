//! Prefix search on the inverted overlay, where levels follow quad-tree cells.

use zskip::query::prefix_query;
use zskip::{build, run_query, BitString, BuildConfig, Geometry, NodeId, NodeSpec, RangeQuery, Variant};

fn main() {
    let g = Geometry::new(2, 3).unwrap();
    let coords = [[0, 1], [2, 0], [2, 1], [0, 7], [6, 1], [5, 5], [7, 6]];
    let nodes: Vec<NodeSpec> = coords.iter().enumerate().map(|(i, &c)| NodeSpec::at(i as u64 + 1, c)).collect();
    let overlay = build(&nodes, &BuildConfig::new(Variant::Inverted, g, 11)).unwrap();
    println!("p = {}, {} levels", overlay.prefix_bits(), overlay.levels().len());

    let trace = run_query(&overlay, &RangeQuery::rect([2, 0], [3, 1], NodeId(7))).unwrap();
    println!(
        "cell {} -> {:?} in {} messages ({})",
        trace.prefix.as_ref().unwrap(),
        trace.results,
        trace.messages(),
        trace.terminated_by.name()
    );

    let quadrant: BitString = "00".parse().unwrap();
    let trace = prefix_query(&overlay, &quadrant, NodeId(1)).unwrap();
    println!("lower-left quadrant: {:?}", trace.results);
}
