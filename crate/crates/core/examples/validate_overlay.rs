//! Check structural invariants, then break a link and see the violation.

use zskip::{build, validate, BuildConfig, Geometry, NodeSpec, Variant};

fn main() {
    let g = Geometry::new(2, 4).unwrap();
    let nodes: Vec<NodeSpec> = (0..40).map(|i| NodeSpec::at(i, [i % 16, (i * 7) % 16])).collect();
    let mut overlay = build(&nodes, &BuildConfig::new(Variant::MultiStandard, g, 3)).unwrap();
    println!("fresh build: {} violations", validate(&overlay).len());

    let level = overlay.level_mut(0).unwrap();
    let mut list = level.list(&Default::default()).unwrap().to_vec();
    list.swap(0, 1);
    level.set_list(Default::default(), list);
    for v in validate(&overlay) {
        println!("{v}");
    }
}
