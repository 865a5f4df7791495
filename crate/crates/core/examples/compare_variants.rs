//! Message counts of the standard and inverted overlays on a random workload.

use zskip::sim::{compare_variants, random_scenario, RandomScenario, RectShape};
use zskip::{Geometry, Variant};

fn main() {
    let mut spec = RandomScenario::new(256, Geometry::new(2, 6).unwrap());
    spec.variants = vec![Variant::MultiStandard, Variant::Inverted];
    spec.rect_queries = 200;
    spec.rect_shape = RectShape::Cell;
    let scenario = random_scenario(1, &spec);

    let table = compare_variants(&scenario).unwrap();
    for (variant, stats) in &table.aggregate.per_variant {
        println!(
            "{:15} mean {:6.2}  median {:5.1}  max {}",
            variant.name(),
            stats.mean.to_f64(),
            stats.median.to_f64(),
            stats.max
        );
    }
    println!("inverted <= standard on {}", table.aggregate.inverted_win);
}
