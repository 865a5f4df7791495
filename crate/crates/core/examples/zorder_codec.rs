//! Encode a few points, decode them back, and map a rectangle to its key range.

use zskip::{decode, encode, range_prefix, rect_to_zrange, Coordinates, Geometry};

fn main() {
    let g = Geometry::new(2, 3).unwrap();

    for point in [[0u64, 1], [2, 0], [2, 1], [7, 6]] {
        let key = encode(&point.into(), g).unwrap();
        let back: Coordinates = decode(&key).unwrap();
        println!("{back} -> {} ({})", key.bits(), key.bits().to_u128().unwrap());
    }

    let (lo, hi) = rect_to_zrange(&[2, 0].into(), &[3, 1].into(), g).unwrap();
    let prefix = range_prefix(&lo, &hi).unwrap();
    println!("rect (2,0)-(3,1): keys {}..={}, shared prefix {prefix}", lo.bits(), hi.bits());
}
