//! Z-order keys and skip-graph overlays for k-dimensional range queries.
//!
//! Three overlay variants share one structure and differ in where the
//! randomness lives:
//!
//! * [`Variant::UniStandard`]: keys are scalar sensor readings, membership
//!   vectors are random.
//! * [`Variant::MultiStandard`]: keys are z-order keys of node coordinates,
//!   membership vectors are random.
//! * [`Variant::Inverted`]: keys are random, membership vectors are z-order
//!   keys, so each level groups nodes by quad-tree cell.
//!
//! [`sim`] builds overlays from a [`sim::Scenario`], runs query workloads,
//! counts messages and checks every answer against a linear scan.
//!
//! ```
//! use zskip::{build, run_query, BuildConfig, Geometry, NodeId, NodeSpec, RangeQuery, Variant};
//!
//! let geometry = Geometry::new(2, 3).unwrap();
//! let nodes = vec![
//!     NodeSpec::at(1, [0, 1]),
//!     NodeSpec::at(2, [2, 0]),
//!     NodeSpec::at(3, [2, 1]),
//!     NodeSpec::at(4, [7, 6]),
//! ];
//! let overlay = build(&nodes, &BuildConfig::new(Variant::Inverted, geometry, 42)).unwrap();
//! let trace = run_query(&overlay, &RangeQuery::rect([2, 0], [3, 1], NodeId(4))).unwrap();
//! assert_eq!(trace.exact().len(), 2);
//! ```

pub mod bits;
pub mod cli;
pub mod overlay;
pub mod query;
pub mod scenario;
pub mod sim;
pub mod zorder;

pub use bits::BitString;
pub use overlay::{build, validate, BuildConfig, BuildError, Direction, NodeId, NodeRecord, NodeSpec, Overlay, Overrides, Variant, Violation};
pub use query::{
    inverted_prefix_query, run_query, standard_range_query, QueryError, QueryRange, QueryTrace, RangeQuery, Termination,
};
pub use zorder::{contains, decode, encode, range_prefix, rect_to_zrange, Coordinates, Geometry, ZKey, ZOrderError};
