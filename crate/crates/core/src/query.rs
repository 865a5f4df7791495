//! Range queries over a built overlay.
//!
//! Standard overlays answer key-range queries top-down: search from the
//! injection node's highest level for any in-range key, drop to the base list
//! and sweep both directions until a key falls out of range. Inverted overlays
//! answer prefix queries bottom-up: scan the current list for a node whose
//! next-level prefix matches the query, ascend inside it, and repeat.
//!
//! Every traversal of a level link between two nodes is one message. Level
//! changes inside a node are free.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::overlay::{Direction, NodeId, Overlay, Variant};
use crate::zorder::{self, Coordinates, ZOrderError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QueryRange {
    /// Inclusive bounds on a sensor reading.
    Scalar { lo: u64, hi: u64 },
    /// Inclusive rectangle corners.
    Rect { lo: Coordinates, hi: Coordinates },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RangeQuery {
    #[serde(flatten)]
    pub range: QueryRange,
    pub inject_at: NodeId,
}

impl RangeQuery {
    pub fn scalar(lo: u64, hi: u64, inject_at: NodeId) -> Self {
        Self {
            range: QueryRange::Scalar { lo, hi },
            inject_at,
        }
    }

    pub fn rect(lo: impl Into<Coordinates>, hi: impl Into<Coordinates>, inject_at: NodeId) -> Self {
        Self {
            range: QueryRange::Rect {
                lo: lo.into(),
                hi: hi.into(),
            },
            inject_at,
        }
    }

    /// Variants able to answer this query.
    pub fn applies_to(&self, variant: Variant) -> bool {
        matches!(
            (&self.range, variant),
            (QueryRange::Scalar { .. }, Variant::UniStandard)
                | (QueryRange::Rect { .. }, Variant::MultiStandard | Variant::Inverted)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Hop {
    pub from: NodeId,
    pub to: NodeId,
    pub level: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelMove {
    pub node: NodeId,
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Base-list sweep left the key range in both directions.
    RangeExhausted,
    /// A level prefix covered the whole query prefix; that list was swept.
    FullPrefixMatch,
    /// No higher level exists above the current list; it was swept and filtered.
    TopLevelReached,
    /// A whole list was scanned without a node to ascend into.
    NoAscentFound,
}

impl Termination {
    pub fn name(self) -> &'static str {
        match self {
            Termination::RangeExhausted => "range_exhausted",
            Termination::FullPrefixMatch => "full_prefix_match",
            Termination::TopLevelReached => "top_level_reached",
            Termination::NoAscentFound => "no_ascent_found",
        }
    }
}

/// Everything one query did: link traversals, in-node level changes and results.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryTrace {
    pub hops: Vec<Hop>,
    pub level_moves: Vec<LevelMove>,
    /// Nodes matched by key interval (standard) or membership prefix (inverted).
    pub results: BTreeSet<NodeId>,
    /// `results` restricted to nodes whose coordinates lie in the rectangle.
    /// Only set for rectangle queries.
    pub exact_results: Option<BTreeSet<NodeId>>,
    pub terminated_by: Termination,
    /// Key interval searched by a standard query.
    pub key_range: Option<(BitString, BitString)>,
    /// Prefix searched by an inverted query.
    pub prefix: Option<BitString>,
}

impl QueryTrace {
    fn new(terminated_by: Termination) -> Self {
        Self {
            hops: Vec::new(),
            level_moves: Vec::new(),
            results: BTreeSet::new(),
            exact_results: None,
            terminated_by,
            key_range: None,
            prefix: None,
        }
    }

    pub fn messages(&self) -> usize {
        self.hops.len()
    }

    pub fn per_level_hops(&self) -> BTreeMap<usize, usize> {
        let mut out = BTreeMap::new();
        for h in &self.hops {
            *out.entry(h.level).or_default() += 1;
        }
        out
    }

    /// The exact result set when available, otherwise the raw one.
    pub fn exact(&self) -> &BTreeSet<NodeId> {
        self.exact_results.as_ref().unwrap_or(&self.results)
    }

    fn hop(&mut self, from: NodeId, to: NodeId, level: usize) {
        self.hops.push(Hop { from, to, level });
    }

    fn shift(&mut self, node: NodeId, from: usize, to: usize) {
        if from != to {
            self.level_moves.push(LevelMove { node, from, to });
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QueryError {
    #[error("overlay is empty")]
    EmptyOverlay,
    #[error("injection node {0} is not in the overlay")]
    UnknownInject(NodeId),
    #[error("{variant} overlay cannot answer a {kind} query")]
    KindMismatch { variant: Variant, kind: &'static str },
    #[error("query lower bound exceeds upper bound")]
    InvertedBounds,
    #[error(transparent)]
    ZOrder(#[from] ZOrderError),
}

fn kind_name(range: &QueryRange) -> &'static str {
    match range {
        QueryRange::Scalar { .. } => "scalar",
        QueryRange::Rect { .. } => "rect",
    }
}

fn check_inject(ov: &Overlay, inject: NodeId) -> Result<(), QueryError> {
    if ov.is_empty() {
        return Err(QueryError::EmptyOverlay);
    }
    if ov.node(inject).is_none() {
        return Err(QueryError::UnknownInject(inject));
    }
    Ok(())
}

/// Top-down range query on a `UniStandard` (scalar) or `MultiStandard` (rect) overlay.
pub fn standard_range_query(ov: &Overlay, q: &RangeQuery) -> Result<QueryTrace, QueryError> {
    let mismatch = || QueryError::KindMismatch {
        variant: ov.variant(),
        kind: kind_name(&q.range),
    };
    match (&q.range, ov.variant()) {
        (QueryRange::Scalar { lo, hi }, Variant::UniStandard) => {
            if lo > hi {
                return Err(QueryError::InvertedBounds);
            }
            key_range_query(ov, &BitString::from_u64(*lo, 64), &BitString::from_u64(*hi, 64), q.inject_at)
        }
        (QueryRange::Rect { lo, hi }, Variant::MultiStandard) => {
            let (zlo, zhi) = zorder::rect_to_zrange(lo, hi, ov.geometry())?;
            let mut trace = key_range_query(ov, zlo.bits(), zhi.bits(), q.inject_at)?;
            trace.exact_results = Some(filter_rect(ov, &trace.results, lo, hi)?);
            Ok(trace)
        }
        _ => Err(mismatch()),
    }
}

fn filter_rect(
    ov: &Overlay,
    ids: &BTreeSet<NodeId>,
    lo: &Coordinates,
    hi: &Coordinates,
) -> Result<BTreeSet<NodeId>, QueryError> {
    let mut out = BTreeSet::new();
    for &id in ids {
        if let Some(c) = ov.node(id).and_then(|r| r.coords.as_ref()) {
            if zorder::contains(lo, hi, c)? {
                out.insert(id);
            }
        }
    }
    Ok(out)
}

/// Top-down search for any key in `[lo, hi]`, then a base-list sweep.
/// Bounds compare numerically against node keys.
pub fn key_range_query(ov: &Overlay, lo: &BitString, hi: &BitString, inject: NodeId) -> Result<QueryTrace, QueryError> {
    check_inject(ov, inject)?;
    if lo.numeric_cmp(hi) == Ordering::Greater {
        return Err(QueryError::InvertedBounds);
    }
    let key = |id: NodeId| &ov.node(id).expect("linked node in census").key;
    let below = |id: NodeId| key(id).numeric_cmp(lo) == Ordering::Less;
    let above = |id: NodeId| key(id).numeric_cmp(hi) == Ordering::Greater;
    let in_range = |id: NodeId| !below(id) && !above(id);

    let mut trace = QueryTrace::new(Termination::RangeExhausted);
    trace.key_range = Some((lo.clone(), hi.clone()));

    let mut cur = inject;
    let mut level = ov.height(cur).unwrap_or(0);
    let found = loop {
        if in_range(cur) {
            break true;
        }
        let (dir, overshoots): (Direction, &dyn Fn(NodeId) -> bool) =
            if above(cur) { (Direction::Left, &below) } else { (Direction::Right, &above) };
        match ov.neighbor(cur, level, dir).expect("node linked at its search level") {
            Some(next) if !overshoots(next) => {
                trace.hop(cur, next, level);
                cur = next;
            }
            _ if level == 0 => break false,
            _ => {
                trace.shift(cur, level, level - 1);
                level -= 1;
            }
        }
    };
    if !found {
        return Ok(trace);
    }

    trace.shift(cur, level, 0);
    trace.results.insert(cur);
    for dir in [Direction::Left, Direction::Right] {
        let mut at = cur;
        while let Some(next) = ov.neighbor(at, 0, dir).expect("base list holds every node") {
            trace.hop(at, next, 0);
            if !in_range(next) {
                break;
            }
            trace.results.insert(next);
            at = next;
        }
    }
    Ok(trace)
}

/// Bottom-up prefix query on an `Inverted` overlay for a rectangle.
///
/// The query prefix is the common prefix of the rectangle's corner z-keys,
/// truncated down to a multiple of the overlay's prefix bits per level.
pub fn inverted_prefix_query(ov: &Overlay, q: &RangeQuery) -> Result<QueryTrace, QueryError> {
    let (lo, hi) = match (&q.range, ov.variant()) {
        (QueryRange::Rect { lo, hi }, Variant::Inverted) => (lo, hi),
        (range, variant) => {
            return Err(QueryError::KindMismatch {
                variant,
                kind: kind_name(range),
            })
        }
    };
    let prefix = query_prefix(ov, lo, hi)?;
    let mut trace = prefix_query(ov, &prefix, q.inject_at)?;
    trace.exact_results = Some(filter_rect(ov, &trace.results, lo, hi)?);
    Ok(trace)
}

/// Prefix an inverted overlay searches for the rectangle `lo..=hi`.
pub fn query_prefix(ov: &Overlay, lo: &Coordinates, hi: &Coordinates) -> Result<BitString, QueryError> {
    let (zlo, zhi) = zorder::rect_to_zrange(lo, hi, ov.geometry())?;
    let full = zorder::range_prefix(&zlo, &zhi)?;
    let p = ov.prefix_bits();
    Ok(full.prefix(full.len() / p * p))
}

/// Bottom-up ascent toward the list of nodes whose membership vectors start with `prefix`.
pub fn prefix_query(ov: &Overlay, prefix: &BitString, inject: NodeId) -> Result<QueryTrace, QueryError> {
    check_inject(ov, inject)?;
    let mvec = |id: NodeId| &ov.node(id).expect("linked node in census").mvec;
    let mut trace = QueryTrace::new(Termination::NoAscentFound);
    trace.prefix = Some(prefix.clone());

    let mut cur = inject;
    let mut level = 0;
    loop {
        let here = ov.level(level).expect("current level exists");
        let next = ov.level(level + 1).filter(|l| l.contains(cur));
        let terminal = if here.prefix_len() >= prefix.len() {
            Some(Termination::FullPrefixMatch)
        } else if next.is_none() {
            Some(Termination::TopLevelReached)
        } else {
            None
        };
        if let Some(reason) = terminal {
            trace.terminated_by = reason;
            if mvec(cur).starts_with(prefix) {
                trace.results.insert(cur);
            }
            for dir in [Direction::Left, Direction::Right] {
                let mut at = cur;
                while let Some(n) = ov.neighbor(at, level, dir).expect("node linked at current level") {
                    trace.hop(at, n, level);
                    if mvec(n).starts_with(prefix) {
                        trace.results.insert(n);
                    }
                    at = n;
                }
            }
            return Ok(trace);
        }

        let target = prefix.prefix(next.expect("checked above").prefix_len());
        let matches = |id: NodeId| mvec(id).starts_with(&target);
        let mut found = matches(cur).then_some(cur);
        for dir in [Direction::Left, Direction::Right] {
            if found.is_some() {
                break;
            }
            let mut at = cur;
            while let Some(n) = ov.neighbor(at, level, dir).expect("node linked at current level") {
                trace.hop(at, n, level);
                at = n;
                if matches(n) {
                    found = Some(n);
                    break;
                }
            }
        }
        match found {
            Some(v) => {
                trace.shift(v, level, level + 1);
                cur = v;
                level += 1;
            }
            None => {
                trace.terminated_by = Termination::NoAscentFound;
                return Ok(trace);
            }
        }
    }
}

/// Run whichever algorithm the overlay variant uses.
pub fn run_query(ov: &Overlay, q: &RangeQuery) -> Result<QueryTrace, QueryError> {
    match ov.variant() {
        Variant::Inverted => inverted_prefix_query(ov, q),
        _ => standard_range_query(ov, q),
    }
}

/// Check a trace against the overlay: each hop follows a real link at its
/// recorded level, and every result was reached by the query. Returns
/// human-readable problems; empty means the trace replays.
pub fn verify_trace(ov: &Overlay, inject: NodeId, trace: &QueryTrace) -> Vec<String> {
    let mut problems = Vec::new();
    let mut reached = BTreeSet::from([inject]);
    for h in &trace.hops {
        if !ov.adjacent(h.from, h.to, h.level) {
            problems.push(format!("hop {} -> {} is not a level-{} link", h.from, h.to, h.level));
        }
        if !reached.contains(&h.from) {
            problems.push(format!("hop {} -> {} departs from an unreached node", h.from, h.to));
        }
        reached.insert(h.to);
    }
    for id in trace.results.iter().filter(|id| !reached.contains(id)) {
        problems.push(format!("result {id} was never reached"));
    }
    if let Some(exact) = &trace.exact_results {
        if !exact.is_subset(&trace.results) {
            problems.push("exact results are not a subset of raw results".into());
        }
    }
    problems
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::overlay::{build, BuildConfig, NodeSpec, Overrides};
    use crate::zorder::Geometry;

    fn bs(s: &str) -> BitString {
        s.parse().unwrap()
    }

    fn sample() -> Overlay {
        let readings = [2u64, 3, 4, 7, 10, 12, 17, 20];
        let mvecs = ["010", "111", "001", "110", "010", "001", "101", "010"];
        let nodes: Vec<_> = readings.iter().map(|&r| NodeSpec::reading(r, r)).collect();
        let mut overrides = Overrides::default();
        for (&r, m) in readings.iter().zip(mvecs) {
            overrides.mvecs.insert(NodeId(r), bs(m));
        }
        build(&nodes, &BuildConfig::new(Variant::UniStandard, Geometry::new(2, 3).unwrap(), 0).overrides(overrides)).unwrap()
    }

    fn ids(set: &BTreeSet<NodeId>) -> Vec<u64> {
        set.iter().map(|n| n.0).collect()
    }

    #[test]
    fn sample_range_query() {
        let ov = sample();
        let t = standard_range_query(&ov, &RangeQuery::scalar(2, 4, NodeId(7))).unwrap();
        assert_eq!(ids(&t.results), [2, 3, 4]);
        assert_eq!(t.hops[0], Hop { from: NodeId(7), to: NodeId(3), level: 2 });
        assert_eq!(
            t.level_moves,
            [
                LevelMove { node: NodeId(7), from: 3, to: 2 },
                LevelMove { node: NodeId(3), from: 2, to: 0 },
            ]
        );
        // sweep: 3->2 (left end), 3->4, 4->7 (out of range, the stop)
        assert_eq!(t.messages(), 4);
        assert_eq!(t.hops.last().unwrap().to, NodeId(7));
        assert!(!t.results.contains(&NodeId(7)));
        assert_eq!(t.terminated_by, Termination::RangeExhausted);
        assert!(verify_trace(&ov, NodeId(7), &t).is_empty());
    }

    #[test]
    fn own_key_range() {
        let ov = sample();
        let t = standard_range_query(&ov, &RangeQuery::scalar(10, 10, NodeId(10))).unwrap();
        assert_eq!(ids(&t.results), [10]);
        assert!(t.hops.iter().all(|h| h.level == 0 && h.from == NodeId(10)));
    }

    #[test]
    fn empty_gap_range() {
        let ov = sample();
        for inject in [2, 7, 20] {
            let t = standard_range_query(&ov, &RangeQuery::scalar(13, 16, NodeId(inject))).unwrap();
            assert!(t.results.is_empty());
            assert!(verify_trace(&ov, NodeId(inject), &t).is_empty());
        }
    }

    #[test]
    fn query_errors() {
        let ov = sample();
        assert_eq!(
            standard_range_query(&ov, &RangeQuery::scalar(1, 2, NodeId(99))),
            Err(QueryError::UnknownInject(NodeId(99)))
        );
        assert_eq!(standard_range_query(&ov, &RangeQuery::scalar(5, 2, NodeId(2))), Err(QueryError::InvertedBounds));
        assert!(matches!(
            standard_range_query(&ov, &RangeQuery::rect([0, 0], [1, 1], NodeId(2))),
            Err(QueryError::KindMismatch { .. })
        ));
        assert!(matches!(
            inverted_prefix_query(&ov, &RangeQuery::scalar(1, 2, NodeId(2))),
            Err(QueryError::KindMismatch { .. })
        ));
    }

    fn sample_inverted() -> Overlay {
        let coords: [[u64; 2]; 8] = [[2, 1], [0, 7], [6, 1], [0, 7], [0, 1], [5, 5], [2, 0], [7, 6]];
        let keys = [5u64, 13, 29, 37, 40, 63, 70, 89];
        // node id == random key, so results read directly
        let nodes: Vec<_> = (0..8).map(|i| NodeSpec::at(keys[i], coords[i])).collect();
        let mut overrides = Overrides::default();
        for k in keys {
            overrides.keys.insert(NodeId(k), BitString::from_u64(k, 7));
        }
        build(&nodes, &BuildConfig::new(Variant::Inverted, Geometry::new(2, 3).unwrap(), 0).overrides(overrides)).unwrap()
    }

    #[test]
    fn sample_inverted_prefix_query() {
        let ov = sample_inverted();
        let q = RangeQuery::rect([2, 0], [3, 1], NodeId(89));
        let t = inverted_prefix_query(&ov, &q).unwrap();
        assert_eq!(t.prefix, Some(bs("0010")));
        assert_eq!(ids(&t.results), [5, 70]);
        assert_eq!(t.exact_results.as_ref().map(ids), Some(vec![5, 70]));
        assert_eq!(t.terminated_by, Termination::FullPrefixMatch);
        assert_eq!(
            t.hops,
            [
                Hop { from: NodeId(89), to: NodeId(70), level: 0 },
                Hop { from: NodeId(70), to: NodeId(5), level: 2 },
            ]
        );
        assert_eq!(
            t.level_moves,
            [
                LevelMove { node: NodeId(70), from: 0, to: 1 },
                LevelMove { node: NodeId(70), from: 1, to: 2 },
            ]
        );
        assert!(verify_trace(&ov, NodeId(89), &t).is_empty());
    }

    #[test]
    fn sample_inverted_missing_prefix() {
        let ov = sample_inverted();
        let t = prefix_query(&ov, &bs("0011"), NodeId(89)).unwrap();
        assert_eq!(t.terminated_by, Termination::NoAscentFound);
        assert!(t.results.is_empty());
        // the L1 list 70 -> 40 -> 5 is scanned to its end
        let l1: Vec<_> = t.hops.iter().filter(|h| h.level == 1).map(|h| (h.from.0, h.to.0)).collect();
        assert_eq!(l1, [(70, 40), (40, 5)]);
        // same through the rectangle front end
        let t2 = inverted_prefix_query(&ov, &RangeQuery::rect([2, 2], [3, 3], NodeId(89))).unwrap();
        assert_eq!(t2.prefix, Some(bs("0011")));
        assert_eq!(t2.hops, t.hops);
    }

    #[test]
    fn full_domain_prefix_is_empty() {
        let ov = sample_inverted();
        let t = inverted_prefix_query(&ov, &RangeQuery::rect([0, 0], [7, 7], NodeId(40))).unwrap();
        assert_eq!(t.prefix, Some(BitString::new()));
        assert_eq!(t.results.len(), 8);
        assert_eq!(t.messages(), 7);
        assert_eq!(t.terminated_by, Termination::FullPrefixMatch);
    }

    #[test]
    fn inject_already_matching_ascends_in_place() {
        let ov = sample_inverted();
        let t = inverted_prefix_query(&ov, &RangeQuery::rect([2, 0], [3, 1], NodeId(70))).unwrap();
        assert_eq!(t.hops, [Hop { from: NodeId(70), to: NodeId(5), level: 2 }]);
        assert_eq!(ids(&t.results), [5, 70]);
    }

    #[test]
    fn prefix_truncated_to_level_boundary() {
        let ov = sample_inverted();
        // corners 001000 and 001100 share 001, truncated to 00
        let p = query_prefix(&ov, &[2, 0].into(), &[2, 2].into()).unwrap();
        assert_eq!(p, bs("00"));
        let t = inverted_prefix_query(&ov, &RangeQuery::rect([2, 0], [2, 2], NodeId(13))).unwrap();
        assert_eq!(ids(&t.results), [5, 40, 70]);
        assert_eq!(t.exact_results.as_ref().map(ids), Some(vec![5, 70]));
    }

    #[test]
    fn singleton_top_reached() {
        let ov = sample_inverted();
        // (5,5) -> 110011 is the only node under prefix 11
        let t = prefix_query(&ov, &bs("110011"), NodeId(5)).unwrap();
        assert_eq!(t.terminated_by, Termination::TopLevelReached);
        assert_eq!(ids(&t.results), [63]);
        assert!(verify_trace(&ov, NodeId(5), &t).is_empty());
    }
}
