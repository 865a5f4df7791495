//! Scenario runner: builds overlays, executes query workloads, counts
//! messages and compares every answer with a linear scan of the census.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::thread;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::overlay::{self, BuildConfig, BuildError, NodeId, NodeSpec, Overlay, Overrides, Variant, DEFAULT_READING_BITS};
use crate::query::{self, QueryError, QueryRange, QueryTrace, RangeQuery, Termination};
use crate::zorder::{self, Coordinates, Geometry};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scenario {
    pub seed: u64,
    pub geometry: Geometry,
    /// Per-variant prefix bits; missing variants use their default.
    pub prefix_bits: BTreeMap<Variant, usize>,
    pub reading_bits: u32,
    pub nodes: Vec<NodeSpec>,
    pub overrides: BTreeMap<Variant, Overrides>,
    pub variants: Vec<Variant>,
    pub queries: Vec<RangeQuery>,
}

impl Scenario {
    pub fn new(seed: u64, geometry: Geometry, nodes: Vec<NodeSpec>) -> Self {
        Self {
            seed,
            geometry,
            prefix_bits: BTreeMap::new(),
            reading_bits: DEFAULT_READING_BITS,
            nodes,
            overrides: BTreeMap::new(),
            variants: Vec::new(),
            queries: Vec::new(),
        }
    }

    pub fn build_config(&self, variant: Variant) -> BuildConfig {
        let mut cfg = BuildConfig::new(variant, self.geometry, self.seed);
        cfg.prefix_bits = self.prefix_bits.get(&variant).copied();
        cfg.reading_bits = self.reading_bits;
        cfg.overrides = self.overrides.get(&variant).cloned().unwrap_or_default();
        cfg
    }

    pub fn build(&self, variant: Variant) -> Result<Overlay, ScenarioError> {
        overlay::build(&self.nodes, &self.build_config(variant)).map_err(|e| build_error_path(self, e))
    }

    /// Check scenario fields, reporting the first problem with its path.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let err = |path: String, msg: String| Err(ScenarioError::new(path, msg));
        if self.nodes.is_empty() {
            return err("nodes".into(), "at least one node is required".into());
        }
        let mut ids = BTreeSet::new();
        for (i, n) in self.nodes.iter().enumerate() {
            if !ids.insert(n.id) {
                return err(format!("nodes[{i}].id"), format!("duplicate node id {}", n.id));
            }
            if let Some(c) = &n.coords {
                if let Err(e) = self.geometry.check(c) {
                    return err(format!("nodes[{i}].coords"), e.to_string());
                }
            }
        }
        let mut seen = BTreeSet::new();
        for (i, v) in self.variants.iter().enumerate() {
            if !seen.insert(v) {
                return err(format!("variants[{i}]"), format!("variant {v} listed twice"));
            }
        }
        for (v, p) in &self.prefix_bits {
            if *p == 0 {
                return err(format!("p.{v}"), "prefix bits per level must be >= 1".into());
            }
        }
        for (v, o) in &self.overrides {
            for id in o.mvecs.keys().chain(o.keys.keys()) {
                if !ids.contains(id) {
                    return err(format!("overrides.{v}"), format!("unknown node id {id}"));
                }
            }
        }
        for (i, q) in self.queries.iter().enumerate() {
            if !ids.contains(&q.inject_at) {
                return err(format!("queries[{i}].inject"), format!("unknown node id {}", q.inject_at));
            }
            match &q.range {
                QueryRange::Scalar { lo, hi } if lo > hi => {
                    return err(format!("queries[{i}]"), format!("lo {lo} exceeds hi {hi}"));
                }
                QueryRange::Rect { lo, hi } => {
                    for (name, c) in [("lo", lo), ("hi", hi)] {
                        if let Err(e) = self.geometry.check(c) {
                            return err(format!("queries[{i}].{name}"), e.to_string());
                        }
                    }
                    if let Err(e) = zorder::rect_to_zrange(lo, hi, self.geometry) {
                        return err(format!("queries[{i}]"), e.to_string());
                    }
                }
                _ => {}
            }
        }
        for &v in &self.variants {
            overlay::build(&self.nodes, &self.build_config(v)).map_err(|e| build_error_path(self, e))?;
        }
        Ok(())
    }
}

fn build_error_path(s: &Scenario, e: BuildError) -> ScenarioError {
    let node_path = |id: NodeId| {
        s.nodes
            .iter()
            .position(|n| n.id == id)
            .map_or_else(|| "nodes".to_string(), |i| format!("nodes[{i}]"))
    };
    let path = match &e {
        BuildError::MissingCoords(id, _) | BuildError::Coords { id, .. } => format!("{}.coords", node_path(*id)),
        BuildError::MissingReading(id, _) | BuildError::ReadingOutOfRange { id, .. } => {
            format!("{}.reading", node_path(*id))
        }
        BuildError::DuplicateId(id) => format!("{}.id", node_path(*id)),
        BuildError::OverrideNotAllowed { variant, .. } => format!("overrides.{variant}"),
        BuildError::MvecLengthMismatch { id, .. } | BuildError::UnknownOverride(id) => format!("overrides.*.{id}"),
        BuildError::InvalidReadingBits(_) => "reading_bits".into(),
        BuildError::ZeroPrefixBits => "p".into(),
        BuildError::ZeroRandomBits | BuildError::Empty => "nodes".into(),
    };
    ScenarioError::new(path, e.to_string())
}

/// An invalid scenario field, with the JSON-style path to it.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{path}: {message}")]
pub struct ScenarioError {
    pub path: String,
    pub message: String,
}

impl ScenarioError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Scenario(#[from] ScenarioError),
    #[error("query {query_id} on {variant}: {source}")]
    Query {
        query_id: usize,
        variant: Variant,
        source: QueryError,
    },
    #[error("comparison needs at least two variants, scenario has {0}")]
    TooFewVariants(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryMetrics {
    pub query_id: usize,
    pub variant: Variant,
    pub messages: usize,
    pub per_level_hops: BTreeMap<usize, usize>,
    pub result_size: usize,
    pub exact_result_size: usize,
    pub oracle_match: bool,
    pub terminated_by: Termination,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub query_id: usize,
    pub variant: Variant,
    pub inject_at: NodeId,
    pub trace: QueryTrace,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ScenarioRun {
    pub metrics: Vec<QueryMetrics>,
    pub traces: Vec<TraceRecord>,
    pub overlays: Vec<Overlay>,
}

impl ScenarioRun {
    pub fn all_match(&self) -> bool {
        self.metrics.iter().all(|m| m.oracle_match)
    }
}

/// Nodes inside the scalar range (by reading) or rectangle (by coordinates).
/// Never looks at an overlay.
pub fn oracle(nodes: &[NodeSpec], q: &RangeQuery) -> BTreeSet<NodeId> {
    nodes
        .iter()
        .filter(|n| match &q.range {
            QueryRange::Scalar { lo, hi } => n.reading.is_some_and(|r| *lo <= r && r <= *hi),
            QueryRange::Rect { lo, hi } => n.coords.as_ref().is_some_and(|c| {
                c.dims() == lo.dims()
                    && c.values()
                        .iter()
                        .zip(lo.values().iter().zip(hi.values()))
                        .all(|(v, (l, h))| l <= v && v <= h)
            }),
        })
        .map(|n| n.id)
        .collect()
}

fn measure(s: &Scenario, ov: &Overlay, query_id: usize) -> Result<(QueryMetrics, TraceRecord), SimError> {
    let q = &s.queries[query_id];
    let trace = query::run_query(ov, q).map_err(|source| SimError::Query {
        query_id,
        variant: ov.variant(),
        source,
    })?;
    let metrics = QueryMetrics {
        query_id,
        variant: ov.variant(),
        messages: trace.messages(),
        per_level_hops: trace.per_level_hops(),
        result_size: trace.results.len(),
        exact_result_size: trace.exact().len(),
        oracle_match: *trace.exact() == oracle(&s.nodes, q),
        terminated_by: trace.terminated_by,
    };
    let record = TraceRecord {
        query_id,
        variant: ov.variant(),
        inject_at: q.inject_at,
        trace,
    };
    Ok((metrics, record))
}

/// Run every query against every requested variant it applies to.
///
/// Scalar queries run on `UniStandard`; rectangles on `MultiStandard` and
/// `Inverted`. Rows come out in query order, then scenario variant order.
pub fn run_scenario_full(s: &Scenario, threads: usize) -> Result<ScenarioRun, SimError> {
    s.validate()?;
    let overlays = s.variants.iter().map(|&v| s.build(v)).collect::<Result<Vec<_>, _>>()?;
    let jobs: Vec<(usize, usize)> = (0..s.queries.len())
        .flat_map(|qi| (0..overlays.len()).map(move |oi| (qi, oi)))
        .filter(|&(qi, oi)| s.queries[qi].applies_to(overlays[oi].variant()))
        .collect();

    let rows = if threads <= 1 || jobs.len() < 2 {
        jobs.iter().map(|&(qi, oi)| measure(s, &overlays[oi], qi)).collect::<Result<Vec<_>, _>>()?
    } else {
        let chunk = jobs.len().div_ceil(threads);
        thread::scope(|scope| {
            let handles: Vec<_> = jobs
                .chunks(chunk)
                .map(|part| {
                    let overlays = &overlays;
                    scope.spawn(move || {
                        part.iter().map(|&(qi, oi)| measure(s, &overlays[oi], qi)).collect::<Result<Vec<_>, _>>()
                    })
                })
                .collect();
            // joined in chunk order, so rows keep the sequential ordering
            handles.into_iter().map(|h| h.join().expect("query worker panicked")).collect::<Result<Vec<Vec<_>>, _>>()
        })?
        .into_iter()
        .flatten()
        .collect()
    };

    let (metrics, traces) = rows.into_iter().unzip();
    Ok(ScenarioRun {
        metrics,
        traces,
        overlays,
    })
}

/// Single-threaded reference run returning one metrics row per (query, variant).
pub fn run_scenario(s: &Scenario) -> Result<Vec<QueryMetrics>, SimError> {
    run_scenario_full(s, 1).map(|r| r.metrics)
}

/// Exact non-negative fraction, kept in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub num: u64,
    pub den: u64,
}

impl Ratio {
    pub fn new(num: u64, den: u64) -> Self {
        assert!(den > 0, "zero denominator");
        let g = gcd(num, den);
        Self {
            num: num / g,
            den: den / g,
        }
    }

    pub fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

impl fmt::Display for Ratio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

/// Rectangle shape relative to the quad-tree grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryShape {
    /// Exactly one quad-tree cell (of any depth).
    CellAligned,
    Unaligned,
    Scalar,
}

impl QueryShape {
    pub fn name(self) -> &'static str {
        match self {
            QueryShape::CellAligned => "cell_aligned",
            QueryShape::Unaligned => "unaligned",
            QueryShape::Scalar => "scalar",
        }
    }

    pub fn of(q: &RangeQuery, geometry: Geometry) -> Self {
        let QueryRange::Rect { lo, hi } = &q.range else {
            return QueryShape::Scalar;
        };
        let Ok((zlo, zhi)) = zorder::rect_to_zrange(lo, hi, geometry) else {
            return QueryShape::Unaligned;
        };
        let common = zlo.bits().common_prefix_len(zhi.bits());
        let tail_lo = &zlo.bits().bits()[common..];
        let tail_hi = &zhi.bits().bits()[common..];
        if common % geometry.k == 0 && tail_lo.iter().all(|b| !b) && tail_hi.iter().all(|&b| b) {
            QueryShape::CellAligned
        } else {
            QueryShape::Unaligned
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub query_id: usize,
    pub variant: Variant,
    pub shape: QueryShape,
    pub messages: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantStats {
    pub queries: usize,
    pub total: u64,
    pub mean: Ratio,
    pub median: Ratio,
    pub max: usize,
}

impl VariantStats {
    /// `None` for an empty sample.
    pub fn from_messages(messages: &[usize]) -> Option<Self> {
        if messages.is_empty() {
            return None;
        }
        let mut sorted = messages.to_vec();
        sorted.sort_unstable();
        let n = sorted.len();
        let total: u64 = sorted.iter().map(|&m| m as u64).sum();
        let median = if n % 2 == 1 {
            Ratio::new(sorted[n / 2] as u64, 1)
        } else {
            Ratio::new((sorted[n / 2 - 1] + sorted[n / 2]) as u64, 2)
        };
        Some(Self {
            queries: n,
            total,
            mean: Ratio::new(total, n as u64),
            median,
            max: sorted[n - 1],
        })
    }
}

/// Share of paired queries on which `Inverted` used no more messages than `MultiStandard`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WinFraction {
    pub wins: usize,
    pub paired: usize,
}

impl WinFraction {
    pub fn ratio(&self) -> Option<Ratio> {
        (self.paired > 0).then(|| Ratio::new(self.wins as u64, self.paired as u64))
    }
}

impl fmt::Display for WinFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.wins, self.paired)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub per_variant: BTreeMap<Variant, VariantStats>,
    pub inverted_win: WinFraction,
    pub inverted_win_by_shape: BTreeMap<QueryShape, WinFraction>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonTable {
    pub rows: Vec<ComparisonRow>,
    pub aggregate: AggregateRow,
}

impl ComparisonTable {
    pub fn from_rows(rows: Vec<ComparisonRow>) -> Self {
        let mut by_variant: BTreeMap<Variant, Vec<usize>> = BTreeMap::new();
        let mut by_query: BTreeMap<usize, (QueryShape, BTreeMap<Variant, usize>)> = BTreeMap::new();
        for r in &rows {
            by_variant.entry(r.variant).or_default().push(r.messages);
            by_query.entry(r.query_id).or_insert_with(|| (r.shape, BTreeMap::new())).1.insert(r.variant, r.messages);
        }
        let per_variant = by_variant
            .into_iter()
            .filter_map(|(v, m)| VariantStats::from_messages(&m).map(|s| (v, s)))
            .collect();
        let mut inverted_win = WinFraction { wins: 0, paired: 0 };
        let mut inverted_win_by_shape: BTreeMap<QueryShape, WinFraction> = BTreeMap::new();
        for (shape, msgs) in by_query.values() {
            if let (Some(inv), Some(std)) = (msgs.get(&Variant::Inverted), msgs.get(&Variant::MultiStandard)) {
                let win = (inv <= std) as usize;
                inverted_win.paired += 1;
                inverted_win.wins += win;
                let slot = inverted_win_by_shape.entry(*shape).or_insert(WinFraction { wins: 0, paired: 0 });
                slot.paired += 1;
                slot.wins += win;
            }
        }
        Self {
            rows,
            aggregate: AggregateRow {
                per_variant,
                inverted_win,
                inverted_win_by_shape,
            },
        }
    }
}

/// Per-query and aggregate message counts for every requested variant.
pub fn compare_variants(s: &Scenario) -> Result<ComparisonTable, SimError> {
    if s.variants.len() < 2 {
        return Err(SimError::TooFewVariants(s.variants.len()));
    }
    let metrics = run_scenario(s)?;
    let rows = metrics
        .into_iter()
        .map(|m| ComparisonRow {
            query_id: m.query_id,
            variant: m.variant,
            shape: QueryShape::of(&s.queries[m.query_id], s.geometry),
            messages: m.messages,
        })
        .collect();
    Ok(ComparisonTable::from_rows(rows))
}

/// How generated rectangles are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RectShape {
    /// Independent uniform corners per dimension.
    Uniform,
    /// One whole quad-tree cell at a uniformly chosen depth in `1..=b`.
    Cell,
    /// Side length at most `max_side` per dimension.
    Small { max_side: u64 },
}

/// Parameters for [`random_scenario`].
#[derive(Debug, Clone)]
pub struct RandomScenario {
    pub nodes: usize,
    pub geometry: Geometry,
    pub variants: Vec<Variant>,
    pub rect_queries: usize,
    pub rect_shape: RectShape,
    pub scalar_queries: usize,
    /// Readings are drawn from `0..reading_span`.
    pub reading_span: u64,
    /// Scalar ranges span at most this many reading units.
    pub max_scalar_width: u64,
    /// Inverted overlays use `p = 1` instead of `p = k` when set.
    pub one_bit_levels: bool,
}

impl RandomScenario {
    pub fn new(nodes: usize, geometry: Geometry) -> Self {
        Self {
            nodes,
            geometry,
            variants: Variant::ALL.to_vec(),
            rect_queries: 0,
            rect_shape: RectShape::Uniform,
            scalar_queries: 0,
            reading_span: 1 << 16,
            max_scalar_width: 1 << 12,
            one_bit_levels: false,
        }
    }
}

/// Deterministic random scenario: distinct node ids, random coordinates
/// (duplicates allowed), random readings and random queries.
pub fn random_scenario(seed: u64, spec: &RandomScenario) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = spec.geometry;
    let max = g.max_coord();
    let nodes: Vec<NodeSpec> = (0..spec.nodes as u64)
        .map(|id| {
            let coords: Vec<u64> = (0..g.k).map(|_| rng.gen_range(0..=max)).collect();
            NodeSpec::at(id, coords).with_reading(rng.gen_range(0..spec.reading_span.max(1)))
        })
        .collect();
    let mut queries = Vec::new();
    for _ in 0..spec.rect_queries {
        let (lo, hi): (Vec<u64>, Vec<u64>) = match spec.rect_shape {
            RectShape::Uniform => (0..g.k)
                .map(|_| {
                    let (a, b) = (rng.gen_range(0..=max), rng.gen_range(0..=max));
                    (a.min(b), a.max(b))
                })
                .unzip(),
            RectShape::Cell => {
                let depth = rng.gen_range(1..=g.b);
                let side = 1u64 << (g.b - depth);
                (0..g.k)
                    .map(|_| {
                        let lo = rng.gen_range(0..(1u64 << depth)) * side;
                        (lo, lo + side - 1)
                    })
                    .unzip()
            }
            RectShape::Small { max_side } => (0..g.k)
                .map(|_| {
                    let lo = rng.gen_range(0..=max);
                    let hi = lo.saturating_add(rng.gen_range(0..max_side.max(1))).min(max);
                    (lo, hi)
                })
                .unzip(),
        };
        let inject = NodeId(rng.gen_range(0..spec.nodes as u64));
        queries.push(RangeQuery::rect(Coordinates::new(lo), Coordinates::new(hi), inject));
    }
    for _ in 0..spec.scalar_queries {
        let lo = rng.gen_range(0..spec.reading_span.max(1));
        let hi = lo + rng.gen_range(0..spec.max_scalar_width.max(1));
        let inject = NodeId(rng.gen_range(0..spec.nodes as u64));
        queries.push(RangeQuery::scalar(lo, hi, inject));
    }
    let mut s = Scenario::new(seed, g, nodes);
    s.reading_bits = 64 - spec.reading_span.max(2).saturating_sub(1).leading_zeros();
    s.variants = spec.variants.clone();
    if spec.one_bit_levels {
        s.prefix_bits.insert(Variant::Inverted, 1);
    }
    s.queries = queries;
    s
}
