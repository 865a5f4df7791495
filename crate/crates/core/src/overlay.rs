//! Skip-graph overlays for the three variants.
//!
//! Level 0 is one list holding every node sorted by `(key, id)`. Level `i`
//! groups the nodes that were not yet alone at level `i - 1` by the first
//! `min(i * p, mvec_len)` bits of their membership vectors, again sorted by
//! `(key, id)`. Keys order numerically as unsigned big-endian integers.
//!
//! | variant         | key                    | membership vector      |
//! |-----------------|------------------------|------------------------|
//! | `UniStandard`   | binary sensor reading  | random                 |
//! | `MultiStandard` | z-order of coordinates | random                 |
//! | `Inverted`      | random                 | z-order of coordinates |

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::zorder::{self, Coordinates, Geometry, ZOrderError};

/// Random membership vectors are never extended beyond this many bits.
pub const MAX_RANDOM_MVEC_BITS: usize = 256;

/// Default width of a reading-derived key.
pub const DEFAULT_READING_BITS: u32 = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    UniStandard,
    MultiStandard,
    Inverted,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::UniStandard, Variant::MultiStandard, Variant::Inverted];

    pub fn name(self) -> &'static str {
        match self {
            Variant::UniStandard => "uni_standard",
            Variant::MultiStandard => "multi_standard",
            Variant::Inverted => "inverted",
        }
    }

    /// Default prefix bits per level: one bit for the standard variants,
    /// one quad-tree digit (`k` bits) for the inverted variant.
    pub fn default_prefix_bits(self, geometry: Geometry) -> usize {
        match self {
            Variant::Inverted => geometry.k,
            _ => 1,
        }
    }

    fn salt(self) -> u64 {
        match self {
            Variant::UniStandard => 0x5eed_0001,
            Variant::MultiStandard => 0x5eed_0002,
            Variant::Inverted => 0x5eed_0003,
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown variant {s:?} (expected uni_standard, multi_standard or inverted)"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Left,
    Right,
}

/// Input census entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub id: NodeId,
    pub coords: Option<Coordinates>,
    pub reading: Option<u64>,
}

impl NodeSpec {
    pub fn at(id: u64, coords: impl Into<Coordinates>) -> Self {
        Self {
            id: NodeId(id),
            coords: Some(coords.into()),
            reading: None,
        }
    }

    pub fn reading(id: u64, reading: u64) -> Self {
        Self {
            id: NodeId(id),
            coords: None,
            reading: Some(reading),
        }
    }

    pub fn with_reading(mut self, reading: u64) -> Self {
        self.reading = Some(reading);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: NodeId,
    pub coords: Option<Coordinates>,
    pub reading: Option<u64>,
    pub key: BitString,
    pub mvec: BitString,
}

impl NodeRecord {
    fn order(&self, other: &NodeRecord) -> Ordering {
        self.key.numeric_cmp(&other.key).then(self.id.cmp(&other.id))
    }
}

/// Explicit values replacing the random component of a variant.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub mvecs: BTreeMap<NodeId, BitString>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub keys: BTreeMap<NodeId, BitString>,
}

impl Overrides {
    pub fn is_empty(&self) -> bool {
        self.mvecs.is_empty() && self.keys.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct BuildConfig {
    pub variant: Variant,
    pub geometry: Geometry,
    /// Prefix bits added per level; `None` picks the variant default.
    pub prefix_bits: Option<usize>,
    pub seed: u64,
    /// Width of keys derived from readings (`UniStandard`).
    pub reading_bits: u32,
    /// Initial length of random bit strings; `None` means `k * b`.
    pub random_bits: Option<usize>,
    pub overrides: Overrides,
}

impl BuildConfig {
    pub fn new(variant: Variant, geometry: Geometry, seed: u64) -> Self {
        Self {
            variant,
            geometry,
            prefix_bits: None,
            seed,
            reading_bits: DEFAULT_READING_BITS,
            random_bits: None,
            overrides: Overrides::default(),
        }
    }

    pub fn prefix_bits(mut self, p: usize) -> Self {
        self.prefix_bits = Some(p);
        self
    }

    pub fn overrides(mut self, overrides: Overrides) -> Self {
        self.overrides = overrides;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BuildError {
    #[error("overlay needs at least one node")]
    Empty,
    #[error("duplicate node id {0}")]
    DuplicateId(NodeId),
    #[error("prefix bits per level must be >= 1")]
    ZeroPrefixBits,
    #[error("random bit length must be >= 1")]
    ZeroRandomBits,
    #[error("reading bit width must be between 1 and 64, got {0}")]
    InvalidReadingBits(u32),
    #[error("node {0}: {1} variant requires coordinates")]
    MissingCoords(NodeId, Variant),
    #[error("node {0}: {1} variant requires a reading")]
    MissingReading(NodeId, Variant),
    #[error("node {id}: reading {reading} does not fit in {bits} bits")]
    ReadingOutOfRange { id: NodeId, reading: u64, bits: u32 },
    #[error("node {id}: {source}")]
    Coords { id: NodeId, source: ZOrderError },
    #[error("{variant} variant derives {field} deterministically; overrides are not allowed")]
    OverrideNotAllowed { variant: Variant, field: &'static str },
    #[error("override refers to unknown node {0}")]
    UnknownOverride(NodeId),
    #[error("membership vectors must share one length: node {id} has {actual} bits, expected {expected}")]
    MvecLengthMismatch { id: NodeId, expected: usize, actual: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OverlayError {
    #[error("node {node} is not present at level {level}")]
    NotAtLevel { node: NodeId, level: usize },
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
}

/// One level: disjoint sorted lists keyed by membership-vector prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Level {
    index: usize,
    prefix_len: usize,
    lists: BTreeMap<BitString, Vec<NodeId>>,
    slots: BTreeMap<NodeId, (BitString, usize)>,
}

impl Level {
    fn new(index: usize, prefix_len: usize, lists: BTreeMap<BitString, Vec<NodeId>>) -> Self {
        let mut level = Self {
            index,
            prefix_len,
            lists,
            slots: BTreeMap::new(),
        };
        level.reindex();
        level
    }

    fn reindex(&mut self) {
        self.slots.clear();
        for (prefix, list) in &self.lists {
            for (pos, &id) in list.iter().enumerate() {
                self.slots.entry(id).or_insert_with(|| (prefix.clone(), pos));
            }
        }
    }

    pub fn index(&self) -> usize {
        self.index
    }

    /// Number of membership-vector bits that key this level's lists.
    pub fn prefix_len(&self) -> usize {
        self.prefix_len
    }

    pub fn lists(&self) -> &BTreeMap<BitString, Vec<NodeId>> {
        &self.lists
    }

    pub fn list(&self, prefix: &BitString) -> Option<&[NodeId]> {
        self.lists.get(prefix).map(Vec::as_slice)
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.slots.contains_key(&id)
    }

    /// Prefix of the list holding `id` and the node's position in it.
    pub fn slot(&self, id: NodeId) -> Option<(&BitString, usize)> {
        self.slots.get(&id).map(|(p, i)| (p, *i))
    }

    /// The list holding `id`.
    pub fn list_of(&self, id: NodeId) -> Option<&[NodeId]> {
        let (prefix, _) = self.slot(id)?;
        self.list(prefix)
    }

    pub fn node_count(&self) -> usize {
        self.slots.len()
    }

    /// Replace (or insert) a list verbatim. Invariants are not checked;
    /// use [`validate`] afterwards. Intended for fault-injection tests.
    pub fn set_list(&mut self, prefix: BitString, list: Vec<NodeId>) {
        self.lists.insert(prefix, list);
        self.reindex();
    }

    /// Unlink `id` from this level only. Invariants are not checked.
    pub fn remove_node(&mut self, id: NodeId) {
        for list in self.lists.values_mut() {
            list.retain(|&n| n != id);
        }
        self.lists.retain(|_, l| !l.is_empty());
        self.reindex();
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Overlay {
    variant: Variant,
    geometry: Geometry,
    prefix_bits: usize,
    seed: u64,
    nodes: BTreeMap<NodeId, NodeRecord>,
    levels: Vec<Level>,
}

/// Per-node deterministic bit source. Each node draws from its own ChaCha
/// stream so its random bits do not depend on the rest of the census.
struct BitSource {
    rng: ChaCha8Rng,
}

impl BitSource {
    fn new(seed: u64, variant: Variant, purpose: u64, id: NodeId) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ variant.salt().rotate_left(32) ^ purpose);
        rng.set_stream(id.0);
        Self { rng }
    }

    fn draw(&mut self, n: usize, into: &mut BitString) {
        for _ in 0..n {
            into.push(self.rng.next_u32() >> 31 == 1);
        }
    }
}

const PURPOSE_MVEC: u64 = 1;
const PURPOSE_KEY: u64 = 2;

pub fn build(nodes: &[NodeSpec], config: &BuildConfig) -> Result<Overlay, BuildError> {
    let BuildConfig {
        variant,
        geometry,
        seed,
        reading_bits,
        ref overrides,
        ..
    } = *config;
    let p = config.prefix_bits.unwrap_or_else(|| variant.default_prefix_bits(geometry));
    if p == 0 {
        return Err(BuildError::ZeroPrefixBits);
    }
    let random_bits = config.random_bits.unwrap_or_else(|| geometry.key_bits());
    if random_bits == 0 {
        return Err(BuildError::ZeroRandomBits);
    }
    if nodes.is_empty() {
        return Err(BuildError::Empty);
    }
    let mut seen = BTreeSet::new();
    for n in nodes {
        if !seen.insert(n.id) {
            return Err(BuildError::DuplicateId(n.id));
        }
    }
    for id in overrides.mvecs.keys().chain(overrides.keys.keys()) {
        if !seen.contains(id) {
            return Err(BuildError::UnknownOverride(*id));
        }
    }
    match variant {
        Variant::UniStandard | Variant::MultiStandard if !overrides.keys.is_empty() => {
            return Err(BuildError::OverrideNotAllowed { variant, field: "keys" });
        }
        Variant::Inverted if !overrides.mvecs.is_empty() => {
            return Err(BuildError::OverrideNotAllowed { variant, field: "mvecs" });
        }
        _ => {}
    }
    if variant == Variant::UniStandard && !(1..=64).contains(&reading_bits) {
        return Err(BuildError::InvalidReadingBits(reading_bits));
    }

    let mut sources = BTreeMap::new();
    let mut records = BTreeMap::new();
    for spec in nodes {
        let id = spec.id;
        let zkey = || -> Result<BitString, BuildError> {
            let coords = spec.coords.as_ref().ok_or(BuildError::MissingCoords(id, variant))?;
            zorder::encode(coords, geometry)
                .map(|z| z.into_bits())
                .map_err(|source| BuildError::Coords { id, source })
        };
        let random = |purpose: u64| {
            let mut source = BitSource::new(seed, variant, purpose, id);
            let mut bits = BitString::new();
            source.draw(random_bits, &mut bits);
            (bits, source)
        };
        let (key, mvec) = match variant {
            Variant::UniStandard | Variant::MultiStandard => {
                let key = if variant == Variant::UniStandard {
                    let reading = spec.reading.ok_or(BuildError::MissingReading(id, variant))?;
                    if reading_bits < 64 && reading >> reading_bits != 0 {
                        return Err(BuildError::ReadingOutOfRange { id, reading, bits: reading_bits });
                    }
                    BitString::from_u64(reading, reading_bits as usize)
                } else {
                    zkey()?
                };
                let mvec = match overrides.mvecs.get(&id) {
                    Some(m) => m.clone(),
                    None => {
                        let (bits, source) = random(PURPOSE_MVEC);
                        sources.insert(id, source);
                        bits
                    }
                };
                (key, mvec)
            }
            Variant::Inverted => {
                let mvec = zkey()?;
                let key = match overrides.keys.get(&id) {
                    Some(k) => k.clone(),
                    None => random(PURPOSE_KEY).0,
                };
                (key, mvec)
            }
        };
        records.insert(
            id,
            NodeRecord {
                id,
                coords: spec.coords.clone(),
                reading: spec.reading,
                key,
                mvec,
            },
        );
    }

    let mvec_len = records.values().next().map_or(0, |r| r.mvec.len());
    if let Some(r) = records.values().find(|r| r.mvec.len() != mvec_len) {
        return Err(BuildError::MvecLengthMismatch {
            id: r.id,
            expected: mvec_len,
            actual: r.mvec.len(),
        });
    }
    // Only fully random membership vectors may grow to separate collisions.
    let extendable = sources.len() == records.len();

    let mut overlay = Overlay {
        variant,
        geometry,
        prefix_bits: p,
        seed,
        nodes: records,
        levels: Vec::new(),
    };
    overlay.link_levels(extendable.then_some(&mut sources));
    Ok(overlay)
}

impl Overlay {
    fn sorted(&self, mut ids: Vec<NodeId>) -> Vec<NodeId> {
        ids.sort_by(|a, b| self.nodes[a].order(&self.nodes[b]));
        ids
    }

    fn link_levels(&mut self, mut sources: Option<&mut BTreeMap<NodeId, BitSource>>) {
        let p = self.prefix_bits;
        if let Some(sources) = sources.as_deref_mut() {
            // keep random vectors a whole number of levels long
            let pad = (p - self.mvec_len() % p) % p;
            for (id, source) in sources.iter_mut() {
                source.draw(pad, &mut self.nodes.get_mut(id).unwrap().mvec);
            }
        }
        let all: Vec<NodeId> = self.nodes.keys().copied().collect();
        let mut lists = BTreeMap::new();
        lists.insert(BitString::new(), self.sorted(all));
        self.levels = vec![Level::new(0, 0, lists)];

        loop {
            let prev = self.levels.last().unwrap();
            let crowded: Vec<NodeId> = prev
                .lists
                .values()
                .filter(|l| l.len() > 1)
                .flatten()
                .copied()
                .collect();
            if crowded.is_empty() {
                break;
            }
            let mut mvec_len = self.mvec_len();
            if prev.prefix_len >= mvec_len {
                match sources.as_deref_mut() {
                    Some(sources) if mvec_len + p <= MAX_RANDOM_MVEC_BITS => {
                        for (id, source) in sources.iter_mut() {
                            let rec = self.nodes.get_mut(id).unwrap();
                            source.draw(p, &mut rec.mvec);
                        }
                        mvec_len += p;
                    }
                    _ => break,
                }
            }
            let index = self.levels.len();
            let prefix_len = (index * p).min(mvec_len);
            let mut grouped: BTreeMap<BitString, Vec<NodeId>> = BTreeMap::new();
            for id in crowded {
                grouped.entry(self.nodes[&id].mvec.prefix(prefix_len)).or_default().push(id);
            }
            let lists = grouped.into_iter().map(|(k, v)| (k, self.sorted(v))).collect();
            self.levels.push(Level::new(index, prefix_len, lists));
        }
    }

    pub fn variant(&self) -> Variant {
        self.variant
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn prefix_bits(&self) -> usize {
        self.prefix_bits
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn mvec_len(&self) -> usize {
        self.nodes.values().next().map_or(0, |r| r.mvec.len())
    }

    pub fn nodes(&self) -> impl Iterator<Item = &NodeRecord> {
        self.nodes.values()
    }

    pub fn node(&self, id: NodeId) -> Option<&NodeRecord> {
        self.nodes.get(&id)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn level(&self, index: usize) -> Option<&Level> {
        self.levels.get(index)
    }

    pub fn level_mut(&mut self, index: usize) -> Option<&mut Level> {
        self.levels.get_mut(index)
    }

    /// Index of the highest level.
    pub fn top_level(&self) -> usize {
        self.levels.len() - 1
    }

    /// Highest level at which `id` is linked.
    pub fn height(&self, id: NodeId) -> Option<usize> {
        self.levels.iter().rposition(|l| l.contains(id))
    }

    /// Node id of the entry with `key` (first by id among duplicates).
    pub fn find_by_key(&self, key: &BitString) -> Option<NodeId> {
        self.nodes
            .values()
            .find(|r| r.key.numeric_cmp(key) == Ordering::Equal)
            .map(|r| r.id)
    }

    pub fn neighbor(&self, id: NodeId, level: usize, dir: Direction) -> Result<Option<NodeId>, OverlayError> {
        if !self.nodes.contains_key(&id) {
            return Err(OverlayError::UnknownNode(id));
        }
        let lvl = self.levels.get(level).ok_or(OverlayError::NotAtLevel { node: id, level })?;
        let (prefix, pos) = lvl.slot(id).ok_or(OverlayError::NotAtLevel { node: id, level })?;
        let list = &lvl.lists[prefix];
        Ok(match dir {
            Direction::Left => pos.checked_sub(1).map(|i| list[i]),
            Direction::Right => list.get(pos + 1).copied(),
        })
    }

    /// True when `a` and `b` sit next to each other in one level-`level` list.
    pub fn adjacent(&self, a: NodeId, b: NodeId, level: usize) -> bool {
        [Direction::Left, Direction::Right]
            .into_iter()
            .any(|d| matches!(self.neighbor(a, level, d), Ok(Some(n)) if n == b))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// Level 0 must be the single list with the empty prefix.
    BaseList,
    /// A node appears at no level at all.
    Orphan,
    /// A list holds an id that is not in the census.
    UnknownNode,
    EmptyList,
    /// List prefix length differs from the level's prefix length.
    PrefixLength,
    /// A member's membership vector does not start with the list prefix.
    PrefixMismatch,
    /// Adjacent members are not strictly ascending by `(key, id)`.
    SortOrder,
    /// A node appears more than once within one level.
    Duplicate,
    /// A node at level `i + 1` is not in the matching level-`i` list.
    Nesting,
    /// A node alone at level `i` still appears above it.
    AboveSingleton,
    /// A node sharing a list at level `i` is missing from level `i + 1`.
    MissingPromotion,
    /// The top level still has a list whose members could be separated.
    Unfinished,
    /// Level prefix lengths do not grow by `p` bits per level.
    LevelPrefix,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub level: usize,
    pub list: Option<BitString>,
    pub rule: Rule,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}", self.level)?;
        if let Some(list) = &self.list {
            write!(f, " list \"{list}\"")?;
        }
        write!(f, " {:?}: {}", self.rule, self.detail)
    }
}

/// Check every structural invariant. Returns an empty vector for a sound overlay.
pub fn validate(ov: &Overlay) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |level: usize, list: Option<&BitString>, rule: Rule, detail: String| {
        out.push(Violation {
            level,
            list: list.cloned(),
            rule,
            detail,
        })
    };
    let mvec_len = ov.mvec_len();

    for (i, level) in ov.levels.iter().enumerate() {
        let expected_len = (i * ov.prefix_bits).min(mvec_len);
        if level.prefix_len != expected_len {
            push(i, None, Rule::LevelPrefix, format!("prefix length {} expected {expected_len}", level.prefix_len));
        }
        if i == 0 && (level.lists.len() != 1 || !level.lists.contains_key(&BitString::new())) {
            push(0, None, Rule::BaseList, format!("{} lists at the base level", level.lists.len()));
        }
        let mut seen = BTreeSet::new();
        for (prefix, list) in &level.lists {
            if list.is_empty() {
                push(i, Some(prefix), Rule::EmptyList, "list has no members".into());
            }
            if prefix.len() != level.prefix_len {
                push(i, Some(prefix), Rule::PrefixLength, format!("prefix has {} bits", prefix.len()));
            }
            for &id in list {
                if !seen.insert(id) {
                    push(i, Some(prefix), Rule::Duplicate, format!("node {id} linked twice"));
                }
                match ov.nodes.get(&id) {
                    None => push(i, Some(prefix), Rule::UnknownNode, format!("node {id}")),
                    Some(rec) if !rec.mvec.starts_with(prefix) => {
                        push(i, Some(prefix), Rule::PrefixMismatch, format!("node {id} mvec {}", rec.mvec))
                    }
                    _ => {}
                }
            }
            for pair in list.windows(2) {
                if let (Some(a), Some(b)) = (ov.nodes.get(&pair[0]), ov.nodes.get(&pair[1])) {
                    if a.order(b) != Ordering::Less {
                        push(
                            i,
                            Some(prefix),
                            Rule::SortOrder,
                            format!("node {} (key {}) precedes node {} (key {})", a.id, a.key, b.id, b.key),
                        );
                    }
                }
            }
        }

        if let Some(below) = i.checked_sub(1).map(|j| &ov.levels[j]) {
            for (&id, (prefix, _)) in &level.slots {
                let Some(rec) = ov.nodes.get(&id) else { continue };
                let want = rec.mvec.prefix(below.prefix_len);
                match below.slot(id) {
                    Some((p, _)) if *p == want => {
                        if below.lists[p].len() == 1 {
                            push(i, Some(prefix), Rule::AboveSingleton, format!("node {id} was alone at L{}", i - 1));
                        }
                    }
                    _ => push(i, Some(prefix), Rule::Nesting, format!("node {id} missing from L{} list \"{want}\"", i - 1)),
                }
            }
        }
        if let Some(above) = ov.levels.get(i + 1) {
            for (prefix, list) in level.lists.iter().filter(|(_, l)| l.len() > 1) {
                for &id in list {
                    if ov.nodes.contains_key(&id) && !above.contains(id) {
                        push(i + 1, Some(prefix), Rule::MissingPromotion, format!("node {id} not promoted from L{i}"));
                    }
                }
            }
        }
    }

    let linked: BTreeSet<NodeId> = ov.levels.iter().flat_map(|l| l.slots.keys().copied()).collect();
    for id in ov.nodes.keys().filter(|id| !linked.contains(id)) {
        push(0, None, Rule::Orphan, format!("node {id} is linked nowhere"));
    }

    if let Some(top) = ov.levels.last() {
        for (prefix, list) in top.lists.iter().filter(|(_, l)| l.len() > 1) {
            let separable = list
                .iter()
                .filter_map(|id| ov.nodes.get(id))
                .map(|r| &r.mvec)
                .collect::<BTreeSet<_>>()
                .len()
                > 1;
            if separable {
                push(top.index, Some(prefix), Rule::Unfinished, format!("{} nodes remain separable", list.len()));
            }
        }
    }
    out
}
