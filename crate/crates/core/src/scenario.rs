//! On-disk formats: JSON scenario files in, CSV/JSON results out.
//!
//! ```json
//! {
//!   "seed": 7, "k": 2, "b": 3,
//!   "p": { "inverted": 2 },
//!   "nodes": [ { "id": 1, "coords": [0, 1], "reading": 2 } ],
//!   "overrides": { "uni_standard": { "mvecs": { "1": "010" } } },
//!   "variants": ["uni_standard", "multi_standard", "inverted"],
//!   "queries": [ { "kind": "rect", "lo": [2, 0], "hi": [3, 1], "inject": 1 } ]
//! }
//! ```
//!
//! `p` is either one number for every variant or a per-variant map. Bit
//! strings are written as `"0"`/`"1"` text. Unknown fields are rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use serde::de::{self, MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize};

use crate::bits::BitString;
use crate::overlay::{NodeId, NodeSpec, Overrides, Variant, DEFAULT_READING_BITS};
use crate::query::{QueryRange, RangeQuery};
use crate::sim::{ComparisonTable, QueryMetrics, Scenario, ScenarioError, TraceRecord};
use crate::zorder::{Coordinates, Geometry};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub seed: u64,
    pub k: usize,
    pub b: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<PrefixBits>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reading_bits: Option<u32>,
    pub nodes: Vec<NodeEntry>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub overrides: BTreeMap<Variant, OverrideEntry>,
    pub variants: Vec<Variant>,
    #[serde(default)]
    pub queries: Vec<QueryEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PrefixBits {
    All(usize),
    PerVariant(BTreeMap<Variant, usize>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeEntry {
    pub id: NodeId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coords: Option<Vec<u64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reading: Option<u64>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverrideEntry {
    #[serde(default, deserialize_with = "unique_map", skip_serializing_if = "BTreeMap::is_empty")]
    pub mvecs: BTreeMap<NodeId, BitString>,
    #[serde(default, deserialize_with = "unique_map", skip_serializing_if = "BTreeMap::is_empty")]
    pub keys: BTreeMap<NodeId, BitString>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum QueryEntry {
    Scalar { lo: u64, hi: u64, inject: NodeId },
    Rect { lo: Vec<u64>, hi: Vec<u64>, inject: NodeId },
}

/// Map deserializer that rejects a node id given twice.
fn unique_map<'de, D>(deserializer: D) -> Result<BTreeMap<NodeId, BitString>, D::Error>
where
    D: Deserializer<'de>,
{
    struct Unique;

    impl<'de> Visitor<'de> for Unique {
        type Value = BTreeMap<NodeId, BitString>;

        fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            f.write_str("a map from node id to bit string")
        }

        fn visit_map<A: MapAccess<'de>>(self, mut access: A) -> Result<Self::Value, A::Error> {
            let mut out = BTreeMap::new();
            while let Some((id, bits)) = access.next_entry::<String, BitString>()? {
                let id: u64 = id.parse().map_err(|_| de::Error::custom(format!("invalid node id {id:?}")))?;
                if out.insert(NodeId(id), bits).is_some() {
                    return Err(de::Error::custom(format!("node {id} overridden twice")));
                }
            }
            Ok(out)
        }
    }

    deserializer.deserialize_map(Unique)
}

impl ScenarioFile {
    /// Parse JSON text. Errors carry the path of the offending field.
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            ScenarioError::new(if path == "." { "$".to_string() } else { path }, e.into_inner().to_string())
        })
    }

    pub fn into_scenario(self) -> Result<Scenario, ScenarioError> {
        let geometry = Geometry::new(self.k, self.b).map_err(|e| ScenarioError::new("k/b", e.to_string()))?;
        let nodes = self
            .nodes
            .into_iter()
            .map(|n| NodeSpec {
                id: n.id,
                coords: n.coords.map(Coordinates::new),
                reading: n.reading,
            })
            .collect();
        let mut s = Scenario::new(self.seed, geometry, nodes);
        s.reading_bits = self.reading_bits.unwrap_or(DEFAULT_READING_BITS);
        s.prefix_bits = match self.p {
            None => BTreeMap::new(),
            Some(PrefixBits::All(p)) => Variant::ALL.iter().map(|&v| (v, p)).collect(),
            Some(PrefixBits::PerVariant(m)) => m,
        };
        s.overrides = self
            .overrides
            .into_iter()
            .map(|(v, o)| {
                (
                    v,
                    Overrides {
                        mvecs: o.mvecs,
                        keys: o.keys,
                    },
                )
            })
            .collect();
        s.variants = self.variants;
        s.queries = self
            .queries
            .into_iter()
            .map(|q| match q {
                QueryEntry::Scalar { lo, hi, inject } => RangeQuery::scalar(lo, hi, inject),
                QueryEntry::Rect { lo, hi, inject } => RangeQuery::rect(lo, hi, inject),
            })
            .collect();
        s.validate()?;
        Ok(s)
    }

    pub fn from_scenario(s: &Scenario) -> Self {
        let p = (!s.prefix_bits.is_empty()).then(|| PrefixBits::PerVariant(s.prefix_bits.clone()));
        Self {
            seed: s.seed,
            k: s.geometry.k,
            b: s.geometry.b,
            p,
            reading_bits: (s.reading_bits != DEFAULT_READING_BITS).then_some(s.reading_bits),
            nodes: s
                .nodes
                .iter()
                .map(|n| NodeEntry {
                    id: n.id,
                    coords: n.coords.as_ref().map(|c| c.values().to_vec()),
                    reading: n.reading,
                })
                .collect(),
            overrides: s
                .overrides
                .iter()
                .filter(|(_, o)| !o.is_empty())
                .map(|(v, o)| {
                    (
                        *v,
                        OverrideEntry {
                            mvecs: o.mvecs.clone(),
                            keys: o.keys.clone(),
                        },
                    )
                })
                .collect(),
            variants: s.variants.clone(),
            queries: s
                .queries
                .iter()
                .map(|q| match &q.range {
                    QueryRange::Scalar { lo, hi } => QueryEntry::Scalar {
                        lo: *lo,
                        hi: *hi,
                        inject: q.inject_at,
                    },
                    QueryRange::Rect { lo, hi } => QueryEntry::Rect {
                        lo: lo.values().to_vec(),
                        hi: hi.values().to_vec(),
                        inject: q.inject_at,
                    },
                })
                .collect(),
        }
    }
}

/// Parse and validate a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    ScenarioFile::parse(text)?.into_scenario()
}

pub const RESULTS_HEADER: [&str; 7] = [
    "query_id",
    "variant",
    "messages",
    "result_size",
    "exact_result_size",
    "oracle_match",
    "terminated_by",
];

pub fn write_results_csv<W: Write>(metrics: &[QueryMetrics], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULTS_HEADER)?;
    for m in metrics {
        w.write_record([
            m.query_id.to_string(),
            m.variant.to_string(),
            m.messages.to_string(),
            m.result_size.to_string(),
            m.exact_result_size.to_string(),
            m.oracle_match.to_string(),
            m.terminated_by.name().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_results_json<W: Write>(metrics: &[QueryMetrics], mut out: W) -> std::io::Result<()> {
    serde_json::to_writer_pretty(&mut out, metrics)?;
    writeln!(out)
}

/// One JSON document per line, in run order.
pub fn write_traces_jsonl<W: Write>(traces: &[TraceRecord], mut out: W) -> std::io::Result<()> {
    for t in traces {
        serde_json::to_writer(&mut out, t)?;
        writeln!(out)?;
    }
    Ok(())
}

/// Per-query rows followed by one aggregate line per variant and the win fractions.
pub fn write_comparison_csv<W: Write>(table: &ComparisonTable, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["row", "query_id", "variant", "shape", "messages", "total", "mean", "median", "max", "win_fraction"])?;
    for r in &table.rows {
        w.write_record([
            "query".to_string(),
            r.query_id.to_string(),
            r.variant.to_string(),
            r.shape.name().to_string(),
            r.messages.to_string(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
            String::new(),
        ])?;
    }
    let agg = &table.aggregate;
    for (v, s) in &agg.per_variant {
        w.write_record([
            "aggregate".to_string(),
            String::new(),
            v.to_string(),
            String::new(),
            s.queries.to_string(),
            s.total.to_string(),
            s.mean.to_string(),
            s.median.to_string(),
            s.max.to_string(),
            String::new(),
        ])?;
    }
    let mut win_row = |shape: &str, frac: String| {
        w.write_record(["inverted_win", "", "", shape, "", "", "", "", "", frac.as_str()])
    };
    win_row("all", agg.inverted_win.to_string())?;
    for (shape, f) in &agg.inverted_win_by_shape {
        win_row(shape.name(), f.to_string())?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "seed": 3, "k": 2, "b": 3,
        "nodes": [{"id": 1, "coords": [0, 1]}, {"id": 2, "coords": [2, 0]}],
        "variants": ["inverted"],
        "queries": [{"kind": "rect", "lo": [0, 0], "hi": [3, 3], "inject": 2}]
    }"#;

    #[test]
    fn parses_minimal() {
        let s = parse_scenario(MINIMAL).unwrap();
        assert_eq!(s.nodes.len(), 2);
        assert_eq!(s.queries[0], RangeQuery::rect([0, 0], [3, 3], NodeId(2)));
    }

    #[test]
    fn unknown_fields_rejected_with_path() {
        let text = MINIMAL.replace("\"inject\": 2", "\"inject\": 2, \"bogus\": 1");
        let e = parse_scenario(&text).unwrap_err();
        assert!(e.path.starts_with("queries[0]"), "{e}");
        let text = MINIMAL.replace("\"seed\": 3", "\"seed\": 3, \"colour\": 1");
        assert!(parse_scenario(&text).is_err());
        let text = MINIMAL.replace("{\"id\": 1, \"coords\": [0, 1]}", "{\"id\": 1, \"coords\": [0, 1], \"x\": 0}");
        assert!(parse_scenario(&text).unwrap_err().path.starts_with("nodes[0]"));
    }

    #[test]
    fn bad_bits_and_duplicates() {
        let text = MINIMAL.replace(
            "\"variants\"",
            "\"overrides\": {\"inverted\": {\"keys\": {\"1\": \"01x\"}}}, \"variants\"",
        );
        let e = parse_scenario(&text).unwrap_err();
        assert!(e.path.contains("overrides"), "{e}");
        let text = MINIMAL.replace(
            "\"variants\"",
            "\"overrides\": {\"inverted\": {\"keys\": {\"1\": \"01\", \"1\": \"10\"}}}, \"variants\"",
        );
        assert!(parse_scenario(&text).unwrap_err().message.contains("twice"));
        let text = MINIMAL.replace("{\"id\": 2, \"coords\": [2, 0]}", "{\"id\": 1, \"coords\": [2, 0]}");
        assert_eq!(parse_scenario(&text).unwrap_err().path, "nodes[1].id");
    }

    #[test]
    fn prefix_bits_forms() {
        let all = MINIMAL.replace("\"seed\": 3", "\"seed\": 3, \"p\": 1");
        assert_eq!(parse_scenario(&all).unwrap().prefix_bits[&Variant::Inverted], 1);
        let per = MINIMAL.replace("\"seed\": 3", "\"seed\": 3, \"p\": {\"inverted\": 2}");
        assert_eq!(parse_scenario(&per).unwrap().prefix_bits.len(), 1);
    }

    #[test]
    fn scenario_file_roundtrip() {
        let s = parse_scenario(MINIMAL).unwrap();
        let text = serde_json::to_string(&ScenarioFile::from_scenario(&s)).unwrap();
        assert_eq!(parse_scenario(&text).unwrap(), s);
    }

    #[test]
    fn header_only_csv() {
        let mut buf = Vec::new();
        write_results_csv(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "query_id,variant,messages,result_size,exact_result_size,oracle_match,terminated_by\n"
        );
    }
}
