use std::path::{Path, PathBuf};

use zskip::cli;
use zskip::scenario::ScenarioFile;
use zskip::sim::{self, RandomScenario, RectShape};
use zskip::Geometry;

fn zskip(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("zskip").chain(args.iter().copied());
    let code = cli::run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn paper() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios/eight_nodes.json").display().to_string()
}

fn write_scenario(dir: &Path, name: &str, s: &sim::Scenario) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(&ScenarioFile::from_scenario(s)).unwrap()).unwrap();
    path
}

#[test]
fn zorder_encode_decode() {
    assert_eq!(zskip(&["zorder", "encode", "2", "0", "--k", "2", "--b", "3"]), (0, "001000 (8)\n".into(), String::new()));
    assert_eq!(zskip(&["zorder", "encode", "1", "2", "5", "--k", "3", "--b", "3"]).1, "001010101 (85)\n");
    assert_eq!(zskip(&["zorder", "decode", "000000", "--k", "2", "--b", "3"]).1, "(0,0)\n");
    assert_eq!(zskip(&["zorder", "decode", "001001", "--k", "2", "--b", "3"]).1, "(2,1)\n");
}

#[test]
fn zorder_input_errors() {
    let (code, _, err) = zskip(&["zorder", "encode", "9", "0", "--k", "2", "--b", "3"]);
    assert_eq!(code, 2);
    assert!(err.contains("does not fit in 3 bits"), "{err}");
    assert_eq!(zskip(&["zorder", "decode", "0010", "--k", "2", "--b", "3"]).0, 2);
    assert_eq!(zskip(&["zorder", "decode", "00x000", "--k", "2", "--b", "3"]).0, 2);
    assert_eq!(zskip(&["zorder", "encode", "1", "--k", "2", "--b", "3"]).0, 2);
    assert_eq!(zskip(&["zorder", "encode", "abc", "--k", "2", "--b", "3"]).0, 2);
    assert_eq!(zskip(&["bogus"]).0, 2);
}

#[test]
fn run_paper_scenario() {
    let (code, out, _) = zskip(&["run", &paper()]);
    assert_eq!(code, 0);
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows[0], "query_id,variant,messages,result_size,exact_result_size,oracle_match,terminated_by");
    assert_eq!(rows[1], "0,uni_standard,4,3,3,true,range_exhausted");
    assert_eq!(rows[3], "1,inverted,2,2,2,true,full_prefix_match");
    assert_eq!(rows[5], "2,inverted,3,0,0,true,no_ascent_found");

    let (code, json, _) = zskip(&["run", &paper(), "--format", "json"]);
    assert_eq!(code, 0);
    let parsed: Vec<sim::QueryMetrics> = serde_json::from_str(&json).unwrap();
    assert_eq!(parsed.len(), 5);
}

#[test]
fn run_without_queries_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let mut s = zskip::scenario::parse_scenario(&std::fs::read_to_string(paper()).unwrap()).unwrap();
    s.queries.clear();
    let path = write_scenario(dir.path(), "empty.json", &s);
    let (code, out, _) = zskip(&["run", path.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 1);
}

#[test]
fn input_errors_exit_2_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"seed": 1, "k": 2, "b": 3, "nodes": [{"id": 1, "coords": [9, 0]}], "variants": ["inverted"]}"#)
        .unwrap();
    let (code, _, err) = zskip(&["run", bad.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("nodes[0].coords"), "{err}");

    std::fs::write(&bad, r#"{"seed": 1, "k": 2, "b": 3, "nodes": [], "variants": [], "extra": 1}"#).unwrap();
    let (code, _, err) = zskip(&["validate", bad.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("extra"), "{err}");

    // two nodes sharing (key, id) cannot be expressed: duplicate ids are rejected
    std::fs::write(
        &bad,
        r#"{"seed": 1, "k": 2, "b": 3, "variants": ["inverted"],
            "nodes": [{"id": 1, "coords": [1, 1]}, {"id": 1, "coords": [1, 1]}],
            "overrides": {"inverted": {"keys": {"1": "0001"}}}}"#,
    )
    .unwrap();
    let (code, _, err) = zskip(&["validate", bad.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("nodes[1].id"), "{err}");

    assert_eq!(zskip(&["run", "/nonexistent/scenario.json"]).0, 2);
}

#[test]
fn validate_paper_and_fuzz_corpus() {
    let (code, out, _) = zskip(&["validate", &paper()]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 3);
    assert_eq!(zskip(&["validate", &paper(), "--variant", "inverted"]).0, 0);

    let dir = tempfile::tempdir().unwrap();
    for seed in 0..100u64 {
        let g = Geometry::new(1 + seed as usize % 3, 1 + (seed / 3) as u32 % 5).unwrap();
        let mut spec = RandomScenario::new(1 + (seed as usize * 7) % 64, g);
        spec.one_bit_levels = seed % 2 == 1;
        let s = sim::random_scenario(seed, &spec);
        let path = write_scenario(dir.path(), &format!("fuzz{seed}.json"), &s);
        let (code, out, err) = zskip(&["validate", path.to_str().unwrap()]);
        assert_eq!(code, 0, "seed {seed}: {out}{err}");
    }
}

#[test]
fn compare_and_seed_override() {
    let (code, out, _) = zskip(&["compare", &paper()]);
    assert_eq!(code, 0);
    assert!(out.lines().any(|l| l.starts_with("inverted_win,,,all")));

    let dir = tempfile::tempdir().unwrap();
    let mut spec = RandomScenario::new(256, Geometry::new(2, 5).unwrap());
    spec.variants = vec![zskip::Variant::MultiStandard, zskip::Variant::Inverted];
    spec.rect_queries = 50;
    spec.rect_shape = RectShape::Cell;
    let s = sim::random_scenario(17, &spec);
    let path = write_scenario(dir.path(), "big.json", &s);
    let p = path.to_str().unwrap();
    let (code, out, _) = zskip(&["run", p]);
    assert_eq!(code, 0);
    assert_eq!(out.lines().count(), 101);
    let (a, b) = (zskip(&["run", p, "--seed", "5"]).1, zskip(&["run", p, "--seed", "6"]).1);
    assert_ne!(a, b, "seed override should change random components");

    let mut single = s.clone();
    single.variants.truncate(1);
    let path = write_scenario(dir.path(), "single.json", &single);
    assert_eq!(zskip(&["compare", path.to_str().unwrap()]).0, 2);

    let json = zskip(&["compare", &paper(), "--format", "json"]).1;
    let table: sim::ComparisonTable = serde_json::from_str(&json).unwrap();
    assert_eq!(table.rows.len(), 5);
}

#[test]
fn output_files_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let files: Vec<_> = (0..2)
        .map(|i| {
            let out = dir.path().join(format!("r{i}.csv"));
            let trace = dir.path().join(format!("t{i}.jsonl"));
            let code = zskip(&["run", &paper(), "--output", out.to_str().unwrap(), "--trace", trace.to_str().unwrap()]).0;
            assert_eq!(code, 0);
            (std::fs::read(out).unwrap(), std::fs::read_to_string(trace).unwrap())
        })
        .collect();
    assert_eq!(files[0], files[1]);
    assert_eq!(files[0].1.lines().count(), 5);
}
