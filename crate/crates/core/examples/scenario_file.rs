//! Load a scenario file, run it, and write results and traces.
//!
//! `cargo run --example scenario_file -- scenarios/eight_nodes.json`

use std::io;

use zskip::scenario::{parse_scenario, write_results_csv, write_traces_jsonl};
use zskip::sim::run_scenario_full;

fn main() {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/eight_nodes.json").into());
    let scenario = match parse_scenario(&std::fs::read_to_string(&path).unwrap()) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("{path}: {e}");
            std::process::exit(2);
        }
    };

    let run = run_scenario_full(&scenario, 1).unwrap();
    write_results_csv(&run.metrics, io::stdout()).unwrap();
    println!();
    write_traces_jsonl(&run.traces, io::stdout()).unwrap();
    if !run.all_match() {
        std::process::exit(1);
    }
}
