//! Command-line front end. Exit codes: 0 success, 1 completed with
//! correctness violations, 2 input error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::bits::BitString;
use crate::overlay::{validate, Variant};
use crate::scenario::{self, parse_scenario};
use crate::sim::{self, Scenario, ScenarioError, SimError};
use crate::zorder::{self, Coordinates, Geometry, ZKey};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "zskip", version, about = "Z-order keys and skip-graph range queries")]
struct Cli {
    /// Override the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output format for results and comparison tables.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write results here instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Write per-query traces (JSON lines) to this path.
    #[arg(long, global = true)]
    trace: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Encode coordinates to a z-order key or decode a key.
    Zorder {
        #[command(subcommand)]
        op: ZorderOp,
    },
    /// Run every query of a scenario and write one metrics row per (query, variant).
    Run { scenario: PathBuf },
    /// Build the scenario's overlays and report structural violations.
    Validate {
        scenario: PathBuf,
        #[arg(long)]
        variant: Option<Variant>,
    },
    /// Compare message counts across the scenario's variants.
    Compare { scenario: PathBuf },
}

#[derive(Debug, Subcommand)]
enum ZorderOp {
    Encode {
        /// One value per dimension
        coords: Vec<u64>,
        /// Dimensions
        #[arg(long)]
        k: usize,
        /// Bits per coordinate
        #[arg(long)]
        b: u32,
    },
    Decode {
        /// Key as a k*b character string of 0s and 1s
        key: String,
        /// Dimensions
        #[arg(long)]
        k: usize,
        /// Bits per coordinate
        #[arg(long)]
        b: u32,
    },
}

struct Failure {
    code: i32,
    message: String,
}

fn input(message: impl ToString) -> Failure {
    Failure {
        code: EXIT_INPUT,
        message: message.to_string(),
    }
}

/// Parse `args` (including the program name) and run. Returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let sink: &mut dyn Write = if e.use_stderr() { err } else { out };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match dispatch(&cli, out) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<i32, Failure> {
    match &cli.command {
        Command::Zorder { op } => zorder_cmd(op, out),
        Command::Run { scenario } => run_cmd(cli, scenario, out),
        Command::Validate { scenario, variant } => validate_cmd(cli, scenario, *variant, out),
        Command::Compare { scenario } => compare_cmd(cli, scenario, out),
    }
}

fn zorder_cmd(op: &ZorderOp, out: &mut dyn Write) -> Result<i32, Failure> {
    match op {
        ZorderOp::Encode { coords, k, b } => {
            let geometry = Geometry::new(*k, *b).map_err(input)?;
            let key = zorder::encode(&Coordinates::new(coords.clone()), geometry).map_err(input)?;
            let decimal = key.bits().to_u128().map_or_else(|| "-".into(), |v| v.to_string());
            writeln!(out, "{} ({decimal})", key.bits()).map_err(input)?;
        }
        ZorderOp::Decode { key, k, b } => {
            let geometry = Geometry::new(*k, *b).map_err(input)?;
            let bits: BitString = key.parse().map_err(input)?;
            let key = ZKey::from_bits(bits, geometry).map_err(input)?;
            writeln!(out, "{}", zorder::decode(&key).map_err(input)?).map_err(input)?;
        }
    }
    Ok(EXIT_OK)
}

fn load(cli: &Cli, path: &Path) -> Result<Scenario, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
    let mut s = parse_scenario(&text).map_err(|e| scenario_failure(path, e))?;
    if let Some(seed) = cli.seed {
        s.seed = seed;
        s.validate().map_err(|e| scenario_failure(path, e))?;
    }
    Ok(s)
}

fn scenario_failure(path: &Path, e: ScenarioError) -> Failure {
    input(format!("{}: {e}", path.display()))
}

fn sim_failure(e: SimError) -> Failure {
    input(e)
}

/// Run `write` against the `--output` file, or stdout when none was given.
fn emit(
    cli: &Cli,
    out: &mut dyn Write,
    write: impl FnOnce(&mut dyn Write) -> Result<(), String>,
) -> Result<(), Failure> {
    match &cli.output {
        Some(path) => {
            let file = File::create(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            write(&mut w).map_err(input)?;
            w.flush().map_err(input)
        }
        None => write(out).map_err(input),
    }
}

fn run_cmd(cli: &Cli, path: &Path, out: &mut dyn Write) -> Result<i32, Failure> {
    let s = load(cli, path)?;
    let run = sim::run_scenario_full(&s, 1).map_err(sim_failure)?;
    emit(cli, out, |w| match cli.format {
        Format::Csv => scenario::write_results_csv(&run.metrics, w).map_err(|e| e.to_string()),
        Format::Json => scenario::write_results_json(&run.metrics, w).map_err(|e| e.to_string()),
    })?;
    if let Some(trace_path) = &cli.trace {
        let file = File::create(trace_path).map_err(|e| input(format!("{}: {e}", trace_path.display())))?;
        let mut w = BufWriter::new(file);
        scenario::write_traces_jsonl(&run.traces, &mut w).map_err(input)?;
        w.flush().map_err(input)?;
    }
    Ok(if run.all_match() { EXIT_OK } else { EXIT_VIOLATION })
}

fn validate_cmd(cli: &Cli, path: &Path, variant: Option<Variant>, out: &mut dyn Write) -> Result<i32, Failure> {
    let s = load(cli, path)?;
    let variants = match variant {
        Some(v) => vec![v],
        None if s.variants.is_empty() => Variant::ALL.to_vec(),
        None => s.variants.clone(),
    };
    let mut clean = true;
    for v in variants {
        let ov = s.build(v).map_err(|e| scenario_failure(path, e))?;
        let violations = validate(&ov);
        if violations.is_empty() {
            writeln!(out, "{v}: ok ({} nodes, {} levels)", ov.len(), ov.levels().len()).map_err(input)?;
        } else {
            clean = false;
            writeln!(out, "{v}: {} violation(s)", violations.len()).map_err(input)?;
            for violation in violations {
                writeln!(out, "  {violation}").map_err(input)?;
            }
        }
    }
    Ok(if clean { EXIT_OK } else { EXIT_VIOLATION })
}

fn compare_cmd(cli: &Cli, path: &Path, out: &mut dyn Write) -> Result<i32, Failure> {
    let s = load(cli, path)?;
    let table = sim::compare_variants(&s).map_err(sim_failure)?;
    emit(cli, out, |w| match cli.format {
        Format::Csv => scenario::write_comparison_csv(&table, w).map_err(|e| e.to_string()),
        Format::Json => serde_json::to_writer_pretty(&mut *w, &table)
            .map_err(|e| e.to_string())
            .and_then(|_| writeln!(w).map_err(|e| e.to_string())),
    })?;
    Ok(EXIT_OK)
}

/// Entry point for the binary.
pub fn main_exit() -> i32 {
    let stdout = io::stdout();
    let stderr = io::stderr();
    run(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
