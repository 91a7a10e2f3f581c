//! `stridesim` command line: run circuits on the compressed simulator,
//! compare against the dense reference, sweep thresholds and exercise the
//! codec on raw files.
//!
//! Exit codes: 0 on success, 1 when a run fails, 2 for usage or
//! configuration errors.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

use stridesim::checkpoint::{checkpoint_load_for, checkpoint_save};
use stridesim::circuit::{build_grover, build_qft, build_random, parse_circuit};
use stridesim::experiment::{
    bench, bench_csv, codec_round_trip, compare, run_summary, scalars_from_le_bytes,
    scalars_to_le_bytes, RunConfig,
};
use stridesim::metrics::{emit_csv, emit_summary_json, RunSummary};
use stridesim::{CircuitProgram, CompressedState, ErrorBoundLadder, RatioThreshold, RunMetrics};

#[derive(Parser)]
#[command(
    name = "stridesim",
    version,
    about = "Compressed-stride state-vector simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a circuit on the compressed simulator.
    Simulate(SimulateArgs),
    /// Run a circuit on both the compressed and the dense simulator.
    Compare(RunArgs),
    /// Compare once per threshold and print a CSV table.
    Bench(BenchArgs),
    /// Round-trip a raw little-endian f64 file through the codec.
    Codec(CodecArgs),
}

#[derive(Args, Clone)]
struct CircuitArgs {
    /// Circuit file, or builtin:qft, builtin:grover, builtin:random.
    #[arg(long)]
    circuit: String,
    /// Qubit count; required for builtins, checked against a file's header.
    #[arg(long)]
    qubits: Option<usize>,
    /// Marked basis index for builtin:grover.
    #[arg(long, default_value_t = 0)]
    marked: usize,
    /// Grover iterations; defaults to round(pi/4 * 2^(n/2)).
    #[arg(long)]
    iterations: Option<usize>,
    /// Gate count for builtin:random.
    #[arg(long, default_value_t = 100)]
    gates: usize,
    /// Seed for builtin:random; other circuits ignore it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Basis state the run starts from.
    #[arg(long, default_value_t = 0)]
    init: usize,
}

#[derive(Args, Clone)]
struct EngineArgs {
    /// Minimum per-stride compression ratio.
    #[arg(long, default_value_t = 16.0)]
    theta: f64,
    /// Comma-separated error bounds, tightest first.
    #[arg(long, default_value = "0,1e-7,1e-6,1e-5,1e-4,1e-3")]
    ladder: String,
    /// log2 of the stride length; defaults to min(qubits, 20).
    #[arg(long)]
    stride_bits: Option<usize>,
    /// Worker threads for stride processing.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Args, Clone)]
struct OutputArgs {
    /// Per-gate metrics CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Run summary JSON.
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    circuit: CircuitArgs,
    #[command(flatten)]
    engine: EngineArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Write a checkpoint of the state.
    #[arg(long)]
    checkpoint_out: Option<PathBuf>,
    /// Stop after this many gates and checkpoint; defaults to the end.
    #[arg(long, requires = "checkpoint_out")]
    checkpoint_at: Option<usize>,
    /// Continue from a checkpoint written for the same circuit and ladder.
    #[arg(long)]
    resume: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    circuit: CircuitArgs,
    #[command(flatten)]
    engine: EngineArgs,
    /// Comma-separated thresholds.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    thetas: Vec<f64>,
    /// Write the table here as well as to standard output.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct CodecArgs {
    /// Raw little-endian f64 file.
    #[arg(long)]
    input: PathBuf,
    /// Absolute error bound; 0 selects the lossless codec.
    #[arg(long)]
    delta: f64,
    /// Write the decoded values here.
    #[arg(long)]
    output: Option<PathBuf>,
}

enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

type CmdResult<T = ()> = Result<T, Failure>;

fn config<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Config(e.into())
}

fn runtime<E: Into<anyhow::Error>>(e: E) -> Failure {
    Failure::Runtime(e.into())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(args) => cmd_simulate(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Codec(args) => cmd_codec(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn load_program(args: &CircuitArgs) -> CmdResult<CircuitProgram> {
    let need_qubits = || {
        args.qubits
            .ok_or_else(|| config(anyhow::anyhow!("--qubits is required for {}", args.circuit)))
    };
    let program = match args.circuit.as_str() {
        "builtin:qft" => build_qft(need_qubits()?).map_err(config)?,
        "builtin:grover" => {
            build_grover(need_qubits()?, args.marked, args.iterations).map_err(config)?
        }
        "builtin:random" => build_random(need_qubits()?, args.gates, args.seed).map_err(config)?,
        path => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read circuit file {path}"))
                .map_err(config)?;
            let mut program = parse_circuit(&text)
                .with_context(|| format!("in circuit file {path}"))
                .map_err(config)?;
            if program.name.is_empty() {
                program.name = path.to_string();
            }
            if let Some(n) = args.qubits {
                if n != program.n_qubits {
                    return Err(config(anyhow::anyhow!(
                        "--qubits {n} does not match {path}, which declares {} qubits",
                        program.n_qubits
                    )));
                }
            }
            program
        }
    };
    Ok(program)
}

fn run_config(engine: &EngineArgs, init: usize) -> CmdResult<RunConfig> {
    let ladder = ErrorBoundLadder::parse(&engine.ladder).map_err(config)?;
    let theta = RatioThreshold::new(engine.theta).map_err(config)?;
    if engine.workers == 0 {
        return Err(config(anyhow::anyhow!("--workers must be at least 1")));
    }
    let mut cfg = RunConfig::new(ladder, theta);
    cfg.stride_bits = engine.stride_bits;
    cfg.workers = engine.workers;
    cfg.init = init;
    Ok(cfg)
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> CmdResult {
    fs::write(path, contents)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(runtime)
}

fn write_outputs(out: &OutputArgs, metrics: &RunMetrics, summary: &RunSummary) -> CmdResult {
    if let Some(path) = &out.csv {
        write_file(path, emit_csv(&metrics.records).map_err(runtime)?)?;
    }
    if let Some(path) = &out.json {
        write_file(path, emit_summary_json(summary).map_err(runtime)?)?;
    }
    Ok(())
}

fn field(key: &str, value: String) {
    println!("{key:<22}{value}");
}

fn print_summary(summary: &RunSummary, metrics: &RunMetrics) {
    field("gates", format!("{}", metrics.records.len()));
    field(
        "overall_min_ratio",
        format!("{:.6}", summary.overall_min_ratio),
    );
    field("qubit_gain", format!("{}", summary.qubit_gain));
    field(
        "threshold_violations",
        format!("{}", summary.threshold_violations),
    );
    if metrics.norm_collapses > 0 {
        field("zero_norm_gates", format!("{}", metrics.norm_collapses));
    }
    field("total_elapsed_s", format!("{:.6}", summary.total_elapsed));
    if let Some(f) = summary.fidelity {
        field("fidelity", format!("{f:.12}"));
    }
    if let Some(t) = summary.reference_elapsed {
        field("reference_elapsed_s", format!("{t:.6}"));
    }
    if let Some(o) = summary.overhead_factor {
        field("overhead_factor", format!("{o:.3}"));
    }
}

fn cmd_simulate(args: SimulateArgs) -> CmdResult {
    let run = &args.run;
    let program = load_program(&run.circuit)?;
    let cfg = run_config(&run.engine, run.circuit.init)?;
    let geometry = cfg.geometry(program.n_qubits).map_err(config)?;
    let sim = cfg.simulator().map_err(config)?;
    let fingerprint = cfg.ladder.fingerprint();

    let mut state = match &args.resume {
        Some(path) => {
            let ckpt = checkpoint_load_for(path, &geometry)
                .with_context(|| format!("cannot resume from {}", path.display()))
                .map_err(config)?;
            if ckpt.ladder_fingerprint != fingerprint {
                return Err(config(anyhow::anyhow!(
                    "{} was written with a different ladder",
                    path.display()
                )));
            }
            if ckpt.state.gates_applied() as usize > program.len() {
                return Err(config(anyhow::anyhow!(
                    "{} is {} gates in, past the end of the circuit",
                    path.display(),
                    ckpt.state.gates_applied()
                )));
            }
            ckpt.state
        }
        None => CompressedState::init_basis_state(geometry, cfg.init).map_err(config)?,
    };

    let from = state.gates_applied() as usize;
    let stop = args.checkpoint_at.unwrap_or(program.len());
    if stop < from || stop > program.len() {
        return Err(config(anyhow::anyhow!(
            "--checkpoint-at {stop} is outside {from}..={}",
            program.len()
        )));
    }
    let mut metrics = RunMetrics {
        initial_min_ratio: state.min_ratio(),
        overall_min_ratio: state.min_ratio(),
        ..RunMetrics::default()
    };
    let start = std::time::Instant::now();
    sim.run_range(&mut state, &program, from, stop, &mut metrics)
        .map_err(runtime)?;
    metrics.total_elapsed = start.elapsed().as_secs_f64();

    if let Some(path) = &args.checkpoint_out {
        checkpoint_save(&state, fingerprint, path)
            .with_context(|| format!("cannot write checkpoint {}", path.display()))
            .map_err(runtime)?;
    }
    let summary = run_summary(&metrics, None, None);
    write_outputs(&run.output, &metrics, &summary)?;
    field(
        "circuit",
        format!(
            "{} ({} qubits, {})",
            program.name, program.n_qubits, geometry
        ),
    );
    print_summary(&summary, &metrics);
    if stop < program.len() {
        field("stopped_at_gate", format!("{stop}"));
    }
    Ok(())
}

fn cmd_compare(args: RunArgs) -> CmdResult {
    let program = load_program(&args.circuit)?;
    let cfg = run_config(&args.engine, args.circuit.init)?;
    check_dense_guard(&program, &cfg)?;
    cfg.geometry(program.n_qubits).map_err(config)?;
    let out = compare(&program, &cfg).map_err(runtime)?;
    write_outputs(&args.output, &out.metrics, &out.summary)?;
    field(
        "circuit",
        format!("{} ({} qubits)", program.name, program.n_qubits),
    );
    print_summary(&out.summary, &out.metrics);
    field("compressed_norm", format!("{:.12}", out.compressed_norm));
    field("reference_norm", format!("{:.12}", out.reference_norm));
    Ok(())
}

fn check_dense_guard(program: &CircuitProgram, cfg: &RunConfig) -> CmdResult {
    if program.n_qubits > cfg.dense_limit {
        return Err(config(anyhow::anyhow!(
            "{} qubits exceeds the dense reference limit of {}",
            program.n_qubits,
            cfg.dense_limit
        )));
    }
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> CmdResult {
    if args.thetas.is_empty() {
        return Err(config(anyhow::anyhow!("--thetas needs at least one value")));
    }
    for &t in &args.thetas {
        RatioThreshold::new(t).map_err(config)?;
    }
    let program = load_program(&args.circuit)?;
    let cfg = run_config(&args.engine, args.circuit.init)?;
    check_dense_guard(&program, &cfg)?;
    cfg.geometry(program.n_qubits).map_err(config)?;
    let rows = bench(&program, &cfg, &args.thetas).map_err(runtime)?;
    let table = bench_csv(&rows).map_err(runtime)?;
    if let Some(path) = &args.csv {
        write_file(path, &table)?;
    }
    print!("{table}");
    Ok(())
}

fn cmd_codec(args: CodecArgs) -> CmdResult {
    let bytes = fs::read(&args.input)
        .with_context(|| format!("cannot read {}", args.input.display()))
        .map_err(config)?;
    let scalars = scalars_from_le_bytes(&bytes)
        .with_context(|| format!("{} is not a whole number of doubles", args.input.display()))
        .map_err(config)?;
    if !(args.delta >= 0.0 && args.delta.is_finite()) {
        return Err(config(anyhow::anyhow!(
            "--delta must be finite and non-negative"
        )));
    }
    let report = codec_round_trip(&scalars, args.delta).map_err(runtime)?;
    if let Some(path) = &args.output {
        write_file(path, scalars_to_le_bytes(&report.decoded))?;
    }
    field("scalars", format!("{}", scalars.len()));
    field(
        "codec",
        if args.delta == 0.0 {
            "lossless"
        } else {
            "lossy"
        }
        .to_string(),
    );
    field("input_bytes", format!("{}", bytes.len()));
    field(
        "compressed_bytes",
        format!("{}", report.block.encoded_len()),
    );
    field("ratio", format!("{:.6}", report.ratio));
    field("max_error", format!("{:e}", report.max_error));
    Ok(())
}
