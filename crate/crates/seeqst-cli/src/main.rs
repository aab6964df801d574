//! `seeqst`: plan, simulate, and post-process selective quantum state
//! tomography experiments through a file-based pipeline.
//!
//! Exit codes: 0 success, 1 failed verification, 2 validation error,
//! 3 capacity error.

mod commands;

use clap::{Args, Parser, Subcommand};

use commands::CliError;

#[derive(Parser)]
#[command(
    name = "seeqst",
    version,
    about = "Selective quantum state tomography: plan, run, estimate",
    propagate_version = true
)]
struct Cli {
    /// Worker threads for per-circuit simulation and per-subset estimation
    /// (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Map requested density-matrix elements to a measurement plan and
    /// write its circuits.
    Plan(PlanArgs),
    /// Execute a circuit plan on a simulated state with finite shots.
    Run(RunArgs),
    /// Reconstruct elements from measurement records.
    Estimate(EstimateArgs),
    /// Sweep error scaling over (N, M, S) and fit the empirical model.
    Scaling(ScalingArgs),
    /// Run the structural self-check suites.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct PlanArgs {
    /// Number of qubits.
    #[arg(short = 'n', long)]
    n_qubits: usize,

    /// Elements as comma-separated row:col pairs (decimal), or @file with
    /// one pair per line. Conflicts with --full.
    #[arg(long)]
    elements: Option<String>,

    /// Plan the full density matrix.
    #[arg(long)]
    full: bool,

    /// Circuit family: ghz-basis pairs or single-qubit-only settings.
    #[arg(long, default_value = "seeqst", value_parser = ["seeqst", "local"])]
    variant: String,

    /// CNOT schedule for the ghz-basis variant.
    #[arg(long, default_value = "chain", value_parser = ["chain", "all-to-all"])]
    connectivity: String,

    /// Significance threshold t: skip subsets whose requested elements all
    /// have sqrt(rho_ii rho_jj) < t. Requires --diagonal.
    #[arg(long)]
    threshold: Option<f64>,

    /// JSON file with the 2^N measured diagonal populations used by
    /// --threshold.
    #[arg(long)]
    diagonal: Option<String>,

    /// Output directory.
    #[arg(long, default_value = ".")]
    out: String,
}

#[derive(Args)]
struct RunArgs {
    /// Plan directory or circuits.json path.
    #[arg(long)]
    plan: String,

    /// Reference state: `plusy`, `ghz-i`, or `random:<seed>`.
    #[arg(long)]
    state: String,

    /// Shots per circuit.
    #[arg(long, default_value_t = 16384)]
    shots: u64,

    /// Noise channel applied after every gate layer: `none`, `ad:<gamma>`,
    /// or `depol:<p>`.
    #[arg(long, default_value = "none")]
    noise: String,

    /// Master seed; per-circuit streams are derived from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Output directory.
    #[arg(long, default_value = ".")]
    out: String,
}

#[derive(Args)]
struct EstimateArgs {
    /// Records directory or records.json path.
    #[arg(long)]
    records: String,

    /// Circuits file; defaults to circuits.json next to the records.
    #[arg(long)]
    circuits: Option<String>,

    /// Estimator.
    #[arg(long, default_value = "direct", value_parser = ["direct", "mle"])]
    method: String,

    /// Truth state (`plusy`, `ghz-i`, `random:<seed>`) for fidelity and
    /// element-error metrics.
    #[arg(long)]
    truth: Option<String>,

    /// Also write a CSV of mean element error grouped by the CNOT count
    /// of the producing circuits (requires --truth).
    #[arg(long)]
    csv: Option<String>,

    /// MLE: maximum gradient-descent iterations.
    #[arg(long, default_value_t = 2000)]
    max_iters: usize,

    /// MLE: initial learning rate.
    #[arg(long, default_value_t = 0.05)]
    learning_rate: f64,

    /// MLE: relative loss-decrease stopping tolerance.
    #[arg(long, default_value_t = 1e-9)]
    tolerance: f64,

    /// MLE: optimizer seed (warm-start perturbation and minibatch order).
    #[arg(long, default_value_t = 7)]
    mle_seed: u64,

    /// MLE: circuits per stochastic gradient step (full batch if absent).
    #[arg(long)]
    minibatch: Option<usize>,

    /// Output directory.
    #[arg(long, default_value = ".")]
    out: String,
}

#[derive(Args)]
struct ScalingArgs {
    /// Circuit family to sweep.
    #[arg(long, default_value = "sq", value_parser = ["sq", "cnot"])]
    variant: String,

    /// Qubit counts, comma separated.
    #[arg(long, default_value = "3,4,5")]
    n_list: String,

    /// Per-subset shot budgets S (the subset's circuits share 2S samples),
    /// comma separated.
    #[arg(long, default_value = "1024,4096,16384")]
    s_list: String,

    /// Random states per sweep point.
    #[arg(long, default_value_t = 10)]
    states: u64,

    /// Subsets sampled per (N, M) class.
    #[arg(long, default_value_t = 3)]
    subsets_per_m: usize,

    /// Master seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Output directory.
    #[arg(long, default_value = ".")]
    out: String,
}

#[derive(Args)]
struct VerifyArgs {
    /// Largest register for the symplectic commutation sweep.
    #[arg(long, default_value_t = 8)]
    max_n: usize,

    /// Largest register for dense-matrix checks.
    #[arg(long, default_value_t = 4)]
    dense_n: usize,

    /// Largest register for the eigenbasis-contract check.
    #[arg(long, default_value_t = 4)]
    contract_n: usize,
}

fn main() {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build_global();
    }

    let outcome = match cli.command {
        Command::Plan(args) => commands::cmd_plan(
            args.n_qubits,
            args.elements.as_deref(),
            args.full,
            &args.variant,
            &args.connectivity,
            args.threshold,
            args.diagonal.as_deref(),
            &args.out,
        ),
        Command::Run(args) => commands::cmd_run(
            &args.plan,
            &args.state,
            args.shots,
            &args.noise,
            args.seed,
            &args.out,
        ),
        Command::Estimate(args) => commands::cmd_estimate(commands::EstimateRequest {
            records: args.records,
            circuits: args.circuits,
            method: args.method,
            truth: args.truth,
            csv: args.csv,
            max_iters: args.max_iters,
            learning_rate: args.learning_rate,
            tolerance: args.tolerance,
            mle_seed: args.mle_seed,
            minibatch: args.minibatch,
            out: args.out,
        }),
        Command::Scaling(args) => commands::cmd_scaling(commands::ScalingRequest {
            variant: args.variant,
            n_list: args.n_list,
            s_list: args.s_list,
            states: args.states,
            subsets_per_m: args.subsets_per_m,
            seed: args.seed,
            out: args.out,
        }),
        Command::Verify(args) => {
            commands::cmd_verify(args.max_n, args.dense_n, args.contract_n)
        }
    };

    match outcome {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(err.exit_code());
        }
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_capacity() => 3,
            _ => 2,
        }
    }
}
