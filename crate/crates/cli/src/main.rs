use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use clique_decomp::experiment::{
    self, run_certify, run_dimacs, run_planted_sweep, run_random_batch, run_single, ExperimentKind,
    ExperimentSpec, SolverOverrides,
};
use clique_decomp::graph::{generate_bernoulli_symmetric, generate_planted, generate_planted_shuffled, parse_dimacs_str};
use clique_decomp::{Error, Graph, Model, Result};

#[derive(Parser, Debug)]
#[command(name = "clique-decomp", version, about = "Low-rank plus sparse decomposition for maximum clique recovery")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// JSON experiment spec; command-line flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Use this λ directly instead of α/√N.
    #[arg(long, global = true)]
    lambda: Option<f64>,
    #[arg(long, global = true)]
    rho: Option<f64>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    delta: Option<f64>,
    #[arg(long = "max-iter", global = true)]
    max_iter: Option<usize>,
    /// Iterations between weight refreshes.
    #[arg(long = "epoch-length", global = true)]
    epoch_length: Option<usize>,
    #[arg(long, global = true)]
    model: Option<Model>,
    /// Record wall-clock times; output is then no longer reproducible byte for byte.
    #[arg(long, global = true)]
    timings: bool,
    /// Include per-iteration traces in JSON output.
    #[arg(long, global = true)]
    traces: bool,
    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum GraphFormat {
    Json,
    Dimacs,
}

#[derive(Args, Debug, Default)]
struct GridArgs {
    /// Graph sizes N, comma separated.
    #[arg(long = "n-vertices", value_delimiter = ',')]
    n_vertices: Vec<usize>,
    /// Planted clique sizes n, comma separated.
    #[arg(long = "clique-sizes", value_delimiter = ',')]
    clique_sizes: Vec<usize>,
    /// Use n = s, 2s, … below N when no sizes are listed.
    #[arg(long = "clique-stride")]
    clique_stride: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a planted or Bernoulli random graph.
    Generate {
        #[arg(long = "n-vertices")]
        n_vertices: usize,
        /// Plant a clique of this size; omit for a plain Bernoulli graph.
        #[arg(long = "clique-size")]
        clique_size: Option<usize>,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        /// Place the clique on shuffled labels instead of 0..n.
        #[arg(long)]
        shuffle: bool,
        #[arg(long = "graph-format", value_enum, default_value_t = GraphFormat::Json)]
        graph_format: GraphFormat,
    },
    /// Decompose one graph.
    Solve {
        /// Graph file (JSON document or DIMACS).
        #[arg(long, conflicts_with_all = ["n_vertices", "clique_size"])]
        input: Option<PathBuf>,
        /// Generate a planted instance instead of reading a file.
        #[arg(long = "n-vertices")]
        n_vertices: Option<usize>,
        #[arg(long = "clique-size", requires = "n_vertices")]
        clique_size: Option<usize>,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
    },
    /// Planted-clique sweep over (N, n).
    Sweep {
        #[command(flatten)]
        grid: GridArgs,
        /// Also run the unweighted model on every instance.
        #[arg(long = "compare-regular")]
        compare_regular: bool,
        /// Start from a random feasible point instead of zeros.
        #[arg(long = "random-init")]
        random_init: bool,
        /// Where to write per-cell means (CSV); defaults next to --out.
        #[arg(long = "aggregate-out")]
        aggregate_out: Option<PathBuf>,
    },
    /// Bernoulli graphs with no planted clique.
    RandomBatch {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long = "aggregate-out")]
        aggregate_out: Option<PathBuf>,
    },
    /// Solve DIMACS benchmark files.
    Dimacs {
        files: Vec<PathBuf>,
    },
    /// Build and check dual certificates on planted instances.
    Certify {
        #[command(flatten)]
        grid: GridArgs,
        /// Golfing steps (default 20⌈ln N⌉).
        #[arg(long)]
        k: Option<usize>,
        /// Golfing sampling rate (default derived from the density of the sparse support).
        #[arg(long)]
        q: Option<f64>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long = "aggregate-out")]
        aggregate_out: Option<PathBuf>,
    },
}

fn load_spec(global: &GlobalArgs, kind: ExperimentKind) -> Result<ExperimentSpec> {
    let mut spec = match &global.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::InvalidArgument(format!("cannot read config {}: {e}", path.display())))?;
            ExperimentSpec::from_json(&text)
                .map_err(|e| Error::InvalidArgument(format!("bad config {}: {e}", path.display())))?
        }
        None => ExperimentSpec::default(),
    };
    spec.kind = kind;
    spec.solver.merge(&SolverOverrides {
        alpha: global.alpha,
        lambda: global.lambda,
        rho: global.rho,
        epsilon: global.epsilon,
        delta: global.delta,
        max_iterations: global.max_iter,
        epoch_length: global.epoch_length,
        model: global.model,
    });
    if let Some(seed) = global.seed {
        spec.seed = seed;
    }
    if let Some(w) = global.workers {
        spec.workers = w;
    }
    if global.out.is_some() {
        spec.output = global.out.clone();
    }
    spec.include_timings |= global.timings;
    spec.include_traces |= global.traces;
    Ok(spec)
}

fn apply_grid(spec: &mut ExperimentSpec, grid: &GridArgs) {
    if !grid.n_vertices.is_empty() {
        spec.n_vertices = grid.n_vertices.clone();
    }
    if !grid.clique_sizes.is_empty() {
        spec.clique_sizes = grid.clique_sizes.clone();
    }
    if grid.clique_stride.is_some() {
        spec.clique_stride = grid.clique_stride;
        if grid.clique_sizes.is_empty() {
            spec.clique_sizes.clear();
        }
    }
    if let Some(p) = grid.p {
        spec.p = p;
    }
    if let Some(t) = grid.trials {
        spec.trials = t;
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// `results.csv` → `results_aggregate.csv`.
fn sibling_aggregate(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("results");
    out.with_file_name(format!("{stem}_aggregate.csv"))
}

fn emit_table<R: Serialize, A: Serialize, J: Serialize>(
    format: Format,
    out: Option<&Path>,
    aggregate_out: Option<&Path>,
    rows: &[R],
    aggregates: &[A],
    whole: &J,
) -> Result<()> {
    match format {
        Format::Json => emit(out, &(experiment::to_json_string(whole)? + "\n")),
        Format::Csv => {
            emit(out, &experiment::to_csv_string(rows)?)?;
            let agg_path = aggregate_out.map(Path::to_path_buf).or_else(|| out.map(sibling_aggregate));
            match agg_path {
                Some(p) => fs::write(p, experiment::to_csv_string(aggregates)?)?,
                None => eprint!("{}", experiment::to_csv_string(aggregates)?),
            }
            Ok(())
        }
    }
}

fn read_graph(path: &Path) -> Result<Graph> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
    if text.trim_start().starts_with('{') {
        Graph::from_json(&text)
    } else {
        parse_dimacs_str(&text)
    }
}

#[derive(Serialize)]
struct SolveRow {
    #[serde(rename = "N")]
    n_vertices: usize,
    edges: usize,
    lambda: f64,
    rho: f64,
    status: String,
    iterations: usize,
    final_residual: Option<f64>,
    err_l: Option<f64>,
    observed_size: f64,
    spectral_norm: f64,
    clique_size_error: f64,
    clique_size: usize,
    clique_valid: bool,
    wall_time_s: Option<f64>,
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    let format = g.format.unwrap_or(Format::Csv);
    let out = g.out.as_deref();
    match &cli.command {
        Command::Generate {
            n_vertices,
            clique_size,
            p,
            shuffle,
            graph_format,
        } => {
            let seed = g.seed.unwrap_or(0);
            let graph = match clique_size {
                Some(n) if *shuffle => generate_planted_shuffled(*n_vertices, *n, *p, seed)?.graph,
                Some(n) => generate_planted(*n_vertices, *n, *p, seed)?.graph,
                None => generate_bernoulli_symmetric(*n_vertices, *p, seed)?,
            };
            let text = match graph_format {
                GraphFormat::Json => graph.to_json()? + "\n",
                GraphFormat::Dimacs => graph.to_dimacs(),
            };
            emit(out, &text)
        }
        Command::Solve {
            input,
            n_vertices,
            clique_size,
            p,
        } => {
            let spec = load_spec(g, ExperimentKind::Single)?;
            let cfg = spec.solver_config();
            let (graph, truth) = match (input, n_vertices) {
                (Some(path), _) => (read_graph(path)?, None),
                (None, Some(big_n)) => {
                    let n = clique_size.ok_or_else(|| Error::InvalidArgument("--clique-size is required with --n-vertices".into()))?;
                    let inst = generate_planted(*big_n, n, *p, spec.seed)?;
                    let truth = inst.ground_truth();
                    (inst.graph, Some(truth))
                }
                (None, None) => return Err(Error::InvalidArgument("give --input or --n-vertices/--clique-size".into())),
            };
            let report = run_single(&graph, truth.as_ref(), &cfg, spec.include_traces, spec.include_timings)?;
            match format {
                Format::Json => emit(out, &(experiment::to_json_string(&report)? + "\n")),
                Format::Csv => {
                    let row = SolveRow {
                        n_vertices: report.n_vertices,
                        edges: report.edges,
                        lambda: report.lambda,
                        rho: report.rho,
                        status: report.status.to_string(),
                        iterations: report.iterations,
                        final_residual: report.final_residual,
                        err_l: report.recovery.err_l,
                        observed_size: report.recovery.observed_size,
                        spectral_norm: report.recovery.spectral_norm,
                        clique_size_error: report.recovery.clique_size_error,
                        clique_size: report.recovery.clique.len(),
                        clique_valid: report.recovery.clique_valid,
                        wall_time_s: report.wall_time_s,
                    };
                    emit(out, &experiment::to_csv_string(&[row])?)
                }
            }
        }
        Command::Sweep {
            grid,
            compare_regular,
            random_init,
            aggregate_out,
        } => {
            let mut spec = load_spec(g, ExperimentKind::PlantedSweep)?;
            apply_grid(&mut spec, grid);
            spec.compare_regular |= compare_regular;
            spec.random_init |= random_init;
            let res = run_planted_sweep(&spec)?;
            emit_table(format, spec.output.as_deref(), aggregate_out.as_deref(), &res.rows, &res.aggregates, &res)
        }
        Command::RandomBatch { grid, aggregate_out } => {
            let mut spec = load_spec(g, ExperimentKind::RandomBatch)?;
            apply_grid(&mut spec, grid);
            let res = run_random_batch(&spec)?;
            emit_table(format, spec.output.as_deref(), aggregate_out.as_deref(), &res.rows, &res.aggregates, &res)
        }
        Command::Dimacs { files } => {
            let mut spec = load_spec(g, ExperimentKind::Dimacs)?;
            if !files.is_empty() {
                spec.files = files.clone();
            }
            let rows = run_dimacs(&spec)?;
            match format {
                Format::Json => emit(spec.output.as_deref(), &(experiment::to_json_string(&rows)? + "\n")),
                Format::Csv => emit(spec.output.as_deref(), &experiment::to_csv_string(&rows)?),
            }
        }
        Command::Certify {
            grid,
            k,
            q,
            gamma,
            aggregate_out,
        } => {
            let mut spec = load_spec(g, ExperimentKind::Certify)?;
            apply_grid(&mut spec, grid);
            if k.is_some() {
                spec.certificate.k = *k;
            }
            if q.is_some() {
                spec.certificate.q = *q;
            }
            if let Some(v) = gamma {
                spec.certificate.gamma = *v;
            }
            let res = run_certify(&spec)?;
            emit_table(format, spec.output.as_deref(), aggregate_out.as_deref(), &res.rows, &res.aggregates, &res)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_argument_error() { 1 } else { 2 })
        }
    }
}
