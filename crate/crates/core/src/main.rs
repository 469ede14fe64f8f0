//! Batch command-line frontend: `solve`, `check`, and `experiment`.
//!
//! Exit codes: 0 success (or certification True), 1 failure (solver error
//! or certification False), 2 indeterminate result or usage error.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use l1path::error::{Error, Result};
use l1path::experiment::{run as run_experiment, ExperimentConfig};
use l1path::homotopy::{
    find_minimizer_cb, PathNode, Problem, SolveOptions, StoppingRule,
};
use l1path::io::{
    read_matrix, read_path_file, read_vector, write_records, RecordFormat, RecordRow, RecordSpec,
};
use l1path::iterative::{
    adaptive_landweber, adaptive_steepest_descent, projected_landweber,
    projected_steepest_descent, thresholded_landweber, IterOptions, IterationState,
};
use l1path::linalg::Vector;
use l1path::path::{check_minimizer_list, Certification};
use l1path::scalar::Scalar;
use l1path::Rational;

#[derive(Parser)]
#[command(name = "l1path", about = "Solvers for l1-penalized least-squares regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem with the exact path solver or an iterative scheme
    Solve(SolveArgs),
    /// Certify a node list against a problem
    Check(CheckArgs),
    /// Run a reproducible synthetic sparse-recovery experiment
    Experiment(ExperimentArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Backend {
    Rational,
    Float,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Algorithm {
    /// Exact piecewise-linear path solver
    Homotopy,
    /// Thresholded Landweber
    Tlw,
    /// Projected Landweber
    Plw,
    /// Projected steepest descent
    Psd,
    /// Adaptive (growing-radius) Landweber
    Alw,
    /// Adaptive steepest descent
    Asd,
}

#[derive(Args)]
struct ProblemArgs {
    /// Matrix file: CSV rows, or a .json array of arrays
    #[arg(long)]
    matrix: PathBuf,
    /// Data vector file
    #[arg(long)]
    data: PathBuf,
    /// Optional penalty weight vector file
    #[arg(long)]
    weights: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "rational")]
    backend: Backend,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, value_enum, default_value = "homotopy")]
    algorithm: Algorithm,
    /// Stop the path at this penalty; also the threshold for tlw
    #[arg(long)]
    stop_penalty: Option<String>,
    /// Stop the path when the l1 norm reaches this value
    #[arg(long)]
    stop_l1norm: Option<String>,
    /// Stop the path when the discrepancy comes down to this value
    #[arg(long)]
    stop_discrepancy: Option<String>,
    /// Stop the path at this many nonzero components
    #[arg(long)]
    stop_nonzeros: Option<usize>,
    /// Iteration budget for the iterative schemes
    #[arg(long)]
    max_iters: Option<usize>,
    /// Wall-clock budget in seconds
    #[arg(long)]
    max_seconds: Option<f64>,
    /// Radius for the constrained schemes (plw, psd, alw, asd)
    #[arg(long)]
    radius: Option<String>,
    /// Number of radius-growth steps for alw and asd
    #[arg(long)]
    numsteps: Option<usize>,
    /// Comma-separated record fields to emit per node or iterate
    #[arg(long)]
    record: Option<String>,
    #[arg(long, default_value = "csv")]
    format: String,
    #[arg(long, default_value_t = 0)]
    verbose: u8,
    /// Output file (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Node list: each line is the penalty followed by the components of x
    #[arg(long)]
    path: PathBuf,
}

#[derive(Args)]
struct ExperimentArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    m: usize,
    #[arg(long)]
    n: usize,
    /// Number of nonzero components of the planted vector
    #[arg(long)]
    sparsity: usize,
    /// Noise norm as a fraction of the clean data norm
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Use the identity matrix (requires m = n)
    #[arg(long, default_value_t = false)]
    identity: bool,
    /// Stop the path at this many nonzero components instead of the
    /// noise-level discrepancy, emitting node statistics only
    #[arg(long)]
    stop_nonzeros: Option<usize>,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Solve(args) => match args.problem.backend {
            Backend::Rational => run_solve::<Rational>(&args),
            Backend::Float => run_solve::<f64>(&args),
        },
        Command::Check(args) => run_check(&args),
        Command::Experiment(args) => cmd_experiment(&args),
    };
    match code {
        Ok(c) => ExitCode::from(c),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn load_problem<S: Scalar>(args: &ProblemArgs) -> Result<Problem<S>> {
    let k = read_matrix(&args.matrix)?;
    let y = read_vector(&args.data)?;
    let w = match &args.weights {
        Some(p) => Some(read_vector(p)?),
        None => None,
    };
    Problem::new(k, y, w)
}

fn usage(msg: &str) -> Result<u8> {
    eprintln!("usage error: {msg}");
    Ok(2)
}

fn parse_scalar<S: Scalar>(text: &str, what: &str) -> Result<S> {
    S::parse(text).map_err(|e| Error::Parse(format!("bad {what}: {e}")))
}

fn output_writer(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(fs::File::create(p)?),
        None => Box::new(std::io::stdout()),
    })
}

fn run_solve<S: Scalar>(args: &SolveArgs) -> Result<u8> {
    let specific = [
        args.stop_penalty.is_some(),
        args.stop_l1norm.is_some(),
        args.stop_discrepancy.is_some(),
        args.stop_nonzeros.is_some(),
    ]
    .iter()
    .filter(|&&b| b)
    .count();
    if args.algorithm == Algorithm::Homotopy && specific > 1 {
        return usage("at most one of --stop-penalty, --stop-l1norm, --stop-discrepancy, --stop-nonzeros");
    }

    let problem = load_problem::<S>(&args.problem)?;
    let spec = match &args.record {
        Some(text) => Some(RecordSpec::parse(text)?),
        None => None,
    };
    let format = RecordFormat::from_str(&args.format)?;
    let mut out = output_writer(&args.out)?;

    let mut rows: Vec<RecordRow<S>> = Vec::new();
    let final_x: Vector<S>;
    let mut warnings: Vec<String> = Vec::new();

    match args.algorithm {
        Algorithm::Homotopy => {
            let stop: StoppingRule<S> = if let Some(t) = &args.stop_penalty {
                StoppingRule::Penalty(parse_scalar(t, "--stop-penalty")?)
            } else if let Some(t) = &args.stop_l1norm {
                StoppingRule::MaxL1Norm(parse_scalar(t, "--stop-l1norm")?)
            } else if let Some(t) = &args.stop_discrepancy {
                StoppingRule::MinDiscrepancy(parse_scalar(t, "--stop-discrepancy")?)
            } else if let Some(n) = args.stop_nonzeros {
                StoppingRule::MaxNonZero(n)
            } else {
                StoppingRule::Penalty(S::zero())
            };
            let opts = SolveOptions {
                verbose: args.verbose,
                ..Default::default()
            };
            let collecting = spec.is_some();
            let result = {
                let mut on_node = |node: &PathNode<S>| {
                    if collecting {
                        rows.push(RecordRow::from_path_node(&problem, node));
                    }
                };
                find_minimizer_cb(&problem, &stop, &opts, &mut on_node)?
            };
            warnings = result.warnings;
            // The stopping rules can interpolate between nodes; reflect
            // the returned point in the last record.
            if collecting {
                let last = RecordRow::from_path_node(&problem, &result.final_node);
                match rows.last() {
                    Some(r) if r.counter == last.counter => *rows.last_mut().unwrap() = last,
                    _ => rows.push(last),
                }
            }
            final_x = result.final_node.x;
        }
        _ => {
            let max_iters = args.max_iters.unwrap_or(1);
            let max_seconds = args.max_seconds;
            let stop = move |s: &IterationState<S>| {
                s.counter >= max_iters
                    || max_seconds.map(|t| s.elapsed >= t).unwrap_or(false)
            };
            let mut collect = |s: &IterationState<S>| {
                if spec.is_some() {
                    rows.push(RecordRow::from_iteration(&problem, s, None));
                }
            };
            let opts = IterOptions {
                collect: Some(&mut collect),
                stop: Some(&stop),
                ..Default::default()
            };
            let radius = || -> Result<S> {
                match &args.radius {
                    Some(t) => parse_scalar(t, "--radius"),
                    None => Err(Error::Parse("--radius is required for this algorithm".into())),
                }
            };
            let result = match args.algorithm {
                Algorithm::Tlw => {
                    let lambda = match &args.stop_penalty {
                        Some(t) => parse_scalar(t, "--stop-penalty")?,
                        None => S::zero(),
                    };
                    thresholded_landweber(&problem, &lambda, opts)?
                }
                Algorithm::Plw => projected_landweber(&problem, &radius()?, opts)?,
                Algorithm::Psd => projected_steepest_descent(&problem, &radius()?, opts)?,
                Algorithm::Alw => {
                    let numsteps = args.numsteps.ok_or_else(|| {
                        Error::Parse("--numsteps is required for this algorithm".into())
                    })?;
                    adaptive_landweber(&problem, &radius()?, numsteps, opts)?
                }
                Algorithm::Asd => {
                    let numsteps = args.numsteps.ok_or_else(|| {
                        Error::Parse("--numsteps is required for this algorithm".into())
                    })?;
                    adaptive_steepest_descent(&problem, &radius()?, numsteps, opts)?
                }
                Algorithm::Homotopy => unreachable!(),
            };
            // Penalty in iterative records is the threshold actually used
            // by tlw; recompute those rows with it.
            if args.algorithm == Algorithm::Tlw {
                if let Some(t) = &args.stop_penalty {
                    let lambda: S = parse_scalar(t, "--stop-penalty")?;
                    for row in &mut rows {
                        row.penalty = lambda.clone();
                    }
                }
            }
            final_x = result.final_state.x;
        }
    }

    for w in &warnings {
        eprintln!("warning: {w}");
    }

    if let Some(spec) = &spec {
        write_records(&mut out, spec, format, &rows)?;
    } else {
        let row = final_vector_row(&final_x);
        match format {
            RecordFormat::Csv => writeln!(out, "{}", row.join(","))?,
            RecordFormat::JsonLines => {
                let vals: Vec<serde_json::Value> = if S::EXACT {
                    final_x.iter().map(|v| v.to_string().into()).collect()
                } else {
                    final_x
                        .iter()
                        .map(|v| serde_json::json!(v.to_f64()))
                        .collect()
                };
                writeln!(out, "{}", serde_json::json!({ "x": vals }))?;
            }
        }
    }
    Ok(0)
}

fn final_vector_row<S: Scalar>(x: &Vector<S>) -> Vec<String> {
    x.iter().map(|v| v.to_string()).collect()
}

fn run_check(args: &CheckArgs) -> Result<u8> {
    match args.problem.backend {
        Backend::Float => {
            println!("Indeterminate: inexact input (float backend)");
            Ok(2)
        }
        Backend::Rational => {
            let problem = match load_problem::<Rational>(&args.problem) {
                Ok(p) => p,
                Err(Error::Parse(msg)) if msg.contains("bad rational") => {
                    println!("Indeterminate: inexact input");
                    return Ok(2);
                }
                Err(e) => return Err(e),
            };
            let raw = match read_path_file::<Rational>(&args.path) {
                Ok(r) => r,
                Err(Error::Parse(msg)) if msg.contains("bad rational") => {
                    println!("Indeterminate: inexact input");
                    return Ok(2);
                }
                Err(e) => return Err(e),
            };
            let nodes: Vec<PathNode<Rational>> = raw
                .into_iter()
                .enumerate()
                .map(|(i, (lambda, x))| node_from_parts(&problem, i, lambda, x))
                .collect::<Result<_>>()?;
            match check_minimizer_list(&problem, &nodes)? {
                Certification::Valid => {
                    println!("True");
                    Ok(0)
                }
                Certification::Invalid { detail } => {
                    println!("False: {detail}");
                    Ok(1)
                }
                Certification::Indeterminate { reason } => {
                    println!("Indeterminate: {reason}");
                    Ok(2)
                }
            }
        }
    }
}

fn node_from_parts<S: Scalar>(
    problem: &Problem<S>,
    counter: usize,
    lambda: S,
    x: Vector<S>,
) -> Result<PathNode<S>> {
    if x.len() != problem.dim() {
        return Err(Error::DimensionMismatch(format!(
            "node has dimension {}, problem has {}",
            x.len(),
            problem.dim()
        )));
    }
    let misfit = problem.data().sub(&problem.matrix().matvec(&x));
    let remainder = problem.matrix().tr_matvec(&misfit);
    let support = x.support();
    Ok(PathNode {
        counter,
        x,
        lambda,
        remainder,
        misfit,
        support,
        elapsed: 0.0,
    })
}

fn cmd_experiment(args: &ExperimentArgs) -> Result<u8> {
    let config = ExperimentConfig {
        seed: args.seed,
        m: args.m,
        n: args.n,
        sparsity: args.sparsity,
        noise: args.noise,
        identity: args.identity,
    };
    fs::create_dir_all(&args.out)?;

    if let Some(max_nz) = args.stop_nonzeros {
        // Node-statistics mode: walk the path until the support reaches
        // the requested size and record per-node counters.
        let generated = l1path::experiment::generate(&config)?;
        let mut lines = vec!["counter,support_size,penalty".to_string()];
        let result = {
            let mut on_node = |node: &PathNode<f64>| {
                lines.push(format!(
                    "{},{},{}",
                    node.counter,
                    node.support.len(),
                    node.lambda
                ));
            };
            find_minimizer_cb(
                &generated.problem,
                &StoppingRule::MaxNonZero(max_nz),
                &SolveOptions::default(),
                &mut on_node,
            )?
        };
        fs::write(args.out.join("nodes.csv"), lines.join("\n") + "\n")?;
        fs::write(
            args.out.join("metrics.json"),
            serde_json::to_string_pretty(&serde_json::json!({
                "seed": args.seed,
                "m": args.m,
                "n": args.n,
                "final_support_size": result.final_node.support.len(),
                "final_counter": result.final_node.counter,
            }))? + "\n",
        )?;
        return Ok(0);
    }

    let outcome = run_experiment(&config)?;

    let mut rec = vec!["index,x_in,x_l1,x_l2".to_string()];
    for i in 0..outcome.x_in.len() {
        rec.push(format!(
            "{},{},{},{}",
            i + 1,
            outcome.x_in[i],
            outcome.x_l1[i],
            outcome.x_l2[i]
        ));
    }
    fs::write(args.out.join("reconstruction.csv"), rec.join("\n") + "\n")?;

    let mut curve = vec!["l1norm,discrepancy".to_string()];
    for node in &outcome.nodes {
        curve.push(format!("{},{}", node.x.l1_norm(), node.discrepancy()));
    }
    fs::write(args.out.join("tradeoff.csv"), curve.join("\n") + "\n")?;

    let mut conv = vec!["scheme,counter,discrepancy,distance_to_l1".to_string()];
    for (c, d, dist) in &outcome.tlw_convergence {
        conv.push(format!("tlw,{c},{d},{dist}"));
    }
    for (c, d, dist) in &outcome.alw_convergence {
        conv.push(format!("alw,{c},{d},{dist}"));
    }
    fs::write(args.out.join("convergence.csv"), conv.join("\n") + "\n")?;

    fs::write(
        args.out.join("metrics.json"),
        serde_json::to_string_pretty(&serde_json::json!({
            "seed": args.seed,
            "m": args.m,
            "n": args.n,
            "sparsity": args.sparsity,
            "noise": args.noise,
            "l1": {
                "rel_err_l2": outcome.l1_metrics.rel_err_l2,
                "true_positives": outcome.l1_metrics.true_positives,
                "false_positives": outcome.l1_metrics.false_positives,
            },
            "l2": {
                "rel_err_l2": outcome.l2_metrics.rel_err_l2,
                "true_positives": outcome.l2_metrics.true_positives,
                "false_positives": outcome.l2_metrics.false_positives,
            },
            "path_nodes": outcome.nodes.len(),
        }))? + "\n",
    )?;
    Ok(0)
}
