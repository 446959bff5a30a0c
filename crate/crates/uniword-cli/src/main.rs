//! `uniword`: generate, verify, inspect, and count universal words for
//! multi-dimensional permutations.
//!
//! Exit codes: 0 success/accepted, 1 verifier rejection, 2 malformed or
//! unreadable input, 64 usage errors, 65 resource-guard refusals, 70
//! internal failures.

use std::fs;
use std::io::Read;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use uniword::{
    apply_removals, build_cluster_graph, enumerate_dperms, generate_detailed, generate_from_plan,
    plan_removals, render_matrix, verify_with_options, Error, MultiDigraph, RemovalPlan,
    DEFAULT_EDGE_BUDGET, DEFAULT_REPORT_CAP,
};

#[derive(Parser)]
#[command(
    name = "uniword",
    version,
    about = "Shortened universal words for multi-dimensional permutations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a u-word of (n!)^(d-1) + n - 1 - removals*(n-1) columns
    Generate(GenerateArgs),
    /// Check that a matrix covers every permutation exactly once
    Verify(VerifyArgs),
    /// Export the (optionally compressed) clustered graph as DOT
    Graph(GraphArgs),
    /// Exact counts: clusters, edges, cycles, bounds, lengths, circuits
    Count(CountArgs),
    /// Stream all d-dimensional n-permutations in canonical order
    Enumerate(EnumerateArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    /// Number of cycle-removal steps (0..=bound)
    #[arg(long)]
    removals: Option<usize>,
    /// Permutes the Eulerian edge choice reproducibly
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Write the matrix here instead of stdout
    #[arg(long)]
    out: Option<String>,
    /// Replay a removal plan from this file instead of planning
    #[arg(long)]
    plan: Option<String>,
    /// Write the removal plan used to this file
    #[arg(long)]
    plan_out: Option<String>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Window length; may come from a header or JSON input instead
    #[arg(long)]
    n: Option<usize>,
    /// Read windows cyclically
    #[arg(long)]
    cyclic: bool,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Input file, or "-" for stdin
    input: String,
}

#[derive(Args)]
struct GraphArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 0)]
    removals: usize,
    /// DOT output file, or "-" for stdout
    #[arg(long)]
    dot: String,
}

#[derive(Args)]
struct CountArgs {
    #[arg(long, global = true)]
    graph_n: Option<usize>,
    #[arg(long, global = true)]
    graph_d: Option<usize>,
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
    #[command(subcommand)]
    what: CountWhat,
}

#[derive(Subcommand)]
enum CountWhat {
    /// ((n-1)!)^(d-1), the number of cluster vertices
    Clusters,
    /// (n!)^(d-1), the number of edges of the fresh graph
    Edges,
    /// Disjoint twin cycles with 2^i parallel edges
    Cycles {
        #[arg(long)]
        i: usize,
    },
    /// Maximum number of removal steps
    Bound,
    /// All attainable u-word lengths, descending
    Lengths,
    /// 2^bound, a lower bound on distinct u-words
    Lowerbound,
    /// Eulerian circuits of the fresh graph from its smallest edge
    Eulerian,
}

#[derive(Args)]
struct EnumerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    d: usize,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 64,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = match err {
            Error::Malformed(_) | Error::PlanStale(_) => 2,
            Error::ResourceGuard(_) => 65,
            Error::Unsupported(_) | Error::BoundExceeded { .. } => 64,
            _ => 70,
        };
        Failure {
            code,
            message: err.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(err: std::io::Error) -> Self {
        Failure {
            code: 2,
            message: err.to_string(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            eprintln!("uniword: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Generate(args) => run_generate(args),
        Command::Verify(args) => run_verify(args),
        Command::Graph(args) => run_graph(args),
        Command::Count(args) => run_count(args),
        Command::Enumerate(args) => run_enumerate(args),
    }
}

fn run_generate(args: GenerateArgs) -> Result<u8, Failure> {
    let outcome = match &args.plan {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            let plan = RemovalPlan::parse(&text)?;
            if plan.n != args.n || plan.d != args.d {
                return Err(Failure::usage(format!(
                    "plan file is for n={} d={}, flags say n={} d={}",
                    plan.n, plan.d, args.n, args.d
                )));
            }
            if let Some(removals) = args.removals {
                if removals != plan.len() {
                    return Err(Failure::usage(format!(
                        "--removals {removals} conflicts with the {}-step plan file",
                        plan.len()
                    )));
                }
            }
            let graph = build_cluster_graph(args.n, args.d)?;
            generate_from_plan(&graph, &plan, args.seed)?
        }
        None => generate_detailed(args.n, args.d, args.removals.unwrap_or(0), args.seed)?,
    };

    let digest = outcome.plan.digest();
    if let Some(path) = &args.plan_out {
        fs::write(path, outcome.plan.serialize())?;
    }
    let rendered = match args.format {
        Format::Text => outcome.matrix.render_text(),
        Format::Json => {
            let mut json = outcome.matrix.to_json(outcome.plan.len(), &digest);
            json.push('\n');
            json
        }
    };
    match &args.out {
        Some(path) => fs::write(path, rendered)?,
        None => print!("{rendered}"),
    }
    eprintln!(
        "columns={} removals={} plan-digest={}",
        outcome.matrix.columns(),
        outcome.plan.len(),
        digest
    );
    Ok(0)
}

fn run_verify(args: VerifyArgs) -> Result<u8, Failure> {
    let text = if args.input == "-" {
        let mut buffer = String::new();
        std::io::stdin().read_to_string(&mut buffer)?;
        buffer
    } else {
        fs::read_to_string(&args.input)?
    };
    let parsed = uniword::parse_matrix_input(&text)?;
    let n = match (args.n, parsed.n) {
        (Some(flag), Some(header)) if flag != header => {
            return Err(Failure::usage(format!(
                "--n {flag} conflicts with the declared n={header}"
            )));
        }
        (Some(flag), _) => flag,
        (None, Some(header)) => header,
        (None, None) => {
            return Err(Failure::usage(
                "--n is required for input without a header",
            ));
        }
    };
    let report = verify_with_options(
        &parsed.rows,
        n,
        args.cyclic,
        DEFAULT_REPORT_CAP,
        DEFAULT_EDGE_BUDGET,
    )?;
    match args.format {
        Format::Text => print!("{}", report.render_text()),
        Format::Json => println!("{}", report.to_json()),
    }
    Ok(if report.accepted { 0 } else { 1 })
}

fn run_graph(args: GraphArgs) -> Result<u8, Failure> {
    let graph = build_cluster_graph(args.n, args.d)?;
    let graph = if args.removals > 0 {
        let plan = plan_removals(&graph, args.removals)?;
        apply_removals(&graph, &plan)?
    } else {
        graph
    };
    let dot = graph.to_dot();
    if args.dot == "-" {
        print!("{dot}");
    } else {
        fs::write(&args.dot, dot)?;
    }
    Ok(0)
}

fn run_count(args: CountArgs) -> Result<u8, Failure> {
    let n = args
        .graph_n
        .ok_or_else(|| Failure::usage("--graph-n is required"))?;
    let d = args
        .graph_d
        .ok_or_else(|| Failure::usage("--graph-d is required"))?;
    let format = args.format.unwrap_or(Format::Text);

    let print_value = |value: String| match format {
        Format::Text => println!("{value}"),
        Format::Json => println!("{}", serde_jsonish(&value)),
    };

    match args.what {
        CountWhat::Clusters => {
            if n < 1 || d < 2 {
                return Err(Failure::usage("counts need n >= 1 and d >= 2"));
            }
            print_value(big_power_factorial(n - 1, d - 1));
        }
        CountWhat::Edges => {
            if n < 1 || d < 2 {
                return Err(Failure::usage("counts need n >= 1 and d >= 2"));
            }
            print_value(big_power_factorial(n, d - 1));
        }
        CountWhat::Cycles { i } => {
            print_value(uniword::cycle_count(n, d, i)?.to_string());
        }
        CountWhat::Bound => {
            print_value(uniword::max_removals(n, d)?.to_string());
        }
        CountWhat::Lengths => {
            let lengths = uniword::admissible_lengths(n, d)?;
            let rendered: Vec<String> = lengths.iter().map(|v| v.to_string()).collect();
            match format {
                Format::Text => println!("{}", rendered.join(" ")),
                Format::Json => println!(
                    "{{\"lengths\":[{}]}}",
                    rendered
                        .iter()
                        .map(|v| format!("\"{v}\""))
                        .collect::<Vec<_>>()
                        .join(",")
                ),
            }
        }
        CountWhat::Lowerbound => {
            print_value(uniword::uword_lower_bound(n, d)?.to_string());
        }
        CountWhat::Eulerian => {
            let graph = build_cluster_graph(n, d)?;
            let multi = MultiDigraph::from(&graph);
            // edges are label-sorted, so index 0 is the smallest; the count
            // is the same whichever edge starts the circuit
            let count = uniword::best_eulerian_count(&multi, 0)?;
            print_value(count.to_string());
        }
    }
    Ok(0)
}

fn serde_jsonish(value: &str) -> String {
    format!("{{\"value\":\"{value}\"}}")
}

fn big_power_factorial(n: usize, exp: usize) -> String {
    let mut acc = uniword::BigCount::from(1u32);
    for _ in 0..exp {
        for k in 2..=n as u64 {
            acc *= uniword::BigCount::from(k);
        }
    }
    acc.to_string()
}

fn run_enumerate(args: EnumerateArgs) -> Result<u8, Failure> {
    if args.n < 1 || args.d < 2 {
        return Err(Failure::usage("enumeration needs n >= 1 and d >= 2"));
    }
    for perm in enumerate_dperms(args.n, args.d) {
        println!("{}\n", render_matrix(perm.rows()));
    }
    Ok(0)
}
