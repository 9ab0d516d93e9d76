//! Command-line front end for the election protocol.
//!
//! Four subcommands cover the whole workflow: `gen` writes a topology file,
//! `run` executes the protocol on one and records a trace, `verify` checks
//! a recorded trace against every guarantee, and `sweep` produces scaling
//! CSVs. Exit codes: 0 success, 1 a run or a verification failed, 2 bad
//! input or I/O, 3 verify refused a timed-out trace.

use std::error::Error;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};

use bitelect_core::generate::{generate, GeneratorSpec, GraphFamily, IdAssignment, IdStrategy};
use bitelect_core::oracle;
use bitelect_core::simulator::{self, election_bound, SimConfig};
use bitelect_core::sweep::{run_sweep, to_csv, SweepAxis, SweepConfig};
use bitelect_core::trace::TraceGranularity;
use bitelect_core::{AssertionLevel, Identifier, Outcome, RoundTrace, Topology};

#[derive(Parser)]
#[command(
    name = "bitelect",
    version,
    about = "Leader election with constant-size messages: generate, run, verify, sweep"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a topology file from a seeded family and id assignment.
    Gen(GenArgs),
    /// Run the protocol on a topology file and print a summary line.
    Run(RunArgs),
    /// Check a recorded trace against its topology; exit 0 iff all pass.
    Verify(VerifyArgs),
    /// Sweep one scaling axis and emit CSV rows.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Graph family.
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Number of nodes.
    #[arg(long)]
    nodes: usize,
    /// Edge probability; gnp only.
    #[arg(long)]
    p: Option<f64>,
    /// Seed for the graph structure.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Identifier assignment strategy.
    #[arg(long, value_enum, default_value_t = IdsArg::Sequential)]
    ids: IdsArg,
    /// Force every identifier to exactly this many binary digits.
    #[arg(long)]
    id_bits: Option<u32>,
    /// Separate seed for the id assignment; derived from --seed if absent.
    #[arg(long)]
    id_seed: Option<u64>,
    /// Comma-separated identifiers for --ids custom.
    #[arg(long, value_delimiter = ',')]
    custom_ids: Option<Vec<String>>,
    /// Output file; stdout if absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// Topology file to load.
    graph: PathBuf,
    /// Round budget; defaults to the election bound plus settling slack.
    #[arg(long)]
    max_rounds: Option<u32>,
    /// How much the simulator checks while running.
    #[arg(long, value_enum, default_value_t = AssertionArg::PerRound)]
    assertion_level: AssertionArg,
    /// How much of the run the trace retains.
    #[arg(long, value_enum, default_value_t = GranularityArg::PerRound)]
    granularity: GranularityArg,
    /// Write the trace here.
    #[arg(long)]
    trace_out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Trace file to check.
    trace: PathBuf,
    /// The topology file the trace claims to come from.
    graph: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    /// Which term of the round complexity to expose.
    #[arg(long, value_enum)]
    axis: AxisArg,
    /// Axis values: node counts (diameter) or identifier widths (id-bits).
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<u64>,
    /// Trials per axis value.
    #[arg(long, default_value_t = 3)]
    repetitions: u32,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Graph size on the id-bits axis.
    #[arg(long, default_value_t = 8)]
    nodes: usize,
    /// Identifier width on the diameter axis.
    #[arg(long, default_value_t = 16)]
    id_bits: u32,
    /// Output file; stdout if absent.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Path,
    Ring,
    Complete,
    Star,
    BalancedTree,
    Gnp,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum IdsArg {
    Sequential,
    Random,
    Adversarial,
    Custom,
}

#[derive(Clone, Copy, ValueEnum)]
enum AssertionArg {
    Off,
    PerRound,
    Full,
}

impl From<AssertionArg> for AssertionLevel {
    fn from(value: AssertionArg) -> Self {
        match value {
            AssertionArg::Off => AssertionLevel::Off,
            AssertionArg::PerRound => AssertionLevel::PerRound,
            AssertionArg::Full => AssertionLevel::Full,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum GranularityArg {
    PerRound,
    FinalOnly,
}

impl From<GranularityArg> for TraceGranularity {
    fn from(value: GranularityArg) -> Self {
        match value {
            GranularityArg::PerRound => TraceGranularity::PerRound,
            GranularityArg::FinalOnly => TraceGranularity::FinalOnly,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    Diameter,
    IdBits,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, Box<dyn Error>> {
    match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Run(args) => cmd_run(args),
        Command::Verify(args) => cmd_verify(args),
        Command::Sweep(args) => cmd_sweep(args),
    }
}

fn cmd_gen(args: GenArgs) -> Result<ExitCode, Box<dyn Error>> {
    let family = match args.family {
        FamilyArg::Path => GraphFamily::Path,
        FamilyArg::Ring => GraphFamily::Ring,
        FamilyArg::Complete => GraphFamily::Complete,
        FamilyArg::Star => GraphFamily::Star,
        FamilyArg::BalancedTree => GraphFamily::BalancedTree,
        FamilyArg::Gnp => GraphFamily::Gnp {
            p: args.p.ok_or("--p is required for the gnp family")?,
        },
    };
    let strategy = match args.ids {
        IdsArg::Sequential => IdStrategy::Sequential,
        IdsArg::Random => IdStrategy::RandomPermutation,
        IdsArg::Adversarial => IdStrategy::AdversarialFarMax,
        IdsArg::Custom => {
            let texts = args
                .custom_ids
                .as_ref()
                .ok_or("--custom-ids is required for --ids custom")?;
            let ids: Result<Vec<Identifier>, _> = texts
                .iter()
                .map(|t| Identifier::from_str(t.trim()))
                .collect();
            IdStrategy::Custom(ids?)
        }
    };
    let topology = generate(
        &GeneratorSpec {
            family,
            n: args.nodes,
            seed: args.seed,
        },
        &IdAssignment {
            strategy,
            id_bits: args.id_bits,
            seed: args
                .id_seed
                .unwrap_or_else(|| args.seed.wrapping_add(0x9e37_79b9_7f4a_7c15)),
        },
    )?;
    emit(args.output.as_deref(), &topology.to_text())?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_run(args: RunArgs) -> Result<ExitCode, Box<dyn Error>> {
    let text = fs::read_to_string(&args.graph)?;
    let topology = Topology::parse(&text)?;
    let config = SimConfig {
        max_rounds: args
            .max_rounds
            .unwrap_or_else(|| simulator::default_max_rounds(&topology)),
        assertion_level: args.assertion_level.into(),
        trace_granularity: args.granularity.into(),
    };
    let trace = simulator::run(&topology, &config)?;
    if let Some(path) = &args.trace_out {
        fs::write(path, trace.to_text())?;
    }

    let s = &trace.summary;
    let bound = election_bound(&topology);
    let max_node = topology.max_id_node();
    println!(
        "n={} m={} D={} max_id={} alpha_len={} rounds_election={} rounds_quiescent={} \
         bound={} margin={} elected_id={} outcome={}",
        topology.node_count(),
        topology.edge_count(),
        s.diameter,
        topology.id(max_node),
        s.alpha_len,
        display_opt(s.rounds_to_election.as_ref()),
        display_opt(s.rounds_to_quiescence.as_ref()),
        bound,
        display_opt(
            s.rounds_to_election
                .map(|r| i64::from(bound) - i64::from(r))
                .as_ref()
        ),
        display_opt(s.elected_id.as_ref()),
        s.outcome.name(),
    );

    Ok(if s.outcome == Outcome::Timeout {
        eprintln!("run timed out after {} rounds", config.max_rounds);
        ExitCode::from(1)
    } else {
        ExitCode::SUCCESS
    })
}

fn cmd_verify(args: VerifyArgs) -> Result<ExitCode, Box<dyn Error>> {
    let trace = RoundTrace::parse(&fs::read_to_string(&args.trace)?)?;
    let topology = Topology::parse(&fs::read_to_string(&args.graph)?)?;
    if trace.topology != topology {
        return Err("trace was recorded on a different topology than the given graph".into());
    }
    if trace.summary.outcome == Outcome::Timeout {
        eprintln!("refusing to verify a timed-out trace");
        return Ok(ExitCode::from(3));
    }
    let reports = oracle::run_all(&trace, &topology);
    let mut all_passed = true;
    for report in &reports {
        println!("{report}");
        all_passed &= report.passed();
    }
    Ok(if all_passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn cmd_sweep(args: SweepArgs) -> Result<ExitCode, Box<dyn Error>> {
    let config = SweepConfig {
        axis: match args.axis {
            AxisArg::Diameter => SweepAxis::Diameter,
            AxisArg::IdBits => SweepAxis::IdBits,
        },
        values: args.values,
        repetitions: args.repetitions,
        seed: args.seed,
        nodes: args.nodes,
        id_bits: args.id_bits,
    };
    let rows = run_sweep(&config)?;
    emit(args.output.as_deref(), &to_csv(&rows))?;
    // Raw synchronous rounds; every message is 6 bits wide.
    eprintln!(
        "{} rows; rounds are message rounds, multiply by 6 for single-bit rounds",
        rows.len()
    );
    Ok(ExitCode::SUCCESS)
}

fn emit(path: Option<&std::path::Path>, content: &str) -> std::io::Result<()> {
    match path {
        Some(path) => fs::write(path, content),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn display_opt<T: ToString>(value: Option<&T>) -> String {
    value.map_or_else(|| "-".into(), |v| v.to_string())
}
