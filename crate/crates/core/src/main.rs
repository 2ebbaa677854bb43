use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;

use orbdiam::diameter::Engine;
use orbdiam::families::Family;
use orbdiam::field::PrimeField;
use orbdiam::group::DEFAULT_CLOSURE_CAP;
use orbdiam::power_sums::{
    solvability_frontier, solve, write_frontier_csv, PowerSumSystem, DEFAULT_SEARCH_BUDGET,
};
use orbdiam::report::{
    certify_report, diameter_report, load_instance, parse_targets, DiameterRun, InstanceFile, ReportError,
    EXIT_NOT_APPLICABLE, EXIT_PARSE,
};
use orbdiam::witness::{BranchPolicy, CertifyOptions, TargetPolicy, DEFAULT_SEED};

#[derive(Parser)]
#[command(name = "orbdiam", version, about = "Orbital-graph diameters of affine primitive groups")]
struct Cli {
    /// Worker threads for per-orbit work (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Instance JSON file.
    instance: PathBuf,
    /// Cap on the size of the generated group (overrides ORBDIAM_CAP).
    #[arg(long)]
    cap: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Exact orbital diameters of every nonzero orbit.
    Diameter {
        #[command(flatten)]
        common: Common,
        /// Also compute undirected diameters.
        #[arg(long)]
        undirected: bool,
        #[arg(long, value_enum, default_value = "quotient")]
        engine: EngineArg,
    },
    /// Build and verify explicit decompositions bounding every orbital diameter.
    Certify {
        #[command(flatten)]
        common: Common,
        /// `all`, `auto`, or a number of sampled targets per orbit.
        #[arg(long, default_value = "auto", value_parser = parse_targets)]
        targets: TargetPolicy,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long, value_enum, default_value = "auto")]
        branch: BranchArg,
        /// Tuple-visit budget for the power-sum search.
        #[arg(long, default_value_t = DEFAULT_SEARCH_BUDGET)]
        budget: u64,
        /// Also compute exact directed diameters.
        #[arg(long)]
        diameter: bool,
        /// Write the longest witness of each orbit as JSON.
        #[arg(long)]
        witnesses: Option<PathBuf>,
    },
    /// Solve a power-sum system, or tabulate its solvability frontier.
    PowerSums {
        p: u32,
        k: usize,
        /// Number of unknowns (omit with --frontier).
        m: Option<usize>,
        /// Comma-separated right-hand side b_1,...,b_k.
        #[arg(value_delimiter = ',')]
        rhs: Vec<i64>,
        /// Emit a CSV row for every m up to this value.
        #[arg(long)]
        frontier: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_SEARCH_BUDGET)]
        budget: u64,
    },
    /// Write the instance file of a built-in family.
    Family {
        /// wreath, sl, gl, singer, sym2 or shift.
        name: String,
        params: Vec<u64>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum EngineArg {
    Quotient,
    Sumset,
    Bfs,
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum BranchArg {
    Auto,
    Unipotent,
    Trivial,
}

fn cap(flag: Option<usize>) -> Result<usize, ReportError> {
    if let Some(c) = flag {
        return Ok(c);
    }
    match std::env::var("ORBDIAM_CAP") {
        Ok(v) => v.trim().parse().map_err(|_| ReportError::Parse(format!("ORBDIAM_CAP={v} is not a number"))),
        Err(_) => Ok(DEFAULT_CLOSURE_CAP),
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), ReportError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|source| ReportError::Io { path: p.display().to_string(), source }),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|source| ReportError::Io { path: "<stdout>".into(), source }),
    }
}

fn run(command: Command) -> Result<i32, ReportError> {
    match command {
        Command::Diameter { common, undirected, engine } => {
            let inst = load_instance(&common.instance)?;
            let engine = match engine {
                EngineArg::Quotient => Engine::Quotient,
                EngineArg::Sumset => Engine::Sumset,
                EngineArg::Bfs => Engine::Bfs,
            };
            let run = DiameterRun { undirected, engine, cap: cap(common.cap)? };
            let report = diameter_report(&inst, run)?;
            info!("{}: overall diameter {:?}", inst.label(), report.overall_directed);
            emit(common.output.as_deref(), &report.to_json())?;
            Ok(0)
        }
        Command::Certify { common, targets, seed, branch, budget, diameter, witnesses } => {
            let inst = load_instance(&common.instance)?;
            let branch = match branch {
                BranchArg::Auto => BranchPolicy::Auto,
                BranchArg::Unipotent => BranchPolicy::Unipotent,
                BranchArg::Trivial => BranchPolicy::Trivial,
            };
            let cap = cap(common.cap)?;
            let options = CertifyOptions { cap, targets, seed, branch, budget };
            let diam = diameter.then_some(DiameterRun { undirected: false, engine: Engine::Quotient, cap });
            let (report, records) = certify_report(&inst, options, diam)?;
            emit(common.output.as_deref(), &report.to_json())?;
            if let Some(path) = witnesses {
                let mut text = serde_json::to_string_pretty(&records).expect("witnesses serialize");
                text.push('\n');
                emit(Some(&path), &text)?;
            }
            Ok(if report.is_not_applicable() { EXIT_NOT_APPLICABLE } else { 0 })
        }
        Command::PowerSums { p, k, m, rhs, frontier, budget } => {
            let field = PrimeField::new(p).map_err(|e| ReportError::Parse(e.to_string()))?;
            if let Some(m_max) = frontier {
                let rows = solvability_frontier(field, k, m_max, budget)?;
                let mut buf = Vec::new();
                write_frontier_csv(&rows, &mut buf)?;
                emit(None, &String::from_utf8(buf).expect("csv is utf-8"))?;
                return Ok(0);
            }
            let m = m.ok_or_else(|| ReportError::Parse("m is required without --frontier".into()))?;
            if rhs.len() != k {
                return Err(ReportError::Parse(format!("expected {k} right-hand side values, got {}", rhs.len())));
            }
            let rhs = rhs.iter().map(|&b| field.from_i64(b)).collect();
            let system = PowerSumSystem::new(field, m, rhs)?;
            let solution = solve(&system, budget)?;
            let verified = solution.as_ref().is_some_and(|s| system.is_solution(s.values()));
            let out = serde_json::json!({
                "p": p,
                "k": k,
                "m": m,
                "rhs": system.rhs(),
                "solution": solution.as_ref().map(|s| s.values()),
                "verified": verified,
            });
            emit(None, &format!("{}\n", serde_json::to_string_pretty(&out).expect("json")))?;
            Ok(0)
        }
        Command::Family { name, params, output } => {
            let family = Family::parse(&name, &params)?;
            let inst = family.instance()?;
            emit(output.as_deref(), &InstanceFile::from_instance(&inst).to_json())?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_PARSE as u8 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_PARSE as u8);
        }
    }
    match run(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
