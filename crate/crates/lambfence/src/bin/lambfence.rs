//! Command-line front end: scan or parse an input file against a language
//! spec.
//!
//! Exit codes: 0 success, 1 spec error, 2 scan error, 3 no valid tree
//! (either no parse or all trees rejected by constraints).

use std::fs;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use lambfence::enforcer::EvaluatorRegistry;
use lambfence::graphio::{egraph_to_json, export_dot_egraph, export_dot_la, la_to_json};
use lambfence::pipeline::{run, RunError};
use lambfence::scanner::{
    build_lexical_graph, compile_specs, MatchPolicy, ScanRegistry,
};
use lambfence::spec::parse_language_spec;

#[derive(Parser)]
#[command(name = "lambfence", about = "Ambiguity-preserving scanner and chart parser")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Dot,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Policy {
    Greedy,
    Exploratory,
}

impl From<Policy> for MatchPolicy {
    fn from(p: Policy) -> Self {
        match p {
            Policy::Greedy => MatchPolicy::Greedy,
            Policy::Exploratory => MatchPolicy::Exploratory,
        }
    }
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Language spec file.
    spec: String,
    /// Input file to scan or parse.
    input: String,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Override the spec's scanning policy.
    #[arg(long, value_enum)]
    policy: Option<Policy>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the lexical analysis graph of the input.
    Scan {
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Run the full pipeline and print the parse forest.
    Parse {
        #[command(flatten)]
        common: CommonArgs,
        /// Print only the number of surviving parse trees.
        #[arg(long)]
        count_trees: bool,
        /// Print a run report (counts and timings) to stderr.
        #[arg(long)]
        report: bool,
    },
}

const EXIT_SPEC: u8 = 1;
const EXIT_SCAN: u8 = 2;
const EXIT_NO_TREE: u8 = 3;

fn load(common: &CommonArgs) -> Result<(lambfence::spec::LanguageSpec, String), u8> {
    let spec_text = fs::read_to_string(&common.spec).map_err(|e| {
        eprintln!("error: cannot read spec {}: {e}", common.spec);
        EXIT_SPEC
    })?;
    let spec = parse_language_spec(&spec_text).map_err(|diags| {
        for d in &diags {
            eprintln!("{d}");
        }
        EXIT_SPEC
    })?;
    let input = fs::read_to_string(&common.input).map_err(|e| {
        eprintln!("error: cannot read input {}: {e}", common.input);
        EXIT_SPEC
    })?;
    Ok((spec, input))
}

fn cmd_scan(common: &CommonArgs) -> u8 {
    let (mut spec, input) = match load(common) {
        Ok(v) => v,
        Err(code) => return code,
    };
    if let Some(p) = common.policy {
        spec.scan_config.policy = p.into();
    }
    let registry = ScanRegistry::default();
    let config = match spec.scan_config.compile() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_SPEC;
        }
    };
    let specs = match compile_specs(&spec.token_specs, &registry) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_SPEC;
        }
    };
    let la = match build_lexical_graph(input.trim_end_matches('\n'), &specs, &config, &registry) {
        Ok(la) => la,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_SCAN;
        }
    };
    match common.format {
        Format::Dot => print!("{}", export_dot_la(&la)),
        Format::Json => println!("{}", serde_json::to_string_pretty(&la_to_json(&la)).unwrap()),
    }
    0
}

fn cmd_parse(common: &CommonArgs, count_trees: bool, report: bool) -> u8 {
    let (spec, input) = match load(common) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let result = run(
        &spec,
        input.trim_end_matches('\n'),
        common.policy.map(Into::into),
        &ScanRegistry::default(),
        &EvaluatorRegistry::new(),
    );
    let result = match result {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return match e {
                RunError::Pattern(_) => EXIT_SPEC,
                RunError::Scan(_) => EXIT_SCAN,
                RunError::Parse(_) | RunError::Enforce(_) => EXIT_NO_TREE,
            };
        }
    };
    if report {
        eprintln!("{}", serde_json::to_string_pretty(&result.report).unwrap());
    }
    if count_trees {
        println!("{}", result.report.tree_count);
        return 0;
    }
    match common.format {
        Format::Dot => print!("{}", export_dot_egraph(&result.egraph)),
        Format::Json => println!(
            "{}",
            serde_json::to_string_pretty(&egraph_to_json(&result.egraph)).unwrap()
        ),
    }
    0
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match &cli.command {
        Command::Scan { common } => cmd_scan(common),
        Command::Parse {
            common,
            count_trees,
            report,
        } => cmd_parse(common, *count_trees, *report),
    };
    ExitCode::from(code)
}
