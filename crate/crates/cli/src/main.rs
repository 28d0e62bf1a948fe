mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use r1qfa::exec::{set_workers, Execution};
use serde_json::json;

use commands::Failure;

#[derive(Parser, Debug)]
#[command(name = "r1qfa", version, about = "Decide-and-halt recognizability of R1 languages")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Global {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads (1 runs sequentially).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Refuse constructions with more states than this.
    #[arg(long, global = true, default_value_t = 2_000_000)]
    pub max_states: u128,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Text,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Prob,
    DhPra,
    MmQfa,
    MmBqfa,
}

#[derive(Args, Debug, Clone)]
pub struct SearchArgs {
    /// Largest half size of a witness.
    #[arg(long, default_value_t = 4)]
    pub max_m: usize,
    /// Allow the last factor column to contain the empty word.
    #[arg(long)]
    pub allow_empty_final: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build and solve the inequality system of a language.
    Analyze {
        language: PathBuf,
        /// Also search for a forbidden construction.
        #[arg(long)]
        forbidden: bool,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Write an automaton recognizing a consistent language.
    Construct {
        language: PathBuf,
        #[arg(long, value_enum)]
        model: Model,
        /// Replication parameter; chosen from the error bounds when omitted.
        #[arg(long)]
        n: Option<usize>,
        /// Output file (stdout when omitted).
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Run an automaton file on words.
    Simulate {
        automaton: PathBuf,
        words: Vec<String>,
        /// Run every word up to this length instead.
        #[arg(long)]
        max_len: Option<usize>,
        /// Measure-once semantics (mm-bqfa and mm-qfa only).
        #[arg(long)]
        measure_once: bool,
    },
    /// Construct, simulate a corpus and report the recognition interval.
    Verify {
        language: PathBuf,
        #[arg(long, value_enum)]
        model: Model,
        #[arg(long)]
        n: Option<usize>,
        /// Corpus word length bound (default: alphabet size).
        #[arg(long)]
        max_len: Option<usize>,
        /// Simulate dh-pra in floating point.
        #[arg(long)]
        float: bool,
        /// Include the per-word table.
        #[arg(long)]
        words: bool,
    },
    /// Search for a forbidden construction.
    Forbidden {
        language: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Completely positive map utilities.
    Cpmap {
        #[command(subcommand)]
        action: CpmapCommand,
    },
}

#[derive(Subcommand, Debug)]
enum CpmapCommand {
    /// Report the channel predicates.
    Check { channel: PathBuf },
    /// Compute the idempotent omega-limit superoperator.
    Omega {
        channel: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        peripheral_tol: f64,
        #[arg(long, default_value_t = 1e-6)]
        idempotent_tol: f64,
    },
    /// Check order independence of the omega-limit of a product of idempotents.
    #[command(name = "bistEJ")]
    BistEj {
        #[arg(required = true)]
        channels: Vec<PathBuf>,
        /// Random orders tested besides the identity and its reverse.
        #[arg(long, default_value_t = 8)]
        samples: usize,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
}

fn execution(global: &Global) -> Execution {
    match global.workers {
        Some(1) => Execution::Sequential,
        Some(n) => {
            set_workers(n);
            Execution::default()
        }
        None => Execution::default(),
    }
}

fn run(cli: Cli) -> Result<serde_json::Value, Failure> {
    let g = &cli.global;
    let exec = execution(g);
    match cli.command {
        Command::Analyze {
            language,
            forbidden,
            search,
        } => commands::analyze(&language, forbidden.then_some(&search), exec),
        Command::Construct {
            language,
            model,
            n,
            out,
        } => commands::construct(&language, model, n, out.as_deref(), g),
        Command::Simulate {
            automaton,
            words,
            max_len,
            measure_once,
        } => commands::simulate(&automaton, &words, max_len, measure_once, exec),
        Command::Verify {
            language,
            model,
            n,
            max_len,
            float,
            words,
        } => commands::verify(&language, model, n, max_len, float, words, g, exec),
        Command::Forbidden { language, search } => commands::forbidden(&language, &search, exec),
        Command::Cpmap { action } => match action {
            CpmapCommand::Check { channel } => commands::cp_check(&channel),
            CpmapCommand::Omega {
                channel,
                peripheral_tol,
                idempotent_tol,
            } => commands::cp_omega(&channel, peripheral_tol, idempotent_tol),
            CpmapCommand::BistEj { channels, samples, tol } => {
                commands::cp_bist_ej(&channels, samples, tol, g.seed, exec)
            }
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let message = e.render().to_string();
            let first = message
                .lines()
                .next()
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            output::put(&format!("{}\n", json!({ "error": first })));
            return ExitCode::from(2);
        }
    };
    let format = cli.global.format;
    match run(cli) {
        Ok(v) => {
            output::emit(&v, format);
            ExitCode::SUCCESS
        }
        Err(Failure::Negative(v)) => {
            output::emit(&v, format);
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            output::put(&format!("{}\n", json!({ "error": msg })));
            ExitCode::from(2)
        }
    }
}
