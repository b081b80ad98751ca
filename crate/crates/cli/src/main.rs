use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tracing_subscriber::filter::LevelFilter;

mod consult;
mod edit;
mod failure;
mod serve;

/// Drought early-warning expert system: knowledge-base editor, consultation
/// and HTTP service.
#[derive(Debug, Parser)]
#[command(name = "dsage", version)]
struct Cli {
    /// Log debug detail to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Inspect and edit `.dkb` knowledge-base files.
    #[command(subcommand)]
    Kb(KbCommand),
    /// Run a consultation and print the ranked drought advisories.
    Consult(ConsultArgs),
    /// Consult once per input line (JSON array of observations), printing
    /// one JSON report per line.
    Batch(BatchArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Subcommand)]
enum KbCommand {
    /// Parse and validate a file; prints a summary or one line per issue.
    Validate { file: PathBuf },
    /// Rewrite a file in canonical form.
    Fmt {
        file: PathBuf,
        /// Only report whether the file is canonical (exit 1 if not).
        #[arg(long)]
        check: bool,
    },
    /// List rules (and optionally the indicator catalog).
    List {
        file: PathBuf,
        #[arg(long)]
        indicators: bool,
    },
    /// Add or replace rules given in rule syntax, e.g.
    /// `rule R99 { if stars are sighted then "no evidence of drought" cf 0.2 }`.
    AddRule {
        file: PathBuf,
        /// Rule text; read from stdin when omitted.
        rule: Option<String>,
    },
    /// Delete a rule by id.
    DelRule { file: PathBuf, id: String },
}

#[derive(Debug, Args)]
struct ConsultArgs {
    /// Knowledge base to consult; the built-in seed knowledge base if omitted.
    #[arg(long)]
    kb: Option<PathBuf>,
    /// An observation `<object> <verb> <value> [cf]`; repeatable. The CF
    /// defaults to 1.0.
    #[arg(long = "observe", value_name = "OBSERVATION")]
    observe: Vec<String>,
    /// Emit the machine-readable report with explanation traces.
    #[arg(long)]
    json: bool,
    /// Ask for observations interactively on stdin.
    #[arg(long)]
    interactive: bool,
}

#[derive(Debug, Args)]
struct BatchArgs {
    #[arg(long)]
    kb: Option<PathBuf>,
    /// Input file; stdin if omitted or `-`.
    input: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    /// Store directory; created and seeded if empty.
    #[arg(long, env = "DSAGE_STORE")]
    store: Option<PathBuf>,
    /// Listen address, e.g. 127.0.0.1:8080.
    #[arg(long)]
    listen: Option<String>,
    /// Origin allowed to call the API from a browser.
    #[arg(long)]
    cors_origin: Option<String>,
    /// Configuration file (`key = value` lines).
    #[arg(long)]
    config: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_max_level(if cli.verbose {
            LevelFilter::DEBUG
        } else {
            LevelFilter::INFO
        })
        .init();

    let outcome = match cli.command {
        Command::Kb(cmd) => match cmd {
            KbCommand::Validate { file } => edit::validate(&file),
            KbCommand::Fmt { file, check } => edit::fmt(&file, check),
            KbCommand::List { file, indicators } => edit::list(&file, indicators),
            KbCommand::AddRule { file, rule } => edit::add_rule(&file, rule),
            KbCommand::DelRule { file, id } => edit::del_rule(&file, &id),
        },
        Command::Consult(args) => consult::consult(&args),
        Command::Batch(args) => consult::batch(&args),
        Command::Serve(args) => serve::serve(args),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            f.report();
            f.exit_code()
        }
    }
}
