use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tmis_auth::harness::{self, Command, HarnessError, ScenarioConfig};
use tmis_auth::primitives::HashFunction;

/// Runs the smart-card authentication scheme and the stolen-card attacks
/// against it. Reports go to stdout (or --out) as JSON, a summary to stderr.
#[derive(Parser)]
#[command(name = "tmis", version)]
struct Cli {
    #[command(subcommand)]
    command: Top,
}

#[derive(Subcommand)]
enum Top {
    /// Honest protocol runs.
    Demo {
        #[command(subcommand)]
        which: Demo,
    },
    /// Attack scenarios.
    Attack {
        #[command(subcommand)]
        which: Attack,
    },
}

#[derive(Subcommand)]
enum Demo {
    /// Register users and run honest sessions.
    Honest(Opts),
}

#[derive(Subcommand)]
enum Attack {
    /// Offline identity guessing from a stolen card and one eavesdropped login.
    IdentityGuess(Opts),
    /// Forge a fresh login and complete the session as the victim.
    Impersonate(Opts),
    /// Compute the session key of an eavesdropped honest session.
    SessionKey(Opts),
    /// Re-send a captured login request verbatim.
    Replay(Opts),
}

#[derive(Args, Clone)]
struct Opts {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Dictionary file, one identity per line.
    #[arg(long = "dict")]
    dict: Option<PathBuf>,
    #[arg(long = "dict-size", default_value_t = 10_000)]
    dict_size: usize,
    /// Index of the victim's identity in the dictionary (default: last).
    #[arg(long = "target-pos")]
    target_pos: Option<usize>,
    /// Leave the victim's identity out of the generated dictionary.
    #[arg(long = "omit-target")]
    omit_target: bool,
    #[arg(long, default_value_t = 1)]
    trials: usize,
    /// Threads for the dictionary search (default: available parallelism).
    #[arg(long)]
    workers: Option<usize>,
    /// sha256 or sha512-256.
    #[arg(long, default_value = "sha256")]
    hash: HashFunction,
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the JSON transcript here.
    #[arg(long)]
    transcript: Option<PathBuf>,
}

impl Opts {
    fn config(&self) -> ScenarioConfig {
        ScenarioConfig {
            seed: self.seed,
            dictionary_path: self.dict.clone(),
            dictionary_size: self.dict_size,
            target_position: self.target_pos,
            omit_target: self.omit_target,
            trials: self.trials,
            workers: self.workers,
            hash: self.hash,
        }
    }
}

fn execute(command: Command, opts: &Opts) -> Result<(), HarnessError> {
    let output = harness::run(command, &opts.config())?;
    eprint!("{}", output.report.summary());
    if let Some(path) = &opts.transcript {
        fs::write(path, output.transcript.to_json_pretty())?;
    }
    let json = output.report.to_json();
    match &opts.out {
        Some(path) => fs::write(path, json + "\n")?,
        None => println!("{json}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, opts) = match &cli.command {
        Top::Demo {
            which: Demo::Honest(o),
        } => (Command::DemoHonest, o),
        Top::Attack { which } => match which {
            Attack::IdentityGuess(o) => (Command::AttackIdentity, o),
            Attack::Impersonate(o) => (Command::AttackImpersonate, o),
            Attack::SessionKey(o) => (Command::AttackSessionKey, o),
            Attack::Replay(o) => (Command::AttackReplay, o),
        },
    };
    match execute(command, opts) {
        Ok(()) => ExitCode::SUCCESS,
        Err(HarnessError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
