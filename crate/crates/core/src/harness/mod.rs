//! Reproducible scenarios behind the `tmis` command line.
//!
//! Every scenario derives independent random streams from one seed (one per
//! actor and trial), so reruns with the same [`ScenarioConfig`] produce the
//! same transcript and report apart from timing fields.

mod report;
mod scenarios;

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::adversary::AttackError;
use crate::primitives::HashFunction;
use crate::protocol::{ProtocolError, Transcript};

pub use report::{AttackReport, ReportBuilder, StepOutcome, StepRecord};
pub use scenarios::{
    attack_identity, attack_impersonate, attack_replay, attack_session_key, demo_honest,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Attack(#[from] AttackError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub dictionary_path: Option<PathBuf>,
    pub dictionary_size: usize,
    /// Where the victim's identity sits in the dictionary. Defaults to the
    /// last slot (worst case for a sequential search).
    pub target_position: Option<usize>,
    /// Build the dictionary without the victim's identity (negative control).
    pub omit_target: bool,
    pub trials: usize,
    /// Worker threads for the identity search; `None` uses every core.
    pub workers: Option<usize>,
    pub hash: HashFunction,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            seed: 0,
            dictionary_path: None,
            dictionary_size: 10_000,
            target_position: None,
            omit_target: false,
            trials: 1,
            workers: None,
            hash: HashFunction::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.trials == 0 {
            return Err(HarnessError::Usage("--trials must be at least 1".into()));
        }
        if self.dictionary_size == 0 {
            return Err(HarnessError::Usage("--dict-size must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(HarnessError::Usage("--workers must be at least 1".into()));
        }
        if let Some(pos) = self.target_position {
            if self.dictionary_path.is_none() && pos >= self.dictionary_size {
                return Err(HarnessError::Usage(format!(
                    "--target-pos {pos} must be below --dict-size {}",
                    self.dictionary_size
                )));
            }
            if self.omit_target {
                return Err(HarnessError::Usage(
                    "--target-pos conflicts with --omit-target".into(),
                ));
            }
        }
        if let Some(p) = &self.dictionary_path {
            if !p.is_file() {
                return Err(HarnessError::Usage(format!(
                    "dictionary {} not found",
                    p.display()
                )));
            }
        }
        Ok(())
    }
}

/// A finished scenario: its report and everything sent on the channel.
#[derive(Debug, Clone)]
pub struct ScenarioOutput {
    pub report: AttackReport,
    pub transcript: Transcript,
}

/// Independent stream for `label` in `trial`, derived from `seed`.
pub fn rng_stream(seed: u64, label: &str, trial: u64) -> ChaCha20Rng {
    let d = HashFunction::Sha256
        .hash(&[
            b"tmis-rng".as_slice(),
            label.as_bytes(),
            &seed.to_be_bytes(),
            &trial.to_be_bytes(),
        ])
        .expect("non-empty parts");
    ChaCha20Rng::from_seed(d.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    DemoHonest,
    AttackIdentity,
    AttackImpersonate,
    AttackSessionKey,
    AttackReplay,
}

pub fn run(command: Command, config: &ScenarioConfig) -> Result<ScenarioOutput, HarnessError> {
    config.validate()?;
    match command {
        Command::DemoHonest => demo_honest(config),
        Command::AttackIdentity => attack_identity(config),
        Command::AttackImpersonate => attack_impersonate(config),
        Command::AttackSessionKey => attack_session_key(config),
        Command::AttackReplay => attack_replay(config),
    }
}
