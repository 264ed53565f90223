//! Public-channel record. Everything posted here is visible to an eavesdropper.

use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::messages::Message;
use super::Step;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    UserToServer,
    ServerToUser,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pending,
    Accepted,
    Rejected,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub direction: Direction,
    #[serde(flatten)]
    pub message: Message,
    pub outcome: Outcome,
    /// Verification step that rejected the message.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejected_at: Option<Step>,
    /// Receipt time (T*), milliseconds since the Unix epoch. Never checked by
    /// the server.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub received_at_ms: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EntryId(pub usize);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TranscriptError {
    #[error("no transcript entry {0}")]
    UnknownEntry(usize),
    #[error("entry {0} already resolved as {1:?}")]
    AlreadyResolved(usize, Outcome),
    #[error("cannot resolve an entry back to pending")]
    BackToPending,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Transcript {
    entries: Vec<TranscriptEntry>,
    #[serde(skip)]
    untimed: bool,
}

impl Transcript {
    /// A transcript that stamps each entry with its receipt time.
    pub fn new() -> Self {
        Transcript::default()
    }

    /// A transcript that never records wall-clock time.
    pub fn untimed() -> Self {
        Transcript {
            entries: Vec::new(),
            untimed: true,
        }
    }

    pub fn post(&mut self, direction: Direction, message: impl Into<Message>) -> EntryId {
        let received_at_ms = if self.untimed {
            None
        } else {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .ok()
                .map(|d| d.as_millis() as u64)
        };
        self.entries.push(TranscriptEntry {
            direction,
            message: message.into(),
            outcome: Outcome::Pending,
            rejected_at: None,
            received_at_ms,
        });
        EntryId(self.entries.len() - 1)
    }

    pub fn resolve(&mut self, id: EntryId, outcome: Outcome) -> Result<(), TranscriptError> {
        self.settle(id, outcome, None)
    }

    pub fn reject(&mut self, id: EntryId, step: Step) -> Result<(), TranscriptError> {
        self.settle(id, Outcome::Rejected, Some(step))
    }

    fn settle(
        &mut self,
        id: EntryId,
        outcome: Outcome,
        step: Option<Step>,
    ) -> Result<(), TranscriptError> {
        if outcome == Outcome::Pending {
            return Err(TranscriptError::BackToPending);
        }
        let entry = self
            .entries
            .get_mut(id.0)
            .ok_or(TranscriptError::UnknownEntry(id.0))?;
        if entry.outcome != Outcome::Pending {
            return Err(TranscriptError::AlreadyResolved(id.0, entry.outcome));
        }
        entry.outcome = outcome;
        entry.rejected_at = step;
        Ok(())
    }

    pub fn get(&self, id: EntryId) -> Option<&TranscriptEntry> {
        self.entries.get(id.0)
    }

    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Appends all entries of `other`, shifting nothing else.
    pub fn extend(&mut self, other: Transcript) {
        self.entries.extend(other.entries);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&self.entries).expect("transcript serializes")
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.entries).expect("transcript serializes")
    }

    /// JSON with receipt times removed, for reproducibility checks.
    pub fn canonical_json(&self) -> String {
        let stripped: Vec<TranscriptEntry> = self
            .entries
            .iter()
            .cloned()
            .map(|mut e| {
                e.received_at_ms = None;
                e
            })
            .collect();
        serde_json::to_string(&stripped).expect("transcript serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, serde_json::Error> {
        Ok(Transcript {
            entries: serde_json::from_str(s)?,
            untimed: false,
        })
    }
}
