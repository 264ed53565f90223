//! Executable model of a biometric smart-card remote authentication scheme
//! for telecare medicine information systems, together with the stolen-card
//! attacks against it.
//!
//! * [`primitives`]: hashing with length-framed fields, XOR, AES-256-GCM.
//! * [`protocol`]: registration, login (L1) and validation (V1..V4).
//! * [`adversary`]: card extraction, `X_i` derivation, offline identity
//!   guessing, login forgery and session-key recovery.
//! * [`harness`]: reproducible scenarios and JSON reports behind the `tmis` CLI.

mod hexser;

pub mod adversary;
pub mod harness;
pub mod primitives;
pub mod protocol;
