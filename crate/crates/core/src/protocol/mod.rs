//! The user/smart-card side and the stateless server side of the scheme.
//!
//! Registration:
//!
//! ```text
//! user:   W_i = h(ID_i, PW_i, r_i)                      --(ID_i, W_i)-->  server
//! server: X_i = h(ID_i, x), Y_i = X_i ^ W_i, NID = E(ID_i, R)  --card-->  user
//! user:   N = r_i ^ H(B_i), V_i = h(ID_i, PW_i, r_i)    (stored on card)
//! ```
//!
//! Login and validation run L1, V1..V4 as separate functions so tests and the
//! adversary can drive each step on its own.

mod card;
mod messages;
mod server;
mod transcript;

use rand::RngCore;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::primitives::{xor_bytes, Ciphertext, Digest, HashFunction, PrimitiveError, DIGEST_LEN};

pub use card::{
    begin_registration, card_login, card_process_reply, personalize_card, register,
    register_traced, verify_reply, CardSession, Registration, RegistrationRequest, SmartCard,
};
pub use messages::{LoginReply, LoginRequest, Message, SessionConfirm};
pub use server::{
    server_confirm, server_validate, IssuedCard, PendingSession, ServerState, DEFAULT_SECRET_LEN,
};
pub use transcript::{Direction, EntryId, Outcome, Transcript, TranscriptEntry, TranscriptError};

/// Length of `R`, `R*`, `r_u` and `r_s`.
pub const NONCE_LEN: usize = 16;
/// Length of the registration random `r_i`; it is XORed with `H(B_i)`.
pub const REG_RANDOM_LEN: usize = DIGEST_LEN;

/// Verification points of the scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Step {
    /// Card-local `V_i` check before anything is sent.
    L1,
    /// Server decrypts NID.
    V1Decrypt,
    /// Server checks `a_i`.
    V1Verify,
    /// Card checks the server tag.
    V3,
    /// Server checks `C_i`.
    V4,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProtocolError {
    #[error("credentials must have non-empty id, password and biometric")]
    InvalidCredentials,
    #[error("server secret must not be empty")]
    EmptyServerSecret,
    #[error("smart card rejected the local credentials")]
    LocalVerification,
    #[error("NID does not decrypt to an identity")]
    NidDecryption,
    #[error("login authenticator a_i does not verify")]
    AuthenticatorMismatch,
    #[error("server tag does not verify; server not authenticated")]
    ServerTagMismatch,
    #[error("session confirmation C_i does not verify")]
    ConfirmationMismatch,
    #[error(transparent)]
    Primitive(#[from] PrimitiveError),
}

impl ProtocolError {
    /// The verification step that produced this rejection, if any.
    pub fn step(&self) -> Option<Step> {
        match self {
            ProtocolError::LocalVerification => Some(Step::L1),
            ProtocolError::NidDecryption => Some(Step::V1Decrypt),
            ProtocolError::AuthenticatorMismatch => Some(Step::V1Verify),
            ProtocolError::ServerTagMismatch => Some(Step::V3),
            ProtocolError::ConfirmationMismatch => Some(Step::V4),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Credentials {
    pub id: Vec<u8>,
    pub password: Vec<u8>,
    pub biometric: Vec<u8>,
}

impl Credentials {
    pub fn new(
        id: impl Into<Vec<u8>>,
        password: impl Into<Vec<u8>>,
        biometric: impl Into<Vec<u8>>,
    ) -> Result<Self, ProtocolError> {
        let c = Credentials {
            id: id.into(),
            password: password.into(),
            biometric: biometric.into(),
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ProtocolError> {
        if self.id.is_empty() || self.password.is_empty() || self.biometric.is_empty() {
            return Err(ProtocolError::InvalidCredentials);
        }
        Ok(())
    }
}

/// Agreed session state on one side of an accepted session.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionResult {
    pub sk: Digest,
    pub next_nid: Ciphertext,
}

/// `SK = h(ID_i, X_i, r_u, r_s)`
pub fn session_key(
    hash: HashFunction,
    id: &[u8],
    x_i: &[u8],
    r_u: &[u8],
    r_s: &[u8],
) -> Result<Digest, PrimitiveError> {
    hash.hash(&[id, x_i, r_u, r_s])
}

/// `B_i = h(ID_i, NID, SK, NID*)`
pub fn server_tag(
    hash: HashFunction,
    id: &[u8],
    nid: &Ciphertext,
    sk: &Digest,
    nid_star: &[u8],
) -> Result<Digest, PrimitiveError> {
    hash.hash(&[id, nid.as_bytes(), sk.as_bytes(), nid_star])
}

/// `C_i = h(ID_i, NID*, SK)`
pub fn confirmation_tag(
    hash: HashFunction,
    id: &[u8],
    nid_star: &[u8],
    sk: &Digest,
) -> Result<Digest, PrimitiveError> {
    hash.hash(&[id, nid_star, sk.as_bytes()])
}

/// Stretches `h(SK, ID_i)` to `len` bytes. Block 0 is `h(SK, ID_i)`; block
/// `j > 0` is `h(SK, ID_i, j)` with `j` as 4 big-endian bytes.
pub fn mask_stream(
    hash: HashFunction,
    sk: &Digest,
    id: &[u8],
    len: usize,
) -> Result<Vec<u8>, PrimitiveError> {
    let mut out = Vec::with_capacity(len + DIGEST_LEN);
    let mut counter: u32 = 0;
    while out.len() < len {
        let block = if counter == 0 {
            hash.hash(&[sk.as_bytes(), id])?
        } else {
            hash.hash(&[sk.as_bytes(), id, &counter.to_be_bytes()])?
        };
        out.extend_from_slice(block.as_bytes());
        counter += 1;
    }
    out.truncate(len);
    Ok(out)
}

/// `M_i = h(SK || ID_i) ⊕ NID*`, with the hash stretched to NID*'s length.
/// Self-inverse: applying it to `M_i` recovers `NID*`.
pub fn mask_nid(
    hash: HashFunction,
    sk: &Digest,
    id: &[u8],
    data: &[u8],
) -> Result<Vec<u8>, PrimitiveError> {
    let stream = mask_stream(hash, sk, id, data.len())?;
    xor_bytes(data, &stream)
}

pub(crate) fn random_bytes<const N: usize>(rng: &mut impl RngCore) -> [u8; N] {
    let mut out = [0u8; N];
    rng.fill_bytes(&mut out);
    out
}

/// Everything an honest run produced, for tests and reports.
#[derive(Debug, Clone)]
pub struct HonestSession {
    pub user: SessionResult,
    pub server: SessionResult,
    pub request: LoginRequest,
    pub reply: LoginReply,
    pub confirm: SessionConfirm,
    pub entries: [EntryId; 3],
}

/// Runs L1 then V1..V4 over `transcript`. On success the card holds the new NID.
///
/// A local L1 failure returns before anything is posted.
pub fn run_honest_session(
    creds: &Credentials,
    card: &mut SmartCard,
    server: &ServerState,
    user_rng: &mut impl RngCore,
    server_rng: &mut impl RngCore,
    transcript: &mut Transcript,
) -> Result<HonestSession, ProtocolError> {
    let (request, session) = card_login(card, creds, user_rng)?;

    let req_id = transcript.post(Direction::UserToServer, request.clone());
    let (reply, pending) = settle(
        transcript,
        req_id,
        server_validate(server, &request, server_rng),
    )?;

    let reply_id = transcript.post(Direction::ServerToUser, reply.clone());
    let (confirm, user) = settle(
        transcript,
        reply_id,
        card_process_reply(card, &session, &reply),
    )?;

    let confirm_id = transcript.post(Direction::UserToServer, confirm.clone());
    let server_result = settle(transcript, confirm_id, server_confirm(&pending, &confirm))?;

    Ok(HonestSession {
        user,
        server: server_result,
        request,
        reply,
        confirm,
        entries: [req_id, reply_id, confirm_id],
    })
}

/// Resolves a posted entry from the receiving side's verdict.
pub fn settle<T>(
    transcript: &mut Transcript,
    id: EntryId,
    result: Result<T, ProtocolError>,
) -> Result<T, ProtocolError> {
    let outcome = match &result {
        Ok(_) => transcript.resolve(id, Outcome::Accepted),
        Err(e) => match e.step() {
            Some(step) => transcript.reject(id, step),
            None => transcript.resolve(id, Outcome::Rejected),
        },
    };
    outcome.expect("freshly posted entry is pending");
    result
}

#[cfg(test)]
mod tests;
