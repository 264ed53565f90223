//! Attacks enabled by a stolen smart card.
//!
//! The card stores both `Y_i = X_i ⊕ W_i` and `V_i = W_i`, so anyone who
//! reads it learns `X_i = Y_i ⊕ V_i`. With `X_i` and one eavesdropped
//! `⟨NID, a_i, r_u⟩`, the identity is the only unknown in
//! `a_i = h(ID_i, X_i, r_u)` and falls to an offline dictionary search. From
//! there the attacker can build fresh logins and compute session keys.

mod dictionary;

use rand::RngCore;
use rayon::prelude::*;
use thiserror::Error;

use crate::primitives::{xor_bytes, Ciphertext, Digest, HashFunction, PrimitiveError};
use crate::protocol::{
    mask_nid, server_confirm, server_validate, session_key, settle, verify_reply, CardSession,
    Direction, EntryId, LoginReply, LoginRequest, Message, ProtocolError, ServerState,
    SessionResult, SmartCard, Transcript, NONCE_LEN,
};

pub use dictionary::{random_identity, Dictionary};

#[derive(Debug, Error)]
pub enum AttackError {
    #[error("no card secrets: the attacker never held the card")]
    MissingCardSecrets,
    #[error("X_i has not been derived")]
    MissingXi,
    #[error("identity has not been guessed")]
    MissingIdentity,
    #[error("no login request was observed on the channel")]
    NoObservedRequest,
    #[error("dictionary is empty")]
    EmptyDictionary,
    #[error("target position {pos} outside dictionary of {size}")]
    TargetOutOfRange { pos: usize, size: usize },
    #[error("could not start worker pool: {0}")]
    Workers(String),
    #[error(transparent)]
    Primitive(#[from] PrimitiveError),
    #[error("protocol rejected the attacker: {0}")]
    Rejected(#[from] ProtocolError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Raw card contents `{NID, Y_i, h(·), N, V_i}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CardSecrets {
    pub hash: HashFunction,
    pub nid: Ciphertext,
    pub y: Vec<u8>,
    pub n: Vec<u8>,
    pub v: Digest,
}

/// Everything the attacker has learned so far.
#[derive(Debug, Clone, Default)]
pub struct AdversaryKnowledge {
    pub card_secrets: Option<CardSecrets>,
    pub observed_requests: Vec<LoginRequest>,
    pub observed_replies: Vec<LoginReply>,
    pub x_i: Option<Vec<u8>>,
    pub id_guess: Option<Vec<u8>>,
    pub framed_sk: Option<Digest>,
}

/// Result of an offline identity search.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdentityGuess {
    pub identity: Option<Vec<u8>>,
    /// Candidates consumed in dictionary order up to and including the match
    /// (the whole dictionary when nothing matched).
    pub tested: usize,
    /// Another, different candidate also matched. Only a hash collision can
    /// cause this; the earlier candidate wins.
    pub collision: bool,
}

/// A completed login in which the attacker stood in for the card.
#[derive(Debug, Clone)]
pub struct ForgedSession {
    pub attacker: SessionResult,
    pub server: SessionResult,
    pub reply: LoginReply,
    pub entries: [EntryId; 3],
}

/// Reads out the card. Holding the card is granted by the threat model; no
/// physical attack is simulated.
pub fn extract_card_secrets(card: Option<&SmartCard>) -> AdversaryKnowledge {
    AdversaryKnowledge {
        card_secrets: card.map(|c| CardSecrets {
            hash: c.hash,
            nid: c.nid.clone(),
            y: c.y.clone(),
            n: c.n.clone(),
            v: c.v,
        }),
        ..AdversaryKnowledge::default()
    }
}

impl AdversaryKnowledge {
    /// The card's `h(·)` if known, else the default.
    pub fn hash(&self) -> HashFunction {
        self.card_secrets
            .as_ref()
            .map(|s| s.hash)
            .unwrap_or_default()
    }

    /// Collects every login request and reply seen on the channel, in order.
    pub fn eavesdrop(&mut self, transcript: &Transcript) {
        for entry in transcript.entries() {
            match &entry.message {
                Message::LoginRequest(r) => self.observed_requests.push(r.clone()),
                Message::LoginReply(r) => self.observed_replies.push(r.clone()),
                Message::SessionConfirm(_) => {}
            }
        }
    }

    pub fn observe_request(&mut self, req: LoginRequest) {
        self.observed_requests.push(req);
    }

    pub fn observe_reply(&mut self, reply: LoginReply) {
        self.observed_replies.push(reply);
    }

    /// `X_i = Y_i ⊕ V_i`
    pub fn derive_xi(&mut self) -> Result<Vec<u8>, AttackError> {
        let secrets = self
            .card_secrets
            .as_ref()
            .ok_or(AttackError::MissingCardSecrets)?;
        let x_i = xor_bytes(&secrets.y, secrets.v.as_bytes())?;
        self.x_i = Some(x_i.clone());
        Ok(x_i)
    }

    /// Anchor request for the identity search: the first one observed.
    pub fn anchor_request(&self) -> Result<&LoginRequest, AttackError> {
        self.observed_requests
            .first()
            .ok_or(AttackError::NoObservedRequest)
    }

    /// Tries every candidate `ID*` against `a_i = h(ID*, X_i, r_u)` of the
    /// anchor request. `workers` bounds the thread count (`None` uses all
    /// cores). The first match in dictionary order is returned regardless of
    /// which worker found it.
    pub fn guess_identity(
        &mut self,
        dict: &Dictionary,
        workers: Option<usize>,
    ) -> Result<IdentityGuess, AttackError> {
        let x_i = self.x_i.as_deref().ok_or(AttackError::MissingXi)?;
        let anchor = self.anchor_request()?;
        let guess = search_identity(self.hash(), x_i, anchor, dict, workers)?;
        if let Some(id) = &guess.identity {
            self.id_guess = Some(id.clone());
        }
        Ok(guess)
    }

    fn session_prerequisites(&self) -> Result<(&[u8], &[u8]), AttackError> {
        let x_i = self.x_i.as_deref().ok_or(AttackError::MissingXi)?;
        let id = self
            .id_guess
            .as_deref()
            .ok_or(AttackError::MissingIdentity)?;
        Ok((id, x_i))
    }

    /// `⟨NID, h(ID_i, X_i, r_u*), r_u*⟩` with the observed NID and a fresh `r_u*`.
    pub fn forge_login(&self, rng: &mut impl RngCore) -> Result<LoginRequest, AttackError> {
        let (id, x_i) = self.session_prerequisites()?;
        let nid = self.anchor_request()?.nid.clone();
        let mut r_u = [0u8; NONCE_LEN];
        rng.fill_bytes(&mut r_u);
        let a = self.hash().hash(&[id, x_i, &r_u])?;
        Ok(LoginRequest {
            nid,
            a,
            r_u: r_u.to_vec(),
        })
    }

    /// The anchor request, byte for byte. Needs no secrets at all.
    pub fn replay_login(&self) -> Result<LoginRequest, AttackError> {
        Ok(self.anchor_request()?.clone())
    }

    /// `SK = h(ID_i, X_i, r_u, r_s)` from an eavesdropped request/reply pair.
    pub fn recover_session_key(
        &mut self,
        req: &LoginRequest,
        reply: &LoginReply,
    ) -> Result<Digest, AttackError> {
        let (id, x_i) = self.session_prerequisites()?;
        let sk = session_key(self.hash(), id, x_i, &req.r_u, &reply.r_s)?;
        self.framed_sk = Some(sk);
        Ok(sk)
    }

    /// Strips the mask off `M_i` with a recovered key, yielding NID*.
    pub fn unmask_next_nid(
        &self,
        reply: &LoginReply,
        sk: &Digest,
    ) -> Result<Ciphertext, AttackError> {
        let id = self
            .id_guess
            .as_deref()
            .ok_or(AttackError::MissingIdentity)?;
        Ok(Ciphertext::from_bytes(mask_nid(
            self.hash(),
            sk,
            id,
            &reply.masked_nid,
        )?))
    }

    /// Plays the user's side of V1..V4 with a forged request, no card
    /// involved. Every message goes over `transcript`.
    pub fn complete_forged_session(
        &mut self,
        forged: &LoginRequest,
        server: &ServerState,
        server_rng: &mut impl RngCore,
        transcript: &mut Transcript,
    ) -> Result<ForgedSession, AttackError> {
        let (id, x_i) = self.session_prerequisites()?;
        let session = CardSession {
            hash: self.hash(),
            id: id.to_vec(),
            x_i: x_i.to_vec(),
            r_u: forged.r_u.clone(),
            nid: forged.nid.clone(),
        };

        let req_id = transcript.post(Direction::UserToServer, forged.clone());
        let (reply, pending) = settle(
            transcript,
            req_id,
            server_validate(server, forged, server_rng),
        )?;

        let reply_id = transcript.post(Direction::ServerToUser, reply.clone());
        let (confirm, attacker) = settle(transcript, reply_id, verify_reply(&session, &reply))?;
        self.framed_sk = Some(attacker.sk);

        let confirm_id = transcript.post(Direction::UserToServer, confirm.clone());
        let server_result = settle(transcript, confirm_id, server_confirm(&pending, &confirm))?;

        Ok(ForgedSession {
            attacker,
            server: server_result,
            reply,
            entries: [req_id, reply_id, confirm_id],
        })
    }
}

/// Pure search over `dict`; independent of any accumulated knowledge.
pub fn search_identity(
    hash: HashFunction,
    x_i: &[u8],
    anchor: &LoginRequest,
    dict: &Dictionary,
    workers: Option<usize>,
) -> Result<IdentityGuess, AttackError> {
    let candidates = dict.candidates();
    let matches = |c: &Vec<u8>| {
        hash.hash(&[c.as_slice(), x_i, &anchor.r_u])
            .map(|d| d == anchor.a)
            .unwrap_or(false)
    };

    let run = || {
        let first = candidates.par_iter().position_first(matches);
        let collision = first.is_some_and(|i| {
            let winner = &candidates[i];
            candidates[i + 1..]
                .par_iter()
                .any(|c| c != winner && matches(c))
        });
        (first, collision)
    };

    let (first, collision) = match workers {
        Some(1) => {
            let first = candidates.iter().position(matches);
            let collision = first.is_some_and(|i| {
                candidates[i + 1..]
                    .iter()
                    .any(|c| c != &candidates[i] && matches(c))
            });
            (first, collision)
        }
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| AttackError::Workers(e.to_string()))?
            .install(run),
        None => run(),
    };

    Ok(IdentityGuess {
        identity: first.map(|i| candidates[i].clone()),
        tested: first.map_or(candidates.len(), |i| i + 1),
        collision,
    })
}
