use std::fmt;

use rand::RngCore;

use super::{
    confirmation_tag, mask_nid, random_bytes, server_tag, session_key, LoginReply, LoginRequest,
    ProtocolError, RegistrationRequest, SessionConfirm, SessionResult, NONCE_LEN,
};
use crate::primitives::{
    sym_decrypt, sym_encrypt, xor_bytes, CipherKey, Ciphertext, Digest, FieldEncoding,
    HashFunction, IvPolicy, BLOCK_LEN,
};

/// 1024-bit long-term secret.
pub const DEFAULT_SECRET_LEN: usize = 128;

/// The server's long-term secret `x`. No per-user state is kept.
#[derive(Clone)]
pub struct ServerState {
    x: Vec<u8>,
    cipher_key: CipherKey,
    hash: HashFunction,
}

impl fmt::Debug for ServerState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ServerState")
            .field("x_len", &self.x.len())
            .field("hash", &self.hash)
            .finish()
    }
}

impl ServerState {
    /// The cipher key is `h(x)`, so `x` may be any length.
    pub fn new(x: impl Into<Vec<u8>>, hash: HashFunction) -> Result<Self, ProtocolError> {
        let x = x.into();
        if x.is_empty() {
            return Err(ProtocolError::EmptyServerSecret);
        }
        let cipher_key = CipherKey::from_digest(hash.hash(&[&x])?);
        Ok(ServerState {
            x,
            cipher_key,
            hash,
        })
    }

    pub fn generate(
        rng: &mut impl RngCore,
        secret_len: usize,
        hash: HashFunction,
    ) -> Result<Self, ProtocolError> {
        let mut x = vec![0u8; secret_len];
        rng.fill_bytes(&mut x);
        ServerState::new(x, hash)
    }

    pub fn secret(&self) -> &[u8] {
        &self.x
    }

    pub fn cipher_key(&self) -> &CipherKey {
        &self.cipher_key
    }

    pub fn hash(&self) -> HashFunction {
        self.hash
    }

    /// `X_i = h(ID_i, x)`
    pub fn user_secret(&self, id: &[u8]) -> Result<Digest, ProtocolError> {
        Ok(self.hash.hash(&[id, &self.x])?)
    }

    /// `E_x(ID_i || R)` with fresh `R` and IV.
    pub fn issue_nid(
        &self,
        id: &[u8],
        rng: &mut impl RngCore,
    ) -> Result<Ciphertext, ProtocolError> {
        let r: [u8; NONCE_LEN] = random_bytes(rng);
        let iv: [u8; BLOCK_LEN] = random_bytes(rng);
        Ok(sym_encrypt(
            &self.cipher_key,
            &FieldEncoding::new([id, &r]),
            IvPolicy::Supplied(iv),
        )?)
    }

    /// Decrypts NID to `(ID_i, R)` and returns `ID_i`.
    pub fn open_nid(&self, nid: &Ciphertext) -> Result<Vec<u8>, ProtocolError> {
        let parts = sym_decrypt(&self.cipher_key, nid)
            .map_err(|_| ProtocolError::NidDecryption)?
            .into_parts();
        match <[Vec<u8>; 2]>::try_from(parts) {
            Ok([id, _r]) if !id.is_empty() => Ok(id),
            _ => Err(ProtocolError::NidDecryption),
        }
    }

    /// Registration step 2.
    pub fn issue_card(
        &self,
        req: &RegistrationRequest,
        rng: &mut impl RngCore,
    ) -> Result<IssuedCard, ProtocolError> {
        if req.id.is_empty() {
            return Err(ProtocolError::InvalidCredentials);
        }
        let x_i = self.user_secret(&req.id)?;
        let y = xor_bytes(x_i.as_bytes(), req.w.as_bytes())?;
        let nid = self.issue_nid(&req.id, rng)?;
        Ok(IssuedCard {
            hash: self.hash,
            nid,
            y,
        })
    }
}

/// What the server writes to a new card: `{NID, Y_i, h(·)}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IssuedCard {
    pub hash: HashFunction,
    pub nid: Ciphertext,
    pub y: Vec<u8>,
}

/// Server-side state held between V2 and V4.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PendingSession {
    pub hash: HashFunction,
    pub id: Vec<u8>,
    pub nid: Ciphertext,
    pub sk: Digest,
    pub nid_star: Ciphertext,
}

/// V1 and V2. The receipt time is not checked, and nothing about earlier
/// sessions is consulted.
pub fn server_validate(
    server: &ServerState,
    req: &LoginRequest,
    rng: &mut impl RngCore,
) -> Result<(LoginReply, PendingSession), ProtocolError> {
    let hash = server.hash;
    // V1
    let id = server.open_nid(&req.nid)?;
    let x_i = server.user_secret(&id)?;
    let expected = hash
        .hash(&[id.as_slice(), x_i.as_bytes(), &req.r_u])
        .map_err(|_| ProtocolError::AuthenticatorMismatch)?;
    if expected != req.a {
        return Err(ProtocolError::AuthenticatorMismatch);
    }

    // V2
    let r_s: [u8; NONCE_LEN] = random_bytes(rng);
    let sk = session_key(hash, &id, x_i.as_bytes(), &req.r_u, &r_s)?;
    let nid_star = server.issue_nid(&id, rng)?;
    let auth_tag = server_tag(hash, &id, &req.nid, &sk, nid_star.as_bytes())?;
    let masked_nid = mask_nid(hash, &sk, &id, nid_star.as_bytes())?;

    let reply = LoginReply {
        r_s: r_s.to_vec(),
        auth_tag,
        masked_nid,
    };
    let pending = PendingSession {
        hash,
        id,
        nid: req.nid.clone(),
        sk,
        nid_star,
    };
    Ok((reply, pending))
}

/// V4.
pub fn server_confirm(
    pending: &PendingSession,
    confirm: &SessionConfirm,
) -> Result<SessionResult, ProtocolError> {
    let expected = confirmation_tag(
        pending.hash,
        &pending.id,
        pending.nid_star.as_bytes(),
        &pending.sk,
    )?;
    if expected != confirm.c {
        return Err(ProtocolError::ConfirmationMismatch);
    }
    Ok(SessionResult {
        sk: pending.sk,
        next_nid: pending.nid_star.clone(),
    })
}
