use rand::RngCore;

use super::{
    confirmation_tag, mask_nid, random_bytes, server_tag, session_key, Credentials, IssuedCard,
    LoginReply, LoginRequest, ProtocolError, ServerState, SessionConfirm, SessionResult, NONCE_LEN,
    REG_RANDOM_LEN,
};
use crate::primitives::{xor_bytes, Ciphertext, Digest, HashFunction};

/// What the user sends over the secure registration channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegistrationRequest {
    pub id: Vec<u8>,
    /// `W_i = h(ID_i, PW_i, r_i)`
    pub w: Digest,
}

/// Card contents `{NID, Y_i, N, V_i}` and the hash designation `h(·)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmartCard {
    pub hash: HashFunction,
    pub nid: Ciphertext,
    pub y: Vec<u8>,
    /// `N = r_i ⊕ H(B_i)`
    pub n: Vec<u8>,
    /// `V_i = h(ID_i, PW_i, r_i)`, the same value as `W_i`.
    pub v: Digest,
}

/// Registration step 1. Returns the request and the secret `r_i`.
pub fn begin_registration(
    creds: &Credentials,
    hash: HashFunction,
    rng: &mut impl RngCore,
) -> Result<(RegistrationRequest, [u8; REG_RANDOM_LEN]), ProtocolError> {
    creds.validate()?;
    let r_i: [u8; REG_RANDOM_LEN] = random_bytes(rng);
    let w = hash.hash(&[creds.id.as_slice(), &creds.password, &r_i])?;
    Ok((
        RegistrationRequest {
            id: creds.id.clone(),
            w,
        },
        r_i,
    ))
}

/// Registration step 3: the user writes `N` and `V_i` onto the issued card.
pub fn personalize_card(
    issued: IssuedCard,
    creds: &Credentials,
    r_i: &[u8],
) -> Result<SmartCard, ProtocolError> {
    creds.validate()?;
    let hash = issued.hash;
    let bio = hash.hash(&[&creds.biometric])?;
    let n = xor_bytes(r_i, bio.as_bytes())?;
    let v = hash.hash(&[creds.id.as_slice(), &creds.password, r_i])?;
    Ok(SmartCard {
        hash,
        nid: issued.nid,
        y: issued.y,
        n,
        v,
    })
}

/// Card-side state kept between L1 and V3.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CardSession {
    pub hash: HashFunction,
    pub id: Vec<u8>,
    pub x_i: Vec<u8>,
    pub r_u: Vec<u8>,
    pub nid: Ciphertext,
}

/// L1. Recovers `r_i`, checks `V_i`, and builds `⟨NID, a_i, r_u⟩`.
pub fn card_login(
    card: &SmartCard,
    creds: &Credentials,
    rng: &mut impl RngCore,
) -> Result<(LoginRequest, CardSession), ProtocolError> {
    creds.validate()?;
    let hash = card.hash;
    let bio = hash.hash(&[&creds.biometric])?;
    let r_i = xor_bytes(&card.n, bio.as_bytes()).map_err(|_| ProtocolError::LocalVerification)?;
    let w = hash.hash(&[creds.id.as_slice(), &creds.password, &r_i])?;
    if w != card.v {
        return Err(ProtocolError::LocalVerification);
    }
    let x_i = xor_bytes(&card.y, w.as_bytes()).map_err(|_| ProtocolError::LocalVerification)?;
    let r_u: [u8; NONCE_LEN] = random_bytes(rng);
    let a = hash.hash(&[creds.id.as_slice(), &x_i, &r_u])?;

    let request = LoginRequest {
        nid: card.nid.clone(),
        a,
        r_u: r_u.to_vec(),
    };
    let session = CardSession {
        hash,
        id: creds.id.clone(),
        x_i,
        r_u: r_u.to_vec(),
        nid: card.nid.clone(),
    };
    Ok((request, session))
}

/// V3 without touching a card: derive SK, unmask NID*, check the server tag,
/// and produce `C_i`.
pub fn verify_reply(
    session: &CardSession,
    reply: &LoginReply,
) -> Result<(SessionConfirm, SessionResult), ProtocolError> {
    let hash = session.hash;
    let sk = session_key(hash, &session.id, &session.x_i, &session.r_u, &reply.r_s)
        .map_err(|_| ProtocolError::ServerTagMismatch)?;
    let nid_star = mask_nid(hash, &sk, &session.id, &reply.masked_nid)?;
    let expected = server_tag(hash, &session.id, &session.nid, &sk, &nid_star)
        .map_err(|_| ProtocolError::ServerTagMismatch)?;
    if expected != reply.auth_tag {
        return Err(ProtocolError::ServerTagMismatch);
    }
    let c = confirmation_tag(hash, &session.id, &nid_star, &sk)?;
    Ok((
        SessionConfirm { c },
        SessionResult {
            sk,
            next_nid: Ciphertext::from_bytes(nid_star),
        },
    ))
}

/// V3 on the card. On success the card stores NID* in place of NID.
pub fn card_process_reply(
    card: &mut SmartCard,
    session: &CardSession,
    reply: &LoginReply,
) -> Result<(SessionConfirm, SessionResult), ProtocolError> {
    let (confirm, result) = verify_reply(session, reply)?;
    card.nid = result.next_nid.clone();
    Ok((confirm, result))
}

/// A registration together with the values that never leave the user.
#[derive(Debug, Clone)]
pub struct Registration {
    pub card: SmartCard,
    pub request: RegistrationRequest,
    pub r_i: [u8; REG_RANDOM_LEN],
}

pub fn register_traced(
    creds: &Credentials,
    server: &ServerState,
    rng: &mut impl RngCore,
) -> Result<Registration, ProtocolError> {
    let (request, r_i) = begin_registration(creds, server.hash(), rng)?;
    let issued = server.issue_card(&request, rng)?;
    let card = personalize_card(issued, creds, &r_i)?;
    Ok(Registration { card, request, r_i })
}

/// Full registration: steps 1 to 3 in order.
pub fn register(
    creds: &Credentials,
    server: &ServerState,
    rng: &mut impl RngCore,
) -> Result<SmartCard, ProtocolError> {
    register_traced(creds, server, rng).map(|r| r.card)
}
