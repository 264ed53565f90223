use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

use super::*;
use crate::primitives::{hash, sym_decrypt, xor_bytes, HashFunction};

fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn server() -> ServerState {
    ServerState::generate(&mut rng(1000), DEFAULT_SECRET_LEN, HashFunction::Sha256).unwrap()
}

fn alice() -> Credentials {
    Credentials::new("alice@clinic.net", "correct horse", vec![0x42; 64]).unwrap()
}

/// Honest run with all three actors seeded from `seed`.
fn honest(
    seed: u64,
) -> (
    Credentials,
    SmartCard,
    ServerState,
    Transcript,
    HonestSession,
) {
    let creds = alice();
    let server = server();
    let mut card = register(&creds, &server, &mut rng(seed)).unwrap();
    let mut t = Transcript::untimed();
    let hs = run_honest_session(
        &creds,
        &mut card,
        &server,
        &mut rng(seed + 1),
        &mut rng(seed + 2),
        &mut t,
    )
    .unwrap();
    (creds, card, server, t, hs)
}

#[test]
fn credentials_must_be_non_empty() {
    assert_eq!(
        Credentials::new("", "pw", "bio"),
        Err(ProtocolError::InvalidCredentials)
    );
    assert_eq!(
        Credentials::new("id", "", "bio"),
        Err(ProtocolError::InvalidCredentials)
    );
    assert_eq!(
        Credentials::new("id", "pw", ""),
        Err(ProtocolError::InvalidCredentials)
    );
    assert!(matches!(
        ServerState::new(Vec::new(), HashFunction::Sha256),
        Err(ProtocolError::EmptyServerSecret)
    ));
}

#[test]
fn registration_stores_w_as_v() {
    let creds = alice();
    let server = server();
    let reg = register_traced(&creds, &server, &mut rng(3)).unwrap();
    let card = &reg.card;

    // Recompute every card field from scratch.
    let w = hash(&[creds.id.as_slice(), &creds.password, &reg.r_i]).unwrap();
    assert_eq!(reg.request.w, w);
    assert_eq!(card.v, w);
    let x_i = hash(&[creds.id.as_slice(), server.secret()]).unwrap();
    assert_eq!(
        xor_bytes(&card.y, card.v.as_bytes()).unwrap(),
        x_i.as_bytes()
    );
    let bio = hash(&[&creds.biometric]).unwrap();
    assert_eq!(xor_bytes(&card.n, bio.as_bytes()).unwrap(), reg.r_i);
    assert_eq!(card.y.len(), 32);
    assert_eq!(card.n.len(), 32);

    let parts = sym_decrypt(server.cipher_key(), &card.nid)
        .unwrap()
        .into_parts();
    assert_eq!(parts.len(), 2);
    assert_eq!(parts[0], creds.id);
    assert_eq!(parts[1].len(), NONCE_LEN);
}

#[test]
fn cipher_key_is_hash_of_secret() {
    let s = server();
    assert_eq!(s.secret().len(), DEFAULT_SECRET_LEN);
    assert_eq!(
        s.cipher_key().as_bytes(),
        hash(&[s.secret()]).unwrap().as_bytes()
    );
}

#[test]
fn different_seeds_give_different_cards() {
    let creds = alice();
    let server = server();
    let a = register(&creds, &server, &mut rng(1)).unwrap();
    let b = register(&creds, &server, &mut rng(2)).unwrap();
    assert_ne!(a.nid, b.nid);
    assert_ne!(a.n, b.n);
    assert_ne!(a.v, b.v);
    // X_i does not depend on the registration randomness
    assert_eq!(
        xor_bytes(&a.y, a.v.as_bytes()).unwrap(),
        xor_bytes(&b.y, b.v.as_bytes()).unwrap()
    );
}

#[test]
fn honest_run_seed_7() {
    let (creds, card, server, t, hs) = honest(7);
    assert_eq!(hs.user.sk, hs.server.sk);
    assert_eq!(hs.user.next_nid, hs.server.next_nid);

    // Independent recomputation of SK from the wire values and ground truth.
    let x_i = hash(&[creds.id.as_slice(), server.secret()]).unwrap();
    let sk = hash(&[
        creds.id.as_slice(),
        x_i.as_bytes(),
        &hs.request.r_u,
        &hs.reply.r_s,
    ])
    .unwrap();
    assert_eq!(hs.user.sk, sk);

    // NID evolution
    assert_eq!(card.nid, hs.server.next_nid);
    assert_eq!(server.open_nid(&card.nid).unwrap(), creds.id);
    assert_ne!(card.nid, hs.request.nid);

    let kinds: Vec<_> = t
        .entries()
        .iter()
        .map(|e| (e.direction, e.message.kind(), e.outcome))
        .collect();
    assert_eq!(
        kinds,
        vec![
            (Direction::UserToServer, "login_request", Outcome::Accepted),
            (Direction::ServerToUser, "login_reply", Outcome::Accepted),
            (
                Direction::UserToServer,
                "session_confirm",
                Outcome::Accepted
            ),
        ]
    );
}

#[test]
fn wrong_password_or_biometric_is_rejected_locally() {
    let creds = alice();
    let server = server();
    let mut card = register(&creds, &server, &mut rng(5)).unwrap();
    let mut t = Transcript::untimed();

    let bad_pw = Credentials::new(creds.id.clone(), "wrong", creds.biometric.clone()).unwrap();
    let err = run_honest_session(
        &bad_pw,
        &mut card,
        &server,
        &mut rng(1),
        &mut rng(2),
        &mut t,
    )
    .unwrap_err();
    assert_eq!(err.step(), Some(Step::L1));

    let bad_bio =
        Credentials::new(creds.id.clone(), creds.password.clone(), vec![0x43; 64]).unwrap();
    assert_eq!(
        card_login(&card, &bad_bio, &mut rng(1)).unwrap_err(),
        ProtocolError::LocalVerification
    );

    let bad_id =
        Credentials::new("mallory", creds.password.clone(), creds.biometric.clone()).unwrap();
    assert_eq!(
        card_login(&card, &bad_id, &mut rng(1)).unwrap_err(),
        ProtocolError::LocalVerification
    );

    assert!(t.is_empty());
}

#[test]
fn flipped_authenticator_rejected_at_v1() {
    let creds = alice();
    let server = server();
    let card = register(&creds, &server, &mut rng(8)).unwrap();
    let (mut req, _) = card_login(&card, &creds, &mut rng(9)).unwrap();
    req.a.0[0] ^= 1;
    assert_eq!(
        server_validate(&server, &req, &mut rng(10)).unwrap_err(),
        ProtocolError::AuthenticatorMismatch
    );
}

#[test]
fn garbage_requests_are_rejected_not_panicking() {
    let server = server();
    let req = LoginRequest {
        nid: Ciphertext::from_bytes(vec![1, 2, 3]),
        a: Digest([0; 32]),
        r_u: vec![],
    };
    assert_eq!(
        server_validate(&server, &req, &mut rng(1))
            .unwrap_err()
            .step(),
        Some(Step::V1Decrypt)
    );

    // Valid NID but empty r_u
    let creds = alice();
    let card = register(&creds, &server, &mut rng(2)).unwrap();
    let (mut req, _) = card_login(&card, &creds, &mut rng(3)).unwrap();
    req.r_u.clear();
    assert_eq!(
        server_validate(&server, &req, &mut rng(1))
            .unwrap_err()
            .step(),
        Some(Step::V1Verify)
    );
}

#[test]
fn nid_from_another_server_fails_decryption() {
    let creds = alice();
    let other =
        ServerState::generate(&mut rng(77), DEFAULT_SECRET_LEN, HashFunction::Sha256).unwrap();
    let card = register(&creds, &other, &mut rng(2)).unwrap();
    let (req, _) = card_login(&card, &creds, &mut rng(3)).unwrap();
    assert_eq!(
        server_validate(&server(), &req, &mut rng(4)).unwrap_err(),
        ProtocolError::NidDecryption
    );
}

#[test]
fn tampered_r_s_rejected_at_v3() {
    let creds = alice();
    let server = server();
    let mut card = register(&creds, &server, &mut rng(11)).unwrap();
    let (req, session) = card_login(&card, &creds, &mut rng(12)).unwrap();
    let (mut reply, _) = server_validate(&server, &req, &mut rng(13)).unwrap();
    reply.r_s[0] ^= 0x80;
    let before = card.nid.clone();
    assert_eq!(
        card_process_reply(&mut card, &session, &reply).unwrap_err(),
        ProtocolError::ServerTagMismatch
    );
    assert_eq!(card.nid, before, "rejected reply must not rotate the NID");
}

#[test]
fn reply_forged_without_xi_rejected() {
    // A fake server that does not know x guesses X_i at random.
    let creds = alice();
    let server = server();
    let mut card = register(&creds, &server, &mut rng(21)).unwrap();
    let (req, session) = card_login(&card, &creds, &mut rng(22)).unwrap();
    let fake_xi = [0x5A; 32];
    let r_s = [7u8; NONCE_LEN];
    let sk = session_key(HashFunction::Sha256, &creds.id, &fake_xi, &req.r_u, &r_s).unwrap();
    let nid_star = server.issue_nid(&creds.id, &mut rng(23)).unwrap();
    let reply = LoginReply {
        r_s: r_s.to_vec(),
        auth_tag: server_tag(
            HashFunction::Sha256,
            &creds.id,
            &req.nid,
            &sk,
            nid_star.as_bytes(),
        )
        .unwrap(),
        masked_nid: mask_nid(HashFunction::Sha256, &sk, &creds.id, nid_star.as_bytes()).unwrap(),
    };
    assert_eq!(
        card_process_reply(&mut card, &session, &reply).unwrap_err(),
        ProtocolError::ServerTagMismatch
    );
}

#[test]
fn confirm_from_other_session_rejected_at_v4() {
    let creds = alice();
    let server = server();
    let mut card = register(&creds, &server, &mut rng(31)).unwrap();

    let (req1, s1) = card_login(&card, &creds, &mut rng(32)).unwrap();
    let (reply1, _pending1) = server_validate(&server, &req1, &mut rng(33)).unwrap();
    let (confirm1, _) = card_process_reply(&mut card, &s1, &reply1).unwrap();

    let (req2, _) = card_login(&card, &creds, &mut rng(34)).unwrap();
    let (_, pending2) = server_validate(&server, &req2, &mut rng(35)).unwrap();
    assert_eq!(
        server_confirm(&pending2, &confirm1).unwrap_err(),
        ProtocolError::ConfirmationMismatch
    );
}

#[test]
fn server_is_stateless_old_nid_still_valid() {
    let (creds, card, server, _, hs) = honest(40);
    // The card rotated, but a fresh a_i under the old NID is still accepted.
    assert_ne!(card.nid, hs.request.nid);
    let x_i = server.user_secret(&creds.id).unwrap();
    let r_u = [9u8; NONCE_LEN];
    let req = LoginRequest {
        nid: hs.request.nid.clone(),
        a: hash(&[creds.id.as_slice(), x_i.as_bytes(), &r_u]).unwrap(),
        r_u: r_u.to_vec(),
    };
    assert!(server_validate(&server, &req, &mut rng(41)).is_ok());
    // and so is the original request verbatim
    assert!(server_validate(&server, &hs.request, &mut rng(42)).is_ok());
}

#[test]
fn second_session_uses_rotated_nid() {
    let creds = alice();
    let server = server();
    let mut card = register(&creds, &server, &mut rng(50)).unwrap();
    let mut t = Transcript::untimed();
    let first = run_honest_session(
        &creds,
        &mut card,
        &server,
        &mut rng(51),
        &mut rng(52),
        &mut t,
    )
    .unwrap();
    let second = run_honest_session(
        &creds,
        &mut card,
        &server,
        &mut rng(53),
        &mut rng(54),
        &mut t,
    )
    .unwrap();
    assert_eq!(second.request.nid, first.server.next_nid);
    assert_eq!(second.user.sk, second.server.sk);
    assert_ne!(first.user.sk, second.user.sk);
    assert_eq!(t.len(), 6);
}

#[test]
fn masking_is_self_inverse_and_starts_with_plain_hash() {
    let sk = hash(&[b"sk"]).unwrap();
    let data: Vec<u8> = (0..80).collect();
    let masked = mask_nid(HashFunction::Sha256, &sk, b"id", &data).unwrap();
    assert_eq!(
        mask_nid(HashFunction::Sha256, &sk, b"id", &masked).unwrap(),
        data
    );
    let stream = mask_stream(HashFunction::Sha256, &sk, b"id", 80).unwrap();
    assert_eq!(
        &stream[..32],
        hash(&[sk.as_bytes(), b"id"]).unwrap().as_bytes()
    );
    assert_eq!(
        &stream[32..64],
        hash(&[sk.as_bytes(), b"id", &1u32.to_be_bytes()])
            .unwrap()
            .as_bytes()
    );
}

#[test]
fn sha512_256_cards_work_end_to_end() {
    let creds = alice();
    let server = ServerState::generate(&mut rng(60), 256, HashFunction::Sha512_256).unwrap();
    let mut card = register(&creds, &server, &mut rng(61)).unwrap();
    assert_eq!(card.hash, HashFunction::Sha512_256);
    let mut t = Transcript::untimed();
    let hs = run_honest_session(
        &creds,
        &mut card,
        &server,
        &mut rng(62),
        &mut rng(63),
        &mut t,
    )
    .unwrap();
    assert_eq!(hs.user.sk, hs.server.sk);
}

#[test]
fn thousand_honest_sessions() {
    let creds = alice();
    let server = server();
    let mut accepted = 0;
    for seed in 0..1000u64 {
        let mut card = register(&creds, &server, &mut rng(seed * 3)).unwrap();
        let mut t = Transcript::untimed();
        let hs = run_honest_session(
            &creds,
            &mut card,
            &server,
            &mut rng(seed * 3 + 1),
            &mut rng(seed * 3 + 2),
            &mut t,
        )
        .unwrap();
        if hs.user.sk == hs.server.sk {
            accepted += 1;
        }
    }
    assert_eq!(accepted, 1000);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn completeness_and_card_invariants(
        seed in any::<u64>(),
        id in prop::collection::vec(any::<u8>(), 1..40),
        pw in prop::collection::vec(any::<u8>(), 1..40),
        bio in prop::collection::vec(any::<u8>(), 1..128),
    ) {
        let creds = Credentials::new(id, pw, bio).unwrap();
        let server = server();
        let reg = register_traced(&creds, &server, &mut rng(seed)).unwrap();
        prop_assert_eq!(reg.card.v, reg.request.w);
        prop_assert_eq!(
            xor_bytes(&reg.card.y, reg.card.v.as_bytes()).unwrap(),
            server.user_secret(&creds.id).unwrap().as_bytes().to_vec()
        );
        let mut card = reg.card;
        let mut t = Transcript::untimed();
        let hs = run_honest_session(&creds, &mut card, &server, &mut rng(seed ^ 1), &mut rng(seed ^ 2), &mut t).unwrap();
        prop_assert_eq!(hs.user.sk, hs.server.sk);
        prop_assert_eq!(server.open_nid(&card.nid).unwrap(), creds.id);
    }

    #[test]
    fn single_byte_tamper_is_rejected(seed in any::<u64>(), byte in 0usize..32, which in 0u8..3) {
        let creds = alice();
        let server = server();
        let mut card = register(&creds, &server, &mut rng(seed)).unwrap();
        let (mut req, session) = card_login(&card, &creds, &mut rng(seed ^ 1)).unwrap();
        if which == 0 {
            req.a.0[byte] ^= 0xFF;
            prop_assert_eq!(server_validate(&server, &req, &mut rng(seed ^ 2)).unwrap_err().step(), Some(Step::V1Verify));
            return Ok(());
        }
        let (mut reply, pending) = server_validate(&server, &req, &mut rng(seed ^ 2)).unwrap();
        if which == 1 {
            reply.auth_tag.0[byte] ^= 0xFF;
            prop_assert_eq!(card_process_reply(&mut card, &session, &reply).unwrap_err().step(), Some(Step::V3));
            return Ok(());
        }
        let (mut confirm, _) = card_process_reply(&mut card, &session, &reply).unwrap();
        confirm.c.0[byte] ^= 0xFF;
        prop_assert_eq!(server_confirm(&pending, &confirm).unwrap_err().step(), Some(Step::V4));
    }
}
