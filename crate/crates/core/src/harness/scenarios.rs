use std::time::{Duration, Instant};

use rand::distributions::{Alphanumeric, DistString};
use rand::RngCore;

use super::{rng_stream, HarnessError, ReportBuilder, ScenarioConfig, ScenarioOutput};
use crate::adversary::{
    extract_card_secrets, random_identity, AdversaryKnowledge, AttackError, Dictionary,
};
use crate::protocol::{
    register_traced, run_honest_session, server_validate, settle, Credentials, Direction, EntryId,
    HonestSession, Outcome, Registration, ServerState, Transcript, DEFAULT_SECRET_LEN,
};

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let out = f();
    (out, start.elapsed())
}

fn id_text(id: &[u8]) -> String {
    String::from_utf8_lossy(id).into_owned()
}

/// Per-scenario fixed state: the server and, if given, the dictionary file.
struct World<'a> {
    cfg: &'a ScenarioConfig,
    server: ServerState,
    file_dict: Option<Dictionary>,
}

impl<'a> World<'a> {
    fn new(cfg: &'a ScenarioConfig) -> Result<Self, HarnessError> {
        let server = ServerState::generate(
            &mut rng_stream(cfg.seed, "server-secret", 0),
            DEFAULT_SECRET_LEN,
            cfg.hash,
        )?;
        let file_dict = match &cfg.dictionary_path {
            Some(p) => Some(Dictionary::load(p)?),
            None => None,
        };
        if let (Some(d), Some(pos)) = (&file_dict, cfg.target_position) {
            if pos >= d.len() {
                return Err(HarnessError::Usage(format!(
                    "--target-pos {pos} outside dictionary of {} entries",
                    d.len()
                )));
            }
        }
        Ok(World {
            cfg,
            server,
            file_dict,
        })
    }

    fn rng(&self, label: &str, trial: u64) -> rand_chacha::ChaCha20Rng {
        rng_stream(self.cfg.seed, label, trial)
    }

    /// The victim's identity: taken from the dictionary file when a target
    /// position is given, otherwise generated.
    fn victim_credentials(&self, trial: u64) -> Result<Credentials, HarnessError> {
        let mut rng = self.rng("credentials", trial);
        let id = match (&self.file_dict, self.cfg.target_position) {
            (Some(d), Some(pos)) => d.candidates()[pos].clone(),
            _ => random_identity(&mut rng).into_bytes(),
        };
        let password = Alphanumeric.sample_string(&mut rng, 12);
        let mut biometric = vec![0u8; 64];
        rng.fill_bytes(&mut biometric);
        Ok(Credentials::new(id, password, biometric)?)
    }

    fn dictionary(&self, trial: u64, target: &[u8]) -> Result<Dictionary, HarnessError> {
        if let Some(d) = &self.file_dict {
            let mut d = d.clone();
            d.contains_target = d.position(target).is_some();
            return Ok(d);
        }
        let size = self.cfg.dictionary_size;
        let pos = if self.cfg.omit_target {
            None
        } else {
            Some(self.cfg.target_position.unwrap_or(size - 1))
        };
        Ok(Dictionary::generate(
            size,
            target,
            pos,
            &mut self.rng("dictionary", trial),
        )?)
    }
}

/// State after registration and one eavesdropped honest login.
struct Observed {
    creds: Credentials,
    reg: Registration,
    session: HonestSession,
}

fn register_and_login(
    world: &World<'_>,
    trial: u64,
    report: &mut ReportBuilder,
    transcript: &mut Transcript,
) -> Result<Option<Observed>, HarnessError> {
    let creds = world.victim_credentials(trial)?;
    let (reg, elapsed) =
        timed(|| register_traced(&creds, &world.server, &mut world.rng("registration", trial)));
    let mut reg = reg?;
    let flaw = reg.card.v == reg.request.w;
    report.record(
        "register",
        true,
        elapsed,
        &[],
        Some(format!("V_i == W_i: {flaw}")),
    );

    let before = transcript.len();
    let (session, elapsed) = timed(|| {
        run_honest_session(
            &creds,
            &mut reg.card,
            &world.server,
            &mut world.rng("user", trial),
            &mut world.rng("server", trial),
            transcript,
        )
    });
    let refs: Vec<EntryId> = (before..transcript.len()).map(EntryId).collect();
    match session {
        Ok(session) => {
            report.record("honest_login", true, elapsed, &refs, None);
            Ok(Some(Observed {
                creds,
                reg,
                session,
            }))
        }
        Err(e) => {
            report.record("honest_login", false, elapsed, &refs, Some(e.to_string()));
            Ok(None)
        }
    }
}

/// Card theft, `X_i` derivation and the dictionary search. Returns the
/// knowledge only if the true identity was recovered.
fn compromise(
    world: &World<'_>,
    trial: u64,
    obs: &Observed,
    report: &mut ReportBuilder,
) -> Result<Option<AdversaryKnowledge>, HarnessError> {
    let id = &obs.creds.id;
    let [req_ref, reply_ref, _] = obs.session.entries;

    let (mut knowledge, elapsed) = timed(|| extract_card_secrets(Some(&obs.reg.card)));
    report.record("steal_card", true, elapsed, &[], None);

    knowledge.observe_request(obs.session.request.clone());
    knowledge.observe_reply(obs.session.reply.clone());
    report.record(
        "eavesdrop",
        true,
        Duration::ZERO,
        &[req_ref, reply_ref],
        None,
    );

    let (x_i, elapsed) = timed(|| knowledge.derive_xi());
    let x_i = x_i?;
    let truth = world.server.user_secret(id)?;
    let ok = x_i == truth.as_bytes();
    report.record(
        "derive_xi",
        ok,
        elapsed,
        &[],
        (!ok).then(|| "Y_i ^ V_i != h(ID_i, x)".to_string()),
    );
    report.recovered("x_i", &x_i);
    if !ok {
        return Ok(None);
    }

    let dict = world.dictionary(trial, id)?;
    let (guess, elapsed) = timed(|| knowledge.guess_identity(&dict, world.cfg.workers));
    let guess = guess?;
    report.count("candidates_tested", guess.tested as u64);
    report.count("dictionary_size", dict.len() as u64);
    if guess.collision {
        report.anomaly(format!(
            "trial {trial}: more than one candidate matched a_i"
        ));
    }
    let ok = guess.identity.as_deref() == Some(id.as_slice());
    let detail = match &guess.identity {
        Some(found) => format!(
            "found {:?} after {} candidates",
            id_text(found),
            guess.tested
        ),
        None => format!("no candidate matched ({} tested)", guess.tested),
    };
    report.record("guess_identity", ok, elapsed, &[req_ref], Some(detail));
    if let Some(found) = &guess.identity {
        report.recovered("id", found);
    }
    Ok(ok.then_some(knowledge))
}

pub fn demo_honest(cfg: &ScenarioConfig) -> Result<ScenarioOutput, HarnessError> {
    let world = World::new(cfg)?;
    let mut report = ReportBuilder::new("demo-honest");
    let mut transcript = Transcript::new();
    for trial in 0..cfg.trials as u64 {
        report.begin_trial();
        let Some(obs) = register_and_login(&world, trial, &mut report, &mut transcript)? else {
            continue;
        };
        report.count("accepted", 1);
        let equal = obs.session.user.sk == obs.session.server.sk;
        report.record("sk_equal", equal, Duration::ZERO, &[], None);
        if equal {
            report.count("sk_equal", 1);
        }
        report.recovered("sk", obs.session.user.sk);
    }
    Ok(ScenarioOutput {
        report: report.finish(),
        transcript,
    })
}

pub fn attack_identity(cfg: &ScenarioConfig) -> Result<ScenarioOutput, HarnessError> {
    let world = World::new(cfg)?;
    let mut report = ReportBuilder::new("attack-identity-guess");
    let mut transcript = Transcript::new();
    for trial in 0..cfg.trials as u64 {
        report.begin_trial();
        if let Some(obs) = register_and_login(&world, trial, &mut report, &mut transcript)? {
            compromise(&world, trial, &obs, &mut report)?;
        }
    }
    Ok(ScenarioOutput {
        report: report.finish(),
        transcript,
    })
}

pub fn attack_impersonate(cfg: &ScenarioConfig) -> Result<ScenarioOutput, HarnessError> {
    let world = World::new(cfg)?;
    let mut report = ReportBuilder::new("attack-impersonate");
    let mut transcript = Transcript::new();
    for trial in 0..cfg.trials as u64 {
        report.begin_trial();
        let Some(obs) = register_and_login(&world, trial, &mut report, &mut transcript)? else {
            continue;
        };
        let Some(mut knowledge) = compromise(&world, trial, &obs, &mut report)? else {
            continue;
        };

        let (forged, elapsed) = timed(|| knowledge.forge_login(&mut world.rng("adversary", trial)));
        let forged = forged?;
        report.record("forge_login", true, elapsed, &[], None);

        let before = transcript.len();
        let (run, elapsed) = timed(|| {
            knowledge.complete_forged_session(
                &forged,
                &world.server,
                &mut world.rng("server-forged", trial),
                &mut transcript,
            )
        });
        let posted = &transcript.entries()[before..];
        let accepted_at = |i: usize| {
            posted
                .get(i)
                .is_some_and(|e| e.outcome == Outcome::Accepted)
        };
        let v1 = accepted_at(0);
        let v4 = accepted_at(2);
        report.record("server_accepts_v1", v1, elapsed, &[EntryId(before)], None);
        if v1 {
            report.count("v1_accepted", 1);
            report.record(
                "server_accepts_v4",
                v4,
                Duration::ZERO,
                &(before..transcript.len()).map(EntryId).collect::<Vec<_>>(),
                None,
            );
        }
        if v4 {
            report.count("v4_accepted", 1);
        }
        match run {
            Ok(session) => {
                let equal = session.attacker.sk == session.server.sk;
                report.record("sk_match", equal, Duration::ZERO, &[], None);
                report.recovered("sk", session.attacker.sk);
            }
            Err(AttackError::Rejected(e)) => {
                report.record("sk_match", false, Duration::ZERO, &[], Some(e.to_string()));
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(ScenarioOutput {
        report: report.finish(),
        transcript,
    })
}

pub fn attack_session_key(cfg: &ScenarioConfig) -> Result<ScenarioOutput, HarnessError> {
    let world = World::new(cfg)?;
    let mut report = ReportBuilder::new("attack-session-key");
    let mut transcript = Transcript::new();
    for trial in 0..cfg.trials as u64 {
        report.begin_trial();
        let Some(obs) = register_and_login(&world, trial, &mut report, &mut transcript)? else {
            continue;
        };
        let Some(mut knowledge) = compromise(&world, trial, &obs, &mut report)? else {
            continue;
        };
        let [req_ref, reply_ref, _] = obs.session.entries;
        let (sk, elapsed) =
            timed(|| knowledge.recover_session_key(&obs.session.request, &obs.session.reply));
        let sk = sk?;
        let ok = sk == obs.session.user.sk && sk == obs.session.server.sk;
        report.record(
            "recover_session_key",
            ok,
            elapsed,
            &[req_ref, reply_ref],
            None,
        );
        report.recovered("sk", sk);

        let (nid_star, elapsed) = timed(|| knowledge.unmask_next_nid(&obs.session.reply, &sk));
        let nid_star = nid_star?;
        // Ground truth check only: the attacker never holds the server key.
        let opens_to_id =
            world.server.open_nid(&nid_star).ok().as_deref() == Some(obs.creds.id.as_slice());
        let ok = nid_star == obs.session.server.next_nid && opens_to_id;
        report.record("unmask_next_nid", ok, elapsed, &[reply_ref], None);
        report.recovered("next_nid", &nid_star);
    }
    Ok(ScenarioOutput {
        report: report.finish(),
        transcript,
    })
}

/// Re-sends a captured login request verbatim. No card and no guessing.
pub fn attack_replay(cfg: &ScenarioConfig) -> Result<ScenarioOutput, HarnessError> {
    let world = World::new(cfg)?;
    let mut report = ReportBuilder::new("attack-replay");
    let mut transcript = Transcript::new();
    for trial in 0..cfg.trials as u64 {
        report.begin_trial();
        let Some(obs) = register_and_login(&world, trial, &mut report, &mut transcript)? else {
            continue;
        };
        let mut knowledge = extract_card_secrets(None);
        knowledge.observe_request(obs.session.request.clone());
        report.record(
            "eavesdrop",
            true,
            Duration::ZERO,
            &[obs.session.entries[0]],
            None,
        );

        let replayed = knowledge.replay_login()?;
        let id = transcript.post(Direction::UserToServer, replayed.clone());
        let (verdict, elapsed) = timed(|| {
            server_validate(
                &world.server,
                &replayed,
                &mut world.rng("server-replay", trial),
            )
        });
        let verdict = settle(&mut transcript, id, verdict);
        let ok = verdict.is_ok();
        report.record(
            "replay_accepted_v1",
            ok,
            elapsed,
            &[id],
            verdict.err().map(|e| e.to_string()),
        );
        if ok {
            report.count("replays_accepted", 1);
        }
    }
    Ok(ScenarioOutput {
        report: report.finish(),
        transcript,
    })
}
