//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

mod common;

use std::panic::{self, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::*;
use honeyauth::cli;
use honeyauth::ids::{SessionId, UserRef};
use honeyauth::ledger::{verify_bytes, BlockPayload, Chain, LedgerError};
use honeyauth::otp::{generate_otp_set, OtpConfig};
use honeyauth::service::http::{LoginResponse, MailboxEntry, OtpResponse};
use honeyauth::service::{AuthService, ServiceBuilder, ServiceConfig, ServiceError};
use honeyauth::time::Millis;
use honeyauth::validator::ValidationOutcome;
use honeyauth::vault::{self, HoneytokenPayload, KeyId, SealedHoneytoken, Vault};
use rand::rngs::{OsRng, StdRng};
use rand::{Rng, RngCore, SeedableRng};
use serde_json::json;
use sha2::{Digest, Sha256};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("truth table", truth_table),
        ("lock semantics", lock_semantics),
        ("tamper detection", tamper_detection),
        ("no-leak scan", no_leak_scan),
        ("crypto round trips", crypto_round_trips),
        ("conservation", conservation),
        ("benchmark harness", benchmark_harness),
        ("retry bound", retry_bound),
    ];

    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (name, check) in criteria {
        let start = Instant::now();
        let result = match panic::catch_unwind(AssertUnwindSafe(check)) {
            Ok(r) => r,
            Err(p) => Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into())),
        };
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS  {name}: {detail} [{secs:.2}s]"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why} [{secs:.2}s]");
            }
        }
    }
    let _ = panic::take_hook();
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

/// What the protocol says an entry should produce: the honeytoken passes,
/// any other member of the set locks, anything else is a typo.
fn oracle(position: usize, entered: Option<usize>, max_mistypes: u32) -> ValidationOutcome {
    match entered {
        Some(i) if i == position => ValidationOutcome::Authenticated,
        Some(_) => ValidationOutcome::Locked,
        None => ValidationOutcome::Retry {
            remaining: max_mistypes - 1,
        },
    }
}

fn truth_table() -> Outcome {
    let start = Instant::now();
    let mut cases = 0;
    for position in 1..=3 {
        for entered in [Some(1), Some(2), Some(3), None] {
            let (svc, _) = service();
            svc.register("alice", PASSWORD, position)
                .map_err(|e| e.to_string())?;
            let sid = svc.login("alice", PASSWORD).map_err(|e| e.to_string())?;
            let otps = mailed_otps(&svc, "alice", &sid);
            let value = match entered {
                Some(i) => otps[i - 1].clone(),
                None => non_member(&otps, 42),
            };
            let got = svc.submit_otp(&sid, &value).map_err(|e| e.to_string())?;
            let want = oracle(position, entered, svc.config().max_mistypes);
            ensure!(
                got == want,
                "position {position}, entry {entered:?}: got {got}, want {want}"
            );
            let locked = svc.is_locked("alice").map_err(|e| e.to_string())?;
            ensure!(
                locked == (want == ValidationOutcome::Locked),
                "position {position}, entry {entered:?}: lock flag {locked}"
            );
            cases += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    Ok(format!("{cases}/12 cases match in {elapsed:.2?}"))
}

/// Over HTTP against a file-backed service, unlocking with the CLI.
fn lock_semantics() -> Outcome {
    let client = reqwest::blocking::Client::new();
    let mut checked = 0;
    for decoy in [1usize, 3] {
        let dir = tempfile::tempdir().unwrap();
        let config = ServiceConfig {
            chain_path: dir.path().join("chain.dat"),
            store_path: dir.path().join("accounts.db"),
            ..fast_config()
        };
        let svc = ServiceBuilder::new(config.clone())
            .vault(Vault::ephemeral())
            .build()
            .map_err(|e| e.to_string())?;
        let base = spawn_http(Arc::new(svc));
        let post = |path: &str, body: serde_json::Value| {
            let r = client
                .post(format!("{base}{path}"))
                .json(&body)
                .send()
                .unwrap();
            (r.status().as_u16(), r.text().unwrap())
        };
        let creds = json!({"username": "alice", "password": PASSWORD});
        let login = || {
            let (status, body) = post("/login", creds.clone());
            (status, serde_json::from_str::<LoginResponse>(&body).ok())
        };
        let mail_for = |sid: &str| -> Vec<String> {
            let list: Vec<MailboxEntry> = client
                .get(format!("{base}/demo/mailbox/alice"))
                .send()
                .unwrap()
                .json()
                .unwrap();
            list.into_iter().find(|m| m.session_id == sid).unwrap().otps
        };

        let (status, _) = post(
            "/register",
            json!({"username": "alice", "password": PASSWORD, "honeytoken_position": 2}),
        );
        ensure!(status == 201, "register returned {status}");
        let early = login().1.unwrap().session_id;
        let sid = login().1.unwrap().session_id;
        let otps = mail_for(&sid);

        let (status, body) = post("/otp", json!({"session_id": sid, "otp": otps[decoy - 1]}));
        let r: OtpResponse = serde_json::from_str(&body).unwrap();
        ensure!(
            status == 423 && r.outcome == "Locked",
            "decoy {decoy}: {status} {body}"
        );

        for attempt in 0..5 {
            let (status, _) = login();
            ensure!(
                status == 423,
                "login {attempt} after lock returned {status}"
            );
        }
        let early_otps = mail_for(&early);
        let (status, body) = post("/otp", json!({"session_id": early, "otp": early_otps[1]}));
        ensure!(
            status == 423,
            "honeytoken on a pre-lock session returned {status} {body}"
        );

        let out = cli::run([
            "honeyauth",
            "unlock",
            "--username",
            "alice",
            "--store",
            config.store_path.to_str().unwrap(),
        ]);
        ensure!(out.code == 0, "unlock failed: {}", out.stderr);
        let (status, resp) = login();
        ensure!(status == 200, "login after unlock returned {status}");
        let sid = resp.unwrap().session_id;
        let otps = mail_for(&sid);
        let (status, body) = post("/otp", json!({"session_id": sid, "otp": otps[1]}));
        ensure!(
            status == 200 && body.contains("Authenticated"),
            "after unlock: {status} {body}"
        );
        checked += 1;
    }
    Ok(format!(
        "decoy at positions 1 and 3 locked until admin unlock ({checked} flows)"
    ))
}

/// Test-side reading of the record format, independent of the crate's
/// decoder: `[u32 len][record]` frames, records are
/// `0x01 | u64 index | u64 ts | u64 n | payload | u64 32 | prev | u64 32 | hash`
/// with hash = SHA-256 of everything before the hash length.
fn oracle_first_bad(bytes: &[u8]) -> Option<u64> {
    fn u64_at(b: &[u8], at: usize) -> Option<u64> {
        Some(u64::from_le_bytes(b.get(at..at + 8)?.try_into().ok()?))
    }
    fn parse(rec: &[u8]) -> Option<(u64, [u8; 32], [u8; 32], usize)> {
        if *rec.first()? != 0x01 {
            return None;
        }
        let index = u64_at(rec, 1)?;
        let payload_len = usize::try_from(u64_at(rec, 17)?).ok()?;
        let mut at = 25usize.checked_add(payload_len)?;
        if u64_at(rec, at)? != 32 {
            return None;
        }
        let prev: [u8; 32] = rec.get(at + 8..at + 40)?.try_into().ok()?;
        at += 40;
        let hashed_len = at;
        if u64_at(rec, at)? != 32 {
            return None;
        }
        let hash: [u8; 32] = rec.get(at + 8..at + 40)?.try_into().ok()?;
        if at + 40 != rec.len() {
            return None;
        }
        Some((index, prev, hash, hashed_len))
    }

    let genesis_hash: [u8; 32] = {
        let mut g = vec![0x01];
        g.extend_from_slice(&0u64.to_le_bytes());
        g.extend_from_slice(&0u64.to_le_bytes());
        g.extend_from_slice(&17u64.to_le_bytes());
        g.extend_from_slice(b"HONEYAUTH-GENESIS");
        g.extend_from_slice(&32u64.to_le_bytes());
        g.extend_from_slice(&[0; 32]);
        Sha256::digest(&g).into()
    };

    if bytes.is_empty() {
        return Some(0);
    }
    let (mut pos, mut i, mut prev_hash) = (0usize, 0u64, [0u8; 32]);
    while pos < bytes.len() {
        let Some(len) = bytes.get(pos..pos + 4) else {
            return Some(i);
        };
        let len = u32::from_le_bytes(len.try_into().unwrap()) as usize;
        let Some(rec) = bytes.get(pos + 4..pos + 4 + len) else {
            return Some(i);
        };
        let Some((index, prev, hash, hashed_len)) = parse(rec) else {
            return Some(i);
        };
        if index != i || prev != prev_hash {
            return Some(i);
        }
        let recomputed: [u8; 32] = Sha256::digest(&rec[..hashed_len]).into();
        if recomputed != hash || (i == 0 && hash != genesis_hash) {
            return Some(i);
        }
        prev_hash = hash;
        i += 1;
        pos += 4 + len;
    }
    None
}

fn random_chain(rng: &mut StdRng, blocks: usize) -> Vec<u8> {
    let mut chain = Chain::new();
    for t in 1..blocks {
        let mut user = [0u8; 32];
        let mut sid = [0u8; 16];
        let mut nonce = [0u8; 24];
        let mut aad_digest = [0u8; 32];
        rng.fill_bytes(&mut user);
        rng.fill_bytes(&mut sid);
        rng.fill_bytes(&mut nonce);
        rng.fill_bytes(&mut aad_digest);
        let mut ciphertext = vec![0u8; rng.gen_range(16..200)];
        rng.fill_bytes(&mut ciphertext);
        let payload = BlockPayload {
            user_ref: UserRef(user),
            session_id: SessionId::from_bytes(sid),
            sealed: SealedHoneytoken {
                ciphertext,
                nonce,
                key_id: KeyId::new("k1-0011223344556677"),
                aad_digest,
            },
        };
        chain.append(&payload, Millis(t as u64 * 1000)).unwrap();
    }
    chain.to_bytes()
}

fn tamper_detection() -> Outcome {
    let start = Instant::now();
    let mut rng = StdRng::seed_from_u64(0x7a3b_e1c9);
    let (chains, per_chain) = (200, 50);
    let mut mutations = 0;
    for c in 0..chains {
        let blocks = rng.gen_range(1..=100);
        let clean = random_chain(&mut rng, blocks);
        ensure!(
            verify_bytes(&clean).valid,
            "chain {c} does not verify before mutation"
        );
        ensure!(
            oracle_first_bad(&clean).is_none(),
            "oracle rejects clean chain {c}"
        );

        for m in 0..per_chain {
            let mut bytes = clean.clone();
            let bit = rng.gen_range(0..bytes.len() * 8);
            bytes[bit / 8] ^= 1 << (bit % 8);
            let report = verify_bytes(&bytes);
            let expected = oracle_first_bad(&bytes);
            ensure!(
                !report.valid,
                "chain {c} ({blocks} blocks), bit {bit}: mutation not detected"
            );
            ensure!(
                report.first_bad_index == expected,
                "chain {c}, bit {bit}: reported {:?}, oracle {expected:?}",
                report.first_bad_index
            );
            if m % 10 == 0 {
                match Chain::decode(&bytes) {
                    Err(LedgerError::ChainCorrupt(r)) => ensure!(
                        r.first_bad_index == expected,
                        "decode of chain {c} blamed {:?}",
                        r.first_bad_index
                    ),
                    other => {
                        return Err(format!(
                            "decode of chain {c} bit {bit}: {:?}",
                            other.map(|ch| ch.len())
                        ))
                    }
                }
            }
            mutations += 1;
        }
    }
    let elapsed = start.elapsed();
    ensure!(elapsed < Duration::from_secs(30), "took {elapsed:?}");
    Ok(format!(
        "{mutations} single-bit mutations over {chains} chains, all located exactly"
    ))
}

fn contains(haystack: &[u8], needle: &[u8]) -> bool {
    haystack.windows(needle.len()).any(|w| w == needle)
}

fn no_leak_scan() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = ServiceConfig {
        chain_path: dir.path().join("chain.dat"),
        store_path: dir.path().join("accounts.db"),
        ..fast_config()
    };
    let mut rng = StdRng::seed_from_u64(50);
    let mut otps_seen = Vec::new();
    let mut users = Vec::new();
    {
        let svc = ServiceBuilder::new(config.clone())
            .vault(Vault::ephemeral())
            .build()
            .map_err(|e| e.to_string())?;
        for i in 0..50 {
            let user = format!("leakcheck-user-{i:02}@example.org");
            let position = rng.gen_range(1..=3);
            svc.register(&user, PASSWORD, position)
                .map_err(|e| e.to_string())?;
            let sid = svc.login(&user, PASSWORD).map_err(|e| e.to_string())?;
            let otps = mailed_otps(&svc, &user, &sid);
            let outcome = svc
                .submit_otp(&sid, &otps[position - 1])
                .map_err(|e| e.to_string())?;
            ensure!(
                outcome == ValidationOutcome::Authenticated,
                "flow {i}: {outcome}"
            );
            otps_seen.extend(otps);
            users.push(user);
        }
    }
    let chain = std::fs::read(&config.chain_path).unwrap();
    let store = std::fs::read(&config.store_path).unwrap();
    ensure!(
        verify_bytes(&chain).blocks == 51,
        "expected 51 blocks on disk"
    );
    for otp in &otps_seen {
        ensure!(
            !contains(&chain, otp.as_bytes()),
            "OTP {otp} found in the chain file"
        );
        ensure!(
            !contains(&store, otp.as_bytes()),
            "OTP {otp} found in the account store"
        );
    }
    for user in &users {
        ensure!(
            !contains(&chain, user.as_bytes()),
            "username {user} found in the chain file"
        );
    }
    Ok(format!(
        "{} OTPs and {} usernames absent from {} + {} bytes on disk",
        otps_seen.len(),
        users.len(),
        chain.len(),
        store.len()
    ))
}

fn crypto_round_trips() -> Outcome {
    let mut rng = StdRng::seed_from_u64(1000);
    let vault = Vault::ephemeral();
    let mut sealed_set = Vec::new();
    for i in 0..1000 {
        let n = rng.gen_range(2..=10);
        let config = OtpConfig {
            n,
            otp_digits: rng.gen_range(4..=10),
            ..OtpConfig::default()
        };
        let set = generate_otp_set(
            &config,
            rng.gen_range(1..=n),
            SessionId::random(&mut OsRng),
            Millis(i),
            &mut OsRng,
        )
        .map_err(|e| e.to_string())?;
        let payload = HoneytokenPayload::from_otp_set(&set, &mut OsRng);
        let mut aad = vec![0u8; rng.gen_range(0..64)];
        rng.fill_bytes(&mut aad);
        let sealed = vault
            .seal(&payload, vault.active_key(), &aad)
            .map_err(|e| e.to_string())?;
        let opened = vault
            .unseal(&sealed, vault.active_key(), &aad)
            .map_err(|e| format!("round trip {i}: {e}"))?;
        ensure!(opened == payload, "round trip {i} changed the payload");
        sealed_set.push((sealed, aad));
    }

    let mut rejected = 0;
    for m in 0..100 {
        let (mut sealed, mut aad) = sealed_set[m * 7].clone();
        let flip = rng.gen_range(1..=255u8);
        let field = match m % 3 {
            0 => {
                let at = rng.gen_range(0..sealed.ciphertext.len());
                sealed.ciphertext[at] ^= flip;
                "ciphertext"
            }
            1 => {
                let at = rng.gen_range(0..sealed.nonce.len());
                sealed.nonce[at] ^= flip;
                "nonce"
            }
            _ => {
                if aad.is_empty() {
                    aad.push(flip);
                } else {
                    let at = rng.gen_range(0..aad.len());
                    aad[at] ^= flip;
                }
                "aad"
            }
        };
        ensure!(
            vault.unseal(&sealed, vault.active_key(), &aad).is_err(),
            "mutation {m} of {field} was accepted"
        );
        rejected += 1;
    }

    let vectors: [(&[u8], &str); 3] = [
        (
            b"",
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855",
        ),
        (
            b"abc",
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad",
        ),
        (
            b"abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq",
            "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1",
        ),
    ];
    ensure!(
        ServiceConfig::default().digest_algorithm == "sha256",
        "default digest is not sha256"
    );
    for (input, want) in vectors {
        ensure!(
            hex::encode(vault::digest(input)) == want,
            "digest of {:?}",
            String::from_utf8_lossy(input)
        );
    }
    ensure!(
        hex::encode(vault::digest(&vec![b'a'; 1_000_000]))
            == "cdc76e5c9914fb9281a1c7e284d73e67f1809a48a497200e046d39ccc7112cd0",
        "digest of one million 'a'"
    );
    Ok(format!(
        "1000 round trips, {rejected}/100 mutations rejected, 4 SHA-256 vectors"
    ))
}

fn conservation() -> Outcome {
    let mut rng = StdRng::seed_from_u64(200);
    let (svc, _) = service();
    let users: Vec<String> = (0..12).map(|i| format!("user{i}")).collect();
    for (i, u) in users.iter().enumerate() {
        svc.register(u, PASSWORD, 1 + i % 3)
            .map_err(|e| e.to_string())?;
    }
    let mut open: Vec<(String, SessionId)> = Vec::new();
    let (mut logins, mut attempts, mut rejected) = (0usize, 0usize, 0usize);

    let check = |svc: &AuthService, logins: usize| -> Result<(), String> {
        let blocks = svc.ledger().len() - 1;
        let mails = svc.mailbox().unwrap().total();
        ensure!(
            blocks == logins && mails == logins && svc.session_count() == logins,
            "blocks {blocks}, mails {mails}, sessions {}, logins {logins}",
            svc.session_count()
        );
        Ok(())
    };

    while logins < 250 {
        match rng.gen_range(0..100) {
            0..=54 => {
                let user = &users[rng.gen_range(0..users.len())];
                let password = if rng.gen_bool(0.1) {
                    "wrong password"
                } else {
                    PASSWORD
                };
                attempts += 1;
                match svc.login(user, password) {
                    Ok(sid) => {
                        logins += 1;
                        open.push((user.clone(), sid));
                    }
                    Err(
                        ServiceError::BadCredentials
                        | ServiceError::AccountLocked
                        | ServiceError::Delivery(_),
                    ) => rejected += 1,
                    Err(e) => return Err(format!("login: {e}")),
                }
            }
            55..=89 if !open.is_empty() => {
                let (user, sid) = open.swap_remove(rng.gen_range(0..open.len()));
                let otps = mailed_otps(&svc, &user, &sid);
                let position = svc
                    .accounts()
                    .get(&user)
                    .unwrap()
                    .unwrap()
                    .honeytoken_position
                    .get();
                let value = match rng.gen_range(0..6) {
                    0 | 1 => non_member(&otps, rng.gen()),
                    2 => otps[rng.gen_range(0..otps.len())].clone(),
                    _ => otps[position - 1].clone(),
                };
                svc.submit_otp(&sid, &value).map_err(|e| e.to_string())?;
            }
            90..=94 => {
                let user = &users[rng.gen_range(0..users.len())];
                svc.unlock(user).map_err(|e| e.to_string())?;
            }
            _ => svc.mailbox().unwrap().set_available(rng.gen_bool(0.7)),
        }
        check(&svc, logins)?;
    }
    ensure!(svc.ledger().verify().valid, "chain no longer verifies");
    Ok(format!(
        "{logins} successful logins of {attempts} attempts ({rejected} rejected): blocks = mails = sessions = {logins}"
    ))
}

fn benchmark_harness() -> Outcome {
    let start = Instant::now();
    let out = cli::run([
        "honeyauth",
        "bench",
        "--mode",
        "both",
        "--iterations",
        "1000",
        "--trials",
        "3",
    ]);
    let elapsed = start.elapsed();
    ensure!(out.code == 0, "exit {}: {}", out.code, out.stderr);
    ensure!(elapsed < Duration::from_secs(60), "took {elapsed:?}");

    let header = out
        .stdout
        .lines()
        .find(|l| l.starts_with("Mode"))
        .ok_or("no header row")?;
    for col in ["First", "Second", "Third", "Median"] {
        ensure!(header.contains(col), "header lacks {col}");
    }
    let mut medians = Vec::new();
    for mode in ["Without Blockchain", "With Blockchain"] {
        let rows: Vec<&str> = out
            .stdout
            .lines()
            .filter(|l| l.starts_with(&format!("{mode} ")))
            .collect();
        ensure!(rows.len() == 1, "{} rows for {mode}", rows.len());
        let cells: Vec<&str> = rows[0].split('|').skip(1).map(str::trim).collect();
        ensure!(cells.len() == 4, "{mode}: {} timing cells", cells.len());
        for cell in &cells {
            let v: f64 = cell
                .strip_suffix(" ms")
                .ok_or_else(|| format!("{mode}: cell {cell:?} has no unit"))?
                .parse()
                .map_err(|_| format!("{mode}: cell {cell:?}"))?;
            ensure!(v.is_finite() && v > 0.0, "{mode}: non-positive timing {v}");
        }
        medians.push(cells[3].to_string());
    }
    let ratio = out
        .stdout
        .lines()
        .find(|l| l.starts_with("Ratio"))
        .ok_or("no ratio line")?;
    let r: f64 = ratio
        .rsplit(' ')
        .next()
        .unwrap()
        .parse()
        .map_err(|_| format!("ratio line {ratio:?}"))?;
    ensure!(r.is_finite() && r > 0.0, "ratio {r}");
    Ok(format!(
        "2 modes x 3 trials in {elapsed:.1?}; medians {} without, {} with; ratio {r:.3}",
        medians[0], medians[1]
    ))
}

fn retry_bound() -> Outcome {
    let mut sessions = 0;
    for max in 1..=5u32 {
        let (svc, _) = service_with(ServiceConfig {
            max_mistypes: max,
            ..fast_config()
        });
        svc.register("alice", PASSWORD, 2)
            .map_err(|e| e.to_string())?;
        for _ in 0..20 {
            let sid = svc.login("alice", PASSWORD).map_err(|e| e.to_string())?;
            let otps = mailed_otps(&svc, "alice", &sid);
            let mut guesses = (0..1_000_000u32)
                .map(|g| format!("{g:06}"))
                .filter(|g| !otps.contains(g));
            let mut retries = 0;
            loop {
                let guess = guesses.next().unwrap();
                match svc.submit_otp(&sid, &guess).map_err(|e| e.to_string())? {
                    ValidationOutcome::Retry { remaining } => {
                        retries += 1;
                        ensure!(
                            remaining == max - retries,
                            "max {max}: remaining {remaining} after {retries}"
                        );
                        ensure!(retries <= max, "max {max}: {retries} retries");
                    }
                    ValidationOutcome::SessionInvalid => break,
                    other => return Err(format!("max {max}: brute force produced {other}")),
                }
            }
            ensure!(
                retries < max,
                "max {max}: {retries} retries before invalidation"
            );
            let after = svc.submit_otp(&sid, &otps[1]).map_err(|e| e.to_string())?;
            ensure!(
                after == ValidationOutcome::SessionInvalid,
                "max {max}: honeytoken after invalidation gave {after}"
            );
            ensure!(
                !svc.is_locked("alice").map_err(|e| e.to_string())?,
                "max {max}: account locked"
            );
            sessions += 1;
        }
    }
    Ok(format!(
        "{sessions} brute-forced sessions, Retry count < max_mistypes, never Locked"
    ))
}
