//! Every honeytoken position against every kind of entry, through the real
//! validator.

use std::sync::Arc;

use honeyauth::accounts::{AccountRecord, AccountStore};
use honeyauth::ids::SessionId;
use honeyauth::ledger::{BlockPayload, Chain};
use honeyauth::otp::{HoneytokenPosition, Otp, OtpSet};
use honeyauth::time::Millis;
use honeyauth::validator::{envelope_aad, SessionState, Validator};
use honeyauth::vault::{hash_password, HoneytokenPayload, KdfParams, Vault};
use rand::rngs::OsRng;

const OTPS: [&str; 3] = ["483920", "117254", "902311"];

fn main() {
    let vault = Arc::new(Vault::ephemeral());
    println!(
        "{:<10}{:<15}{:<15}{:<15}{:<15}",
        "position", OTPS[0], OTPS[1], OTPS[2], "000000"
    );

    for position in 1..=3 {
        let mut row = format!("{position:<10}");
        for entered in OTPS.iter().chain(&["000000"]) {
            // Fresh account each time: a decoy locks it.
            let accounts = Arc::new(AccountStore::in_memory());
            let user = accounts
                .insert(AccountRecord {
                    username: "alice".into(),
                    credentials: hash_password("password123", &KdfParams::insecure_fast()).unwrap(),
                    honeytoken_position: HoneytokenPosition::new(position, 3).unwrap(),
                    locked: false,
                    created_at: Millis(0),
                })
                .unwrap();
            let validator = Validator::new(vault.clone(), accounts, 3);

            let sid = SessionId::random(&mut OsRng);
            let set = OtpSet {
                session_id: sid,
                otps: OTPS.iter().map(|s| Otp::new(*s).unwrap()).collect(),
                honeytoken_index: HoneytokenPosition::new(position, 3).unwrap(),
                issued_at: Millis(0),
                ttl: std::time::Duration::from_secs(300),
            };
            let payload = HoneytokenPayload::from_otp_set(&set, &mut OsRng);
            let sealed = vault
                .seal(&payload, vault.active_key(), &envelope_aad(&sid, &user))
                .unwrap();
            let mut chain = Chain::new();
            chain
                .append(
                    &BlockPayload {
                        user_ref: user,
                        session_id: sid,
                        sealed,
                    },
                    Millis(0),
                )
                .unwrap();

            let mut session = SessionState::new(sid, user, Millis(0), set.ttl);
            session.first_factor_passed();
            let outcome = validator
                .validate_attempt(&mut session, entered, &chain, Millis(1))
                .unwrap();
            row.push_str(&format!("{:<15}", outcome.kind()));
        }
        println!("{row}");
    }
}
