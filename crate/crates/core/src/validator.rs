//! The validation process.
//!
//! An entered OTP is one of three things: the honeytoken (authenticate), a
//! decoy from the same set (lock the account), or anything else (a typo,
//! retry within a bound). The validator never sees decoys in the clear; it
//! recognises them by salted digest from the sealed payload it reads off the
//! ledger.

use std::collections::VecDeque;
use std::fmt;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use thiserror::Error;

use crate::accounts::{AccountStore, AccountStoreError};
use crate::codec::Encoder;
use crate::ids::{SessionId, UserRef};
use crate::ledger::{Chain, LedgerError, TamperReport};
use crate::otp;
use crate::time::Millis;
use crate::vault::{ct_eq, salted_digest, HoneytokenPayload, Vault};

pub const DEFAULT_MAX_MISTYPES: u32 = 3;

// Older alerts are still in the log output.
const RETAINED_ALERTS: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Classification {
    Valid,
    Fake,
    Mistyped,
}

/// Classifies `entered` against a payload. Both checks always run and every
/// decoy digest is compared, so the work done does not depend on the answer.
pub fn classify_otp(entered: &str, payload: &HoneytokenPayload) -> Classification {
    let valid = ct_eq(entered.as_bytes(), payload.honeytoken_otp.as_bytes());
    let probe = salted_digest(&payload.salt, entered.as_bytes());
    let fake = payload
        .decoy_digests
        .iter()
        .fold(false, |hit, d| hit | ct_eq(d, &probe));
    match (valid, fake) {
        (true, _) => Classification::Valid,
        (false, true) => Classification::Fake,
        (false, false) => Classification::Mistyped,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ValidationOutcome {
    Authenticated,
    Locked,
    Retry { remaining: u32 },
    SessionInvalid,
}

impl ValidationOutcome {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Authenticated => "Authenticated",
            Self::Locked => "Locked",
            Self::Retry { .. } => "Retry",
            Self::SessionInvalid => "SessionInvalid",
        }
    }
}

impl fmt::Display for ValidationOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Retry { remaining } => write!(f, "Retry ({remaining} remaining)"),
            other => f.write_str(other.kind()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    AwaitingFirstFactor,
    AwaitingOtp,
    Closed,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionState {
    pub session_id: SessionId,
    pub user_ref: UserRef,
    stage: Stage,
    mistype_count: u32,
    pub created_at: Millis,
    /// Lifetime of the OTP set issued with this session.
    pub otp_ttl: Duration,
}

impl SessionState {
    pub fn new(
        session_id: SessionId,
        user_ref: UserRef,
        created_at: Millis,
        otp_ttl: Duration,
    ) -> Self {
        Self {
            session_id,
            user_ref,
            stage: Stage::AwaitingFirstFactor,
            mistype_count: 0,
            created_at,
            otp_ttl,
        }
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn mistype_count(&self) -> u32 {
        self.mistype_count
    }

    /// Moves from first factor to the OTP step. No effect in any other stage.
    pub fn first_factor_passed(&mut self) {
        if self.stage == Stage::AwaitingFirstFactor {
            self.stage = Stage::AwaitingOtp;
        }
    }

    pub fn close(&mut self) {
        self.stage = Stage::Closed;
    }

    pub fn is_expired(&self, now: Millis) -> bool {
        otp::is_expired(self.created_at, self.otp_ttl, now)
    }
}

/// Associated data for a session's envelope. Binds it to one login by one
/// user so an envelope cannot be replayed into another session.
pub fn envelope_aad(session_id: &SessionId, user_ref: &UserRef) -> Vec<u8> {
    let mut e = Encoder::new();
    e.bytes(session_id.as_bytes()).bytes(user_ref.as_bytes());
    e.finish()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AlertKind {
    ChainCorrupt(TamperReport),
    MissingBlock,
    /// The block or payload names a different user or session.
    ForeignPayload,
    EnvelopeRejected,
    DecoyEntered,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SecurityAlert {
    pub at: Millis,
    pub session_id: SessionId,
    pub user_ref: UserRef,
    pub kind: AlertKind,
}

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error("unknown account")]
    UnknownAccount,
    #[error(transparent)]
    Store(AccountStoreError),
}

impl From<AccountStoreError> for ValidationError {
    fn from(e: AccountStoreError) -> Self {
        match e {
            AccountStoreError::UnknownAccount => Self::UnknownAccount,
            other => Self::Store(other),
        }
    }
}

pub fn lock_account(store: &AccountStore, user_ref: &UserRef) -> Result<(), ValidationError> {
    Ok(store.set_locked(user_ref, true)?)
}

pub fn unlock_account(store: &AccountStore, user_ref: &UserRef) -> Result<(), ValidationError> {
    Ok(store.set_locked(user_ref, false)?)
}

#[derive(Debug)]
pub struct Validator {
    vault: Arc<Vault>,
    accounts: Arc<AccountStore>,
    max_mistypes: u32,
    alerts: Mutex<VecDeque<SecurityAlert>>,
}

impl Validator {
    pub fn new(vault: Arc<Vault>, accounts: Arc<AccountStore>, max_mistypes: u32) -> Self {
        Self {
            vault,
            accounts,
            max_mistypes: max_mistypes.max(1),
            alerts: Mutex::new(VecDeque::new()),
        }
    }

    pub fn max_mistypes(&self) -> u32 {
        self.max_mistypes
    }

    pub fn alerts(&self) -> Vec<SecurityAlert> {
        self.alerts
            .lock()
            .expect("alert log poisoned")
            .iter()
            .cloned()
            .collect()
    }

    fn alert(&self, session: &SessionState, now: Millis, kind: AlertKind) {
        tracing::warn!(
            target: "honeyauth::security",
            session = %session.session_id,
            user = ?session.user_ref,
            alert = ?kind,
            "security alert"
        );
        let mut alerts = self.alerts.lock().expect("alert log poisoned");
        if alerts.len() == RETAINED_ALERTS {
            alerts.pop_front();
        }
        alerts.push_back(SecurityAlert {
            at: now,
            session_id: session.session_id,
            user_ref: session.user_ref,
            kind,
        });
    }

    fn invalidate(
        &self,
        session: &mut SessionState,
        now: Millis,
        kind: AlertKind,
    ) -> ValidationOutcome {
        self.alert(session, now, kind);
        session.close();
        ValidationOutcome::SessionInvalid
    }

    /// One OTP attempt against `session`, whose sealed payload is read from
    /// `chain`.
    ///
    /// A decoy locks the account; the lock is persisted before `Locked` is
    /// returned. A typo is a retry until the session has seen
    /// `max_mistypes` of them, at which point it is invalidated without
    /// locking. An expired set, a closed session, or any sign of tampering
    /// also invalidates.
    pub fn validate_attempt(
        &self,
        session: &mut SessionState,
        entered: &str,
        chain: &Chain,
        now: Millis,
    ) -> Result<ValidationOutcome, ValidationError> {
        if session.stage != Stage::AwaitingOtp {
            return Ok(ValidationOutcome::SessionInvalid);
        }
        if session.is_expired(now) {
            session.close();
            return Ok(ValidationOutcome::SessionInvalid);
        }

        let block = match chain.fetch_payload(&session.session_id) {
            Ok(b) => b,
            Err(LedgerError::ChainCorrupt(report)) => {
                return Ok(self.invalidate(session, now, AlertKind::ChainCorrupt(report)))
            }
            Err(_) => return Ok(self.invalidate(session, now, AlertKind::MissingBlock)),
        };
        if block.user_ref != session.user_ref {
            return Ok(self.invalidate(session, now, AlertKind::ForeignPayload));
        }
        let aad = envelope_aad(&session.session_id, &session.user_ref);
        let payload = match self
            .vault
            .unseal(&block.sealed, self.vault.active_key(), &aad)
        {
            Ok(p) => p,
            Err(_) => return Ok(self.invalidate(session, now, AlertKind::EnvelopeRejected)),
        };
        if payload.session_id != session.session_id {
            return Ok(self.invalidate(session, now, AlertKind::ForeignPayload));
        }

        // A lock applies to sessions opened before it, too.
        match self.accounts.get_by_ref(&session.user_ref)? {
            None => {
                session.close();
                return Ok(ValidationOutcome::SessionInvalid);
            }
            Some(account) if account.locked => {
                session.close();
                return Ok(ValidationOutcome::Locked);
            }
            Some(_) => {}
        }

        match classify_otp(entered, &payload) {
            Classification::Valid => {
                session.close();
                Ok(ValidationOutcome::Authenticated)
            }
            Classification::Fake => {
                self.alert(session, now, AlertKind::DecoyEntered);
                session.close();
                lock_account(&self.accounts, &session.user_ref)?;
                Ok(ValidationOutcome::Locked)
            }
            Classification::Mistyped => {
                session.mistype_count += 1;
                if session.mistype_count >= self.max_mistypes {
                    session.close();
                    Ok(ValidationOutcome::SessionInvalid)
                } else {
                    Ok(ValidationOutcome::Retry {
                        remaining: self.max_mistypes - session.mistype_count,
                    })
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::accounts::AccountRecord;
    use crate::ledger::BlockPayload;
    use crate::otp::{HoneytokenPosition, Otp, OtpSet};
    use crate::vault::{ct_probe, hash_password, KdfParams};
    use rand::rngs::OsRng;

    const FIXTURE: [&str; 3] = ["483920", "117254", "902311"];

    fn fixture_set(position: usize, session_id: SessionId, issued_at: Millis) -> OtpSet {
        OtpSet {
            session_id,
            otps: FIXTURE.iter().map(|s| Otp::new(*s).unwrap()).collect(),
            honeytoken_index: HoneytokenPosition::new(position, 3).unwrap(),
            issued_at,
            ttl: Duration::from_secs(300),
        }
    }

    fn fixture_payload(position: usize) -> HoneytokenPayload {
        let set = fixture_set(position, SessionId::from_bytes([1; 16]), Millis(0));
        HoneytokenPayload::from_otp_set(&set, &mut OsRng)
    }

    struct Rig {
        vault: Arc<Vault>,
        accounts: Arc<AccountStore>,
        validator: Validator,
        chain: Chain,
        user_ref: UserRef,
    }

    const T0: Millis = Millis(1_700_000_000_000);

    fn rig() -> Rig {
        let vault = Arc::new(Vault::ephemeral());
        let accounts = Arc::new(AccountStore::in_memory());
        let user_ref = accounts
            .insert(AccountRecord {
                username: "alice".into(),
                credentials: hash_password("password123", &KdfParams::insecure_fast()).unwrap(),
                honeytoken_position: HoneytokenPosition::new(2, 3).unwrap(),
                locked: false,
                created_at: T0,
            })
            .unwrap();
        let validator = Validator::new(vault.clone(), accounts.clone(), 3);
        Rig {
            vault,
            accounts,
            validator,
            chain: Chain::new(),
            user_ref,
        }
    }

    impl Rig {
        /// Issues a session the way login does and returns it.
        fn issue(&mut self, position: usize) -> SessionState {
            let sid = SessionId::random(&mut OsRng);
            let set = fixture_set(position, sid, T0);
            let payload = HoneytokenPayload::from_otp_set(&set, &mut OsRng);
            let aad = envelope_aad(&sid, &self.user_ref);
            let sealed = self
                .vault
                .seal(&payload, self.vault.active_key(), &aad)
                .unwrap();
            self.chain
                .append(
                    &BlockPayload {
                        user_ref: self.user_ref,
                        session_id: sid,
                        sealed,
                    },
                    T0,
                )
                .unwrap();
            let mut s = SessionState::new(sid, self.user_ref, T0, Duration::from_secs(300));
            s.first_factor_passed();
            s
        }

        fn attempt(&self, s: &mut SessionState, entered: &str) -> ValidationOutcome {
            self.validator
                .validate_attempt(s, entered, &self.chain, Millis(T0.0 + 1_000))
                .unwrap()
        }

        fn locked(&self) -> bool {
            self.accounts.get("alice").unwrap().unwrap().locked
        }
    }

    #[test]
    fn classifies_fixture_entries() {
        let p = fixture_payload(2);
        assert_eq!(classify_otp("117254", &p), Classification::Valid);
        assert_eq!(classify_otp("483920", &p), Classification::Fake);
        assert_eq!(classify_otp("902311", &p), Classification::Fake);
        assert_eq!(classify_otp("000000", &p), Classification::Mistyped);
        assert_eq!(classify_otp("", &p), Classification::Mistyped);
        assert_eq!(classify_otp("1172540", &p), Classification::Mistyped);
    }

    #[test]
    fn classification_always_uses_the_constant_time_primitive() {
        let p = fixture_payload(2);
        for entered in ["117254", "483920", "000000", "x"] {
            ct_probe::take();
            classify_otp(entered, &p);
            // One honeytoken comparison plus one per decoy, whatever the input.
            assert_eq!(ct_probe::take(), 1 + p.decoy_digests.len(), "{entered}");
        }
    }

    #[test]
    fn honeytoken_authenticates() {
        let mut r = rig();
        let mut s = r.issue(2);
        assert_eq!(
            r.attempt(&mut s, "117254"),
            ValidationOutcome::Authenticated
        );
        assert_eq!(s.stage(), Stage::Closed);
        assert_eq!(
            r.attempt(&mut s, "117254"),
            ValidationOutcome::SessionInvalid
        );
    }

    #[test]
    fn decoy_locks_and_lock_is_persisted() {
        let mut r = rig();
        let mut s = r.issue(2);
        assert_eq!(r.attempt(&mut s, "483920"), ValidationOutcome::Locked);
        assert!(r.locked());
        assert_eq!(s.stage(), Stage::Closed);
        assert!(r
            .validator
            .alerts()
            .iter()
            .any(|a| a.kind == AlertKind::DecoyEntered));
    }

    #[test]
    fn lock_reaches_sessions_opened_earlier() {
        let mut r = rig();
        let mut early = r.issue(2);
        let mut late = r.issue(2);
        assert_eq!(r.attempt(&mut late, "483920"), ValidationOutcome::Locked);
        assert_eq!(r.attempt(&mut early, "117254"), ValidationOutcome::Locked);
        assert_eq!(early.stage(), Stage::Closed);
    }

    #[test]
    fn mistypes_are_bounded_without_locking() {
        let mut r = rig();
        let mut s = r.issue(2);
        assert_eq!(
            r.attempt(&mut s, "000000"),
            ValidationOutcome::Retry { remaining: 2 }
        );
        assert_eq!(
            r.attempt(&mut s, "000001"),
            ValidationOutcome::Retry { remaining: 1 }
        );
        assert_eq!(
            r.attempt(&mut s, "000002"),
            ValidationOutcome::SessionInvalid
        );
        assert_eq!(
            r.attempt(&mut s, "117254"),
            ValidationOutcome::SessionInvalid
        );
        assert!(!r.locked());
        assert_eq!(s.mistype_count(), 3);
    }

    #[test]
    fn state_machine_matches_enumerated_oracle() {
        // Oracle over (mistypes so far, classification) for max = 3.
        fn oracle(count: u32, class: Classification) -> ValidationOutcome {
            match class {
                Classification::Valid => ValidationOutcome::Authenticated,
                Classification::Fake => ValidationOutcome::Locked,
                Classification::Mistyped if count + 1 >= 3 => ValidationOutcome::SessionInvalid,
                Classification::Mistyped => ValidationOutcome::Retry {
                    remaining: 3 - (count + 1),
                },
            }
        }
        let inputs = [
            (Classification::Valid, "117254"),
            (Classification::Fake, "902311"),
            (Classification::Mistyped, "555555"),
        ];
        for count in 0..3 {
            for (class, entered) in inputs {
                let mut r = rig();
                let mut s = r.issue(2);
                for k in 0..count {
                    assert!(matches!(
                        r.attempt(&mut s, &format!("99999{k}")),
                        ValidationOutcome::Retry { .. }
                    ));
                }
                assert_eq!(
                    r.attempt(&mut s, entered),
                    oracle(count, class),
                    "count {count} {class:?}"
                );
            }
        }
    }

    #[test]
    fn expired_set_invalidates_without_locking() {
        let mut r = rig();
        let mut s = r.issue(2);
        let late = Millis(T0.0 + 300_001);
        let out = r
            .validator
            .validate_attempt(&mut s, "483920", &r.chain, late)
            .unwrap();
        assert_eq!(out, ValidationOutcome::SessionInvalid);
        assert!(!r.locked());

        let mut s = r.issue(2);
        let edge = Millis(T0.0 + 300_000);
        let out = r
            .validator
            .validate_attempt(&mut s, "117254", &r.chain, edge)
            .unwrap();
        assert_eq!(out, ValidationOutcome::Authenticated);
    }

    #[test]
    fn tampered_chain_invalidates_with_alert() {
        let mut r = rig();
        let mut s = r.issue(2);
        let mut blocks = r.chain.blocks().to_vec();
        let n = blocks[1].payload.len();
        blocks[1].payload[n - 5] ^= 1;
        r.chain = Chain::from_blocks_unchecked(blocks);
        assert_eq!(
            r.attempt(&mut s, "117254"),
            ValidationOutcome::SessionInvalid
        );
        assert!(matches!(
            r.validator.alerts().last().unwrap().kind,
            AlertKind::ChainCorrupt(_)
        ));
    }

    #[test]
    fn rehashed_forgery_is_caught_by_the_envelope() {
        let mut r = rig();
        let mut s = r.issue(2);
        // Attacker rewrites the last block and recomputes its hash so the
        // chain itself still verifies.
        let mut blocks = r.chain.blocks().to_vec();
        let last = blocks.pop().unwrap();
        let mut forged = BlockPayload::from_bytes(&last.payload).unwrap();
        forged.sealed.ciphertext[0] ^= 0x80;
        let mut chain = Chain::from_blocks_unchecked(blocks);
        chain.append(&forged, last.timestamp).unwrap();
        assert!(crate::ledger::verify_chain(&chain).valid);
        r.chain = chain;
        assert_eq!(
            r.attempt(&mut s, "117254"),
            ValidationOutcome::SessionInvalid
        );
        assert_eq!(
            r.validator.alerts().last().unwrap().kind,
            AlertKind::EnvelopeRejected
        );
    }

    #[test]
    fn envelope_for_another_user_is_rejected() {
        let mut r = rig();
        let mut s = r.issue(2);
        s.user_ref = UserRef([9; 32]);
        assert_eq!(
            r.attempt(&mut s, "117254"),
            ValidationOutcome::SessionInvalid
        );
        assert_eq!(
            r.validator.alerts().last().unwrap().kind,
            AlertKind::ForeignPayload
        );
    }

    #[test]
    fn missing_block_and_wrong_stage() {
        let r = rig();
        let mut s = SessionState::new(
            SessionId::random(&mut OsRng),
            r.user_ref,
            T0,
            Duration::from_secs(300),
        );
        assert_eq!(
            r.attempt(&mut s, "117254"),
            ValidationOutcome::SessionInvalid
        );
        s.first_factor_passed();
        assert_eq!(
            r.attempt(&mut s, "117254"),
            ValidationOutcome::SessionInvalid
        );
        assert_eq!(
            r.validator.alerts().last().unwrap().kind,
            AlertKind::MissingBlock
        );
    }

    #[test]
    fn stages_only_move_forward() {
        let mut s = SessionState::new(
            SessionId::from_bytes([0; 16]),
            UserRef([0; 32]),
            T0,
            Duration::from_secs(1),
        );
        assert_eq!(s.stage(), Stage::AwaitingFirstFactor);
        s.first_factor_passed();
        assert_eq!(s.stage(), Stage::AwaitingOtp);
        s.close();
        s.first_factor_passed();
        assert_eq!(s.stage(), Stage::Closed);
    }

    #[test]
    fn lock_and_unlock_are_idempotent() {
        let r = rig();
        lock_account(&r.accounts, &r.user_ref).unwrap();
        lock_account(&r.accounts, &r.user_ref).unwrap();
        assert!(r.locked());
        unlock_account(&r.accounts, &r.user_ref).unwrap();
        unlock_account(&r.accounts, &r.user_ref).unwrap();
        assert!(!r.locked());
        assert!(matches!(
            lock_account(&r.accounts, &UserRef([3; 32])),
            Err(ValidationError::UnknownAccount)
        ));
        assert!(matches!(
            unlock_account(&r.accounts, &UserRef([3; 32])),
            Err(ValidationError::UnknownAccount)
        ));
    }
}
