//! The authentication service: registration, first factor, OTP issuance and
//! validation, wired to an account store, a ledger and a delivery channel.
//!
//! Transport-agnostic; [`http`] puts it behind a router.

pub mod config;
pub mod http;
pub mod mail;

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};
use std::time::Duration;

use rand::rngs::OsRng;
use thiserror::Error;

use crate::accounts::{AccountRecord, AccountStore, AccountStoreError};
use crate::ids::{SessionId, UserRef};
use crate::ledger::{AppendError, BlockPayload, Ledger, LedgerError};
use crate::otp::{generate_otp_set, HoneytokenPosition, OtpConfig};
use crate::time::{Clock, Millis, SystemClock};
use crate::validator::{
    envelope_aad, unlock_account, SessionState, Stage, ValidationError, ValidationOutcome,
    Validator,
};
use crate::vault::{
    hash_password, verify_password, CredentialRecord, HoneytokenPayload, Vault, VaultError,
};

pub use config::{ConfigError, MailChannelKind, ServiceConfig};
pub use mail::{DeliveryChannel, DeliveryError, MailMessage, MockMailbox};

pub const MIN_PASSWORD_LEN: usize = 8;
pub const MAX_USERNAME_LEN: usize = 254;

/// How long a finished or expired session is remembered after its OTPs
/// expire, so late submissions get `SessionInvalid` rather than "not found".
const SESSION_GRACE: Duration = Duration::from_secs(600);

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("username already registered")]
    UsernameTaken,
    #[error("honeytoken position must be between 1 and {n}")]
    InvalidPosition { n: usize },
    #[error("password must be at least {MIN_PASSWORD_LEN} characters")]
    WeakPassword,
    #[error("username must be 1-{MAX_USERNAME_LEN} printable characters without spaces")]
    InvalidUsername,
    #[error("bad credentials")]
    BadCredentials,
    #[error("account locked")]
    AccountLocked,
    #[error("no such session")]
    SessionNotFound,
    #[error("only available in demo mode")]
    DisabledInProduction,
    #[error("unknown user")]
    UnknownUser,
    #[error("unknown account")]
    UnknownAccount,
    #[error("OTP delivery failed: {0}")]
    Delivery(DeliveryError),
    #[error("internal error: {0}")]
    Internal(String),
}

impl ServiceError {
    /// Stable machine-readable code, used in HTTP bodies and CLI output.
    pub fn code(&self) -> &'static str {
        match self {
            Self::UsernameTaken => "username-taken",
            Self::InvalidPosition { .. } => "invalid-position",
            Self::WeakPassword => "weak-password",
            Self::InvalidUsername => "invalid-username",
            Self::BadCredentials => "bad-credentials",
            Self::AccountLocked => "account-locked",
            Self::SessionNotFound => "session-not-found",
            Self::DisabledInProduction => "disabled-in-production",
            Self::UnknownUser => "unknown-user",
            Self::UnknownAccount => "unknown-account",
            Self::Delivery(_) => "delivery-failed",
            Self::Internal(_) => "internal-error",
        }
    }

    pub fn http_status(&self) -> u16 {
        match self {
            Self::UsernameTaken => 409,
            Self::InvalidPosition { .. } | Self::WeakPassword | Self::InvalidUsername => 400,
            Self::BadCredentials => 401,
            Self::AccountLocked => 423,
            Self::SessionNotFound | Self::UnknownUser | Self::UnknownAccount => 404,
            Self::DisabledInProduction => 403,
            Self::Delivery(_) => 503,
            Self::Internal(_) => 500,
        }
    }

    /// Inverse of [`code`](Self::code), for clients. Payloads that the code
    /// does not carry are filled with placeholders.
    pub fn from_code(code: &str, message: &str) -> Self {
        match code {
            "username-taken" => Self::UsernameTaken,
            "invalid-position" => Self::InvalidPosition { n: 0 },
            "weak-password" => Self::WeakPassword,
            "invalid-username" => Self::InvalidUsername,
            "bad-credentials" => Self::BadCredentials,
            "account-locked" => Self::AccountLocked,
            "session-not-found" => Self::SessionNotFound,
            "disabled-in-production" => Self::DisabledInProduction,
            "unknown-user" => Self::UnknownUser,
            "unknown-account" => Self::UnknownAccount,
            "delivery-failed" => Self::Delivery(DeliveryError::Failed(message.into())),
            _ => Self::Internal(message.into()),
        }
    }
}

fn internal(e: impl std::fmt::Display) -> ServiceError {
    ServiceError::Internal(e.to_string())
}

impl From<AccountStoreError> for ServiceError {
    fn from(e: AccountStoreError) -> Self {
        match e {
            AccountStoreError::UsernameTaken => Self::UsernameTaken,
            AccountStoreError::UnknownAccount => Self::UnknownAccount,
            other => internal(other),
        }
    }
}

impl From<ValidationError> for ServiceError {
    fn from(e: ValidationError) -> Self {
        match e {
            ValidationError::UnknownAccount => Self::UnknownAccount,
            ValidationError::Store(s) => s.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum StartupError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("master key: {0}")]
    Vault(#[from] VaultError),
    #[error("account store: {0}")]
    Accounts(#[from] AccountStoreError),
    #[error("ledger: {0}")]
    Ledger(#[from] LedgerError),
    #[error("mail channel: {0}")]
    Mail(#[from] DeliveryError),
}

/// Assembles an [`AuthService`]. Anything not supplied is built from the
/// config: files at `chain_path` and `store_path`, the master key from the
/// environment, the configured mail channel and the system clock.
pub struct ServiceBuilder {
    config: ServiceConfig,
    vault: Option<Arc<Vault>>,
    accounts: Option<Arc<AccountStore>>,
    ledger: Option<Arc<Ledger>>,
    channel: Option<Arc<dyn DeliveryChannel>>,
    clock: Option<Arc<dyn Clock>>,
}

impl ServiceBuilder {
    pub fn new(config: ServiceConfig) -> Self {
        Self {
            config,
            vault: None,
            accounts: None,
            ledger: None,
            channel: None,
            clock: None,
        }
    }

    /// Ephemeral key, in-memory store and ledger, mock mailbox.
    pub fn in_memory(config: ServiceConfig) -> Self {
        Self::new(config)
            .vault(Vault::ephemeral())
            .accounts(AccountStore::in_memory())
            .ledger(Ledger::in_memory())
            .channel(Arc::new(MockMailbox::new()))
    }

    pub fn vault(mut self, vault: Vault) -> Self {
        self.vault = Some(Arc::new(vault));
        self
    }

    pub fn accounts(mut self, accounts: AccountStore) -> Self {
        self.accounts = Some(Arc::new(accounts));
        self
    }

    pub fn ledger(mut self, ledger: Ledger) -> Self {
        self.ledger = Some(Arc::new(ledger));
        self
    }

    pub fn channel(mut self, channel: Arc<dyn DeliveryChannel>) -> Self {
        self.channel = Some(channel);
        self
    }

    pub fn clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = Some(clock);
        self
    }

    pub fn build(self) -> Result<AuthService, StartupError> {
        let config = self.config;
        config.validate()?;
        let vault = match self.vault {
            Some(v) => v,
            None => Arc::new(Vault::from_env()?),
        };
        let accounts = match self.accounts {
            Some(a) => a,
            None => Arc::new(AccountStore::open(&config.store_path)?),
        };
        let ledger = match self.ledger {
            Some(l) => l,
            None => Arc::new(Ledger::open(&config.chain_path)?),
        };
        let channel = match self.channel {
            Some(c) => c,
            None => default_channel(&config)?,
        };
        let clock = self.clock.unwrap_or_else(|| Arc::new(SystemClock));
        let validator = Validator::new(vault.clone(), accounts.clone(), config.max_mistypes);
        Ok(AuthService {
            otp_config: config.otp_config(),
            config,
            vault,
            accounts,
            ledger,
            sessions: Mutex::new(HashMap::new()),
            channel,
            validator,
            clock,
            dummy_credentials: OnceLock::new(),
        })
    }
}

fn default_channel(config: &ServiceConfig) -> Result<Arc<dyn DeliveryChannel>, DeliveryError> {
    match config.mail_channel {
        MailChannelKind::Mock => Ok(Arc::new(MockMailbox::new())),
        #[cfg(feature = "smtp")]
        MailChannelKind::Smtp => {
            let relay = config.smtp_relay.as_deref().unwrap_or_default();
            let from = config.smtp_from.as_deref().unwrap_or_default();
            Ok(Arc::new(mail::SmtpChannel::new(
                relay,
                from,
                Duration::from_secs(10),
            )?))
        }
        #[cfg(not(feature = "smtp"))]
        MailChannelKind::Smtp => Err(DeliveryError::Unavailable),
    }
}

type SharedSession = Arc<Mutex<SessionState>>;

pub struct AuthService {
    config: ServiceConfig,
    otp_config: OtpConfig,
    vault: Arc<Vault>,
    accounts: Arc<AccountStore>,
    ledger: Arc<Ledger>,
    sessions: Mutex<HashMap<SessionId, SharedSession>>,
    channel: Arc<dyn DeliveryChannel>,
    validator: Validator,
    clock: Arc<dyn Clock>,
    /// Verified against when the username is unknown, so that case costs the
    /// same as a wrong password.
    dummy_credentials: OnceLock<CredentialRecord>,
}

impl std::fmt::Debug for AuthService {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AuthService")
            .field("config", &self.config)
            .field("chain_len", &self.ledger.len())
            .finish_non_exhaustive()
    }
}

fn valid_username(name: &str) -> bool {
    !name.is_empty()
        && name.chars().count() <= MAX_USERNAME_LEN
        && name.chars().all(|c| !c.is_whitespace() && !c.is_control())
}

impl AuthService {
    pub fn builder(config: ServiceConfig) -> ServiceBuilder {
        ServiceBuilder::new(config)
    }

    pub fn config(&self) -> &ServiceConfig {
        &self.config
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn accounts(&self) -> &AccountStore {
        &self.accounts
    }

    pub fn validator(&self) -> &Validator {
        &self.validator
    }

    pub fn vault(&self) -> &Vault {
        &self.vault
    }

    /// The mock mailbox, when that is the configured channel.
    pub fn mailbox(&self) -> Option<&MockMailbox> {
        self.channel.mailbox()
    }

    pub fn now(&self) -> Millis {
        self.clock.now()
    }

    pub fn register(
        &self,
        username: &str,
        password: &str,
        position: usize,
    ) -> Result<UserRef, ServiceError> {
        if !valid_username(username) {
            return Err(ServiceError::InvalidUsername);
        }
        let n = self.otp_config.n;
        let position = HoneytokenPosition::new(position, n)
            .map_err(|_| ServiceError::InvalidPosition { n })?;
        if password.chars().count() < MIN_PASSWORD_LEN {
            return Err(ServiceError::WeakPassword);
        }
        if self.accounts.get(username)?.is_some() {
            return Err(ServiceError::UsernameTaken);
        }
        let credentials = hash_password(password, &self.config.kdf).map_err(internal)?;
        let user_ref = self.accounts.insert(AccountRecord {
            username: username.to_string(),
            credentials,
            honeytoken_position: position,
            locked: false,
            created_at: self.clock.now(),
        })?;
        tracing::info!(user = ?user_ref, "registered");
        Ok(user_ref)
    }

    fn dummy_credentials(&self) -> &CredentialRecord {
        self.dummy_credentials.get_or_init(|| {
            hash_password("not-a-real-password", &self.config.kdf)
                .expect("kdf params validated at startup")
        })
    }

    /// First factor. On success a fresh OTP set is issued: its sealed
    /// honeytoken is committed to the ledger and the plain set is mailed,
    /// both or neither.
    pub fn login(&self, username: &str, password: &str) -> Result<SessionId, ServiceError> {
        let Some(account) = self.accounts.get(username)? else {
            let _ = verify_password(password, self.dummy_credentials());
            return Err(ServiceError::BadCredentials);
        };
        if !verify_password(password, &account.credentials).map_err(internal)? {
            return Err(ServiceError::BadCredentials);
        }
        if account.locked {
            return Err(ServiceError::AccountLocked);
        }

        let now = self.clock.now();
        let user_ref = self.accounts.user_ref(username);
        let session_id = SessionId::random(&mut OsRng);
        let set = generate_otp_set(
            &self.otp_config,
            account.honeytoken_position.get(),
            session_id,
            now,
            &mut OsRng,
        )
        .map_err(internal)?;
        let payload = HoneytokenPayload::from_otp_set(&set, &mut OsRng);
        let sealed = self
            .vault
            .seal(
                &payload,
                self.vault.active_key(),
                &envelope_aad(&session_id, &user_ref),
            )
            .map_err(internal)?;
        let block = BlockPayload {
            user_ref,
            session_id,
            sealed,
        };
        let mail = MailMessage::for_set(username, &set, now);

        match self
            .ledger
            .append_block_with(&block, now, |_| self.channel.deliver(&mail))
        {
            Ok(_) => {}
            Err(AppendError::Aborted(e)) => {
                tracing::warn!(user = ?user_ref, error = %e, "otp delivery failed, nothing recorded");
                return Err(ServiceError::Delivery(e));
            }
            Err(AppendError::Ledger(e)) => {
                if !self.channel.retract(&mail) {
                    tracing::error!(
                        user = ?user_ref,
                        "otp mail already sent for a login that was not recorded"
                    );
                }
                tracing::error!(error = %e, "ledger append failed");
                return Err(internal(e));
            }
        }

        let mut state = SessionState::new(session_id, user_ref, now, self.otp_config.ttl);
        state.first_factor_passed();
        let mut sessions = self.sessions.lock().expect("session table poisoned");
        sessions.retain(|_, s| {
            let s = s.lock().expect("session poisoned");
            !s.is_expired(now.saturating_sub(SESSION_GRACE))
        });
        sessions.insert(session_id, Arc::new(Mutex::new(state)));
        Ok(session_id)
    }

    /// Second factor. Attempts on one session are serialized.
    pub fn submit_otp(
        &self,
        session_id: &SessionId,
        entered: &str,
    ) -> Result<ValidationOutcome, ServiceError> {
        let session = self
            .sessions
            .lock()
            .expect("session table poisoned")
            .get(session_id)
            .cloned()
            .ok_or(ServiceError::SessionNotFound)?;
        let mut session = session.lock().expect("session poisoned");
        let now = self.clock.now();
        let chain = self.ledger.read();
        Ok(self
            .validator
            .validate_attempt(&mut session, entered, &chain, now)?)
    }

    pub fn session_stage(&self, session_id: &SessionId) -> Option<Stage> {
        let sessions = self.sessions.lock().expect("session table poisoned");
        let session = sessions.get(session_id)?;
        let stage = session.lock().expect("session poisoned").stage();
        Some(stage)
    }

    /// Sessions currently remembered, in any stage.
    pub fn session_count(&self) -> usize {
        self.sessions.lock().expect("session table poisoned").len()
    }

    /// Demo only: the messages the mock channel holds for `username`.
    pub fn read_mailbox(&self, username: &str) -> Result<Vec<MailMessage>, ServiceError> {
        if !self.config.demo_mode {
            return Err(ServiceError::DisabledInProduction);
        }
        let mailbox = self.mailbox().ok_or(ServiceError::DisabledInProduction)?;
        if self.accounts.get(username)?.is_none() {
            return Err(ServiceError::UnknownUser);
        }
        Ok(mailbox.messages(username))
    }

    pub fn unlock(&self, username: &str) -> Result<(), ServiceError> {
        if self.accounts.get(username)?.is_none() {
            return Err(ServiceError::UnknownAccount);
        }
        unlock_account(&self.accounts, &self.accounts.user_ref(username))?;
        tracing::info!(user = ?self.accounts.user_ref(username), "account unlocked");
        Ok(())
    }

    pub fn is_locked(&self, username: &str) -> Result<bool, ServiceError> {
        Ok(self
            .accounts
            .get(username)?
            .ok_or(ServiceError::UnknownAccount)?
            .locked)
    }
}
