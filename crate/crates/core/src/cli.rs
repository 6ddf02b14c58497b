//! Command-line front end. [`run`] parses arguments, dispatches, and returns
//! the exit code with captured output; `main` only prints it.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 a verification
//! or validation failure, 3 an I/O failure (files, network, server errors).

use std::ffi::OsString;
use std::fmt::Write as _;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use reqwest::blocking::Client;
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::accounts::AccountStore;
use crate::bench::{emit_report, run_transfer_bench, BenchMode, ReportFormat};
use crate::ledger::verify_bytes;
use crate::service::http::{
    ErrorBody, LoginRequest, LoginResponse, MailboxEntry, OtpRequest, OtpResponse, RegisterRequest,
};
use crate::service::{AuthService, ServiceBuilder, ServiceConfig, StartupError};
use crate::validator::{unlock_account, ValidationOutcome};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "honeyauth",
    version,
    about = "Two-factor honeytoken authentication"
)]
pub struct Cli {
    /// Service configuration file (`key = value` lines).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Base URL of a running service, for the client verbs. Defaults to the
    /// configured bind address.
    #[arg(long, global = true)]
    pub server: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the HTTP service.
    Serve {
        /// Directory of static files for the browser demo.
        #[arg(long)]
        demo_ui: Option<PathBuf>,
        /// Overrides `bind_address` from the config.
        #[arg(long)]
        bind: Option<String>,
    },
    Register {
        #[arg(long)]
        username: String,
        #[arg(long)]
        password: String,
        /// Which of the N OTPs (1-based) will be the valid one.
        #[arg(long)]
        position: usize,
    },
    /// First factor. Prints the session token.
    Login {
        #[arg(long)]
        username: String,
        #[arg(long)]
        password: String,
    },
    /// Second factor. Prints the outcome.
    Otp {
        #[arg(long)]
        session: String,
        #[arg(long)]
        otp: String,
    },
    /// Demo mode only: list the OTP mails sent to a user.
    Mailbox {
        #[arg(long)]
        username: String,
    },
    Chain {
        #[command(subcommand)]
        command: ChainCommand,
    },
    /// Clear an account's lock in the account store file.
    Unlock {
        #[arg(long)]
        username: String,
        /// Overrides `store_path` from the config.
        #[arg(long)]
        store: Option<PathBuf>,
    },
    Bench {
        #[arg(long, value_enum, default_value_t = ModeArg::Both)]
        mode: ModeArg,
        #[arg(long, default_value_t = 1000)]
        iterations: usize,
        #[arg(long, default_value_t = 3)]
        trials: usize,
        #[arg(long, value_enum, default_value_t = FormatArg::Table)]
        format: FormatArg,
    },
    /// Walk through one registration and login in-process, step by step.
    Demo,
}

#[derive(Debug, Subcommand)]
pub enum ChainCommand {
    /// Check every block of a chain file.
    Verify {
        /// Overrides `chain_path` from the config.
        #[arg(long)]
        path: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Both,
    With,
    Without,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Table,
    Csv,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CliOutput {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl CliOutput {
    fn ok(stdout: impl Into<String>) -> Self {
        Self {
            code: EXIT_OK,
            stdout: stdout.into(),
            stderr: String::new(),
        }
    }

    fn fail(code: i32, stderr: impl Into<String>) -> Self {
        Self {
            code,
            stdout: String::new(),
            stderr: stderr.into(),
        }
    }
}

pub fn run<I, T>(args: I) -> CliOutput
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                CliOutput::fail(EXIT_USAGE, text)
            } else {
                CliOutput::ok(text)
            };
        }
    };
    let config = match &cli.config {
        Some(path) => match ServiceConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                return CliOutput::fail(EXIT_USAGE, format!("error: {}: {e}\n", path.display()))
            }
        },
        None => ServiceConfig::default(),
    };
    let server = cli
        .server
        .clone()
        .unwrap_or_else(|| format!("http://{}", config.bind_address));

    match cli.command {
        Command::Serve { demo_ui, bind } => serve(config, bind, demo_ui),
        Command::Register {
            username,
            password,
            position,
        } => Remote::new(&server).register(&username, &password, position),
        Command::Login { username, password } => Remote::new(&server).login(&username, &password),
        Command::Otp { session, otp } => Remote::new(&server).otp(&session, &otp),
        Command::Mailbox { username } => Remote::new(&server).mailbox(&username),
        Command::Chain {
            command: ChainCommand::Verify { path },
        } => chain_verify(path.unwrap_or(config.chain_path)),
        Command::Unlock { username, store } => {
            unlock(store.unwrap_or(config.store_path), &username)
        }
        Command::Bench {
            mode,
            iterations,
            trials,
            format,
        } => bench(mode, iterations, trials, format),
        Command::Demo => demo(config),
    }
}

fn serve(mut config: ServiceConfig, bind: Option<String>, demo_ui: Option<PathBuf>) -> CliOutput {
    if let Some(bind) = bind {
        config.bind_address = bind;
    }
    let addr: SocketAddr = match config.bind_address.parse() {
        Ok(a) => a,
        Err(e) => {
            return CliOutput::fail(
                EXIT_USAGE,
                format!("error: bind address {}: {e}\n", config.bind_address),
            )
        }
    };
    let service = match ServiceBuilder::new(config).build() {
        Ok(s) => Arc::new(s),
        Err(e @ StartupError::Config(_)) => {
            return CliOutput::fail(EXIT_USAGE, format!("error: {e}\n"))
        }
        Err(e) => return CliOutput::fail(EXIT_IO, format!("error: {e}\n")),
    };
    let runtime = match tokio::runtime::Runtime::new() {
        Ok(r) => r,
        Err(e) => return CliOutput::fail(EXIT_IO, format!("error: starting runtime: {e}\n")),
    };
    match runtime.block_on(crate::service::http::serve(service, addr, demo_ui)) {
        Ok(()) => CliOutput::ok(""),
        Err(e) => CliOutput::fail(EXIT_IO, format!("error: {addr}: {e}\n")),
    }
}

/// Blocking client for the client verbs.
struct Remote {
    base: String,
    client: Client,
}

enum Reply<T> {
    Ok(T),
    Rejected {
        status: u16,
        code: String,
        message: String,
    },
}

impl Remote {
    fn new(base: &str) -> Self {
        let client = Client::builder()
            .timeout(Duration::from_secs(30))
            .build()
            .expect("http client");
        Self {
            base: base.trim_end_matches('/').to_string(),
            client,
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{}", self.base, path)
    }

    fn finish<T: DeserializeOwned>(
        &self,
        response: reqwest::Result<reqwest::blocking::Response>,
    ) -> Result<Reply<T>, CliOutput> {
        let io = |e: &dyn std::fmt::Display| {
            CliOutput::fail(EXIT_IO, format!("error: {}: {e}\n", self.base))
        };
        let response = response.map_err(|e| io(&e))?;
        let status = response.status().as_u16();
        let bytes = response.bytes().map_err(|e| io(&e))?;
        if (200..300).contains(&status) {
            let body = if bytes.is_empty() {
                b"null".as_slice()
            } else {
                &bytes
            };
            return serde_json::from_slice(body)
                .map(Reply::Ok)
                .map_err(|e| io(&e));
        }
        match serde_json::from_slice::<ErrorBody>(&bytes) {
            Ok(e) => Ok(Reply::Rejected {
                status,
                code: e.error,
                message: e.message,
            }),
            Err(_) => Ok(Reply::Rejected {
                status,
                code: "http-error".into(),
                message: String::from_utf8_lossy(&bytes).into_owned(),
            }),
        }
    }

    fn post<B: Serialize, T: DeserializeOwned>(
        &self,
        path: &str,
        body: &B,
    ) -> Result<Reply<T>, CliOutput> {
        self.finish(self.client.post(self.url(path)).json(body).send())
    }

    fn get<T: DeserializeOwned>(&self, path: &str) -> Result<Reply<T>, CliOutput> {
        self.finish(self.client.get(self.url(path)).send())
    }

    fn rejected(status: u16, code: &str, message: &str) -> CliOutput {
        let exit = if status >= 500 { EXIT_IO } else { EXIT_FAILURE };
        CliOutput::fail(exit, format!("error: {code}: {message}\n"))
    }

    fn register(&self, username: &str, password: &str, position: usize) -> CliOutput {
        let body = RegisterRequest {
            username: username.into(),
            password: password.into(),
            honeytoken_position: position,
        };
        match self.post::<_, Option<()>>("/register", &body) {
            Ok(Reply::Ok(_)) => CliOutput::ok(format!("registered {username}\n")),
            Ok(Reply::Rejected {
                status,
                code,
                message,
            }) => Self::rejected(status, &code, &message),
            Err(out) => out,
        }
    }

    fn login(&self, username: &str, password: &str) -> CliOutput {
        let body = LoginRequest {
            username: username.into(),
            password: password.into(),
        };
        match self.post::<_, LoginResponse>("/login", &body) {
            Ok(Reply::Ok(r)) => CliOutput::ok(format!("{}\n", r.session_id)),
            Ok(Reply::Rejected {
                status,
                code,
                message,
            }) => Self::rejected(status, &code, &message),
            Err(out) => out,
        }
    }

    fn otp(&self, session: &str, otp: &str) -> CliOutput {
        let body = OtpRequest {
            session_id: session.into(),
            otp: otp.into(),
        };
        // Locked and SessionInvalid come back as 423 and 410 with an outcome
        // body, so read them directly rather than as errors.
        let response = match self.client.post(self.url("/otp")).json(&body).send() {
            Ok(r) => r,
            Err(e) => return CliOutput::fail(EXIT_IO, format!("error: {}: {e}\n", self.base)),
        };
        let status = response.status().as_u16();
        let bytes = match response.bytes() {
            Ok(b) => b,
            Err(e) => return CliOutput::fail(EXIT_IO, format!("error: {}: {e}\n", self.base)),
        };
        if let Some(outcome) = serde_json::from_slice::<OtpResponse>(&bytes)
            .ok()
            .and_then(|r| r.to_outcome())
        {
            return outcome_output(outcome);
        }
        match serde_json::from_slice::<ErrorBody>(&bytes) {
            Ok(e) => Self::rejected(status, &e.error, &e.message),
            Err(_) => Self::rejected(status, "http-error", &String::from_utf8_lossy(&bytes)),
        }
    }

    fn mailbox(&self, username: &str) -> CliOutput {
        match self.get::<Vec<MailboxEntry>>(&format!("/demo/mailbox/{username}")) {
            Ok(Reply::Ok(entries)) => {
                let mut out = String::new();
                for e in entries {
                    let _ = writeln!(out, "{} {}", e.session_id, e.otps.join(" "));
                }
                CliOutput::ok(out)
            }
            Ok(Reply::Rejected {
                status,
                code,
                message,
            }) => Self::rejected(status, &code, &message),
            Err(out) => out,
        }
    }
}

/// `Authenticated` exits 0; every other outcome is a validation failure.
pub fn outcome_output(outcome: ValidationOutcome) -> CliOutput {
    CliOutput {
        code: if outcome == ValidationOutcome::Authenticated {
            EXIT_OK
        } else {
            EXIT_FAILURE
        },
        stdout: format!("{outcome}\n"),
        stderr: String::new(),
    }
}

fn chain_verify(path: PathBuf) -> CliOutput {
    let bytes = match std::fs::read(&path) {
        Ok(b) => b,
        Err(e) => return CliOutput::fail(EXIT_IO, format!("error: {}: {e}\n", path.display())),
    };
    let report = verify_bytes(&bytes);
    CliOutput {
        code: if report.valid { EXIT_OK } else { EXIT_FAILURE },
        stdout: format!("{report}\n"),
        stderr: String::new(),
    }
}

fn unlock(path: PathBuf, username: &str) -> CliOutput {
    // Never create a store as a side effect of an admin command.
    if !path.exists() {
        return CliOutput::fail(
            EXIT_IO,
            format!("error: no account store at {}\n", path.display()),
        );
    }
    let store = match AccountStore::open(&path) {
        Ok(s) => s,
        Err(e) => return CliOutput::fail(EXIT_IO, format!("error: {}: {e}\n", path.display())),
    };
    match store.get(username) {
        Ok(Some(_)) => {}
        Ok(None) => {
            return CliOutput::fail(
                EXIT_FAILURE,
                format!("error: unknown-account: {username}\n"),
            )
        }
        Err(e) => return CliOutput::fail(EXIT_IO, format!("error: {e}\n")),
    }
    match unlock_account(&store, &store.user_ref(username)) {
        Ok(()) => CliOutput::ok(format!("unlocked {username}\n")),
        Err(e) => CliOutput::fail(EXIT_IO, format!("error: {e}\n")),
    }
}

fn bench(mode: ModeArg, iterations: usize, trials: usize, format: FormatArg) -> CliOutput {
    let modes: &[BenchMode] = match mode {
        ModeArg::Both => &BenchMode::ALL,
        ModeArg::With => &[BenchMode::WithBlockchain],
        ModeArg::Without => &[BenchMode::WithoutBlockchain],
    };
    let mut reports = Vec::new();
    for &m in modes {
        match run_transfer_bench(m, iterations, trials) {
            Ok(r) => reports.push(r),
            Err(e) => return CliOutput::fail(EXIT_USAGE, format!("error: {e}\n")),
        }
    }
    let format = match format {
        FormatArg::Table => ReportFormat::Table,
        FormatArg::Csv => ReportFormat::Csv,
    };
    match emit_report(&reports, format) {
        Ok(text) => CliOutput::ok(text),
        Err(e) => CliOutput::fail(EXIT_USAGE, format!("error: {e}\n")),
    }
}

fn demo(config: ServiceConfig) -> CliOutput {
    let mut out = String::new();
    match demo_script(config, &mut out) {
        Ok(()) => CliOutput::ok(out),
        Err(e) => CliOutput {
            code: EXIT_FAILURE,
            stdout: out,
            stderr: format!("error: {e}\n"),
        },
    }
}

fn demo_script(config: ServiceConfig, out: &mut String) -> Result<(), Box<dyn std::error::Error>> {
    let n = config.n_otps;
    let position = 2.min(n);
    let svc: AuthService = ServiceBuilder::in_memory(ServiceConfig {
        demo_mode: true,
        ..config
    })
    .build()?;
    let (user, password) = ("alice", "correct horse battery");

    writeln!(out, "[step 1] alice sends a register request")?;
    writeln!(
        out,
        "[step 2] alice picks OTP #{position} of {n} as her honeytoken position"
    )?;
    svc.register(user, password, position)?;
    writeln!(
        out,
        "[step 3] account stored: password hashed, position kept, locked = false"
    )?;

    let sid = svc.login(user, password)?;
    writeln!(out, "[step 4] first factor accepted, session {sid}")?;
    let block = svc.ledger().len() - 1;
    writeln!(
        out,
        "[step 5] {n} OTPs generated; the honeytoken was sealed under key {} and committed as block {block}",
        svc.vault().active_key()
    )?;
    let mail = svc
        .read_mailbox(user)?
        .into_iter()
        .find(|m| m.session_id == sid)
        .ok_or("no mail for the session")?;
    let listed: Vec<&str> = mail.otps.iter().map(|o| o.as_str()).collect();
    writeln!(out, "[step 6] mail to alice: {}", listed.join(" "))?;
    let chosen = listed[position - 1];
    writeln!(out, "[step 7] alice enters OTP #{position}: {chosen}")?;
    let outcome = svc.submit_otp(&sid, chosen)?;
    writeln!(
        out,
        "[step 8] validation fetched block {block}, unsealed it and compared the entry"
    )?;
    writeln!(out, "[step 9] outcome: {outcome}")?;

    writeln!(out)?;
    writeln!(
        out,
        "An intruder with the password and the mailbox, but not the position:"
    )?;
    let sid = svc.login(user, password)?;
    let mail = svc.read_mailbox(user)?.pop().ok_or("no mail")?;
    let decoy_position = if position == 1 { 2 } else { 1 };
    let decoy = mail.otps[decoy_position - 1].as_str().to_string();
    writeln!(
        out,
        "[step 7] intruder enters OTP #{decoy_position}: {decoy}"
    )?;
    let outcome = svc.submit_otp(&sid, &decoy)?;
    writeln!(out, "[step 9] outcome: {outcome}")?;
    match svc.login(user, password) {
        Err(e) => writeln!(out, "[step 4] next login: {}", e.code())?,
        Ok(_) => writeln!(out, "[step 4] next login: accepted")?,
    }
    svc.unlock(user)?;
    writeln!(out, "admin unlock: alice can log in again")?;
    writeln!(out, "ledger: {}", svc.ledger().verify())?;
    Ok(())
}
