//! Honeytoken transfer timing: from the start of OTP generation until the
//! validating side holds the unsealed payload, with and without the ledger
//! in between.

use std::fmt::Write as _;
use std::str::FromStr;
use std::sync::mpsc;
use std::time::{Duration, Instant};

use rand::rngs::OsRng;
use thiserror::Error;

use crate::ids::{SessionId, UserRef};
use crate::ledger::{BlockPayload, Ledger, LedgerError};
use crate::otp::{generate_otp_set, OtpConfig};
use crate::time::Millis;
use crate::validator::envelope_aad;
use crate::vault::{HoneytokenPayload, SealedHoneytoken, Vault, VaultError};

pub const MIN_ITERATIONS: usize = 100;
pub const MIN_TRIALS: usize = 3;
pub const WARMUP_ITERATIONS: usize = 100;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error(transparent)]
    Ledger(#[from] LedgerError),
    #[error(transparent)]
    Vault(#[from] VaultError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BenchMode {
    WithoutBlockchain,
    WithBlockchain,
}

impl BenchMode {
    pub const ALL: [BenchMode; 2] = [BenchMode::WithoutBlockchain, BenchMode::WithBlockchain];

    pub fn label(self) -> &'static str {
        match self {
            Self::WithoutBlockchain => "Without Blockchain",
            Self::WithBlockchain => "With Blockchain",
        }
    }

    /// Column value in CSV output.
    pub fn key(self) -> &'static str {
        match self {
            Self::WithoutBlockchain => "without_blockchain",
            Self::WithBlockchain => "with_blockchain",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub mode: BenchMode,
    /// Per-iteration mean of each trial, in milliseconds.
    pub trials: Vec<f64>,
    pub median: f64,
    pub iterations_per_trial: usize,
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    match v.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => v[n / 2],
        n => (v[n / 2 - 1] + v[n / 2]) / 2.0,
    }
}

/// Issuing side plus validating side, sharing one key.
struct Rig {
    vault: Vault,
    config: OtpConfig,
    user_ref: UserRef,
}

impl Rig {
    fn new() -> Self {
        Self {
            vault: Vault::ephemeral(),
            config: OtpConfig::default(),
            user_ref: UserRef([0x42; 32]),
        }
    }

    fn issue(&self) -> Result<BlockPayload, BenchError> {
        let session_id = SessionId::random(&mut OsRng);
        let set = generate_otp_set(&self.config, 1, session_id, Millis(0), &mut OsRng)
            .map_err(|e| BenchError::InvalidParameters(e.to_string()))?;
        let payload = HoneytokenPayload::from_otp_set(&set, &mut OsRng);
        let aad = envelope_aad(&session_id, &self.user_ref);
        let sealed = self.vault.seal(&payload, self.vault.active_key(), &aad)?;
        Ok(BlockPayload {
            user_ref: self.user_ref,
            session_id,
            sealed,
        })
    }

    fn receive(
        &self,
        session_id: &SessionId,
        sealed: &SealedHoneytoken,
    ) -> Result<HoneytokenPayload, BenchError> {
        let aad = envelope_aad(session_id, &self.user_ref);
        Ok(self.vault.unseal(sealed, self.vault.active_key(), &aad)?)
    }

    fn transfer_direct(&self, link: &Link) -> Result<HoneytokenPayload, BenchError> {
        let block = self.issue()?;
        link.0.send(block).expect("receiver is alive");
        let block = link.1.recv().expect("sender is alive");
        self.receive(&block.session_id, &block.sealed)
    }

    fn transfer_ledger(&self, ledger: &Ledger) -> Result<HoneytokenPayload, BenchError> {
        let block = self.issue()?;
        ledger.append_block(&block, Millis(0))?;
        let fetched = ledger.fetch_payload(&block.session_id)?;
        self.receive(&fetched.session_id, &fetched.sealed)
    }
}

type Link = (mpsc::SyncSender<BlockPayload>, mpsc::Receiver<BlockPayload>);

fn check_params(iterations: usize, trials: usize) -> Result<(), BenchError> {
    if iterations < MIN_ITERATIONS {
        return Err(BenchError::InvalidParameters(format!(
            "iterations must be at least {MIN_ITERATIONS}, got {iterations}"
        )));
    }
    if trials < MIN_TRIALS {
        return Err(BenchError::InvalidParameters(format!(
            "trials must be at least {MIN_TRIALS}, got {trials}"
        )));
    }
    Ok(())
}

/// Runs the benchmark against a fresh in-memory ledger.
pub fn run_transfer_bench(
    mode: BenchMode,
    iterations: usize,
    trials: usize,
) -> Result<BenchReport, BenchError> {
    run_transfer_bench_on(&Ledger::in_memory(), mode, iterations, trials)
}

/// Runs the benchmark. In `WithBlockchain` mode every measured iteration
/// appends one block to `ledger`; warm-up iterations go to a scratch ledger.
pub fn run_transfer_bench_on(
    ledger: &Ledger,
    mode: BenchMode,
    iterations: usize,
    trials: usize,
) -> Result<BenchReport, BenchError> {
    check_params(iterations, trials)?;
    let rig = Rig::new();
    let link: Link = {
        let (tx, rx) = mpsc::sync_channel(1);
        (tx, rx)
    };
    let scratch = Ledger::in_memory();

    let mut results = Vec::with_capacity(trials);
    for _ in 0..trials {
        for _ in 0..WARMUP_ITERATIONS {
            match mode {
                BenchMode::WithoutBlockchain => rig.transfer_direct(&link)?,
                BenchMode::WithBlockchain => rig.transfer_ledger(&scratch)?,
            };
        }
        let mut total = Duration::ZERO;
        for _ in 0..iterations {
            let start = Instant::now();
            let payload = match mode {
                BenchMode::WithoutBlockchain => rig.transfer_direct(&link)?,
                BenchMode::WithBlockchain => rig.transfer_ledger(ledger)?,
            };
            total += start.elapsed();
            std::hint::black_box(payload);
        }
        results.push(total.as_secs_f64() * 1e3 / iterations as f64);
    }
    Ok(BenchReport {
        mode,
        median: median(&results),
        trials: results,
        iterations_per_trial: iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Table,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" => Ok(Self::Table),
            "csv" => Ok(Self::Csv),
            other => Err(format!("unknown format `{other}` (table or csv)")),
        }
    }
}

const ORDINALS: [&str; 10] = [
    "First", "Second", "Third", "Fourth", "Fifth", "Sixth", "Seventh", "Eighth", "Ninth", "Tenth",
];

fn trial_heading(i: usize) -> String {
    ORDINALS
        .get(i)
        .map(|s| s.to_string())
        .unwrap_or_else(|| format!("Trial {}", i + 1))
}

fn ms(v: f64) -> String {
    format!("{v:.6} ms")
}

pub fn emit_report(reports: &[BenchReport], format: ReportFormat) -> Result<String, BenchError> {
    if reports.is_empty() {
        return Err(BenchError::InvalidParameters("no reports to emit".into()));
    }
    Ok(match format {
        ReportFormat::Csv => {
            let mut out = String::from("mode,trial,ms\n");
            for r in reports {
                for (i, t) in r.trials.iter().enumerate() {
                    let _ = writeln!(out, "{},{},{:.6}", r.mode.key(), i + 1, t);
                }
            }
            out
        }
        ReportFormat::Table => table(reports),
    })
}

fn table(reports: &[BenchReport]) -> String {
    let columns = reports.iter().map(|r| r.trials.len()).max().unwrap_or(0);
    let mut header = vec!["Mode".to_string()];
    header.extend((0..columns).map(trial_heading));
    header.push("Median".into());

    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            let mut row = vec![r.mode.label().to_string()];
            row.extend((0..columns).map(|i| r.trials.get(i).map_or("-".into(), |&t| ms(t))));
            row.push(ms(r.median));
            row
        })
        .collect();

    let widths: Vec<usize> = (0..header.len())
        .map(|c| {
            std::iter::once(&header)
                .chain(&rows)
                .map(|row| row[c].len())
                .max()
                .unwrap_or(0)
        })
        .collect();
    let render = |row: &[String]| {
        row.iter()
            .zip(&widths)
            .map(|(cell, w)| format!("{cell:<w$}"))
            .collect::<Vec<_>>()
            .join(" | ")
            .trim_end()
            .to_string()
    };

    let mut out = String::new();
    let mut iterations: Vec<usize> = reports.iter().map(|r| r.iterations_per_trial).collect();
    iterations.dedup();
    let _ = writeln!(
        out,
        "Honeytoken transfer time to the validation process ({} iterations per trial)",
        iterations
            .iter()
            .map(usize::to_string)
            .collect::<Vec<_>>()
            .join("/")
    );
    out.push('\n');
    let _ = writeln!(out, "{}", render(&header));
    let _ = writeln!(
        out,
        "{}",
        widths
            .iter()
            .map(|w| "-".repeat(*w))
            .collect::<Vec<_>>()
            .join("-+-")
    );
    for row in &rows {
        let _ = writeln!(out, "{}", render(row));
    }

    let find = |m| reports.iter().find(|r| r.mode == m);
    if let (Some(with), Some(without)) = (
        find(BenchMode::WithBlockchain),
        find(BenchMode::WithoutBlockchain),
    ) {
        out.push('\n');
        let _ = writeln!(
            out,
            "Ratio (median with blockchain / median without blockchain): {:.3}",
            with.median / without.median
        );
    }
    out.push('\n');
    out.push_str(
        "Every cell is the mean wall time of one iteration in milliseconds (ms), \
         from the start of OTP generation until the unsealed honeytoken reaches \
         the validating side, on a monotonic clock.\n",
    );
    out
}
