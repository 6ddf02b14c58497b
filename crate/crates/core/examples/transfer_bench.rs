//! Honeytoken transfer timing with and without the ledger.
//!
//!     cargo run --release --example transfer_bench -- 1000 3 csv

use honeyauth::bench::{emit_report, run_transfer_bench, BenchMode, ReportFormat};

fn main() {
    let mut args = std::env::args().skip(1);
    let iterations = args.next().map_or(1000, |a| a.parse().expect("iterations"));
    let trials = args.next().map_or(3, |a| a.parse().expect("trials"));
    let format: ReportFormat = args
        .next()
        .map_or(Ok(ReportFormat::Table), |a| a.parse())
        .unwrap();

    let reports: Vec<_> = BenchMode::ALL
        .iter()
        .map(|&mode| run_transfer_bench(mode, iterations, trials).unwrap())
        .collect();
    print!("{}", emit_report(&reports, format).unwrap());
}
