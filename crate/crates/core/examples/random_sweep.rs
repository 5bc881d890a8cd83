//! Runs the full verification battery over seeded random connected networks
//! and prints the worst value of each check.
//!
//! cargo run --example random_sweep -- 100

use qobserver::runner::{run_verify_sweep, SweepConfig};

fn main() -> qobserver::Result<()> {
    let count = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(25);
    let sweep = SweepConfig {
        count,
        ..SweepConfig::default()
    };
    let report = run_verify_sweep(&sweep)?;
    println!("{report}");
    std::process::exit(report.exit_code());
}
