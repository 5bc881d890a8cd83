//! Time-averaged observer outputs approach the plant's σ1 coefficient.
//! Prints D(T), the O(1/T) bound and D(T)·T for a range of horizons.
//!
//! cargo run --example consensus_average

use qobserver::config::example_sec4;
use qobserver::dynamics::{check_convergence, time_average_closed_form};
use qobserver::runner::run_synthesize;

fn main() -> qobserver::Result<()> {
    let syn = run_synthesize(&example_sec4())?;
    let horizons = [10.0, 50.0, 100.0, 200.0, 400.0, 800.0, 1000.0];
    let report = check_convergence(&syn.augmented, &syn.realization, &horizons)?;
    println!("K = {:.4}", report.constant);
    println!("{:>8} {:>12} {:>12} {:>10}", "T", "D(T)", "K/T", "D(T)*T");
    for e in &report.entries {
        println!(
            "{:>8} {:>12.4e} {:>12.4e} {:>10.4}",
            e.horizon,
            e.deviation,
            e.bound,
            e.deviation * e.horizon
        );
    }
    let avg = time_average_closed_form(&syn.augmented, 1000.0)?;
    let row = avg.row(1);
    println!(
        "first observer row at T = 1000: z_p coefficient {:.6}, largest observer coefficient {:.3e}",
        row[0],
        row.columns(1, row.len() - 1).amax()
    );
    Ok(())
}
