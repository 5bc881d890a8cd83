//! Builds the five-observer network from the bundled config and prints the
//! augmented drift matrix.
//!
//! cargo run --example synthesize_example

use qobserver::config::example_sec4;
use qobserver::runner::run_synthesize;

fn main() -> qobserver::Result<()> {
    let cfg = example_sec4();
    let syn = run_synthesize(&cfg)?;
    let real = &syn.realization;
    println!("omega = {:?}", real.omega().as_slice());
    println!("b = {:?}", real.b().as_slice());
    println!("A_a ={}", syn.augmented.a_a());
    println!(
        "R_o spectrum in [{:.4}, {:.4}], condition number {:.4}",
        syn.certificate.lambda_min,
        syn.certificate.lambda_max,
        syn.certificate.condition_number()
    );
    Ok(())
}
