//! Checks the physical-realizability invariants of the observer flow:
//! symplectic form preservation, energy conservation and the norm bound.
//!
//! cargo run --example invariants

use nalgebra::DVector;
use qobserver::config::example_sec4;
use qobserver::dynamics::{
    check_hamiltonian_conservation, check_norm_bound, check_symplectic_ccr, propagate, TimeGrid,
};
use qobserver::runner::run_synthesize;

fn main() -> qobserver::Result<()> {
    let syn = run_synthesize(&example_sec4())?;
    let real = &syn.realization;
    let grid = TimeGrid::uniform(50.0, 0.05)?;
    let prop_o = propagate(&syn.augmented, &grid)?.observer_block();
    let x0 = DVector::from_fn(2 * real.n(), |i, _| (i as f64 + 1.0).sin());
    println!(
        "symplectic residual   {:.3e}",
        check_symplectic_ccr(real, &prop_o)
    );
    println!(
        "energy drift          {:.3e}",
        check_hamiltonian_conservation(real, &x0, &prop_o)?
    );
    println!(
        "max ||Phi||/sqrt(k)   {:.6}",
        check_norm_bound(real, &prop_o)?
    );
    Ok(())
}
