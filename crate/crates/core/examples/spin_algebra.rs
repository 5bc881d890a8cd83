//! Pauli algebra and the Θ map that turns the qubit Heisenberg equation into
//! a linear ODE on the coefficient vector.
//!
//! cargo run --example spin_algebra

use nalgebra::{RowVector3, Vector3};
use qobserver::spin_algebra::{
    pauli_matrices, plant_drift, theta_identities_residual, theta_map, verify_zp_invariance,
    PlantSpec,
};

fn main() -> qobserver::Result<()> {
    let pauli = pauli_matrices();
    println!(
        "commutator residual         {:e}",
        pauli.commutator_residual()
    );
    println!(
        "hermitian/involutory resid. {:e}",
        pauli.hermitian_involutory_residual()
    );

    let beta = Vector3::new(0.3, -1.2, 0.5);
    let gamma = Vector3::new(2.0, 0.1, -0.7);
    println!("Theta(beta) ={}", theta_map(&beta));
    println!(
        "Theta(beta) gamma = {:?}",
        (theta_map(&beta) * gamma).as_slice()
    );
    println!("gamma x beta      = {:?}", gamma.cross(&beta).as_slice());
    println!(
        "identity residual = {:e}",
        theta_identities_residual(&beta, &gamma)
    );

    let driven = PlantSpec::new(Vector3::new(0.0, 0.0, 1.0), RowVector3::new(1.0, 0.0, 0.0))?;
    println!("drift of H = sigma_3 ={}", plant_drift(&driven));

    let free = PlantSpec::free(RowVector3::new(0.2, -0.4, 0.9))?;
    println!("C_p Theta(C_p') = {:e}", verify_zp_invariance(&free));
    Ok(())
}
