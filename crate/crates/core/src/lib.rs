//! Direct-coupled harmonic-oscillator observer networks for a single-qubit
//! plant.
//!
//! The crate builds an observer network from a weighted plant–observer graph,
//! certifies that its Hamiltonian matrix is positive definite, simulates the
//! augmented Heisenberg-picture coefficient dynamics and checks that every
//! observer output reaches the plant output in time average.
//!
//! ```
//! use qobserver::config::example_sec4;
//! use qobserver::runner::run_synthesize;
//!
//! let syn = run_synthesize(&example_sec4()).unwrap();
//! assert_eq!(syn.augmented.a_a()[(2, 1)], -10.0);
//! ```

pub mod config;
pub mod dynamics;
pub mod error;
pub mod expm;
pub mod graph;
pub mod runner;
pub mod spin_algebra;
pub mod synthesis;

pub use error::{Error, Result};
