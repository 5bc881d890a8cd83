//! Single-qubit operator algebra at the coefficient level.
//!
//! The plant observables are the spin operators `x_p = (σ1, σ2, σ3)`. All
//! dynamics in this crate act on real coefficient vectors; the complex Pauli
//! matrices are kept only so that the commutation structure can be checked.

use nalgebra::{Matrix2, Matrix3, RowVector3, Vector3};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Hamiltonian coefficients `r_p` and output selector `C_p` of the qubit plant.
#[derive(Debug, Clone, PartialEq)]
pub struct PlantSpec {
    r_p: Vector3<f64>,
    c_p: RowVector3<f64>,
}

impl PlantSpec {
    pub fn new(r_p: Vector3<f64>, c_p: RowVector3<f64>) -> Result<Self> {
        if r_p.iter().chain(c_p.iter()).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { what: "plant spec" });
        }
        if c_p.iter().all(|&x| x == 0.0) {
            return Err(Error::ZeroOutput);
        }
        Ok(Self { r_p, c_p })
    }

    /// Plant with `r_p = 0` observed through `C_p`.
    pub fn free(c_p: RowVector3<f64>) -> Result<Self> {
        Self::new(Vector3::zeros(), c_p)
    }

    pub fn r_p(&self) -> &Vector3<f64> {
        &self.r_p
    }

    pub fn c_p(&self) -> &RowVector3<f64> {
        &self.c_p
    }

    pub fn is_free(&self) -> bool {
        self.r_p.iter().all(|&x| x == 0.0)
    }
}

/// The three Pauli matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliTriple {
    pub sigma: [Matrix2<Complex64>; 3],
}

pub fn pauli_matrices() -> PauliTriple {
    let o = Complex64::new(0.0, 0.0);
    let l = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    PauliTriple {
        sigma: [
            Matrix2::new(o, l, l, o),
            Matrix2::new(o, -i, i, o),
            Matrix2::new(l, o, o, -l),
        ],
    }
}

/// Levi-Civita symbol over indices `0..3`.
pub fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

impl PauliTriple {
    /// Largest entrywise deviation of `[σi, σj]` from `2i Σ_k ε_ijk σk` over all nine pairs.
    pub fn commutator_residual(&self) -> f64 {
        let two_i = Complex64::new(0.0, 2.0);
        let mut worst = 0.0f64;
        for a in 0..3 {
            for b in 0..3 {
                let (sa, sb) = (&self.sigma[a], &self.sigma[b]);
                let comm = sa * sb - sb * sa;
                let mut rhs = Matrix2::<Complex64>::zeros();
                for c in 0..3 {
                    rhs += self.sigma[c] * Complex64::new(levi_civita(a, b, c), 0.0);
                }
                rhs *= two_i;
                let r = (comm - rhs).iter().map(|z| z.norm()).fold(0.0, f64::max);
                worst = worst.max(r);
            }
        }
        worst
    }

    /// Largest deviation from Hermitian and involutory over the three matrices.
    pub fn hermitian_involutory_residual(&self) -> f64 {
        self.sigma
            .iter()
            .map(|s| {
                let herm = (s - s.adjoint())
                    .iter()
                    .map(|z| z.norm())
                    .fold(0.0, f64::max);
                let inv = (s * s - Matrix2::identity())
                    .iter()
                    .map(|z| z.norm())
                    .fold(0.0, f64::max);
                herm.max(inv)
            })
            .fold(0.0, f64::max)
    }
}

/// Skew map `Θ(β)`; `Θ(β)γ = γ × β`.
pub fn theta_map(beta: &Vector3<f64>) -> Matrix3<f64> {
    let (b1, b2, b3) = (beta[0], beta[1], beta[2]);
    Matrix3::new(
        0.0, b3, -b2, //
        -b3, 0.0, b1, //
        b2, -b1, 0.0,
    )
}

/// Plant drift `A_p = -2 Θ(r_p)`.
pub fn plant_drift(spec: &PlantSpec) -> Matrix3<f64> {
    (theta_map(&spec.r_p) * -2.0).map(|x| x + 0.0)
}

/// Maximum absolute residual of the four algebraic identities satisfied by `Θ`:
///
/// * `Θ(β)γ + Θ(γ)β = 0`
/// * `Θ(β)β = 0`
/// * `Θ(β)Θ(γ) = γβᵀ − (βᵀγ) I`
/// * `Θ(Θ(β)γ) = Θ(β)Θ(γ) − Θ(γ)Θ(β)`
pub fn theta_identities_residual(beta: &Vector3<f64>, gamma: &Vector3<f64>) -> f64 {
    let tb = theta_map(beta);
    let tg = theta_map(gamma);
    let max_abs = |it: &[f64]| it.iter().fold(0.0f64, |m, x| m.max(x.abs()));

    let antisym = tb * gamma + tg * beta;
    let self_null = tb * beta;
    let product = tb * tg - (gamma * beta.transpose() - Matrix3::identity() * beta.dot(gamma));
    let composition = theta_map(&(tb * gamma)) - (tb * tg - tg * tb);

    [
        max_abs(antisym.as_slice()),
        max_abs(self_null.as_slice()),
        max_abs(product.as_slice()),
        max_abs(composition.as_slice()),
    ]
    .into_iter()
    .fold(0.0, f64::max)
}

/// Tolerance used for [`theta_identities_residual`]; identities are exact so
/// only rounding scaled by the input sizes is admitted.
pub fn theta_identities_tolerance(beta: &Vector3<f64>, gamma: &Vector3<f64>) -> f64 {
    1e-12 * (1.0 + beta.norm()) * (1.0 + gamma.norm())
}

/// `‖C_p Θ(C_pᵀ)‖`: vanishes whenever the plant couples through `α0 = C_pᵀ`,
/// which makes the estimated quantity `z_p` a constant of motion.
pub fn verify_zp_invariance(spec: &PlantSpec) -> f64 {
    (spec.c_p * theta_map(&spec.c_p.transpose())).norm()
}
