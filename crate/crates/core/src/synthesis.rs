//! Construction of the oscillator observer network from a graph.
//!
//! Each observer node `j` is a harmonic oscillator with state `[q_j; p_j]` and
//! self-Hamiltonian `ω_j I`. Observer–observer edges couple through
//! `-μ_ij α1 α1ᵀ`, plant edges through `α0 β_0jᵀ` with `α0 = C_pᵀ` and
//! `β_0j = -μ_0j α1`. The frequencies `ω_j` are fixed by the resonance
//! condition that makes `α1 z_p / ‖α1‖²` an equilibrium of every node.

use nalgebra::{DMatrix, DVector, Matrix2, SymmetricEigen, Vector2, Vector3};

use crate::error::{Error, Result};
use crate::graph::{laplacian_nullity, ObserverGraph, ReducedGraph};
use crate::spin_algebra::PlantSpec;

/// Commutation block `J = [[0, 1], [-1, 0]]`.
pub fn j_block() -> Matrix2<f64> {
    Matrix2::new(0.0, 1.0, -1.0, 0.0)
}

/// `Θ_o = diag(J, …, J)` for `n` oscillators.
pub fn theta_o(n: usize) -> DMatrix<f64> {
    let mut t = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        t[(2 * i, 2 * i + 1)] = 1.0;
        t[(2 * i + 1, 2 * i)] = -1.0;
    }
    t
}

#[derive(Debug, Clone, PartialEq)]
pub struct CouplingScheme {
    alpha1: Vector2<f64>,
    alpha0: Vector3<f64>,
}

impl CouplingScheme {
    pub fn new(alpha1: Vector2<f64>, plant: &PlantSpec) -> Result<Self> {
        if !alpha1.iter().all(|x| x.is_finite()) {
            return Err(Error::NonFinite { what: "alpha1" });
        }
        if alpha1.norm_squared() == 0.0 {
            return Err(Error::ZeroAlpha);
        }
        Ok(Self {
            alpha1,
            alpha0: plant.c_p().transpose(),
        })
    }

    pub fn alpha1(&self) -> &Vector2<f64> {
        &self.alpha1
    }

    pub fn alpha0(&self) -> &Vector3<f64> {
        &self.alpha0
    }

    /// Coupling vector `β = -μ α1` for an edge of weight `mu`.
    pub fn beta(&self, mu: f64) -> Vector2<f64> {
        self.alpha1 * -mu
    }
}

/// Oscillator frequencies `ω_j = ‖α1‖² (Σ_{i>0, (i,j)∈E} μ_ij + μ_0j)`, the
/// plant term present only when `(0, j) ∈ E`.
pub fn synthesize_omegas(g: &ObserverGraph, scheme: &CouplingScheme) -> Result<DVector<f64>> {
    g.validate()?;
    let a2 = scheme.alpha1.norm_squared();
    if a2 == 0.0 {
        return Err(Error::ZeroAlpha);
    }
    let mut omega = DVector::zeros(g.n());
    for (i, j, mu) in g.edges() {
        omega[j - 1] += mu * a2;
        if i > 0 {
            omega[i - 1] += mu * a2;
        }
    }
    Ok(omega)
}

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkRealization {
    n: usize,
    alpha1: Vector2<f64>,
    omega: DVector<f64>,
    r_o: DMatrix<f64>,
    theta_o: DMatrix<f64>,
    a_o: DMatrix<f64>,
    b: DVector<f64>,
    c_o: DMatrix<f64>,
    reduced: Option<ReducedGraph>,
}

/// Block-diagonal output map with rows `α1ᵀ`.
fn output_map(n: usize, alpha1: &Vector2<f64>) -> DMatrix<f64> {
    let mut c = DMatrix::zeros(n, 2 * n);
    for i in 0..n {
        c[(i, 2 * i)] = alpha1[0];
        c[(i, 2 * i + 1)] = alpha1[1];
    }
    c
}

pub fn build_realization(g: &ObserverGraph, scheme: &CouplingScheme) -> Result<NetworkRealization> {
    let omega = synthesize_omegas(g, scheme)?;
    let n = g.n();
    let alpha1 = scheme.alpha1;
    let outer = alpha1 * alpha1.transpose();
    let jm = j_block();

    let mut r_o = DMatrix::zeros(2 * n, 2 * n);
    let mut b = DVector::zeros(2 * n);
    for i in 0..n {
        r_o.fixed_view_mut::<2, 2>(2 * i, 2 * i)
            .copy_from(&(Matrix2::identity() * omega[i]));
    }
    for (i, j, mu) in g.edges() {
        if i == 0 {
            // 2 J β_0j with β_0j = -μ_0j α1
            let col = jm * scheme.beta(mu) * 2.0;
            b.fixed_rows_mut::<2>(2 * (j - 1)).copy_from(&col);
        } else {
            let block = outer * -mu;
            r_o.fixed_view_mut::<2, 2>(2 * (i - 1), 2 * (j - 1))
                .copy_from(&block);
            r_o.fixed_view_mut::<2, 2>(2 * (j - 1), 2 * (i - 1))
                .copy_from(&block);
        }
    }
    // adding +0.0 clears signed zeros so printed matrices read cleanly
    let r_o = r_o.map(|x| x + 0.0);
    let b = b.map(|x| x + 0.0);
    let theta = theta_o(n);
    let a_o = (&theta * &r_o * 2.0).map(|x| x + 0.0);
    let reduced = g.reduce(alpha1.norm_squared())?;

    Ok(NetworkRealization {
        n,
        alpha1,
        omega,
        r_o,
        theta_o: theta,
        a_o,
        b,
        c_o: output_map(n, &alpha1),
        reduced: Some(reduced),
    })
}

impl NetworkRealization {
    /// Realization from a raw Hamiltonian matrix and plant-coupling column,
    /// bypassing synthesis. `A_o` is still formed as `2 Θ_o R_o`, but `R_o`
    /// need not be symmetric, so commutation preservation is not guaranteed.
    pub fn unchecked(r_o: DMatrix<f64>, b: DVector<f64>, alpha1: Vector2<f64>) -> Result<Self> {
        let dim = r_o.nrows();
        if dim == 0 || dim % 2 != 0 || r_o.ncols() != dim || b.len() != dim {
            return Err(Error::Dimension(format!(
                "R_o is {}x{}, b has {} entries; need 2N x 2N and 2N",
                r_o.nrows(),
                r_o.ncols(),
                b.len()
            )));
        }
        if alpha1.norm_squared() == 0.0 {
            return Err(Error::ZeroAlpha);
        }
        let n = dim / 2;
        let theta = theta_o(n);
        let a_o = &theta * &r_o * 2.0;
        Ok(Self {
            n,
            alpha1,
            omega: DVector::from_iterator(n, (0..n).map(|i| r_o[(2 * i, 2 * i)])),
            r_o,
            theta_o: theta,
            a_o,
            b,
            c_o: output_map(n, &alpha1),
            reduced: None,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn alpha1(&self) -> &Vector2<f64> {
        &self.alpha1
    }

    pub fn omega(&self) -> &DVector<f64> {
        &self.omega
    }

    pub fn r_o(&self) -> &DMatrix<f64> {
        &self.r_o
    }

    pub fn theta_o(&self) -> &DMatrix<f64> {
        &self.theta_o
    }

    pub fn a_o(&self) -> &DMatrix<f64> {
        &self.a_o
    }

    /// Plant-coupling column multiplying `z_p` in the observer dynamics.
    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn c_o(&self) -> &DMatrix<f64> {
        &self.c_o
    }

    /// Reduced graph used for the positivity certificate; `None` for
    /// realizations built with [`NetworkRealization::unchecked`].
    pub fn reduced(&self) -> Option<&ReducedGraph> {
        self.reduced.as_ref()
    }

    /// Stacked `α1 / ‖α1‖²`: the observer state that tracks `z_p = 1`.
    pub fn offset_direction(&self) -> DVector<f64> {
        let unit = self.alpha1 / self.alpha1.norm_squared();
        DVector::from_iterator(2 * self.n, (0..self.n).flat_map(|_| [unit[0], unit[1]]))
    }

    /// Comparison matrix `R̃_o = R̃_o1 + R̃_o2` acting on per-node norms.
    pub fn comparison_matrix(&self) -> Option<DMatrix<f64>> {
        self.reduced
            .as_ref()
            .map(|rg| rg.weighted_laplacian() + rg.plant_attachment_diag())
    }
}

/// Extreme eigenvalues of the symmetric part of `m`.
pub(crate) fn sym_extremes(m: &DMatrix<f64>) -> (f64, f64) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let lo = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let hi = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PositivityCertificate {
    pub lambda_min: f64,
    pub lambda_max: f64,
    /// `λ_min(R̃_o1 + R̃_o2)` of the comparison matrix.
    pub comparison_lambda_min: f64,
    pub laplacian_nullity: usize,
    pub components: usize,
}

impl PositivityCertificate {
    pub fn condition_number(&self) -> f64 {
        self.lambda_max / self.lambda_min
    }
}

/// Certifies `R_o ≻ 0` directly (`λ_min > 1e-10 λ_max`) and through the
/// comparison route: the Laplacian of the reduced graph has nullity equal to
/// its component count, and adding the plant attachments lifts it to a
/// positive definite matrix.
pub fn certify_positive_definite(real: &NetworkRealization) -> Result<PositivityCertificate> {
    let (lambda_min, lambda_max) = sym_extremes(real.r_o());
    let fail = || Error::NotPositiveDefinite {
        lambda_min,
        lambda_max,
    };
    if !(lambda_min > 1e-10 * lambda_max) {
        return Err(fail());
    }
    let rg = real.reduced().ok_or_else(fail)?;
    let laplacian = rg.weighted_laplacian();
    let comparison = &laplacian + rg.plant_attachment_diag();
    let (comparison_lambda_min, comparison_lambda_max) = sym_extremes(&comparison);
    if !(comparison_lambda_min > 1e-10 * comparison_lambda_max) {
        return Err(Error::NotPositiveDefinite {
            lambda_min: comparison_lambda_min,
            lambda_max: comparison_lambda_max,
        });
    }
    Ok(PositivityCertificate {
        lambda_min,
        lambda_max,
        comparison_lambda_min,
        laplacian_nullity: laplacian_nullity(&laplacian),
        components: rg.connected_components().count(),
    })
}

/// Plant plus observer network on the state `[z_p; x_o1; …; x_oN]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedSystem {
    n: usize,
    a_a: DMatrix<f64>,
    c_a: DMatrix<f64>,
}

impl AugmentedSystem {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Drift `A_a`, `(2N+1) × (2N+1)`.
    pub fn a_a(&self) -> &DMatrix<f64> {
        &self.a_a
    }

    /// Output map `C_a`, `(N+1) × (2N+1)`.
    pub fn c_a(&self) -> &DMatrix<f64> {
        &self.c_a
    }

    /// Observer block `A_o` of the drift.
    pub fn observer_drift(&self) -> DMatrix<f64> {
        let d = 2 * self.n;
        self.a_a.view((1, 1), (d, d)).into_owned()
    }

    /// Plant-coupling column of the drift.
    pub fn coupling(&self) -> DVector<f64> {
        self.a_a
            .view((1, 0), (2 * self.n, 1))
            .column(0)
            .into_owned()
    }

    /// Observer output map `C_o`.
    pub fn observer_output(&self) -> DMatrix<f64> {
        let d = 2 * self.n;
        self.c_a.view((1, 1), (self.n, d)).into_owned()
    }
}

pub fn assemble_augmented(plant: &PlantSpec, real: &NetworkRealization) -> Result<AugmentedSystem> {
    if !plant.is_free() {
        let r = plant.r_p();
        return Err(Error::NonzeroPlantHamiltonian {
            r_p: [r[0], r[1], r[2]],
        });
    }
    let n = real.n();
    let d = 2 * n + 1;
    let mut a_a = DMatrix::zeros(d, d);
    a_a.view_mut((1, 0), (2 * n, 1)).copy_from(real.b());
    a_a.view_mut((1, 1), (2 * n, 2 * n)).copy_from(real.a_o());
    let mut c_a = DMatrix::zeros(n + 1, d);
    c_a[(0, 0)] = 1.0;
    c_a.view_mut((1, 1), (n, 2 * n)).copy_from(real.c_o());
    Ok(AugmentedSystem { n, a_a, c_a })
}

/// `C_o (1/‖α1‖²)[α1; …; α1]`; equals the all-ones vector for any valid scheme.
pub fn consensus_target(real: &NetworkRealization) -> DVector<f64> {
    real.c_o() * real.offset_direction()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::RowVector3;

    fn five_observers() -> (PlantSpec, CouplingScheme, ObserverGraph) {
        let plant = PlantSpec::free(RowVector3::new(1.0, 0.0, 0.0)).unwrap();
        let scheme = CouplingScheme::new(Vector2::new(1.0, 0.0), &plant).unwrap();
        (plant, scheme, ObserverGraph::complete(5, 1.0))
    }

    #[test]
    fn omegas() {
        let (_, scheme, g) = five_observers();
        assert_eq!(
            synthesize_omegas(&g, &scheme).unwrap(),
            DVector::from_element(5, 5.0)
        );
        assert_eq!(
            synthesize_omegas(&ObserverGraph::path(2, 1.0), &scheme).unwrap(),
            DVector::from_vec(vec![2.0, 1.0])
        );
        let plant = PlantSpec::free(RowVector3::new(0.0, 0.0, 1.0)).unwrap();
        let s = CouplingScheme::new(Vector2::new(1.0, 2.0), &plant).unwrap();
        assert_eq!(
            synthesize_omegas(&ObserverGraph::star(3, 0.5), &s).unwrap(),
            DVector::from_element(3, 2.5)
        );
    }

    #[test]
    fn zero_alpha_rejected() {
        let (plant, _, _) = five_observers();
        assert!(matches!(
            CouplingScheme::new(Vector2::zeros(), &plant),
            Err(Error::ZeroAlpha)
        ));
    }

    #[test]
    fn disconnected_rejected() {
        let (_, scheme, _) = five_observers();
        let g = ObserverGraph::from_edges(2, [(1, 2, 1.0)]).unwrap();
        assert!(matches!(
            synthesize_omegas(&g, &scheme),
            Err(Error::DisconnectedGraph { .. })
        ));
    }

    #[test]
    fn five_observer_blocks() {
        let (_, scheme, g) = five_observers();
        let real = build_realization(&g, &scheme).unwrap();
        let diag = Matrix2::new(0.0, 10.0, -10.0, 0.0);
        let off = Matrix2::new(0.0, 0.0, 2.0, 0.0);
        for i in 0..5 {
            for j in 0..5 {
                let blk = real.a_o().fixed_view::<2, 2>(2 * i, 2 * j).into_owned();
                assert_eq!(blk, if i == j { diag } else { off });
            }
            assert_eq!(
                real.b().fixed_rows::<2>(2 * i).into_owned(),
                Vector2::new(0.0, 2.0)
            );
        }
        assert_eq!(real.a_o(), &(real.theta_o() * real.r_o() * 2.0));
    }

    #[test]
    fn single_observer() {
        let plant = PlantSpec::free(RowVector3::new(1.0, 0.0, 0.0)).unwrap();
        let scheme = CouplingScheme::new(Vector2::new(1.0, 0.0), &plant).unwrap();
        let g = ObserverGraph::from_edges(1, [(0, 1, 1.0)]).unwrap();
        let real = build_realization(&g, &scheme).unwrap();
        assert_eq!(real.r_o(), &DMatrix::identity(2, 2));
        assert_eq!(
            real.a_o(),
            &DMatrix::from_row_slice(2, 2, &[0.0, 2.0, -2.0, 0.0])
        );
        assert_eq!(real.b(), &DVector::from_vec(vec![0.0, 2.0]));

        let aug = assemble_augmented(&plant, &real).unwrap();
        assert_eq!(
            aug.a_a(),
            &DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 0.0, 0.0, 0.0, 2.0, 2.0, -2.0, 0.0])
        );
        assert_eq!(
            aug.c_a(),
            &DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0])
        );
    }

    #[test]
    fn nonzero_plant_hamiltonian_rejected() {
        let (_, scheme, g) = five_observers();
        let real = build_realization(&g, &scheme).unwrap();
        let plant =
            PlantSpec::new(Vector3::new(0.0, 0.1, 0.0), RowVector3::new(1.0, 0.0, 0.0)).unwrap();
        assert!(matches!(
            assemble_augmented(&plant, &real),
            Err(Error::NonzeroPlantHamiltonian { .. })
        ));
    }

    #[test]
    fn certificate_five_observers() {
        let (_, scheme, g) = five_observers();
        let cert = certify_positive_definite(&build_realization(&g, &scheme).unwrap()).unwrap();
        assert!((cert.lambda_min - 1.0).abs() < 1e-12);
        assert!((cert.lambda_max - 6.0).abs() < 1e-12);
        assert_eq!(cert.laplacian_nullity, 1);
        assert_eq!(cert.components, 1);
    }

    #[test]
    fn certificate_split_components() {
        // removing the plant leaves {1,2} and {3,4}, each attached to 0
        let plant = PlantSpec::free(RowVector3::new(0.0, 1.0, 0.0)).unwrap();
        let scheme = CouplingScheme::new(Vector2::new(0.6, -0.8), &plant).unwrap();
        let g = ObserverGraph::from_edges(4, [(0, 1, 1.0), (1, 2, 0.5), (0, 4, 2.0), (3, 4, 1.5)])
            .unwrap();
        let cert = certify_positive_definite(&build_realization(&g, &scheme).unwrap()).unwrap();
        assert!(cert.lambda_min > 0.0);
        assert_eq!(cert.components, 2);
        assert_eq!(cert.laplacian_nullity, 2);
    }

    #[test]
    fn unchecked_realization_is_not_certified() {
        let real = NetworkRealization::unchecked(
            DMatrix::identity(2, 2),
            DVector::zeros(2),
            Vector2::new(1.0, 0.0),
        )
        .unwrap();
        assert!(certify_positive_definite(&real).is_err());
        assert!(NetworkRealization::unchecked(
            DMatrix::identity(3, 3),
            DVector::zeros(3),
            Vector2::new(1.0, 0.0)
        )
        .is_err());
    }

    #[test]
    fn consensus_targets() {
        let plant = PlantSpec::free(RowVector3::new(1.0, 0.0, 0.0)).unwrap();
        for (alpha, n) in [([1.0, 0.0], 5), ([3.0, 4.0], 2), ([0.2, -7.0], 1)] {
            let scheme = CouplingScheme::new(Vector2::from(alpha), &plant).unwrap();
            let real = build_realization(&ObserverGraph::complete(n, 1.0), &scheme).unwrap();
            let t = consensus_target(&real);
            assert!((t - DVector::from_element(n, 1.0)).amax() <= 1e-12);
        }
    }
}
