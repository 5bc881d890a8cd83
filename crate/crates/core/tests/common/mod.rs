#![allow(dead_code)]

use nalgebra::{DMatrix, RowVector3, Vector2};
use qobserver::graph::ObserverGraph;
use qobserver::runner::{synthesize_graph, Synthesis};
use qobserver::spin_algebra::PlantSpec;
use qobserver::synthesis::CouplingScheme;

/// Five observers on the complete graph, `C_p = [1 0 0]`, `α1 = [1 0]`, unit weights.
pub fn five_observers() -> Synthesis {
    let plant = PlantSpec::free(RowVector3::new(1.0, 0.0, 0.0)).unwrap();
    let scheme = CouplingScheme::new(Vector2::new(1.0, 0.0), &plant).unwrap();
    synthesize_graph(&plant, &scheme, ObserverGraph::complete(5, 1.0)).unwrap()
}

/// Expected augmented drift for the five-observer example.
pub fn printed_a_a() -> DMatrix<f64> {
    #[rustfmt::skip]
    let rows: [[f64; 11]; 11] = [
        [0., 0., 0., 0., 0., 0., 0., 0., 0., 0., 0.],
        [0., 0., 10., 0., 0., 0., 0., 0., 0., 0., 0.],
        [2., -10., 0., 2., 0., 2., 0., 2., 0., 2., 0.],
        [0., 0., 0., 0., 10., 0., 0., 0., 0., 0., 0.],
        [2., 2., 0., -10., 0., 2., 0., 2., 0., 2., 0.],
        [0., 0., 0., 0., 0., 0., 10., 0., 0., 0., 0.],
        [2., 2., 0., 2., 0., -10., 0., 2., 0., 2., 0.],
        [0., 0., 0., 0., 0., 0., 0., 0., 10., 0., 0.],
        [2., 2., 0., 2., 0., 2., 0., -10., 0., 2., 0.],
        [0., 0., 0., 0., 0., 0., 0., 0., 0., 0., 10.],
        [2., 2., 0., 2., 0., 2., 0., 2., 0., -10., 0.],
    ];
    DMatrix::from_fn(11, 11, |i, j| rows[i][j])
}

/// Truncated Taylor series `Σ_{k<terms} (At)^k / k!`.
pub fn power_series_exp(a: &DMatrix<f64>, t: f64, terms: usize) -> DMatrix<f64> {
    let n = a.nrows();
    let at = a * t;
    let mut term = DMatrix::identity(n, n);
    let mut sum = term.clone();
    for k in 1..terms {
        term = &term * &at / k as f64;
        sum += &term;
    }
    sum
}

/// Composite Simpson over `[0, T]` with an even number of panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, horizon: f64, panels: usize) -> f64 {
    assert!(panels % 2 == 0);
    let h = horizon / panels as f64;
    let mut s = f(0.0) + f(horizon);
    for k in 1..panels {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(k as f64 * h);
    }
    s * h / 3.0
}

/// Number of singular values below `tol` (rank-deficiency oracle).
pub fn svd_nullity(m: &DMatrix<f64>, tol: f64) -> usize {
    m.clone()
        .singular_values()
        .iter()
        .filter(|&&s| s < tol)
        .count()
}
