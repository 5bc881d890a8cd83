//! Dense real matrix exponential by scaling and squaring with diagonal Padé
//! approximants (Higham, SIAM J. Matrix Anal. Appl. 26(4), 2005).

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Padé degrees and the 1-norm bounds below which each is accurate to unit roundoff.
const THETA: [(usize, f64); 5] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_230e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068),
    (13, 5.371_920_351_148_152),
];

/// Coefficients `c_j = (2m-j)! m! / ((2m)! j! (m-j)!)` of the degree-`m`
/// numerator polynomial, `c_0 = 1`.
fn pade_coefficients(m: usize) -> Vec<f64> {
    let mut c = Vec::with_capacity(m + 1);
    c.push(1.0);
    for j in 0..m {
        let prev = c[j];
        c.push(prev * (m - j) as f64 / (((2 * m - j) * (j + 1)) as f64));
    }
    c
}

fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|col| col.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn pade(a: &DMatrix<f64>, m: usize) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let c = pade_coefficients(m);
    let a2 = a * a;
    // even powers I, A², A⁴, …, A^(m-1)
    let mut even = vec![DMatrix::identity(n, n)];
    for k in 1..=(m - 1) / 2 {
        let next = &even[k - 1] * &a2;
        even.push(next);
    }
    let mut u_inner = DMatrix::zeros(n, n);
    let mut v = DMatrix::zeros(n, n);
    for (k, p) in even.iter().enumerate() {
        v += p * c[2 * k];
        u_inner += p * c[2 * k + 1];
    }
    let u = a * u_inner;
    let num = &v + &u;
    let den = v - u;
    den.lu().solve(&num).ok_or(Error::SingularDrift)
}

/// `exp(a · t)`.
pub fn matrix_exp(a: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    if !a.is_square() {
        return Err(Error::Dimension(format!(
            "matrix exponential of a {}x{} matrix",
            a.nrows(),
            a.ncols()
        )));
    }
    if !t.is_finite() || a.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite {
            what: "matrix exponential input",
        });
    }
    let n = a.nrows();
    if n == 0 || t == 0.0 {
        return Ok(DMatrix::identity(n, n));
    }
    let at = a * t;
    let norm = one_norm(&at);
    if norm == 0.0 {
        return Ok(DMatrix::identity(n, n));
    }
    for &(m, theta) in &THETA[..4] {
        if norm <= theta {
            return pade(&at, m);
        }
    }
    let theta13 = THETA[4].1;
    let s = if norm > theta13 {
        (norm / theta13).log2().ceil() as i32
    } else {
        0
    };
    let scaled = at * 2f64.powi(-s);
    let mut r = pade(&scaled, 13)?;
    for _ in 0..s {
        r = &r * &r;
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coefficients_match_tabulated_degree_13() {
        // Higham's b_j / b_0 for m = 13
        let b = [
            64764752532480000.0,
            32382376266240000.0,
            7771770303897600.0,
            1187353796428800.0,
            129060195264000.0,
            10559470521600.0,
            670442572800.0,
            33522128640.0,
            1323241920.0,
            40840800.0,
            960960.0,
            16380.0,
            182.0,
            1.0,
        ];
        for (c, bj) in pade_coefficients(13).iter().zip(b) {
            assert!((c - bj / b[0]).abs() <= 1e-15 * c.abs().max(1e-300));
        }
    }

    #[test]
    fn zero_and_identity_cases() {
        let z = DMatrix::<f64>::zeros(4, 4);
        assert_eq!(matrix_exp(&z, 3.0).unwrap(), DMatrix::identity(4, 4));
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(matrix_exp(&a, 0.0).unwrap(), DMatrix::identity(2, 2));
    }

    #[test]
    fn rotation_generator() {
        let a = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, -2.0, 0.0]);
        for &t in &[0.01, 0.3, 1.0, 2.5, 17.0, 100.0] {
            let e = matrix_exp(&a, t).unwrap();
            let (s, c) = (2.0 * t).sin_cos();
            let expected = DMatrix::from_row_slice(2, 2, &[c, s, -s, c]);
            assert!((e - expected).amax() < 1e-12 * (1.0 + t), "t = {t}");
        }
    }

    #[test]
    fn rejects_nonfinite() {
        let a = DMatrix::from_row_slice(1, 1, &[f64::NAN]);
        assert!(matches!(matrix_exp(&a, 1.0), Err(Error::NonFinite { .. })));
        let a = DMatrix::<f64>::identity(2, 2);
        assert!(matches!(
            matrix_exp(&a, f64::INFINITY),
            Err(Error::NonFinite { .. })
        ));
        assert!(matches!(
            matrix_exp(&DMatrix::zeros(2, 3), 1.0),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn scalar_exponential() {
        for &x in &[-30.0, -2.0, 0.004, 0.2, 0.9, 2.0, 5.0, 40.0] {
            let a = DMatrix::from_element(1, 1, x);
            let e = matrix_exp(&a, 1.0).unwrap()[(0, 0)];
            assert!((e - f64::exp(x)).abs() <= 1e-13 * f64::exp(x), "x = {x}");
        }
    }
}
