//! Dense complex linear algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.norm()
}

/// `‖m - m†‖_F`
pub fn hermitian_defect(m: &CMatrix) -> f64 {
    (m - m.adjoint()).norm()
}

/// `‖u†u - 1‖_F`
pub fn unitary_defect(u: &CMatrix) -> f64 {
    let n = u.nrows();
    (u.adjoint() * u - CMatrix::identity(n, n)).norm()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Promote a real matrix.
pub fn complexify(m: &DMatrix<f64>) -> CMatrix {
    m.map(c)
}

/// Eigen-decomposition of a Hermitian matrix with eigenvalues ascending.
pub fn eigh(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = h.nrows();
    // symmetrise so round-off in the input never leaks into the solver
    let sym = (h + h.adjoint()) * c(0.5);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

/// `V f(D) V†` for a Hermitian `h = V D V†`.
pub fn hermitian_function<F: Fn(f64) -> f64>(h: &CMatrix, f: F) -> Result<CMatrix> {
    if !h.is_square() {
        return Err(Error::invalid("matrix function needs a square matrix"));
    }
    let scale = frobenius(h).max(1.0);
    let defect = hermitian_defect(h);
    if defect > 1e-10 * scale {
        return Err(Error::invalid(format!(
            "matrix is not Hermitian (‖h - h†‖ = {defect:.3e})"
        )));
    }
    let (values, vectors) = eigh(h);
    Ok(spectral_apply(&values, &vectors, |x| c(f(x))))
}

/// `V g(D) V†` for precomputed spectral data and a complex-valued `g`.
pub fn spectral_apply<F: Fn(f64) -> C64>(values: &[f64], vectors: &CMatrix, g: F) -> CMatrix {
    let mut scaled = vectors.clone();
    for (j, &lambda) in values.iter().enumerate() {
        let w = g(lambda);
        for x in scaled.column_mut(j).iter_mut() {
            *x *= w;
        }
    }
    scaled * vectors.adjoint()
}

/// `exp(-i t h)` for Hermitian `h`.
pub fn expm_hermitian(h: &CMatrix, t: f64) -> CMatrix {
    let (values, vectors) = eigh(h);
    spectral_apply(&values, &vectors, |x| C64::from_polar(1.0, -x * t))
}

/// Eigenvalues and orthonormal eigenvectors of a (numerically) unitary matrix.
///
/// A normal matrix has a diagonal Schur form, so the Schur vectors are the
/// eigenvectors. The largest strictly-upper entry of the triangular factor
/// is returned as a normality residual.
pub fn unitary_eigen(u: &CMatrix) -> (Vec<C64>, CMatrix, f64) {
    let (q, t) = Schur::new(u.clone()).unpack();
    let n = u.nrows();
    let mut residual: f64 = 0.0;
    for j in 0..n {
        for i in 0..j {
            residual = residual.max(t[(i, j)].norm());
        }
    }
    let values = (0..n).map(|k| t[(k, k)]).collect();
    (values, q, residual)
}

pub fn expectation(op: &CMatrix, psi: &CVector) -> C64 {
    psi.dotc(&(op * psi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_hermitian(n: usize) -> CMatrix {
        let a = CMatrix::from_fn(n, n, |i, j| {
            C64::new(((i * 7 + j * 3) % 5) as f64 - 2.0, ((i + 2 * j) % 3) as f64 - 1.0)
        });
        (&a + a.adjoint()) * c(0.5)
    }

    #[test]
    fn identity_function_returns_input() {
        let h = sample_hermitian(6);
        let back = hermitian_function(&h, |x| x).unwrap();
        assert!((back - &h).norm() < 1e-12);
    }

    #[test]
    fn constant_function_returns_identity() {
        let h = sample_hermitian(5);
        let one = hermitian_function(&h, |_| 1.0).unwrap();
        assert!((one - CMatrix::identity(5, 5)).norm() < 1e-12);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut h = sample_hermitian(4);
        h[(0, 1)] += c(0.5);
        assert!(matches!(
            hermitian_function(&h, |x| x),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn product_of_functions() {
        let h = sample_hermitian(7);
        let f = hermitian_function(&h, |x| x.sin()).unwrap();
        let g = hermitian_function(&h, |x| (0.3 * x).exp()).unwrap();
        let fg = hermitian_function(&h, |x| x.sin() * (0.3 * x).exp()).unwrap();
        assert!((&f * &g - &fg).norm() < 1e-9);
        assert!((&f * &g - &g * &f).norm() < 1e-9);
    }

    #[test]
    fn unitary_eigen_of_diagonal_phase() {
        let phases = [0.1, -1.3, 2.9, 0.7];
        let u = CMatrix::from_diagonal(&CVector::from_iterator(
            4,
            phases.iter().map(|&p| C64::from_polar(1.0, p)),
        ));
        let (values, vectors, residual) = unitary_eigen(&u);
        assert!(residual < 1e-12);
        assert!(unitary_defect(&vectors) < 1e-12);
        let mut got: Vec<f64> = values.iter().map(|v| v.arg()).collect();
        got.sort_by(f64::total_cmp);
        let mut want = phases.to_vec();
        want.sort_by(f64::total_cmp);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn expm_is_unitary_and_inverts() {
        let h = sample_hermitian(6);
        let u = expm_hermitian(&h, 0.37);
        let v = expm_hermitian(&h, -0.37);
        assert!(unitary_defect(&u) < 1e-12);
        assert!((u * v - CMatrix::identity(6, 6)).norm() < 1e-12);
    }
}
