use nalgebra::{Matrix2, Matrix4};
use num_complex::Complex64;

pub(crate) type C64 = Complex64;

pub(crate) const fn c(re: f64, im: f64) -> C64 {
    Complex64::new(re, im)
}

pub(crate) fn re(x: f64) -> C64 {
    Complex64::new(x, 0.0)
}

/// Kronecker product with the first factor as the slow (polarization) index.
pub(crate) fn kron(a: &Matrix2<C64>, b: &Matrix2<C64>) -> Matrix4<C64> {
    Matrix4::from_fn(|r, col| a[(r / 2, col / 2)] * b[(r % 2, col % 2)])
}

pub(crate) fn pauli_x() -> Matrix2<C64> {
    Matrix2::new(re(0.0), re(1.0), re(1.0), re(0.0))
}

pub(crate) fn pauli_y() -> Matrix2<C64> {
    Matrix2::new(re(0.0), c(0.0, -1.0), c(0.0, 1.0), re(0.0))
}

pub(crate) fn pauli_z() -> Matrix2<C64> {
    Matrix2::new(re(1.0), re(0.0), re(0.0), re(-1.0))
}

/// Largest entrywise modulus of `m - m†`.
pub(crate) fn hermiticity_error<const N: usize>(m: &nalgebra::SMatrix<C64, N, N>) -> f64 {
    let mut worst = 0.0_f64;
    for i in 0..N {
        for j in 0..N {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// Hermitian part, used before eigen-decompositions so round-off asymmetry
/// never leaks into the eigenvalues.
pub(crate) fn hermitian_part(m: &Matrix4<C64>) -> Matrix4<C64> {
    (m + m.adjoint()) * re(0.5)
}

/// Real eigenvalues of a Hermitian 4×4 matrix, sorted descending.
pub(crate) fn hermitian_eigenvalues(m: &Matrix4<C64>) -> [f64; 4] {
    let eig = nalgebra::SymmetricEigen::new(hermitian_part(m));
    let mut vals = [0.0; 4];
    for (slot, v) in vals.iter_mut().zip(eig.eigenvalues.iter()) {
        *slot = *v;
    }
    vals.sort_by(|x, y| y.total_cmp(x));
    vals
}

/// Eigenvalues below this are treated as round-off zeros by [`psd_sqrt`].
const ROUND_OFF_EIGENVALUE: f64 = 1e-14;

/// Principal square root of a positive semidefinite Hermitian matrix.
/// Eigenvalues below `ROUND_OFF_EIGENVALUE` are set to zero so that
/// rank-deficient inputs do not pick up `√ε_machine`-sized components.
pub(crate) fn psd_sqrt(m: &Matrix4<C64>) -> Matrix4<C64> {
    let eig = nalgebra::SymmetricEigen::new(hermitian_part(m));
    let roots = eig.eigenvalues.map(|v| {
        if v < ROUND_OFF_EIGENVALUE {
            re(0.0)
        } else {
            re(v.sqrt())
        }
    });
    let q = eig.eigenvectors;
    q * Matrix4::from_diagonal(&roots) * q.adjoint()
}
