//! Small dense complex linear-algebra helpers shared by every module.
//!
//! Dimensions in this crate never exceed 16 (vectorised 4×4 density
//! matrices), so everything is a `DMatrix` and nothing is cached.

use nalgebra::{ComplexField, DMatrix, Schur, SymmetricEigen, SVD};
use num_complex::Complex;

use crate::{lit, CMatrix, Real};

#[inline]
pub fn cplx<T: Real>(re: T, im: T) -> Complex<T> {
    Complex::new(re, im)
}

#[inline]
pub fn creal<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

/// `e^{iθ}`.
#[inline]
pub fn cis<T: Real>(theta: T) -> Complex<T> {
    Complex::new(theta.cos(), theta.sin())
}

pub fn identity<T: Real>(n: usize) -> CMatrix<T> {
    DMatrix::identity(n, n)
}

pub fn zeros<T: Real>(n: usize, m: usize) -> CMatrix<T> {
    DMatrix::zeros(n, m)
}

/// Builds a matrix from row-major real/imaginary pairs given as `f64`.
pub fn from_rows<T: Real>(n: usize, m: usize, entries: &[(f64, f64)]) -> CMatrix<T> {
    assert_eq!(entries.len(), n * m, "entry count does not match shape");
    DMatrix::from_row_iterator(n, m, entries.iter().map(|&(re, im)| cplx(lit(re), lit(im))))
}

pub fn pauli_x<T: Real>() -> CMatrix<T> {
    from_rows(2, 2, &[(0., 0.), (1., 0.), (1., 0.), (0., 0.)])
}

pub fn pauli_y<T: Real>() -> CMatrix<T> {
    from_rows(2, 2, &[(0., 0.), (0., -1.), (0., 1.), (0., 0.)])
}

pub fn pauli_z<T: Real>() -> CMatrix<T> {
    from_rows(2, 2, &[(1., 0.), (0., 0.), (0., 0.), (-1., 0.)])
}

/// `n·σ` for a (not necessarily unit) real 3-vector.
pub fn n_dot_sigma<T: Real>(n: [T; 3]) -> CMatrix<T> {
    pauli_x::<T>() * creal(n[0]) + pauli_y::<T>() * creal(n[1]) + pauli_z::<T>() * creal(n[2])
}

pub fn kron<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a.kronecker(b)
}

pub fn commutator<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    a * b - b * a
}

/// Largest entry modulus, `‖M‖_max`.
pub fn max_abs<T: Real>(m: &CMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, z| acc.max(z.modulus()))
}

pub fn hermitian_defect<T: Real>(m: &CMatrix<T>) -> T {
    max_abs(&(m - m.adjoint()))
}

/// `‖U†U − I‖_max`.
pub fn unitarity_defect<T: Real>(u: &CMatrix<T>) -> T {
    let n = u.ncols();
    max_abs(&(u.adjoint() * u - identity::<T>(n)))
}

pub fn hermitize<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    (m + m.adjoint()) * creal(lit::<T>(0.5))
}

/// Hermitian eigendecomposition with eigenvalues in ascending order.
pub fn eigh<T: Real>(h: &CMatrix<T>) -> (Vec<T>, CMatrix<T>) {
    let eig = SymmetricEigen::new(hermitize(h));
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(h.nrows(), h.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    (values, vectors)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn eigvalsh<T: Real>(h: &CMatrix<T>) -> Vec<T> {
    eigh(h).0
}

/// `exp(−i·H·dt)` for Hermitian `H`, through its eigendecomposition.
pub fn expm_hermitian<T: Real>(h: &CMatrix<T>, dt: T) -> CMatrix<T> {
    let (values, vectors) = eigh(h);
    let mut scaled = vectors.clone();
    for (k, &lambda) in values.iter().enumerate() {
        let phase = cis(-lambda * dt);
        for x in scaled.column_mut(k).iter_mut() {
            *x *= phase;
        }
    }
    scaled * vectors.adjoint()
}

/// General matrix exponential (Padé scaling and squaring); used for
/// non-normal generators such as Liouvillians.
pub fn expm<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    m.exp()
}

/// Closest unitary in Frobenius norm: the unitary factor of the polar
/// decomposition `M = W·P`.
pub fn polar_unitary<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    let svd = SVD::new(m.clone(), true, true);
    let u = svd.u.expect("SVD requested left vectors");
    let v_t = svd.v_t.expect("SVD requested right vectors");
    u * v_t
}

/// Eigenvalues and eigenvectors of a normal (in practice unitary) matrix via
/// the complex Schur form, which is diagonal for normal matrices.
pub fn normal_eigen<T: Real>(u: &CMatrix<T>) -> (Vec<Complex<T>>, CMatrix<T>) {
    let (q, t) = Schur::new(u.clone()).unpack();
    let values = (0..t.nrows()).map(|k| t[(k, k)]).collect();
    (values, q)
}

/// Anti-Hermitian `L` with `exp(L) = U` (principal branch of the phases).
pub fn unitary_log<T: Real>(u: &CMatrix<T>) -> CMatrix<T> {
    let (values, q) = normal_eigen(u);
    let mut scaled = q.clone();
    for (k, z) in values.iter().enumerate() {
        let phase = cplx(T::zero(), z.argument());
        for x in scaled.column_mut(k).iter_mut() {
            *x *= phase;
        }
    }
    scaled * q.adjoint()
}

/// `U^s = exp(s·log U)` for a unitary `U`, principal branch.
pub fn unitary_fractional<T: Real>(u: &CMatrix<T>, s: T) -> CMatrix<T> {
    let (values, q) = normal_eigen(u);
    let mut scaled = q.clone();
    for (k, z) in values.iter().enumerate() {
        let phase = cis(z.argument() * s);
        for x in scaled.column_mut(k).iter_mut() {
            *x *= phase;
        }
    }
    scaled * q.adjoint()
}

/// `min_χ ‖U − e^{iχ}·V‖_max`: the distance between two gates with the
/// global phase quotiented out.
pub fn phase_distance<T: Real>(u: &CMatrix<T>, v: &CMatrix<T>) -> T {
    assert_eq!(u.shape(), v.shape(), "gate shapes differ");
    let dist = |chi: T| max_abs(&(u - v * cis(chi)));
    // Frobenius-optimal phase, then a golden-section polish of the max norm.
    let overlap = (v.adjoint() * u).trace();
    let chi0 = if overlap.modulus() > T::default_epsilon() {
        overlap.argument()
    } else {
        T::zero()
    };
    let width: T = lit(0.25);
    let golden: T = lit(0.618_033_988_749_894_9);
    let (mut a, mut b) = (chi0 - width, chi0 + width);
    let mut x1 = b - golden * (b - a);
    let mut x2 = a + golden * (b - a);
    let (mut f1, mut f2) = (dist(x1), dist(x2));
    for _ in 0..80 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - golden * (b - a);
            f1 = dist(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + golden * (b - a);
            f2 = dist(x2);
        }
    }
    dist(chi0).min(f1).min(f2)
}

/// Projector `F·F†` onto the span of an orthonormal frame.
pub fn projector<T: Real>(frame: &CMatrix<T>) -> CMatrix<T> {
    frame * frame.adjoint()
}

/// Computational basis vector `|k⟩` of an `n`-dimensional space as a column.
pub fn basis_ket<T: Real>(n: usize, k: usize) -> CMatrix<T> {
    let mut v = zeros(n, 1);
    v[(k, 0)] = Complex::new(T::one(), T::zero());
    v
}

/// Orthonormal frame from selected computational basis vectors.
pub fn basis_frame<T: Real>(n: usize, columns: &[usize]) -> CMatrix<T> {
    let mut f = zeros(n, columns.len());
    for (j, &k) in columns.iter().enumerate() {
        f[(k, j)] = Complex::new(T::one(), T::zero());
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;

    type M = CMatrix<f64>;

    #[test]
    fn pauli_algebra() {
        let (x, y, z) = (pauli_x::<f64>(), pauli_y::<f64>(), pauli_z::<f64>());
        let i = creal(0.0) + cplx(0.0, 1.0);
        assert!(max_abs(&(&x * &y - &z * i)) < 1e-15);
        assert!(max_abs(&(&x * &x - identity::<f64>(2))) < 1e-15);
    }

    #[test]
    fn hermitian_exponential_matches_pade() {
        let h: M = from_rows(
            3,
            3,
            &[
                (0.3, 0.0),
                (0.2, -0.7),
                (0.0, 0.1),
                (0.2, 0.7),
                (-1.1, 0.0),
                (0.5, 0.0),
                (0.0, -0.1),
                (0.5, 0.0),
                (0.8, 0.0),
            ],
        );
        let dt = 0.9;
        let reference = (&h * cplx(0.0, -dt)).exp();
        assert!(max_abs(&(expm_hermitian(&h, dt) - reference)) < 1e-12);
    }

    #[test]
    fn eigh_sorts_ascending() {
        let h: M = from_rows(2, 2, &[(2.0, 0.0), (0.0, 0.0), (0.0, 0.0), (-1.0, 0.0)]);
        let (vals, _) = eigh(&h);
        assert_eq!(vals, vec![-1.0, 2.0]);
    }

    #[test]
    fn unitary_log_inverts_exp() {
        let h: M = from_rows(2, 2, &[(0.4, 0.0), (0.1, 0.3), (0.1, -0.3), (-0.2, 0.0)]);
        let u = expm_hermitian(&h, 1.0);
        let l = unitary_log(&u);
        assert!(max_abs(&(l.exp() - &u)) < 1e-12);
        let half = unitary_fractional(&u, 0.5);
        assert!(max_abs(&(&half * &half - &u)) < 1e-12);
    }

    #[test]
    fn polar_recovers_unitary_from_perturbation() {
        let u = expm_hermitian(&pauli_y::<f64>(), 0.7);
        let noisy = &u * creal(1.0 + 1e-6);
        assert!(max_abs(&(polar_unitary(&noisy) - &u)) < 1e-12);
    }

    #[test]
    fn phase_distance_quotients_global_phase() {
        let u = pauli_x::<f64>();
        let v = &u * cis(1.3);
        assert!(phase_distance(&u, &v) < 1e-12);
        assert!((phase_distance(&u, &pauli_z::<f64>()) - 1.0).abs() < 1e-9);
    }
}
