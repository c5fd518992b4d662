//! Dense complex linear algebra shared by every other module.
//!
//! Matrices are `nalgebra` dense matrices of `Complex<f64>`. Bipartite
//! operators use the composite index `i * n + j` for `|i>_A |j>_B`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
pub use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

pub const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Absolute equality tolerance and relative rank threshold.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Elementwise (max-norm) tolerance for matrix equality.
    pub eq_tol: f64,
    /// Singular values below `rank_tol * sigma_max` count as zero.
    pub rank_tol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eq_tol: 1e-9,
            rank_tol: 1e-8,
        }
    }
}

impl Tolerances {
    pub fn new(eq_tol: f64, rank_tol: f64) -> Result<Self> {
        for (name, v) in [("eq_tol", eq_tol), ("rank_tol", rank_tol)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidTolerance(format!(
                    "{name} must lie in (0, 1), got {v}"
                )));
            }
        }
        Ok(Self { eq_tol, rank_tol })
    }

    pub fn with_eq_tol(self, eq_tol: f64) -> Result<Self> {
        Self::new(eq_tol, self.rank_tol)
    }
}

/// Which factor of a bipartite system to keep.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Local dimensions `(m, n)` of an `m ⊗ n` system.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct BipartiteDims {
    pub m: usize,
    pub n: usize,
}

impl BipartiteDims {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::Dimension(format!(
                "subsystem dimensions must be positive, got {m}x{n}"
            )));
        }
        m.checked_mul(n)
            .ok_or_else(|| Error::Size(format!("{m} * {n} overflows")))?;
        Ok(Self { m, n })
    }

    pub fn total(&self) -> usize {
        self.m * self.n
    }

    pub fn min(&self) -> usize {
        self.m.min(self.n)
    }

    pub fn max(&self) -> usize {
        self.m.max(self.n)
    }

    pub fn transposed(&self) -> Self {
        Self {
            m: self.n,
            n: self.m,
        }
    }
}

impl std::fmt::Display for BipartiteDims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.m, self.n)
    }
}

/// Builds a matrix from row-major entries, rejecting non-finite values.
pub fn from_row_major(rows: usize, cols: usize, entries: &[Complex64]) -> Result<ComplexMatrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::Dimension(format!("empty matrix {rows}x{cols}")));
    }
    let len = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Size(format!("{rows} * {cols} overflows")))?;
    if entries.len() != len {
        return Err(Error::Dimension(format!(
            "{} entries for a {rows}x{cols} matrix",
            entries.len()
        )));
    }
    if entries
        .iter()
        .any(|z| !z.re.is_finite() || !z.im.is_finite())
    {
        return Err(Error::InvalidParameter("non-finite matrix entry".into()));
    }
    Ok(ComplexMatrix::from_row_slice(rows, cols, entries))
}

pub fn identity(d: usize) -> ComplexMatrix {
    ComplexMatrix::identity(d, d)
}

/// `|v><v|`
pub fn outer(v: &ComplexVector) -> ComplexMatrix {
    v * v.adjoint()
}

/// Computational basis vector `|k>` of dimension `d`.
pub fn basis_vector(d: usize, k: usize) -> ComplexVector {
    let mut v = ComplexVector::zeros(d);
    v[k] = ONE;
    v
}

/// Matrix unit `|i><j|`.
pub fn matrix_unit(rows: usize, cols: usize, i: usize, j: usize) -> ComplexMatrix {
    let mut e = ComplexMatrix::zeros(rows, cols);
    e[(i, j)] = ONE;
    e
}

/// Largest absolute entry.
pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Max-norm distance; infinite when shapes differ.
pub fn max_abs_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    if a.shape() != b.shape() {
        return f64::INFINITY;
    }
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

pub fn approx_eq(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
    max_abs_diff(a, b) <= tol
}

/// `Tr(rho^2)`, taken as real.
pub fn purity(rho: &ComplexMatrix) -> f64 {
    // Tr(rho rho) = sum_ij rho_ij rho_ji
    let d = rho.nrows();
    let mut acc = ZERO;
    for i in 0..d {
        for j in 0..d {
            acc += rho[(i, j)] * rho[(j, i)];
        }
    }
    acc.re
}

/// Kronecker product; entry `(i*b.rows + k, j*b.cols + l) = a(i,j) b(k,l)`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let rows = a
        .nrows()
        .checked_mul(b.nrows())
        .ok_or_else(|| Error::Size("kron row count overflows".into()))?;
    let cols = a
        .ncols()
        .checked_mul(b.ncols())
        .ok_or_else(|| Error::Size("kron column count overflows".into()))?;
    rows.checked_mul(cols)
        .ok_or_else(|| Error::Size("kron entry count overflows".into()))?;
    let (br, bc) = b.shape();
    Ok(ComplexMatrix::from_fn(rows, cols, |r, c| {
        a[(r / br, c / bc)] * b[(r % br, c % bc)]
    }))
}

/// Kronecker product of two vectors.
pub fn kron_vec(a: &ComplexVector, b: &ComplexVector) -> ComplexVector {
    let nb = b.len();
    ComplexVector::from_fn(a.len() * nb, |r, _| a[r / nb] * b[r % nb])
}

/// Partial trace of an `mn x mn` operator, keeping one factor.
pub fn partial_trace(
    m: &ComplexMatrix,
    dims: BipartiteDims,
    keep: Subsystem,
) -> Result<ComplexMatrix> {
    let total = dims.total();
    if m.nrows() != total || m.ncols() != total {
        return Err(Error::Dimension(format!(
            "partial trace over {dims} needs a {total}x{total} matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let (da, db) = (dims.m, dims.n);
    Ok(match keep {
        Subsystem::A => ComplexMatrix::from_fn(da, da, |i, j| {
            (0..db).map(|k| m[(i * db + k, j * db + k)]).sum()
        }),
        Subsystem::B => ComplexMatrix::from_fn(db, db, |i, j| {
            (0..da).map(|k| m[(k * db + i, k * db + j)]).sum()
        }),
    })
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct Eigh {
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, matching `values`.
    pub vectors: ComplexMatrix,
}

impl Eigh {
    pub fn vector(&self, k: usize) -> ComplexVector {
        self.vectors.column(k).into_owned()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        let d = self.vectors.nrows();
        let mut out = ComplexMatrix::zeros(d, d);
        for (k, &lambda) in self.values.iter().enumerate() {
            let v = self.vectors.column(k);
            out += (v * v.adjoint()) * Complex64::from(lambda);
        }
        out
    }
}

/// Largest entry of `|M - M^dagger|`.
pub fn hermitian_asymmetry(m: &ComplexMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    max_abs_diff(m, &m.adjoint())
}

/// Hermitian eigendecomposition. Inputs within `eq_tol` of Hermitian are
/// symmetrized as `(M + M^dagger)/2` first.
pub fn eigh(m: &ComplexMatrix, tol: Tolerances) -> Result<Eigh> {
    if !m.is_square() {
        return Err(Error::Dimension(format!(
            "eigh needs a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let asymmetry = hermitian_asymmetry(m);
    if asymmetry > tol.eq_tol {
        return Err(Error::NotHermitian { asymmetry });
    }
    let h = (m + m.adjoint()) * Complex64::from(0.5);
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = ComplexMatrix::from_fn(m.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    Ok(Eigh { values, vectors })
}

/// Thin singular value decomposition `M = U diag(sigma) V^dagger`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// Left singular vectors as columns (`rows x k`).
    pub u: ComplexMatrix,
    /// Descending, nonnegative.
    pub singular_values: Vec<f64>,
    /// Right singular vectors as columns (`cols x k`).
    pub v: ComplexMatrix,
}

impl Svd {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.u.nrows(), self.v.nrows());
        for (k, &s) in self.singular_values.iter().enumerate() {
            out += (self.u.column(k) * self.v.column(k).adjoint()) * Complex64::from(s);
        }
        out
    }
}

/// Computed by faer; nalgebra's complex SVD loses accuracy on some
/// rank-deficient inputs.
pub fn svd(m: &ComplexMatrix) -> Svd {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Svd {
            u: ComplexMatrix::zeros(rows, 0),
            singular_values: vec![],
            v: ComplexMatrix::zeros(cols, 0),
        };
    }
    let a = faer::Mat::<Complex64>::from_fn(rows, cols, |i, j| m[(i, j)]);
    let dec = a.thin_svd().expect("SVD of a finite matrix converges");
    let (u, s, v) = (dec.U(), dec.S().column_vector(), dec.V());
    Svd {
        u: ComplexMatrix::from_fn(rows, k, |i, j| u[(i, j)]),
        singular_values: (0..k).map(|j| s[j].re.max(0.0)).collect(),
        v: ComplexMatrix::from_fn(cols, k, |i, j| v[(i, j)]),
    }
}

/// Number of singular values above `rank_tol * sigma_max`; 0 for the zero matrix.
pub fn numerical_rank(m: &ComplexMatrix, tol: Tolerances) -> usize {
    rank_of_values(&svd(m).singular_values, tol)
}

pub(crate) fn rank_of_values(values: &[f64], tol: Tolerances) -> usize {
    let max = values.iter().cloned().fold(0.0, f64::max);
    if max <= 0.0 {
        return 0;
    }
    values.iter().filter(|&&s| s > tol.rank_tol * max).count()
}

/// `X^dagger X = I` within `eq_tol`; requires at least as many rows as columns.
pub fn is_isometry(x: &ComplexMatrix, tol: Tolerances) -> bool {
    if x.nrows() < x.ncols() {
        return false;
    }
    let gram = x.adjoint() * x;
    approx_eq(&gram, &identity(x.ncols()), tol.eq_tol)
}

pub fn is_unitary(x: &ComplexMatrix, tol: Tolerances) -> bool {
    x.is_square() && is_isometry(x, tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Small deterministic LCG so unit tests do not depend on the generators module.
    struct Lcg(u64);
    impl Lcg {
        fn next(&mut self) -> f64 {
            self.0 = self
                .0
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((self.0 >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        }
        fn matrix(&mut self, r: usize, cols: usize) -> ComplexMatrix {
            ComplexMatrix::from_fn(r, cols, |_, _| c(self.next(), self.next()))
        }
        fn vector(&mut self, d: usize) -> ComplexVector {
            ComplexVector::from_fn(d, |_, _| c(self.next(), self.next()))
        }
    }

    #[test]
    fn svd_reconstructs_rank_deficient_matrices() {
        let mut rng = Lcg(77);
        for trial in 0..300 {
            let rows = 2 + trial % 5;
            let cols = 2 + (trial / 5) % 5;
            let r = 1 + trial % rows.min(cols);
            let m = rng.matrix(rows, r) * rng.matrix(r, cols);
            let dec = svd(&m);
            let err = max_abs_diff(&dec.reconstruct(), &m);
            assert!(err < 1e-13 * (1.0 + max_abs(&m)), "trial {trial}: {err:e}");
            assert!(dec.singular_values.windows(2).all(|w| w[0] >= w[1]));
            assert_eq!(
                numerical_rank(&m, Tolerances::default()),
                r,
                "trial {trial}"
            );
        }
    }

    #[test]
    fn kron_identity() {
        let k = kron(&identity(2), &identity(2)).unwrap();
        assert_eq!(k, identity(4));
    }

    #[test]
    fn kron_matrix_units() {
        let k = kron(&matrix_unit(2, 2, 0, 1), &matrix_unit(2, 2, 1, 0)).unwrap();
        for r in 0..4 {
            for col in 0..4 {
                let expected = if (r, col) == (1, 2) { ONE } else { ZERO };
                assert_eq!(k[(r, col)], expected);
            }
        }
    }

    #[test]
    fn kron_mixed_product_on_vectors() {
        let mut rng = Lcg(3);
        let a = rng.matrix(2, 3);
        let b = rng.matrix(3, 2);
        let x = rng.vector(3);
        let y = rng.vector(2);
        let lhs = kron(&a, &b).unwrap() * kron_vec(&x, &y);
        let rhs = kron_vec(&(&a * &x), &(&b * &y));
        assert!((lhs - rhs).camax() < 1e-12);
    }

    #[test]
    fn kron_is_associative() {
        let mut rng = Lcg(11);
        for _ in 0..10 {
            let (a, b, cc) = (rng.matrix(2, 2), rng.matrix(2, 2), rng.matrix(2, 2));
            let left = kron(&kron(&a, &b).unwrap(), &cc).unwrap();
            let right = kron(&a, &kron(&b, &cc).unwrap()).unwrap();
            assert!(max_abs_diff(&left, &right) < 1e-13);
        }
    }

    #[test]
    fn partial_trace_of_bell_state() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let phi = ComplexVector::from_vec(vec![c(s, 0.0), ZERO, ZERO, c(s, 0.0)]);
        let dims = BipartiteDims::new(2, 2).unwrap();
        let reduced = partial_trace(&outer(&phi), dims, Subsystem::A).unwrap();
        assert!(max_abs_diff(&reduced, &(identity(2) * c(0.5, 0.0))) < 1e-15);
    }

    #[test]
    fn partial_trace_of_product() {
        let rho_a = ComplexMatrix::from_row_slice(
            2,
            2,
            &[c(0.7, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(0.3, 0.0)],
        );
        let rho_b = identity(3) * c(1.0 / 3.0, 0.0);
        let dims = BipartiteDims::new(2, 3).unwrap();
        let prod = kron(&rho_a, &rho_b).unwrap();
        assert!(max_abs_diff(&partial_trace(&prod, dims, Subsystem::A).unwrap(), &rho_a) < 1e-15);
        assert!(max_abs_diff(&partial_trace(&prod, dims, Subsystem::B).unwrap(), &rho_b) < 1e-15);
    }

    #[test]
    fn partial_trace_preserves_trace_against_explicit_sum() {
        let mut rng = Lcg(5);
        let g = rng.matrix(6, 6);
        let psd = &g * g.adjoint();
        let dims = BipartiteDims::new(2, 3).unwrap();
        // oracle: explicit diagonal sum over (i, k)
        let mut total = ZERO;
        for i in 0..2 {
            for k in 0..3 {
                total += psd[(i * 3 + k, i * 3 + k)];
            }
        }
        for keep in [Subsystem::A, Subsystem::B] {
            let tr = partial_trace(&psd, dims, keep).unwrap().trace();
            assert!((tr - total).norm() < 1e-12);
        }
    }

    #[test]
    fn partial_trace_is_linear() {
        let mut rng = Lcg(8);
        let dims = BipartiteDims::new(3, 2).unwrap();
        let (x, y) = (rng.matrix(6, 6), rng.matrix(6, 6));
        let alpha = c(0.3, -1.2);
        for keep in [Subsystem::A, Subsystem::B] {
            let lhs = partial_trace(&(&x * alpha + &y), dims, keep).unwrap();
            let rhs = partial_trace(&x, dims, keep).unwrap() * alpha
                + partial_trace(&y, dims, keep).unwrap();
            assert!(max_abs_diff(&lhs, &rhs) < 1e-12);
        }
    }

    #[test]
    fn partial_trace_rejects_bad_shape() {
        let dims = BipartiteDims::new(2, 2).unwrap();
        assert!(matches!(
            partial_trace(&identity(3), dims, Subsystem::A),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn eigh_simple_cases() {
        let tol = Tolerances::default();
        let e = eigh(&identity(3), tol).unwrap();
        assert!(e.values.iter().all(|&v| (v - 1.0).abs() < 1e-15));

        let d =
            ComplexMatrix::from_diagonal(&ComplexVector::from_vec(vec![c(0.8, 0.0), c(0.2, 0.0)]));
        let e = eigh(&d, tol).unwrap();
        assert!((e.values[0] - 0.2).abs() < 1e-15 && (e.values[1] - 0.8).abs() < 1e-15);
        assert!((e.vectors[(1, 0)].norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn eigh_reconstructs_random_hermitian() {
        let tol = Tolerances::default();
        let mut rng = Lcg(17);
        let g = rng.matrix(5, 5);
        let h = &g + g.adjoint();
        let e = eigh(&h, tol).unwrap();
        assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        assert!(max_abs_diff(&e.reconstruct(), &h) < 1e-9);
        let gram = e.vectors.adjoint() * &e.vectors;
        assert!(max_abs_diff(&gram, &identity(5)) < 1e-12);
    }

    #[test]
    fn eigh_rejects_non_hermitian() {
        let m = matrix_unit(2, 2, 0, 1);
        assert!(matches!(
            eigh(&m, Tolerances::default()),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn svd_cases() {
        let d =
            ComplexMatrix::from_diagonal(&ComplexVector::from_vec(vec![c(1.0, 0.0), c(3.0, 0.0)]));
        let s = svd(&d);
        assert!(
            (s.singular_values[0] - 3.0).abs() < 1e-14
                && (s.singular_values[1] - 1.0).abs() < 1e-14
        );
        assert!(max_abs_diff(&s.reconstruct(), &d) < 1e-13);

        let z = svd(&ComplexMatrix::zeros(3, 2));
        assert!(z.singular_values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn svd_squares_match_eigh_of_gram() {
        let tol = Tolerances::default();
        let mut rng = Lcg(23);
        let m = rng.matrix(3, 4);
        let s = svd(&m);
        assert!(max_abs_diff(&s.reconstruct(), &m) < 1e-9);
        let mut eig = eigh(&(&m * m.adjoint()), tol).unwrap().values;
        eig.reverse();
        for (sv, ev) in s.singular_values.iter().zip(&eig) {
            assert!((sv * sv - ev).abs() < 1e-12);
        }
    }

    #[test]
    fn rank_thresholds() {
        let tol = Tolerances::default();
        let d = ComplexMatrix::from_diagonal(&ComplexVector::from_vec(vec![ONE, c(1e-12, 0.0)]));
        assert_eq!(numerical_rank(&d, tol), 1);
        assert_eq!(numerical_rank(&ComplexMatrix::zeros(4, 4), tol), 0);

        let mut rng = Lcg(31);
        let mut sum = ComplexMatrix::zeros(5, 5);
        for _ in 0..3 {
            sum += rng.vector(5) * rng.vector(5).adjoint();
        }
        assert_eq!(numerical_rank(&sum, tol), 3);
        assert_eq!(numerical_rank(&sum.adjoint(), tol), 3);
    }

    #[test]
    fn isometry_checks() {
        let tol = Tolerances::default();
        assert!(is_isometry(&identity(3), tol));
        assert!(is_isometry(&identity(3).columns(0, 2).into_owned(), tol));
        let d = ComplexMatrix::from_diagonal(&ComplexVector::from_vec(vec![ONE, c(0.5, 0.0)]));
        assert!(!is_isometry(&d, tol));
        assert!(!is_isometry(&identity(3).rows(0, 2).into_owned(), tol));
    }

    #[test]
    fn tolerances_validate() {
        assert!(Tolerances::new(1e-9, 1e-8).is_ok());
        assert!(Tolerances::new(0.0, 1e-8).is_err());
        assert!(Tolerances::new(1e-9, 1.0).is_err());
        assert!(Tolerances::new(f64::NAN, 1e-8).is_err());
    }

    #[test]
    fn from_row_major_rejects_nan() {
        assert!(from_row_major(1, 1, &[c(f64::NAN, 0.0)]).is_err());
        assert!(from_row_major(2, 1, &[ONE]).is_err());
        let m = from_row_major(1, 2, &[ONE, c(0.0, 2.0)]).unwrap();
        assert_eq!(m[(0, 1)], c(0.0, 2.0));
    }
}
