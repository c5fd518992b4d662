//! Bipartite pure and mixed states, Schmidt decomposition and
//! maximal-entanglement detection.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{
    self, eigh, identity, kron, max_abs_diff, outer, partial_trace, purity, svd, BipartiteDims,
    ComplexMatrix, ComplexVector, Subsystem, Tolerances,
};

/// A normalized vector in `C^m ⊗ C^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    dims: BipartiteDims,
    amplitudes: ComplexVector,
}

impl PureState {
    /// Wraps `amplitudes`, which must already have unit norm within `eq_tol`.
    pub fn new(dims: BipartiteDims, amplitudes: ComplexVector, tol: Tolerances) -> Result<Self> {
        check_len(dims, amplitudes.len())?;
        check_finite(amplitudes.iter())?;
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > tol.eq_tol {
            return Err(Error::InvalidState(format!(
                "amplitude norm is {norm}, expected 1"
            )));
        }
        Ok(Self { dims, amplitudes })
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(dims: BipartiteDims, amplitudes: ComplexVector) -> Result<Self> {
        check_len(dims, amplitudes.len())?;
        check_finite(amplitudes.iter())?;
        let norm = amplitudes.norm();
        if norm == 0.0 {
            return Err(Error::InvalidState("zero vector".into()));
        }
        Ok(Self {
            dims,
            amplitudes: amplitudes.unscale(norm),
        })
    }

    /// Builds `|psi>` from its `m x n` coefficient matrix, normalizing.
    pub fn from_coefficients(coefficients: &ComplexMatrix) -> Result<Self> {
        let (m, n) = coefficients.shape();
        let dims = BipartiteDims::new(m, n)?;
        let amps = ComplexVector::from_fn(m * n, |r, _| coefficients[(r / n, r % n)]);
        Self::normalized(dims, amps)
    }

    /// `|a> ⊗ |b>`, normalized.
    pub fn product(a: &ComplexVector, b: &ComplexVector) -> Result<Self> {
        let dims = BipartiteDims::new(a.len(), b.len())?;
        Self::normalized(dims, linalg::kron_vec(a, b))
    }

    pub fn dims(&self) -> BipartiteDims {
        self.dims
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        &self.amplitudes
    }

    /// `Psi(i, j) = amplitudes[i*n + j]`.
    pub fn coefficient_matrix(&self) -> ComplexMatrix {
        let n = self.dims.n;
        ComplexMatrix::from_fn(self.dims.m, n, |i, j| self.amplitudes[i * n + j])
    }

    pub fn projector(&self) -> ComplexMatrix {
        outer(&self.amplitudes)
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            dims: self.dims,
            matrix: self.projector(),
        }
    }
}

/// A bipartite density operator: Hermitian, PSD, unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dims: BipartiteDims,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(dims: BipartiteDims, matrix: ComplexMatrix, tol: Tolerances) -> Result<Self> {
        let d = dims.total();
        if matrix.shape() != (d, d) {
            return Err(Error::Dimension(format!(
                "density matrix for {dims} must be {d}x{d}, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        check_finite(matrix.iter())?;
        let asym = linalg::hermitian_asymmetry(&matrix);
        if asym > tol.eq_tol {
            return Err(Error::InvalidState(format!(
                "not Hermitian (asymmetry {asym:e})"
            )));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > tol.eq_tol || tr.im.abs() > tol.eq_tol {
            return Err(Error::InvalidState(format!("trace is {tr}, expected 1")));
        }
        let min_eig = eigh(&matrix, tol)?.values[0];
        if min_eig < -tol.eq_tol {
            return Err(Error::InvalidState(format!(
                "not positive semidefinite (min eigenvalue {min_eig:e})"
            )));
        }
        Ok(Self { dims, matrix })
    }

    pub fn maximally_mixed(dims: BipartiteDims) -> Self {
        let d = dims.total();
        Self {
            dims,
            matrix: identity(d).unscale(d as f64),
        }
    }

    /// `(1 - weight) * self + weight * other`.
    pub fn mix(&self, other: &DensityMatrix, weight: f64) -> Result<Self> {
        if self.dims != other.dims {
            return Err(Error::Dimension(format!(
                "cannot mix {} with {}",
                self.dims, other.dims
            )));
        }
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::InvalidParameter(format!(
                "mixing weight {weight} outside [0, 1]"
            )));
        }
        Ok(Self {
            dims: self.dims,
            matrix: self.matrix.scale(1.0 - weight) + other.matrix.scale(weight),
        })
    }

    pub fn dims(&self) -> BipartiteDims {
        self.dims
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn purity(&self) -> f64 {
        purity(&self.matrix)
    }

    pub fn reduced(&self, keep: Subsystem) -> ComplexMatrix {
        partial_trace(&self.matrix, self.dims, keep).expect("shape checked at construction")
    }
}

fn check_len(dims: BipartiteDims, len: usize) -> Result<()> {
    if len != dims.total() {
        return Err(Error::Dimension(format!(
            "{len} amplitudes for a {dims} system (expected {})",
            dims.total()
        )));
    }
    Ok(())
}

fn check_finite<'a>(mut entries: impl Iterator<Item = &'a Complex64>) -> Result<()> {
    if entries.any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidState("non-finite entry".into()));
    }
    Ok(())
}

/// Schmidt form `|psi> = sum_k lambda_k |a_k>|b_k>` truncated to the numerical rank.
#[derive(Debug, Clone)]
pub struct SchmidtData {
    /// Descending, strictly positive.
    pub coefficients: Vec<f64>,
    pub a_basis: Vec<ComplexVector>,
    pub b_basis: Vec<ComplexVector>,
    pub rank: usize,
}

impl SchmidtData {
    /// `sum_k lambda_k |a_k> ⊗ |b_k>`
    pub fn reconstruct(&self) -> ComplexVector {
        let len = self.a_basis[0].len() * self.b_basis[0].len();
        let mut out = ComplexVector::zeros(len);
        for k in 0..self.rank {
            out += linalg::kron_vec(&self.a_basis[k], &self.b_basis[k]).scale(self.coefficients[k]);
        }
        out
    }
}

pub fn schmidt_decompose(psi: &PureState, tol: Tolerances) -> SchmidtData {
    let dec = svd(&psi.coefficient_matrix());
    let rank = linalg::rank_of_values(&dec.singular_values, tol).max(1);
    // Psi = sum s u v^dagger, so |psi> = sum s |u> ⊗ |conj(v)>
    SchmidtData {
        coefficients: dec.singular_values[..rank].to_vec(),
        a_basis: (0..rank).map(|k| dec.u.column(k).into_owned()).collect(),
        b_basis: (0..rank)
            .map(|k| dec.v.column(k).map(|z| z.conj()))
            .collect(),
        rank,
    }
}

pub fn schmidt_rank(psi: &PureState, tol: Tolerances) -> usize {
    linalg::numerical_rank(&psi.coefficient_matrix(), tol).max(1)
}

/// Reduced state on the smaller factor (A when `m <= n`).
fn smaller_reduced(psi: &PureState) -> ComplexMatrix {
    let c = psi.coefficient_matrix();
    if psi.dims.m <= psi.dims.n {
        &c * c.adjoint()
    } else {
        (c.adjoint() * &c).transpose()
    }
}

/// Pure state test: the reduced state on the smaller factor is `I/min(m,n)`.
pub fn is_mes_pure(psi: &PureState, tol: Tolerances) -> bool {
    let d = psi.dims.min();
    let target = identity(d).unscale(d as f64);
    max_abs_diff(&smaller_reduced(psi), &target) <= tol.eq_tol
}

/// Largest violation of the cross-Gram conditions over the support of `rho`.
///
/// With `Psi_k` the coefficient matrices of the eigenvectors carrying
/// weight above `rank_tol * p_max`, the state is maximally entangled iff
/// `Psi_s Psi_t^dagger = delta_st I/m` (for `m <= n`) or
/// `Psi_t^dagger Psi_s = delta_st I/n` (for `m > n`). Both conditions are
/// invariant under any unitary remixing of the support basis, so
/// degenerate spectra need no special handling.
pub fn mes_deviation(rho: &DensityMatrix, tol: Tolerances) -> Result<f64> {
    let dims = rho.dims;
    let eig = eigh(&rho.matrix, tol)?;
    let p_max = eig.values.iter().cloned().fold(0.0, f64::max);
    let blocks: Vec<ComplexMatrix> = eig
        .values
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > tol.rank_tol * p_max)
        .map(|(k, _)| {
            let v = eig.vector(k);
            ComplexMatrix::from_fn(dims.m, dims.n, |i, j| v[i * dims.n + j])
        })
        .collect();
    let d = dims.min();
    let scaled_identity = identity(d).unscale(d as f64);
    let zero = ComplexMatrix::zeros(d, d);
    let mut worst: f64 = 0.0;
    for (s, ps) in blocks.iter().enumerate() {
        for (t, pt) in blocks.iter().enumerate().skip(s) {
            let gram = if dims.m <= dims.n {
                ps * pt.adjoint()
            } else {
                pt.adjoint() * ps
            };
            let target = if s == t { &scaled_identity } else { &zero };
            worst = worst.max(max_abs_diff(&gram, target));
        }
    }
    Ok(worst)
}

/// Mixed-state test via the cross-Gram criterion; see [`mes_deviation`].
pub fn is_mes_mixed(rho: &DensityMatrix, tol: Tolerances) -> Result<bool> {
    Ok(mes_deviation(rho, tol)? <= tol.eq_tol)
}

/// Entropy of entanglement in bits, `-sum w log2 w` over Schmidt weights.
pub fn entanglement_entropy(psi: &PureState) -> f64 {
    let dec = svd(&psi.coefficient_matrix());
    let total: f64 = dec.singular_values.iter().map(|s| s * s).sum();
    dec.singular_values
        .iter()
        .map(|s| s * s / total)
        .filter(|&w| w > 0.0)
        .map(|w| -w * w.log2())
        .sum()
}

/// Two-qubit concurrence from the spin-flipped state.
pub fn concurrence_2x2(rho: &DensityMatrix, tol: Tolerances) -> Result<f64> {
    if rho.dims.m != 2 || rho.dims.n != 2 {
        return Err(Error::Dimension(format!(
            "concurrence needs a 2x2 system, got {}",
            rho.dims
        )));
    }
    let i = Complex64::i();
    let sigma_y = ComplexMatrix::from_row_slice(2, 2, &[linalg::ZERO, -i, i, linalg::ZERO]);
    let yy = kron(&sigma_y, &sigma_y)?;
    let flipped = &yy * rho.matrix.map(|z| z.conj()) * &yy;

    // eigenvalues of rho * flipped equal those of sqrt(rho) flipped sqrt(rho)
    let eig = eigh(&rho.matrix, tol)?;
    let sqrt_diag = ComplexMatrix::from_diagonal(&ComplexVector::from_iterator(
        4,
        eig.values
            .iter()
            .map(|&p| Complex64::from(p.max(0.0).sqrt())),
    ));
    let sqrt_rho = &eig.vectors * sqrt_diag * eig.vectors.adjoint();
    let r = &sqrt_rho * flipped * &sqrt_rho;
    let r = (&r + r.adjoint()).scale(0.5);
    let mut roots: Vec<f64> = eigh(&r, tol)?
        .values
        .iter()
        .map(|&mu| mu.max(0.0).sqrt())
        .collect();
    roots.sort_by(|a, b| b.total_cmp(a));
    Ok((roots[0] - roots[1] - roots[2] - roots[3]).clamp(0.0, 1.0))
}

/// `(|v><v| ⊗ I_B) rho (|v><v| ⊗ I_B)` for a unit vector `v` on A.
pub fn pinch(
    rho: &ComplexMatrix,
    dims: BipartiteDims,
    basis_vector: &ComplexVector,
) -> Result<ComplexMatrix> {
    if basis_vector.len() != dims.m {
        return Err(Error::Dimension(format!(
            "pinching vector has length {}, subsystem A has dimension {}",
            basis_vector.len(),
            dims.m
        )));
    }
    let d = dims.total();
    if rho.shape() != (d, d) {
        return Err(Error::Dimension(format!("operator must be {d}x{d}")));
    }
    let projector = kron(&outer(basis_vector), &identity(dims.n))?;
    Ok(&projector * rho * &projector)
}
