//! CPTP maps in Kraus form, their Choi matrices, and the structural
//! classifier for pure-state-preserving channels.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::generators::{haar_vector, Seed};
use crate::linalg::{
    self, approx_eq, eigh, identity, kron, matrix_unit, max_abs_diff, outer, partial_trace, purity,
    svd, BipartiteDims, ComplexMatrix, ComplexVector, Subsystem, Tolerances,
};

/// A channel `rho -> sum_i X_i rho X_i^dagger` with `sum_i X_i^dagger X_i = I`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<ComplexMatrix>,
}

/// Checks shapes and the trace-preservation identity.
pub fn validate_cptp(
    kraus: Vec<ComplexMatrix>,
    dim_in: usize,
    dim_out: usize,
    tol: Tolerances,
) -> Result<KrausChannel> {
    if kraus.is_empty() {
        return Err(Error::Dimension("empty Kraus list".into()));
    }
    if dim_in == 0 || dim_out == 0 {
        return Err(Error::Dimension(format!(
            "channel dimensions {dim_in} -> {dim_out}"
        )));
    }
    for (k, x) in kraus.iter().enumerate() {
        if x.shape() != (dim_out, dim_in) {
            return Err(Error::Dimension(format!(
                "Kraus operator {k} is {}x{}, expected {dim_out}x{dim_in}",
                x.nrows(),
                x.ncols()
            )));
        }
        if x.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "Kraus operator {k} has a non-finite entry"
            )));
        }
    }
    let deviation = trace_deviation(&kraus, dim_in);
    if deviation > tol.eq_tol {
        return Err(Error::NotTracePreserving { deviation });
    }
    Ok(KrausChannel {
        dim_in,
        dim_out,
        kraus,
    })
}

/// `max |sum X^dagger X - I|`
pub fn trace_deviation(kraus: &[ComplexMatrix], dim_in: usize) -> f64 {
    let mut sum = ComplexMatrix::zeros(dim_in, dim_in);
    for x in kraus {
        sum += x.adjoint() * x;
    }
    max_abs_diff(&sum, &identity(dim_in))
}

impl KrausChannel {
    /// Validates with default tolerances, inferring dims from the first operator.
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let (dim_out, dim_in) = kraus
            .first()
            .map(|x| x.shape())
            .ok_or_else(|| Error::Dimension("empty Kraus list".into()))?;
        validate_cptp(kraus, dim_in, dim_out, Tolerances::default())
    }

    pub fn identity(d: usize) -> Self {
        Self::unitary(identity(d))
    }

    /// Single-operator channel; the caller guarantees `x` is an isometry.
    pub(crate) fn unitary(x: ComplexMatrix) -> Self {
        Self {
            dim_in: x.ncols(),
            dim_out: x.nrows(),
            kraus: vec![x],
        }
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    /// `sum_i X_i rho X_i^dagger`. Only the shape of `rho` is checked, so
    /// the map may be applied to arbitrary operators.
    pub fn apply(&self, rho: &ComplexMatrix) -> Result<ComplexMatrix> {
        if rho.shape() != (self.dim_in, self.dim_in) {
            return Err(Error::Dimension(format!(
                "channel input is {d}x{d}, got {}x{}",
                rho.nrows(),
                rho.ncols(),
                d = self.dim_in
            )));
        }
        let mut out = ComplexMatrix::zeros(self.dim_out, self.dim_out);
        for x in &self.kraus {
            out += x * rho * x.adjoint();
        }
        Ok(out)
    }

    /// `C = sum_ij |i><j| ⊗ Lambda(|i><j|)`, indexed `(i*dim_out + a, j*dim_out + b)`.
    pub fn choi(&self) -> ChoiMatrix {
        let (din, dout) = (self.dim_in, self.dim_out);
        let mut c = ComplexMatrix::zeros(din * dout, din * dout);
        for x in &self.kraus {
            // column-stacked vec(X)[i*dout + a] = X[a, i]
            let v = ComplexVector::from_fn(din * dout, |r, _| x[(r % dout, r / dout)]);
            c += outer(&v);
        }
        ChoiMatrix {
            dim_in: din,
            dim_out: dout,
            matrix: c,
        }
    }

    /// `self ⊗ other`, Kraus set `{A_i ⊗ B_j}`.
    pub fn tensor(&self, other: &KrausChannel) -> Result<KrausChannel> {
        let mut kraus = Vec::with_capacity(self.kraus.len() * other.kraus.len());
        for a in &self.kraus {
            for b in &other.kraus {
                kraus.push(kron(a, b)?);
            }
        }
        Ok(KrausChannel {
            dim_in: self.dim_in * other.dim_in,
            dim_out: self.dim_out * other.dim_out,
            kraus,
        })
    }

    /// `self ∘ before`, Kraus set `{Y_j X_i}`.
    pub fn compose(&self, before: &KrausChannel) -> Result<KrausChannel> {
        if self.dim_in != before.dim_out {
            return Err(Error::Dimension(format!(
                "cannot compose: outer channel takes {}, inner produces {}",
                self.dim_in, before.dim_out
            )));
        }
        let kraus = self
            .kraus
            .iter()
            .flat_map(|y| before.kraus.iter().map(move |x| y * x))
            .collect();
        Ok(KrausChannel {
            dim_in: before.dim_in,
            dim_out: self.dim_out,
            kraus,
        })
    }

    /// Smallest Kraus set for the same channel, via its Choi matrix.
    pub fn minimal(&self, tol: Tolerances) -> Result<KrausChannel> {
        kraus_from_choi(&self.choi(), tol)
    }
}

/// Choi matrix of a channel, `(dim_in*dim_out)` square.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    pub dim_in: usize,
    pub dim_out: usize,
    pub matrix: ComplexMatrix,
}

impl ChoiMatrix {
    pub fn rank(&self, tol: Tolerances) -> usize {
        linalg::numerical_rank(&self.matrix, tol)
    }

    /// `max |Tr_out C - I_in|`
    pub fn trace_deviation(&self) -> Result<f64> {
        let dims = BipartiteDims::new(self.dim_in, self.dim_out)?;
        let reduced = partial_trace(&self.matrix, dims, Subsystem::A)?;
        Ok(max_abs_diff(&reduced, &identity(self.dim_in)))
    }
}

/// Eigendecomposes `C` and reshapes each significant eigenpair into
/// `sqrt(mu) * mat(v)`.
pub fn kraus_from_choi(c: &ChoiMatrix, tol: Tolerances) -> Result<KrausChannel> {
    let (din, dout) = (c.dim_in, c.dim_out);
    if c.matrix.shape() != (din * dout, din * dout) {
        return Err(Error::InvalidChoi(format!(
            "matrix is {}x{}, expected {n}x{n}",
            c.matrix.nrows(),
            c.matrix.ncols(),
            n = din * dout
        )));
    }
    let eig = eigh(&c.matrix, tol).map_err(|e| Error::InvalidChoi(e.to_string()))?;
    let mu_max = eig.values.iter().cloned().fold(0.0, f64::max);
    if eig.values[0] < -tol.eq_tol {
        return Err(Error::InvalidChoi(format!(
            "not positive semidefinite (min eigenvalue {:e})",
            eig.values[0]
        )));
    }
    let deviation = c.trace_deviation()?;
    if deviation > tol.eq_tol {
        return Err(Error::InvalidChoi(format!(
            "partial trace over the output is not the identity (deviation {deviation:e})"
        )));
    }
    // descending eigenvalue order, so the dominant Kraus operator comes first
    let kraus: Vec<ComplexMatrix> = (0..eig.values.len())
        .rev()
        .filter(|&k| eig.values[k] > tol.rank_tol * mu_max)
        .map(|k| {
            let scale = Complex64::from(eig.values[k].sqrt());
            let v = eig.vectors.column(k);
            ComplexMatrix::from_fn(dout, din, |a, i| v[i * dout + a] * scale)
        })
        .collect();
    Ok(KrausChannel {
        dim_in: din,
        dim_out: dout,
        kraus,
    })
}

/// Equality of channels as linear maps (Choi matrices within `eq_tol`).
pub fn channels_equal(a: &KrausChannel, b: &KrausChannel, tol: Tolerances) -> Result<bool> {
    if (a.dim_in, a.dim_out) != (b.dim_in, b.dim_out) {
        return Err(Error::Dimension(format!(
            "comparing a {}->{} channel with a {}->{} channel",
            a.dim_in, a.dim_out, b.dim_in, b.dim_out
        )));
    }
    Ok(approx_eq(&a.choi().matrix, &b.choi().matrix, tol.eq_tol))
}

/// Structural verdict for channels that send pure states to pure states.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelClass {
    /// Conjugation by a square unitary.
    Unitary(ComplexMatrix),
    /// Conjugation by a strict isometry (`dim_out > dim_in`).
    Isometric(ComplexMatrix),
    /// `Lambda(A) = Tr(A) |omega><omega|`.
    ConstantPure(ComplexVector),
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ClassTag {
    Unitary,
    Isometric,
    ConstantPure,
    Other,
}

impl ClassTag {
    pub fn as_str(&self) -> &'static str {
        match self {
            ClassTag::Unitary => "Unitary",
            ClassTag::Isometric => "Isometric",
            ClassTag::ConstantPure => "ConstantPure",
            ClassTag::Other => "Other",
        }
    }
}

impl std::fmt::Display for ClassTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl ChannelClass {
    pub fn tag(&self) -> ClassTag {
        match self {
            ChannelClass::Unitary(_) => ClassTag::Unitary,
            ChannelClass::Isometric(_) => ClassTag::Isometric,
            ChannelClass::ConstantPure(_) => ClassTag::ConstantPure,
            ChannelClass::Other => ClassTag::Other,
        }
    }

    /// Unitary or strictly isometric.
    pub fn is_isometric(&self) -> bool {
        matches!(self, ChannelClass::Unitary(_) | ChannelClass::Isometric(_))
    }
}

/// Rotates `v` so that its largest-magnitude entry is real and positive.
fn fix_phase_vec(v: &ComplexVector) -> ComplexVector {
    let pivot = v.iter().fold(
        linalg::ZERO,
        |best, z| if z.norm() > best.norm() { *z } else { best },
    );
    if pivot.norm() == 0.0 {
        return v.clone();
    }
    v * (pivot.conj() / pivot.norm())
}

fn fix_phase_mat(x: &ComplexMatrix) -> ComplexMatrix {
    let pivot = x.iter().fold(
        linalg::ZERO,
        |best, z| if z.norm() > best.norm() { *z } else { best },
    );
    if pivot.norm() == 0.0 {
        return x.clone();
    }
    x * (pivot.conj() / pivot.norm())
}

/// Sorts a channel into the pure-state-preserving dichotomy.
///
/// A single minimal Kraus operator must be an isometry (trace
/// preservation), and is `Unitary` when square. Otherwise the channel is
/// `ConstantPure` when every minimal Kraus operator is rank one with a
/// common range vector `omega` and `Lambda(|i><j|) = delta_ij |omega><omega|`
/// holds on all matrix units.
pub fn classify(ch: &KrausChannel, tol: Tolerances) -> Result<ChannelClass> {
    let minimal = ch.minimal(tol)?;
    if let [x] = minimal.kraus.as_slice() {
        if linalg::is_isometry(x, tol) {
            let x = fix_phase_mat(x);
            return Ok(if x.is_square() {
                ChannelClass::Unitary(x)
            } else {
                ChannelClass::Isometric(x)
            });
        }
    }
    if minimal
        .kraus
        .iter()
        .any(|x| linalg::numerical_rank(x, tol) != 1)
    {
        return Ok(ChannelClass::Other);
    }
    let stacked = ComplexMatrix::from_fn(ch.dim_out, ch.dim_in * minimal.kraus.len(), |r, c| {
        minimal.kraus[c / ch.dim_in][(r, c % ch.dim_in)]
    });
    let omega = fix_phase_vec(&svd(&stacked).u.column(0).into_owned());
    let target = outer(&omega);
    let zero = ComplexMatrix::zeros(ch.dim_out, ch.dim_out);
    for i in 0..ch.dim_in {
        for j in 0..ch.dim_in {
            let image = ch.apply(&matrix_unit(ch.dim_in, ch.dim_in, i, j))?;
            let expected = if i == j { &target } else { &zero };
            if !approx_eq(&image, expected, tol.eq_tol) {
                return Ok(ChannelClass::Other);
            }
        }
    }
    Ok(ChannelClass::ConstantPure(omega))
}

/// First Haar-random pure input whose image is mixed.
#[derive(Debug, Clone)]
pub struct ImpureWitness {
    pub sample_index: u64,
    pub input: ComplexVector,
    pub output_purity: f64,
}

/// Result of the behavioral pure-to-pure check.
#[derive(Debug, Clone)]
pub struct PurityProbe {
    pub preserves_purity: bool,
    pub witness: Option<ImpureWitness>,
    pub samples_used: u64,
}

/// Draws Haar-random pure inputs (sample `k` uses substream `k` of `seed`)
/// and reports the first output with `Tr(rho^2) < 1 - 10 eq_tol`.
pub fn is_pure_preserving_behavioral(
    ch: &KrausChannel,
    samples: u64,
    seed: Seed,
    tol: Tolerances,
) -> Result<PurityProbe> {
    if samples == 0 {
        return Err(Error::InvalidParameter(
            "at least one sample is required".into(),
        ));
    }
    let threshold = 1.0 - 10.0 * tol.eq_tol;
    let witness = (0..samples).into_par_iter().find_map_first(|k| {
        let mut rng = seed.stream(k);
        let input = haar_vector(ch.dim_in, &mut rng);
        let out = ch.apply(&outer(&input)).ok()?;
        let p = purity(&out);
        (p < threshold).then_some(ImpureWitness {
            sample_index: k,
            input,
            output_purity: p,
        })
    });
    Ok(PurityProbe {
        preserves_purity: witness.is_none(),
        samples_used: witness.as_ref().map_or(samples, |w| w.sample_index + 1),
        witness,
    })
}
