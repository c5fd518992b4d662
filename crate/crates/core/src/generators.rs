//! Seeded construction of random and named states and channels.
//!
//! All randomness comes from ChaCha8 streams keyed by a [`Seed`]. Stream
//! `k` of a seed is independent of every other stream, so sample `k` of a
//! probe can be replayed on its own without drawing samples `0..k`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::channels::{validate_cptp, KrausChannel};
use crate::error::{Error, Result};
use crate::linalg::{
    identity, kron_vec, matrix_unit, outer, BipartiteDims, ComplexMatrix, ComplexVector,
    Tolerances, ONE,
};
use crate::states::{DensityMatrix, PureState, SchmidtData};

/// Root seed for a reproducible computation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct Seed(pub u64);

impl Seed {
    pub fn new(value: u64) -> Self {
        Self(value)
    }

    pub fn value(&self) -> u64 {
        self.0
    }

    /// Stream 0.
    pub fn rng(&self) -> ChaCha8Rng {
        self.stream(0)
    }

    /// Independent substream `index` of this seed.
    pub fn stream(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.0);
        rng.set_stream(index);
        rng
    }
}

/// Smallest Schmidt coefficient produced by [`random_pure_with_rank`].
pub const SCHMIDT_COEFFICIENT_FLOOR: f64 = 0.05;

/// Standard complex normal, `(x + iy)/sqrt(2)`.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> ComplexMatrix {
    // fill row-major so the draw order does not depend on storage layout
    let entries: Vec<Complex64> = (0..rows * cols).map(|_| complex_gaussian(rng)).collect();
    ComplexMatrix::from_row_slice(rows, cols, &entries)
}

/// Uniformly random unit vector.
pub fn haar_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexVector {
    loop {
        let v = ComplexVector::from_iterator(d, (0..d).map(|_| complex_gaussian(rng)));
        let norm = v.norm();
        if norm > 0.0 {
            return v.unscale(norm);
        }
    }
}

/// Haar unitary: QR of a Ginibre matrix with the phases of `diag(R)` moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> ComplexMatrix {
    let qr = ginibre(d, d, rng).qr();
    let (mut q, r) = qr.unpack();
    for k in 0..d {
        let diag = r[(k, k)];
        let phase = if diag.norm() > 0.0 {
            diag / diag.norm()
        } else {
            ONE
        };
        for row in 0..d {
            q[(row, k)] *= phase;
        }
    }
    q
}

/// First `d_in` columns of a Haar unitary on `C^d_out`.
pub fn random_isometry<R: Rng + ?Sized>(
    d_in: usize,
    d_out: usize,
    rng: &mut R,
) -> Result<ComplexMatrix> {
    if d_in == 0 || d_out < d_in {
        return Err(Error::Dimension(format!(
            "isometry needs 0 < d_in <= d_out, got {d_in} -> {d_out}"
        )));
    }
    Ok(haar_unitary(d_out, rng).columns(0, d_in).into_owned())
}

/// Stinespring channel: `X_k = (I ⊗ <k|_E) V` for a random isometry `V: C^d_in -> C^d_out ⊗ C^e`.
pub fn random_cptp<R: Rng + ?Sized>(
    d_in: usize,
    d_out: usize,
    environment: usize,
    rng: &mut R,
) -> Result<KrausChannel> {
    if environment == 0 {
        return Err(Error::InvalidParameter(
            "environment dimension must be positive".into(),
        ));
    }
    if d_out == 0 {
        return Err(Error::Dimension("output dimension must be positive".into()));
    }
    if d_out * environment < d_in {
        return Err(Error::Dimension(format!(
            "a {d_in} -> {d_out} channel needs an environment of at least {}, got {environment}",
            d_in.div_ceil(d_out)
        )));
    }
    let v = random_isometry(d_in, d_out * environment, rng)?;
    let kraus = (0..environment)
        .map(|k| ComplexMatrix::from_fn(d_out, d_in, |a, i| v[(a * environment + k, i)]))
        .collect();
    validate_cptp(kraus, d_in, d_out, Tolerances::default())
}

/// `Lambda(A) = Tr(A) |omega><omega|` with Kraus set `{|omega><k|}`.
pub fn constant_pure_channel(omega: &ComplexVector, d_in: usize) -> Result<KrausChannel> {
    let norm = omega.norm();
    if (norm - 1.0).abs() > Tolerances::default().eq_tol {
        return Err(Error::InvalidParameter(format!(
            "omega has norm {norm}, expected 1"
        )));
    }
    if d_in == 0 || omega.is_empty() {
        return Err(Error::Dimension(
            "constant-pure channel needs positive dimensions".into(),
        ));
    }
    let kraus = (0..d_in)
        .map(|k| {
            let mut bra = ComplexMatrix::zeros(1, d_in);
            bra[(0, k)] = ONE;
            omega * bra
        })
        .collect();
    validate_cptp(kraus, d_in, omega.len(), Tolerances::default())
}

/// Uniform point on the probability simplex (Dirichlet(1, ..., 1)).
pub fn dirichlet_uniform<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    let draws: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = draws.iter().sum();
    draws.into_iter().map(|x| x / total).collect()
}

/// A random pure state with exactly `r` Schmidt terms, returned with its Schmidt form.
///
/// Squared coefficients are `floor^2 + (1 - r floor^2) w_k` with `w` uniform on
/// the simplex, so every coefficient is at least [`SCHMIDT_COEFFICIENT_FLOOR`].
pub fn random_schmidt_form<R: Rng + ?Sized>(
    dims: BipartiteDims,
    r: usize,
    rng: &mut R,
) -> Result<(PureState, SchmidtData)> {
    if r == 0 || r > dims.min() {
        return Err(Error::OutOfRange(format!(
            "Schmidt rank {r} for a {dims} system (allowed 1..={})",
            dims.min()
        )));
    }
    let floor_sq = SCHMIDT_COEFFICIENT_FLOOR * SCHMIDT_COEFFICIENT_FLOOR;
    let weights = dirichlet_uniform(r, rng);
    let mut coefficients: Vec<f64> = weights
        .iter()
        .map(|w| (floor_sq + (1.0 - r as f64 * floor_sq) * w).sqrt())
        .collect();
    coefficients.sort_by(|a, b| b.total_cmp(a));
    schmidt_state(dims, &coefficients, rng)
}

/// `sum_k c_k |a_k>|b_k>` with Haar-random orthonormal `a`, `b`.
fn schmidt_state<R: Rng + ?Sized>(
    dims: BipartiteDims,
    coefficients: &[f64],
    rng: &mut R,
) -> Result<(PureState, SchmidtData)> {
    let ua = haar_unitary(dims.m, rng);
    let ub = haar_unitary(dims.n, rng);
    let r = coefficients.len();
    let a_basis: Vec<ComplexVector> = (0..r).map(|k| ua.column(k).into_owned()).collect();
    let b_basis: Vec<ComplexVector> = (0..r).map(|k| ub.column(k).into_owned()).collect();
    let mut amps = ComplexVector::zeros(dims.total());
    for k in 0..r {
        amps += kron_vec(&a_basis[k], &b_basis[k]).scale(coefficients[k]);
    }
    let psi = PureState::normalized(dims, amps)?;
    let data = SchmidtData {
        coefficients: coefficients.to_vec(),
        a_basis,
        b_basis,
        rank: r,
    };
    Ok((psi, data))
}

pub fn random_pure_with_rank<R: Rng + ?Sized>(
    dims: BipartiteDims,
    r: usize,
    rng: &mut R,
) -> Result<PureState> {
    random_schmidt_form(dims, r, rng).map(|(psi, _)| psi)
}

/// `(1/sqrt(d)) sum_i |a_i>|b_i>`, `d = min(m, n)`, Haar-random orthonormal sets.
pub fn random_mes_pure<R: Rng + ?Sized>(dims: BipartiteDims, rng: &mut R) -> PureState {
    let d = dims.min();
    let coefficients = vec![1.0 / (d as f64).sqrt(); d];
    schmidt_state(dims, &coefficients, rng)
        .expect("rank min(m, n) is always in range")
        .0
}

/// Mixture of `k` maximally entangled states sharing one basis on the
/// smaller factor and supported on mutually orthogonal blocks of the
/// larger one. Weights are Dirichlet(1) unless given.
pub fn random_mes_mixed<R: Rng + ?Sized>(
    dims: BipartiteDims,
    k: usize,
    weights: Option<&[f64]>,
    rng: &mut R,
) -> Result<DensityMatrix> {
    let (small, large) = (dims.min(), dims.max());
    if k == 0 || k * small > large {
        return Err(Error::Dimension(format!(
            "{k} blocks of size {small} do not fit in dimension {large}"
        )));
    }
    let weights = match weights {
        Some(w) => {
            if w.len() != k
                || w.iter().any(|&p| p.is_nan() || p < 0.0)
                || (w.iter().sum::<f64>() - 1.0).abs() > 1e-12
            {
                return Err(Error::InvalidParameter(format!(
                    "expected {k} nonnegative weights summing to 1, got {w:?}"
                )));
            }
            w.to_vec()
        }
        None => dirichlet_uniform(k, rng),
    };
    let u_small = haar_unitary(small, rng);
    let u_large = haar_unitary(large, rng);
    let amp = Complex64::from(1.0 / (small as f64).sqrt());
    let mut rho = ComplexMatrix::zeros(dims.total(), dims.total());
    for (block, &p) in weights.iter().enumerate() {
        let mut psi = ComplexVector::zeros(dims.total());
        for i in 0..small {
            let s = u_small.column(i).into_owned();
            let l = u_large.column(block * small + i).into_owned();
            psi += if dims.m <= dims.n {
                kron_vec(&s, &l)
            } else {
                kron_vec(&l, &s)
            } * amp;
        }
        rho += outer(&psi).scale(p);
    }
    DensityMatrix::new(dims, rho, Tolerances::default())
}

/// Standard noise channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedChannel {
    /// `(1-p) rho + p Tr(rho) I/d`
    Depolarizing,
    /// `(1-p) rho + p diag(rho)`
    Dephasing,
    /// Qubit decay `|1> -> |0>` with probability `gamma`.
    AmplitudeDamping,
}

impl std::str::FromStr for NamedChannel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "depolarizing" => Ok(Self::Depolarizing),
            "dephasing" => Ok(Self::Dephasing),
            "amplitude_damping" | "amplitude-damping" => Ok(Self::AmplitudeDamping),
            other => Err(Error::InvalidParameter(format!(
                "unknown channel name {other:?}"
            ))),
        }
    }
}

/// Kraus sets for the named channels; zero-weight operators are dropped.
pub fn named_channel(name: NamedChannel, parameter: f64, d: usize) -> Result<KrausChannel> {
    if !(0.0..=1.0).contains(&parameter) {
        return Err(Error::InvalidParameter(format!(
            "parameter {parameter} outside [0, 1]"
        )));
    }
    if d == 0 {
        return Err(Error::Dimension("dimension must be positive".into()));
    }
    let p = parameter;
    let mut weighted: Vec<(f64, ComplexMatrix)> = vec![];
    match name {
        NamedChannel::Depolarizing => {
            weighted.push((1.0 - p, identity(d)));
            for a in 0..d {
                for b in 0..d {
                    weighted.push((p / d as f64, matrix_unit(d, d, a, b)));
                }
            }
        }
        NamedChannel::Dephasing => {
            weighted.push((1.0 - p, identity(d)));
            for k in 0..d {
                weighted.push((p, matrix_unit(d, d, k, k)));
            }
        }
        NamedChannel::AmplitudeDamping => {
            if d != 2 {
                return Err(Error::Dimension(format!(
                    "amplitude damping is a qubit channel, got d = {d}"
                )));
            }
            let mut keep = identity(2);
            keep[(1, 1)] = Complex64::from((1.0 - p).sqrt());
            weighted.push((1.0, keep));
            weighted.push((p, matrix_unit(2, 2, 0, 1)));
        }
    }
    let kraus = weighted
        .into_iter()
        .filter(|(w, _)| *w > 0.0)
        .map(|(w, x)| x.scale(w.sqrt()))
        .collect();
    validate_cptp(kraus, d, d, Tolerances::default())
}
