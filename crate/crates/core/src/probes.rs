//! Behavioral probes for local channels `Lambda_a ⊗ Lambda_b`, cross-checked
//! against the structural classification of each side.
//!
//! A probe draws sample `k` from substream `k` of its seed, so a reported
//! counterexample can be regenerated from `(seed, sample_index)` alone.
//! `Preserves` means no counterexample was found in the drawn samples;
//! `Violates` carries a certificate.

use rand::Rng;
use rayon::prelude::*;

use crate::channels::{classify, ChannelClass, KrausChannel};
use crate::error::{Error, Result};
use crate::generators::{random_mes_mixed, random_mes_pure, random_pure_with_rank, Seed};
use crate::linalg::{
    eigh, kron, max_abs_diff, outer, purity, BipartiteDims, ComplexMatrix, Tolerances,
};
use crate::states::{
    entanglement_entropy, mes_deviation, pinch, schmidt_rank, DensityMatrix, PureState, SchmidtData,
};

/// Samples drawn per probe unless the caller says otherwise.
pub const DEFAULT_SAMPLES: u64 = 64;

/// Which family of input states a probe feeds the channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProbeMode {
    /// Maximally entangled inputs: pure, plus mixed ones when `max >= 2 min`.
    Mes,
    /// Pure inputs of the given Schmidt rank.
    Schmidt(usize),
    /// Pure product inputs.
    Separable,
}

impl ProbeMode {
    pub fn name(&self) -> &'static str {
        match self {
            ProbeMode::Mes => "mes",
            ProbeMode::Schmidt(_) => "schmidt",
            ProbeMode::Separable => "separable",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Preserves,
    Violates,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::Preserves => "Preserves",
            Verdict::Violates => "Violates",
            Verdict::Inconclusive => "Inconclusive",
        }
    }
}

/// An input whose image failed the probe's invariant.
#[derive(Debug, Clone)]
pub struct Counterexample {
    pub sample_index: u64,
    pub input: DensityMatrix,
    pub output: ComplexMatrix,
    pub output_dims: BipartiteDims,
    pub diagnostic: String,
    /// Size of the failure: Gram deviation, `1 - purity`, or Schmidt rank gap.
    pub deviation: f64,
}

#[derive(Debug, Clone)]
pub struct ProbeReport {
    pub mode: ProbeMode,
    pub dims: BipartiteDims,
    pub verdict: Verdict,
    pub counterexample: Option<Counterexample>,
    pub samples_used: u64,
    pub seed: Seed,
    pub tolerances: Tolerances,
}

/// Whether the input subsystem admits mixed maximally entangled states.
pub fn mixed_mes_regime(dims: BipartiteDims) -> bool {
    dims.max() >= 2 * dims.min()
}

/// Input state for sample `index` of a probe.
pub fn draw_input(
    mode: ProbeMode,
    dims: BipartiteDims,
    seed: Seed,
    index: u64,
) -> Result<DensityMatrix> {
    let mut rng = seed.stream(index);
    match mode {
        ProbeMode::Mes if mixed_mes_regime(dims) && index % 2 == 1 => {
            let capacity = dims.max() / dims.min();
            let k = rng.random_range(2..=capacity);
            random_mes_mixed(dims, k, None, &mut rng)
        }
        ProbeMode::Mes => Ok(random_mes_pure(dims, &mut rng).to_density()),
        ProbeMode::Schmidt(r) => Ok(random_pure_with_rank(dims, r, &mut rng)?.to_density()),
        ProbeMode::Separable => Ok(random_pure_with_rank(dims, 1, &mut rng)?.to_density()),
    }
}

enum Judgement {
    Pass,
    Fail { diagnostic: String, deviation: f64 },
    Unjudgeable(String),
}

/// Dominant eigenvector of `rho` as a pure state.
fn dominant_state(rho: &ComplexMatrix, dims: BipartiteDims, tol: Tolerances) -> Result<PureState> {
    let eig = eigh(rho, tol)?;
    PureState::normalized(dims, eig.vector(eig.values.len() - 1))
}

fn is_pure(rho: &ComplexMatrix, tol: Tolerances) -> (bool, f64) {
    let p = purity(rho);
    (p >= 1.0 - 10.0 * tol.eq_tol, p)
}

fn judge(
    mode: ProbeMode,
    output: &ComplexMatrix,
    out_dims: BipartiteDims,
    tol: Tolerances,
) -> Judgement {
    match mode {
        ProbeMode::Mes => {
            let rho = match DensityMatrix::new(out_dims, output.clone(), tol) {
                Ok(rho) => rho,
                Err(e) => {
                    return Judgement::Unjudgeable(format!("output is not a valid state: {e}"))
                }
            };
            match mes_deviation(&rho, tol) {
                Ok(dev) if dev <= tol.eq_tol => Judgement::Pass,
                Ok(dev) => Judgement::Fail {
                    diagnostic: format!(
                        "output is not maximally entangled: Gram deviation {dev:.3e}, purity {:.12}",
                        rho.purity()
                    ),
                    deviation: dev,
                },
                Err(e) => Judgement::Unjudgeable(e.to_string()),
            }
        }
        ProbeMode::Schmidt(r) => judge_pure_rank(output, out_dims, r, tol),
        ProbeMode::Separable => judge_pure_rank(output, out_dims, 1, tol),
    }
}

fn judge_pure_rank(
    output: &ComplexMatrix,
    out_dims: BipartiteDims,
    r: usize,
    tol: Tolerances,
) -> Judgement {
    let (pure, p) = is_pure(output, tol);
    if !pure {
        return Judgement::Fail {
            diagnostic: format!("output is mixed: purity {p:.12}"),
            deviation: 1.0 - p,
        };
    }
    match dominant_state(output, out_dims, tol) {
        Ok(state) => {
            let rank = schmidt_rank(&state, tol);
            if rank == r {
                Judgement::Pass
            } else {
                Judgement::Fail {
                    diagnostic: format!("output Schmidt rank {rank}, expected {r}"),
                    deviation: rank.abs_diff(r) as f64,
                }
            }
        }
        Err(e) => Judgement::Unjudgeable(e.to_string()),
    }
}

fn check_channel_dims(
    ch_a: &KrausChannel,
    ch_b: &KrausChannel,
    dims: BipartiteDims,
) -> Result<BipartiteDims> {
    if ch_a.dim_in() != dims.m || ch_b.dim_in() != dims.n {
        return Err(Error::Dimension(format!(
            "channels act on {}x{}, system is {dims}",
            ch_a.dim_in(),
            ch_b.dim_in()
        )));
    }
    BipartiteDims::new(ch_a.dim_out(), ch_b.dim_out())
}

fn check_mode(mode: ProbeMode, dims: BipartiteDims) -> Result<ProbeMode> {
    match mode {
        ProbeMode::Schmidt(1) => Ok(ProbeMode::Separable),
        ProbeMode::Schmidt(r) if r == 0 || r > dims.min() => Err(Error::OutOfRange(format!(
            "Schmidt rank {r} for a {dims} system (allowed 1..={})",
            dims.min()
        ))),
        other => Ok(other),
    }
}

/// Runs `samples` draws of `mode` through `ch_a ⊗ ch_b`.
pub fn run_probe(
    ch_a: &KrausChannel,
    ch_b: &KrausChannel,
    dims: BipartiteDims,
    mode: ProbeMode,
    samples: u64,
    seed: Seed,
    tol: Tolerances,
) -> Result<ProbeReport> {
    if samples == 0 {
        return Err(Error::InvalidParameter(
            "at least one sample is required".into(),
        ));
    }
    let out_dims = check_channel_dims(ch_a, ch_b, dims)?;
    let mode = check_mode(mode, dims)?;
    let local = ch_a.tensor(ch_b)?;

    let failure = (0..samples)
        .into_par_iter()
        .map(|index| -> Result<Option<(Verdict, Counterexample)>> {
            let input = draw_input(mode, dims, seed, index)?;
            let output = local.apply(input.matrix())?;
            let (verdict, diagnostic, deviation) = match judge(mode, &output, out_dims, tol) {
                Judgement::Pass => return Ok(None),
                Judgement::Fail {
                    diagnostic,
                    deviation,
                } => (Verdict::Violates, diagnostic, deviation),
                Judgement::Unjudgeable(msg) => (Verdict::Inconclusive, msg, f64::NAN),
            };
            Ok(Some((
                verdict,
                Counterexample {
                    sample_index: index,
                    input,
                    output,
                    output_dims: out_dims,
                    diagnostic,
                    deviation,
                },
            )))
        })
        .find_map_first(|r| match r {
            Ok(None) => None,
            other => Some(other),
        })
        .transpose()?
        .flatten();

    let (verdict, samples_used, counterexample) = match failure {
        None => (Verdict::Preserves, samples, None),
        Some((verdict, cx)) => (verdict, cx.sample_index + 1, Some(cx)),
    };
    Ok(ProbeReport {
        mode,
        dims,
        verdict,
        counterexample,
        samples_used,
        seed,
        tolerances: tol,
    })
}

/// Does `ch_a ⊗ ch_b` keep maximally entangled states maximally entangled?
pub fn probe_mes_preservation(
    ch_a: &KrausChannel,
    ch_b: &KrausChannel,
    dims: BipartiteDims,
    samples: u64,
    seed: Seed,
    tol: Tolerances,
) -> Result<ProbeReport> {
    run_probe(ch_a, ch_b, dims, ProbeMode::Mes, samples, seed, tol)
}

#[derive(Debug, Clone)]
pub struct OneSidedReport {
    pub report: ProbeReport,
    pub class: ChannelClass,
}

/// MES probe for `I_a ⊗ ch_b`, reported together with `classify(ch_b)`.
pub fn probe_one_sided(
    ch_b: &KrausChannel,
    dims: BipartiteDims,
    samples: u64,
    seed: Seed,
    tol: Tolerances,
) -> Result<OneSidedReport> {
    let id = KrausChannel::identity(dims.m);
    let report = probe_mes_preservation(&id, ch_b, dims, samples, seed, tol)?;
    Ok(OneSidedReport {
        report,
        class: classify(ch_b, tol)?,
    })
}

/// Pure inputs of Schmidt rank `r` must stay pure with rank `r`.
/// `r = 1` is the separable probe.
#[allow(clippy::too_many_arguments)]
pub fn probe_schmidt_r_preservation(
    ch_a: &KrausChannel,
    ch_b: &KrausChannel,
    dims: BipartiteDims,
    r: usize,
    samples: u64,
    seed: Seed,
    tol: Tolerances,
) -> Result<ProbeReport> {
    run_probe(ch_a, ch_b, dims, ProbeMode::Schmidt(r), samples, seed, tol)
}

pub fn probe_separable_preservation(
    ch_a: &KrausChannel,
    ch_b: &KrausChannel,
    dims: BipartiteDims,
    samples: u64,
    seed: Seed,
    tol: Tolerances,
) -> Result<ProbeReport> {
    run_probe(ch_a, ch_b, dims, ProbeMode::Separable, samples, seed, tol)
}

/// Regenerates the counterexample input from the report's seed, re-applies
/// the channel and confirms the same failure.
pub fn reverify(report: &ProbeReport, ch_a: &KrausChannel, ch_b: &KrausChannel) -> Result<bool> {
    let Some(cx) = &report.counterexample else {
        return Ok(false);
    };
    let input = draw_input(report.mode, report.dims, report.seed, cx.sample_index)?;
    if input.matrix() != cx.input.matrix() {
        return Ok(false);
    }
    let output = ch_a.tensor(ch_b)?.apply(input.matrix())?;
    if max_abs_diff(&output, &cx.output) > report.tolerances.eq_tol {
        return Ok(false);
    }
    Ok(
        match judge(report.mode, &output, cx.output_dims, report.tolerances) {
            Judgement::Pass => false,
            Judgement::Fail { .. } => report.verdict == Verdict::Violates,
            Judgement::Unjudgeable(_) => report.verdict == Verdict::Inconclusive,
        },
    )
}

/// Structural classification of both sides next to the behavioral verdict.
#[derive(Debug, Clone)]
pub struct EquivalenceReport {
    pub mode: ProbeMode,
    pub structural: [ChannelClass; 2],
    /// Whether the structure satisfies the characterization for `mode`.
    pub qualifies: bool,
    pub behavioral: ProbeReport,
    pub consistent: bool,
    pub advice: Option<String>,
}

/// Structural condition under which `a ⊗ b` preserves the probed family.
///
/// MES: both sides isometric and the smaller output factor has the same
/// dimension as the smaller input factor (for equal dimensions this is
/// unitary on both sides). Schmidt rank `r >= 2`: both sides isometric.
/// Separable: each side isometric or constant-pure.
pub fn structure_qualifies(
    mode: ProbeMode,
    a: &ChannelClass,
    b: &ChannelClass,
    dims: BipartiteDims,
    out_dims: BipartiteDims,
) -> bool {
    match mode {
        ProbeMode::Mes => a.is_isometric() && b.is_isometric() && out_dims.min() == dims.min(),
        ProbeMode::Schmidt(r) if r >= 2 => a.is_isometric() && b.is_isometric(),
        ProbeMode::Schmidt(_) | ProbeMode::Separable => [a, b]
            .iter()
            .all(|c| c.is_isometric() || matches!(c, ChannelClass::ConstantPure(_))),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn decide_equivalence(
    ch_a: &KrausChannel,
    ch_b: &KrausChannel,
    dims: BipartiteDims,
    mode: ProbeMode,
    samples: u64,
    seed: Seed,
    tol: Tolerances,
) -> Result<EquivalenceReport> {
    let behavioral = run_probe(ch_a, ch_b, dims, mode, samples, seed, tol)?;
    let structural = [classify(ch_a, tol)?, classify(ch_b, tol)?];
    let out_dims = BipartiteDims::new(ch_a.dim_out(), ch_b.dim_out())?;
    let qualifies = structure_qualifies(
        behavioral.mode,
        &structural[0],
        &structural[1],
        dims,
        out_dims,
    );
    let (consistent, advice) = match (qualifies, behavioral.verdict) {
        (true, Verdict::Preserves) | (false, Verdict::Violates) => (true, None),
        (false, Verdict::Preserves) => (
            false,
            Some("sampling may have missed a counterexample — increase samples".to_string()),
        ),
        (true, Verdict::Violates) => (
            false,
            Some(
                "structure qualifies but a counterexample was found; check tolerances".to_string(),
            ),
        ),
        (_, Verdict::Inconclusive) => (
            false,
            Some("an output could not be judged; check tolerances".to_string()),
        ),
    };
    Ok(EquivalenceReport {
        mode: behavioral.mode,
        structural,
        qualifies,
        behavioral,
        consistent,
        advice,
    })
}

/// Outcome of comparing input and output Schmidt ranks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Monotonicity {
    /// Output rank (or its upper bound) does not exceed the input rank.
    Ok { r_in: usize, r_out: usize },
    /// A pure output with a larger Schmidt rank than the input.
    Violation { r_in: usize, r_out: usize },
    /// Mixed output whose spectral upper bound exceeds the input rank.
    Inconclusive { r_in: usize, upper_bound: usize },
}

/// Schmidt number must not increase under a local channel. Mixed outputs
/// are bounded above using their spectral decomposition, which can only
/// certify `Ok`.
pub fn check_schmidt_monotonicity(
    ch_a: &KrausChannel,
    ch_b: &KrausChannel,
    psi: &PureState,
    tol: Tolerances,
) -> Result<Monotonicity> {
    let out_dims = check_channel_dims(ch_a, ch_b, psi.dims())?;
    let r_in = schmidt_rank(psi, tol);
    let output = ch_a.tensor(ch_b)?.apply(&psi.projector())?;
    if is_pure(&output, tol).0 {
        let r_out = schmidt_rank(&dominant_state(&output, out_dims, tol)?, tol);
        return Ok(if r_out <= r_in {
            Monotonicity::Ok { r_in, r_out }
        } else {
            Monotonicity::Violation { r_in, r_out }
        });
    }
    let eig = eigh(&output, tol)?;
    let p_max = eig.values.iter().cloned().fold(0.0, f64::max);
    let mut bound = 0;
    for (k, &p) in eig.values.iter().enumerate() {
        if p > tol.rank_tol * p_max {
            let state = PureState::normalized(out_dims, eig.vector(k))?;
            bound = bound.max(schmidt_rank(&state, tol));
        }
    }
    Ok(if bound <= r_in {
        Monotonicity::Ok { r_in, r_out: bound }
    } else {
        Monotonicity::Inconclusive {
            r_in,
            upper_bound: bound,
        }
    })
}

/// Entropy tolerance for [`check_entropy_invariance`].
pub const ENTROPY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EntropyCheck {
    Ok { deviation: f64 },
    Violation { deviation: f64 },
}

impl EntropyCheck {
    pub fn deviation(&self) -> f64 {
        match self {
            EntropyCheck::Ok { deviation } | EntropyCheck::Violation { deviation } => *deviation,
        }
    }
}

/// Entanglement entropy is unchanged by local isometries. Both channels
/// must classify as `Unitary` or `Isometric`.
pub fn check_entropy_invariance(
    ch_a: &KrausChannel,
    ch_b: &KrausChannel,
    psi: &PureState,
    tol: Tolerances,
) -> Result<EntropyCheck> {
    let out_dims = check_channel_dims(ch_a, ch_b, psi.dims())?;
    for (side, ch) in [("A", ch_a), ("B", ch_b)] {
        let class = classify(ch, tol)?;
        if !class.is_isometric() {
            return Err(Error::Contract(format!(
                "entropy invariance needs isometric channels, side {side} is {}",
                class.tag()
            )));
        }
    }
    let output = ch_a.tensor(ch_b)?.apply(&psi.projector())?;
    let out_state = dominant_state(&output, out_dims, tol)?;
    let deviation = (entanglement_entropy(&out_state) - entanglement_entropy(psi)).abs();
    Ok(if deviation <= ENTROPY_TOLERANCE {
        EntropyCheck::Ok { deviation }
    } else {
        EntropyCheck::Violation { deviation }
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProofIdentity {
    pub residual: f64,
    pub holds: bool,
}

/// Pinching `(I ⊗ ch_b)|psi><psi|` onto the Schmidt vector `|a_i0>` must give
/// `lambda_i0^2 |a_i0><a_i0| ⊗ ch_b(|b_i0><b_i0|)`, within `10 eq_tol`.
pub fn check_proof_identity(
    ch_b: &KrausChannel,
    psi: &PureState,
    schmidt: &SchmidtData,
    i0: usize,
    tol: Tolerances,
) -> Result<ProofIdentity> {
    let dims = psi.dims();
    if ch_b.dim_in() != dims.n {
        return Err(Error::Dimension(format!(
            "channel acts on dimension {}, subsystem B has {}",
            ch_b.dim_in(),
            dims.n
        )));
    }
    if i0 >= schmidt.rank {
        return Err(Error::OutOfRange(format!(
            "Schmidt index {i0} (rank {})",
            schmidt.rank
        )));
    }
    let local = KrausChannel::identity(dims.m).tensor(ch_b)?;
    let out_dims = BipartiteDims::new(dims.m, ch_b.dim_out())?;
    let a = &schmidt.a_basis[i0];
    let lhs = pinch(&local.apply(&psi.projector())?, out_dims, a)?;
    let weight = schmidt.coefficients[i0] * schmidt.coefficients[i0];
    let rhs = kron(&outer(a), &ch_b.apply(&outer(&schmidt.b_basis[i0]))?)?.scale(weight);
    let residual = max_abs_diff(&lhs, &rhs);
    Ok(ProofIdentity {
        residual,
        holds: residual <= 10.0 * tol.eq_tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{
        self, constant_pure_channel, haar_unitary, haar_vector, named_channel, random_cptp,
        random_isometry, random_schmidt_form, NamedChannel,
    };
    use crate::linalg::{basis_vector, ComplexVector};
    use crate::states::schmidt_decompose;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn dims(m: usize, n: usize) -> BipartiteDims {
        BipartiteDims::new(m, n).unwrap()
    }

    fn unitary(d: usize, seed: u64) -> KrausChannel {
        KrausChannel::new(vec![haar_unitary(d, &mut Seed::new(seed).rng())]).unwrap()
    }

    fn isometry(d_in: usize, d_out: usize, seed: u64) -> KrausChannel {
        KrausChannel::new(vec![random_isometry(
            d_in,
            d_out,
            &mut Seed::new(seed).rng(),
        )
        .unwrap()])
        .unwrap()
    }

    fn bell() -> PureState {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let v = ComplexVector::from_vec(vec![s.into(), 0.0.into(), 0.0.into(), s.into()]);
        PureState::new(dims(2, 2), v, tol()).unwrap()
    }

    #[test]
    fn unitaries_preserve_mes() {
        let r = probe_mes_preservation(
            &unitary(2, 1),
            &unitary(2, 2),
            dims(2, 2),
            64,
            Seed::new(0),
            tol(),
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::Preserves);
        assert_eq!(r.samples_used, 64);
        let id = KrausChannel::identity(2);
        let r = probe_mes_preservation(&id, &id, dims(2, 2), 16, Seed::new(0), tol()).unwrap();
        assert_eq!(r.verdict, Verdict::Preserves);
    }

    #[test]
    fn dephasing_violates_mes() {
        let id = KrausChannel::identity(2);
        let deph = named_channel(NamedChannel::Dephasing, 0.5, 2).unwrap();
        let r = probe_mes_preservation(&id, &deph, dims(2, 2), 64, Seed::new(0), tol()).unwrap();
        assert_eq!(r.verdict, Verdict::Violates);
        let cx = r.counterexample.as_ref().unwrap();
        assert!(purity(&cx.output) < 1.0 - 1e-6);
        assert!(reverify(&r, &id, &deph).unwrap());
        // a different channel does not reproduce it
        assert!(!reverify(&r, &id, &id).unwrap());
    }

    #[test]
    fn one_sided_examples() {
        let r = probe_one_sided(&unitary(3, 4), dims(3, 3), 32, Seed::new(1), tol()).unwrap();
        assert_eq!(r.report.verdict, Verdict::Preserves);
        assert!(matches!(r.class, ChannelClass::Unitary(_)));

        let omega = haar_vector(3, &mut Seed::new(9).rng());
        let cp = constant_pure_channel(&omega, 3).unwrap();
        let r = probe_one_sided(&cp, dims(3, 3), 32, Seed::new(1), tol()).unwrap();
        assert_eq!(r.report.verdict, Verdict::Violates);
        assert!(matches!(r.class, ChannelClass::ConstantPure(_)));

        let ad0 = named_channel(NamedChannel::AmplitudeDamping, 0.0, 2).unwrap();
        let r = probe_one_sided(&ad0, dims(2, 2), 32, Seed::new(1), tol()).unwrap();
        assert_eq!(r.report.verdict, Verdict::Preserves);
    }

    #[test]
    fn mixed_inputs_used_in_mixed_regime() {
        let d = dims(2, 4);
        assert!(mixed_mes_regime(d));
        assert!(!mixed_mes_regime(dims(2, 3)));
        let input = draw_input(ProbeMode::Mes, d, Seed::new(3), 1).unwrap();
        assert!(input.purity() < 1.0 - 1e-3);
        let input = draw_input(ProbeMode::Mes, d, Seed::new(3), 0).unwrap();
        assert!(input.purity() > 1.0 - 1e-12);
        let r = probe_mes_preservation(&unitary(2, 5), &unitary(4, 6), d, 64, Seed::new(2), tol())
            .unwrap();
        assert_eq!(r.verdict, Verdict::Preserves);
    }

    #[test]
    fn schmidt_probe_examples() {
        let r = probe_schmidt_r_preservation(
            &isometry(2, 4, 1),
            &isometry(2, 4, 2),
            dims(2, 2),
            2,
            64,
            Seed::new(0),
            tol(),
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::Preserves);

        let id = KrausChannel::identity(3);
        let dep = named_channel(NamedChannel::Depolarizing, 0.3, 3).unwrap();
        let r = probe_schmidt_r_preservation(&id, &dep, dims(3, 3), 2, 64, Seed::new(0), tol())
            .unwrap();
        assert_eq!(r.verdict, Verdict::Violates);
        assert!(r.counterexample.unwrap().diagnostic.contains("mixed"));

        for rank in 1..=3 {
            let r =
                probe_schmidt_r_preservation(&id, &id, dims(3, 3), rank, 16, Seed::new(0), tol())
                    .unwrap();
            assert_eq!(r.verdict, Verdict::Preserves);
        }
        assert!(
            probe_schmidt_r_preservation(&id, &id, dims(3, 3), 4, 16, Seed::new(0), tol()).is_err()
        );
        let r =
            probe_schmidt_r_preservation(&id, &id, dims(3, 3), 1, 4, Seed::new(0), tol()).unwrap();
        assert_eq!(r.mode, ProbeMode::Separable);
    }

    #[test]
    fn separable_probe_examples() {
        let r = probe_separable_preservation(
            &unitary(2, 1),
            &unitary(3, 2),
            dims(2, 3),
            64,
            Seed::new(0),
            tol(),
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::Preserves);

        let mut rng = Seed::new(8).rng();
        let cp_a = constant_pure_channel(&haar_vector(2, &mut rng), 2).unwrap();
        let cp_b = constant_pure_channel(&haar_vector(3, &mut rng), 3).unwrap();
        let r = probe_separable_preservation(&cp_a, &cp_b, dims(2, 3), 64, Seed::new(0), tol())
            .unwrap();
        assert_eq!(r.verdict, Verdict::Preserves);

        let id = KrausChannel::identity(2);
        let deph = named_channel(NamedChannel::Dephasing, 0.5, 2).unwrap();
        let r =
            probe_separable_preservation(&id, &deph, dims(2, 2), 64, Seed::new(0), tol()).unwrap();
        assert_eq!(r.verdict, Verdict::Violates);
    }

    #[test]
    fn dephasing_plus_input_is_mixed() {
        // |0>|+> through I ⊗ dephasing(0.5): off-diagonals of |+><+| halve,
        // purity 0.5^2*2 + 0.25^2*2 = 0.625
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let plus = ComplexVector::from_vec(vec![s.into(), s.into()]);
        let input = PureState::product(&basis_vector(2, 0), &plus).unwrap();
        let deph = named_channel(NamedChannel::Dephasing, 0.5, 2).unwrap();
        let out = KrausChannel::identity(2)
            .tensor(&deph)
            .unwrap()
            .apply(&input.projector())
            .unwrap();
        assert!((purity(&out) - 0.625).abs() < 1e-12);
    }

    #[test]
    fn equivalence_examples() {
        let e = decide_equivalence(
            &unitary(2, 1),
            &unitary(2, 2),
            dims(2, 2),
            ProbeMode::Mes,
            64,
            Seed::new(0),
            tol(),
        )
        .unwrap();
        assert!(e.consistent && e.qualifies);
        assert!(e
            .structural
            .iter()
            .all(|c| matches!(c, ChannelClass::Unitary(_))));

        let noisy = random_cptp(2, 2, 3, &mut Seed::new(4).rng()).unwrap();
        let e = decide_equivalence(
            &KrausChannel::identity(2),
            &noisy,
            dims(2, 2),
            ProbeMode::Mes,
            64,
            Seed::new(0),
            tol(),
        )
        .unwrap();
        assert!(e.consistent && !e.qualifies);
        assert_eq!(e.behavioral.verdict, Verdict::Violates);

        let e = decide_equivalence(
            &isometry(2, 4, 1),
            &isometry(2, 4, 2),
            dims(2, 2),
            ProbeMode::Schmidt(2),
            64,
            Seed::new(0),
            tol(),
        )
        .unwrap();
        assert!(e.consistent && e.qualifies);
        assert_eq!(e.behavioral.verdict, Verdict::Preserves);
        assert!(e
            .structural
            .iter()
            .all(|c| matches!(c, ChannelClass::Isometric(_))));

        // isometries enlarge both factors, so MES outputs lose maximality
        let e = decide_equivalence(
            &isometry(2, 4, 1),
            &isometry(2, 4, 2),
            dims(2, 2),
            ProbeMode::Mes,
            64,
            Seed::new(0),
            tol(),
        )
        .unwrap();
        assert!(e.consistent && !e.qualifies);
    }

    #[test]
    fn inconsistency_is_flagged() {
        // Dephasing of strength 1e-8 has Choi rank 2 at rank_tol 1e-10, but
        // its purity loss stays below the 10 eq_tol threshold.
        let loose = Tolerances::new(1e-6, 1e-10).unwrap();
        let deph = named_channel(NamedChannel::Dephasing, 1e-8, 2).unwrap();
        let id = KrausChannel::identity(2);
        let e = decide_equivalence(
            &id,
            &deph,
            dims(2, 2),
            ProbeMode::Separable,
            8,
            Seed::new(0),
            loose,
        )
        .unwrap();
        assert_eq!(e.structural[1], ChannelClass::Other);
        assert_eq!(e.behavioral.verdict, Verdict::Preserves);
        assert!(!e.consistent);
        assert!(e.advice.unwrap().contains("increase samples"));
    }

    #[test]
    fn monotonicity_examples() {
        let mut rng = Seed::new(3).rng();
        let psi = generators::random_pure_with_rank(dims(3, 3), 2, &mut rng).unwrap();
        assert_eq!(
            check_schmidt_monotonicity(&unitary(3, 1), &unitary(3, 2), &psi, tol()).unwrap(),
            Monotonicity::Ok { r_in: 2, r_out: 2 }
        );
        let psi = generators::random_pure_with_rank(dims(3, 3), 3, &mut rng).unwrap();
        assert_eq!(
            check_schmidt_monotonicity(&isometry(3, 5, 1), &isometry(3, 4, 2), &psi, tol())
                .unwrap(),
            Monotonicity::Ok { r_in: 3, r_out: 3 }
        );
        let deph = named_channel(NamedChannel::Dephasing, 0.5, 2).unwrap();
        let out =
            check_schmidt_monotonicity(&KrausChannel::identity(2), &deph, &bell(), tol()).unwrap();
        assert!(!matches!(out, Monotonicity::Violation { .. }));
    }

    #[test]
    fn entropy_invariance_examples() {
        let out = check_entropy_invariance(&unitary(2, 1), &unitary(2, 2), &bell(), tol()).unwrap();
        assert!(out.deviation() < 1e-12);
        let psi =
            generators::random_pure_with_rank(dims(2, 2), 2, &mut Seed::new(1).rng()).unwrap();
        let out =
            check_entropy_invariance(&isometry(2, 5, 1), &isometry(2, 5, 2), &psi, tol()).unwrap();
        assert!(matches!(out, EntropyCheck::Ok { .. }));
        let deph = named_channel(NamedChannel::Dephasing, 0.5, 2).unwrap();
        assert!(matches!(
            check_entropy_invariance(&KrausChannel::identity(2), &deph, &bell(), tol()),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn proof_identity_examples() {
        let psi = bell();
        let schmidt = schmidt_decompose(&psi, tol());
        let id = KrausChannel::identity(2);
        assert!(
            check_proof_identity(&id, &psi, &schmidt, 0, tol())
                .unwrap()
                .holds
        );

        // with the computational Schmidt basis both sides are 1/2 |00><00|
        let e0 = basis_vector(2, 0);
        let e1 = basis_vector(2, 1);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let explicit = SchmidtData {
            coefficients: vec![s, s],
            a_basis: vec![e0.clone(), e1.clone()],
            b_basis: vec![e0.clone(), e1],
            rank: 2,
        };
        let deph = named_channel(NamedChannel::Dephasing, 0.5, 2).unwrap();
        let id_out = check_proof_identity(&deph, &psi, &explicit, 0, tol()).unwrap();
        assert!(id_out.holds && id_out.residual < 1e-15);
        let lhs = pinch(
            &KrausChannel::identity(2)
                .tensor(&deph)
                .unwrap()
                .apply(&psi.projector())
                .unwrap(),
            dims(2, 2),
            &e0,
        )
        .unwrap();
        let expected = kron(&outer(&e0), &outer(&e0)).unwrap().scale(0.5);
        assert!(max_abs_diff(&lhs, &expected) < 1e-15);

        assert!(check_proof_identity(&deph, &psi, &explicit, 2, tol()).is_err());

        let (psi, data) = random_schmidt_form(dims(3, 4), 3, &mut Seed::new(5).rng()).unwrap();
        let ch = random_cptp(4, 2, 3, &mut Seed::new(6).rng()).unwrap();
        for i0 in 0..3 {
            assert!(
                check_proof_identity(&ch, &psi, &data, i0, tol())
                    .unwrap()
                    .residual
                    < 1e-12
            );
        }
    }
}
