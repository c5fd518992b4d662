//! The five subcommands. Each produces a JSON document and a table rendering
//! of the same record; the caller picks one by `--format`.

use std::fmt::Write as _;
use std::path::Path;

use clap::ValueEnum;
use locchan::channels::{classify, trace_deviation, validate_cptp};
use locchan::generators::{
    constant_pure_channel, haar_unitary, haar_vector, named_channel, random_cptp, random_isometry,
    random_mes_mixed, random_mes_pure, random_pure_with_rank, NamedChannel, Seed,
};
use locchan::probes::{decide_equivalence, Counterexample, ProbeMode};
use locchan::states::{
    entanglement_entropy, is_mes_mixed, is_mes_pure, mes_deviation, schmidt_decompose,
};
use locchan::{BipartiteDims, ChannelClass, EquivalenceReport, KrausChannel, Tolerances};
use serde::Serialize;

use crate::spec_file::{
    matrix_to_rows, parse_json, read_source, sha256_hex, to_document, vector_to_entries,
    ChannelSpecFile, Entry, LoadedState, MatrixRows, SourceFile, StateSpecFile,
};
use crate::{Cli, CliError, Command, GenArgs, GenKind, ModeArg, ProbeArgs, StateAction};

/// A finished command: exit code plus both renderings.
pub struct Rendered {
    pub code: i32,
    pub json: String,
    pub table: String,
}

impl Rendered {
    fn new<T: Serialize>(code: i32, record: &T, table: String) -> Self {
        Self {
            code,
            json: to_document(record),
            table,
        }
    }
}

#[derive(Serialize)]
struct TolerancesRecord {
    eq_tol: f64,
    rank_tol: f64,
}

impl From<Tolerances> for TolerancesRecord {
    fn from(t: Tolerances) -> Self {
        Self {
            eq_tol: t.eq_tol,
            rank_tol: t.rank_tol,
        }
    }
}

#[derive(Serialize)]
struct FileRecord {
    path: String,
    sha256: String,
}

impl From<&SourceFile> for FileRecord {
    fn from(s: &SourceFile) -> Self {
        Self {
            path: s.path.clone(),
            sha256: s.sha256.clone(),
        }
    }
}

#[derive(Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
enum Witness {
    Matrix(MatrixRows),
    Vector(Vec<Entry>),
}

#[derive(Serialize)]
struct ClassRecord {
    class: &'static str,
    witness: Option<Witness>,
}

impl From<&ChannelClass> for ClassRecord {
    fn from(c: &ChannelClass) -> Self {
        let witness = match c {
            ChannelClass::Unitary(x) | ChannelClass::Isometric(x) => {
                Some(Witness::Matrix(matrix_to_rows(x)))
            }
            ChannelClass::ConstantPure(v) => Some(Witness::Vector(vector_to_entries(v))),
            ChannelClass::Other => None,
        };
        Self {
            class: c.tag().as_str(),
            witness,
        }
    }
}

pub fn dispatch(cli: &Cli) -> Result<Rendered, CliError> {
    let tol = Tolerances::new(cli.tol, cli.rank_tol).map_err(|e| CliError::Usage(e.to_string()))?;
    match &cli.command {
        Command::Validate { path } => cmd_validate(path, tol),
        Command::Classify { path } => cmd_classify(path, tol),
        Command::Probe(args) => cmd_probe(args, tol),
        Command::State { action, path } => cmd_state(*action, path, tol),
        Command::Gen(args) => cmd_gen(args),
    }
}

fn load_channel(path: &Path, tol: Tolerances) -> Result<(SourceFile, KrausChannel), CliError> {
    let src = read_source(path)?;
    let spec: ChannelSpecFile = parse_json(&src.path, &src.text)?;
    let ch = spec.to_channel(&src.path, tol)?;
    Ok((src, ch))
}

fn load_state(path: &Path, tol: Tolerances) -> Result<(SourceFile, LoadedState), CliError> {
    let src = read_source(path)?;
    let spec: StateSpecFile = parse_json(&src.path, &src.text)?;
    let state = spec.to_state(&src.path, tol)?;
    Ok((src, state))
}

#[derive(Serialize)]
struct ValidateRecord {
    command: &'static str,
    status: &'static str,
    file: FileRecord,
    dim_in: usize,
    dim_out: usize,
    kraus_count: usize,
    deviation: f64,
    tolerances: TolerancesRecord,
}

pub fn cmd_validate(path: &Path, tol: Tolerances) -> Result<Rendered, CliError> {
    let src = read_source(path)?;
    let spec: ChannelSpecFile = parse_json(&src.path, &src.text)?;
    let kraus = spec.matrices(&src.path)?;
    let deviation = trace_deviation(&kraus, spec.dim_in);
    let ch = validate_cptp(kraus, spec.dim_in, spec.dim_out, tol)
        .map_err(|e| CliError::from_core(&src.path, e))?;
    let record = ValidateRecord {
        command: "validate",
        status: "valid",
        file: (&src).into(),
        dim_in: ch.dim_in(),
        dim_out: ch.dim_out(),
        kraus_count: ch.kraus().len(),
        deviation,
        tolerances: tol.into(),
    };
    let table = format!(
        "valid: {} ({} -> {}, {} Kraus operators, deviation {:e})\n",
        src.path, record.dim_in, record.dim_out, record.kraus_count, deviation
    );
    Ok(Rendered::new(0, &record, table))
}

#[derive(Serialize)]
struct ClassifyRecord {
    command: &'static str,
    file: FileRecord,
    tolerances: TolerancesRecord,
    dim_in: usize,
    dim_out: usize,
    #[serde(flatten)]
    class: ClassRecord,
    choi_rank: usize,
    minimal_kraus_count: usize,
}

fn table_matrix(out: &mut String, rows: &MatrixRows) {
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .map(|Entry([re, im])| format!("{re:+.6}{im:+.6}i"))
            .collect();
        let _ = writeln!(out, "  {}", cells.join("  "));
    }
}

fn table_witness(out: &mut String, w: &Option<Witness>) {
    match w {
        Some(Witness::Matrix(rows)) => {
            out.push_str("witness:\n");
            table_matrix(out, rows);
        }
        Some(Witness::Vector(v)) => {
            out.push_str("witness (omega):\n");
            table_matrix(out, &vec![v.clone()]);
        }
        None => {}
    }
}

pub fn cmd_classify(path: &Path, tol: Tolerances) -> Result<Rendered, CliError> {
    let (src, ch) = load_channel(path, tol)?;
    let err = |e| CliError::from_core(&src.path, e);
    let class = classify(&ch, tol).map_err(err)?;
    let choi_rank = ch.choi().rank(tol);
    let minimal_kraus_count = ch.minimal(tol).map_err(err)?.kraus().len();
    let record = ClassifyRecord {
        command: "classify",
        file: (&src).into(),
        tolerances: tol.into(),
        dim_in: ch.dim_in(),
        dim_out: ch.dim_out(),
        class: (&class).into(),
        choi_rank,
        minimal_kraus_count,
    };
    let mut table = format!(
        "class: {}\nchoi rank: {choi_rank}\nminimal Kraus count: {minimal_kraus_count}\n",
        record.class.class
    );
    table_witness(&mut table, &record.class.witness);
    Ok(Rendered::new(0, &record, table))
}

#[derive(Serialize)]
struct ChannelSource {
    path: Option<String>,
    sha256: Option<String>,
    /// `identity` when no file was given.
    source: &'static str,
}

#[derive(Serialize)]
struct CounterexampleRecord {
    sample_index: u64,
    diagnostic: String,
    /// `null` when the output could not be judged.
    deviation: Option<f64>,
    input: StateSpecFile,
    output: StateSpecFile,
}

impl From<&Counterexample> for CounterexampleRecord {
    fn from(cx: &Counterexample) -> Self {
        Self {
            sample_index: cx.sample_index,
            diagnostic: cx.diagnostic.clone(),
            deviation: cx.deviation.is_finite().then_some(cx.deviation),
            input: StateSpecFile::from_density(&cx.input),
            output: StateSpecFile::from_density_matrix(cx.output_dims, &cx.output),
        }
    }
}

#[derive(Serialize)]
struct ProbeRecord {
    command: &'static str,
    mode: &'static str,
    r: Option<usize>,
    dims: [usize; 2],
    output_dims: [usize; 2],
    seed: u64,
    samples: u64,
    tolerances: TolerancesRecord,
    channel_a: ChannelSource,
    channel_b: ChannelSource,
    structural: [ClassRecord; 2],
    qualifies: bool,
    verdict: &'static str,
    samples_used: u64,
    counterexample: Option<CounterexampleRecord>,
    consistent: bool,
    advice: Option<String>,
}

fn probe_channel(
    path: &Option<std::path::PathBuf>,
    d: usize,
    tol: Tolerances,
) -> Result<(ChannelSource, KrausChannel), CliError> {
    match path {
        Some(p) => {
            let (src, ch) = load_channel(p, tol)?;
            Ok((
                ChannelSource {
                    path: Some(src.path),
                    sha256: Some(src.sha256),
                    source: "file",
                },
                ch,
            ))
        }
        None => Ok((
            ChannelSource {
                path: None,
                sha256: None,
                source: "identity",
            },
            KrausChannel::identity(d),
        )),
    }
}

fn dims_arg(v: &[usize]) -> Result<BipartiteDims, CliError> {
    match v {
        [m, n] => BipartiteDims::new(*m, *n).map_err(|e| CliError::Usage(format!("--dims: {e}"))),
        _ => Err(CliError::Usage("--dims takes two values".into())),
    }
}

pub fn cmd_probe(args: &ProbeArgs, tol: Tolerances) -> Result<Rendered, CliError> {
    let dims = dims_arg(&args.dims)?;
    let mode = match (args.mode, args.r) {
        (ModeArg::Mes, None) => ProbeMode::Mes,
        (ModeArg::Separable, None) => ProbeMode::Separable,
        (ModeArg::Schmidt, Some(r)) => ProbeMode::Schmidt(r),
        (ModeArg::Schmidt, None) => {
            return Err(CliError::Usage("schmidt mode requires --r".into()))
        }
        (_, Some(_)) => return Err(CliError::Usage("--r applies to schmidt mode only".into())),
    };
    let (src_a, ch_a) = probe_channel(&args.channel_a, dims.m, tol)?;
    let (src_b, ch_b) = probe_channel(&args.channel_b, dims.n, tol)?;
    let report = decide_equivalence(&ch_a, &ch_b, dims, mode, args.samples, Seed(args.seed), tol)
        .map_err(|e| CliError::from_core("probe", e))?;
    let record = probe_record(&report, src_a, src_b, &ch_a, &ch_b, args.samples);
    let table = probe_table(&record);
    Ok(Rendered::new(
        if report.consistent { 0 } else { 1 },
        &record,
        table,
    ))
}

fn probe_record(
    report: &EquivalenceReport,
    channel_a: ChannelSource,
    channel_b: ChannelSource,
    ch_a: &KrausChannel,
    ch_b: &KrausChannel,
    samples: u64,
) -> ProbeRecord {
    let b = &report.behavioral;
    ProbeRecord {
        command: "probe",
        mode: report.mode.name(),
        r: match report.mode {
            ProbeMode::Schmidt(r) => Some(r),
            _ => None,
        },
        dims: [b.dims.m, b.dims.n],
        output_dims: [ch_a.dim_out(), ch_b.dim_out()],
        seed: b.seed.value(),
        samples,
        tolerances: b.tolerances.into(),
        channel_a,
        channel_b,
        structural: [
            (&report.structural[0]).into(),
            (&report.structural[1]).into(),
        ],
        qualifies: report.qualifies,
        verdict: b.verdict.as_str(),
        samples_used: b.samples_used,
        counterexample: b.counterexample.as_ref().map(Into::into),
        consistent: report.consistent,
        advice: report.advice.clone(),
    }
}

fn probe_table(r: &ProbeRecord) -> String {
    let mut t = String::new();
    let mode = match r.r {
        Some(rank) => format!("{} (r = {rank})", r.mode),
        None => r.mode.to_string(),
    };
    let _ = writeln!(t, "mode: {mode}");
    let _ = writeln!(
        t,
        "dims: {}x{} -> {}x{}",
        r.dims[0], r.dims[1], r.output_dims[0], r.output_dims[1]
    );
    let _ = writeln!(t, "seed: {}  samples: {}", r.seed, r.samples);
    let _ = writeln!(
        t,
        "structure: {} x {}",
        r.structural[0].class, r.structural[1].class
    );
    let _ = writeln!(t, "qualifies: {}", r.qualifies);
    let _ = writeln!(t, "verdict: {} after {} samples", r.verdict, r.samples_used);
    if let Some(cx) = &r.counterexample {
        let _ = writeln!(
            t,
            "counterexample: sample {} ({})",
            cx.sample_index, cx.diagnostic
        );
    }
    let _ = writeln!(t, "consistent: {}", r.consistent);
    if let Some(a) = &r.advice {
        let _ = writeln!(t, "advice: {a}");
    }
    t
}

#[derive(Serialize)]
struct StateRecord {
    command: &'static str,
    action: &'static str,
    file: FileRecord,
    tolerances: TolerancesRecord,
    dims: [usize; 2],
    kind: &'static str,
    #[serde(flatten)]
    result: StateResult,
}

#[derive(Serialize)]
#[serde(untagged)]
enum StateResult {
    Schmidt { rank: usize, coefficients: Vec<f64> },
    Mes { is_mes: bool, deviation: f64 },
    Entropy { entropy_bits: f64 },
}

pub fn cmd_state(action: StateAction, path: &Path, tol: Tolerances) -> Result<Rendered, CliError> {
    let (src, state) = load_state(path, tol)?;
    let err = |e| CliError::from_core(&src.path, e);
    let (dims, kind) = match &state {
        LoadedState::Pure(p) => (p.dims(), "pure"),
        LoadedState::Mixed(r) => (r.dims(), "mixed"),
    };
    let (name, result) = match (action, &state) {
        (StateAction::Schmidt, LoadedState::Pure(psi)) => {
            let s = schmidt_decompose(psi, tol);
            (
                "schmidt",
                StateResult::Schmidt {
                    rank: s.rank,
                    coefficients: s.coefficients,
                },
            )
        }
        (StateAction::Mes, LoadedState::Pure(psi)) => (
            "mes",
            StateResult::Mes {
                is_mes: is_mes_pure(psi, tol),
                deviation: mes_deviation(&psi.to_density(), tol).map_err(err)?,
            },
        ),
        (StateAction::Mes, LoadedState::Mixed(rho)) => (
            "mes",
            StateResult::Mes {
                is_mes: is_mes_mixed(rho, tol).map_err(err)?,
                deviation: mes_deviation(rho, tol).map_err(err)?,
            },
        ),
        (StateAction::Entropy, LoadedState::Pure(psi)) => (
            "entropy",
            StateResult::Entropy {
                entropy_bits: entanglement_entropy(psi),
            },
        ),
        (StateAction::Schmidt, LoadedState::Mixed(_)) => {
            return Err(CliError::Unsupported(
                "Schmidt decomposition is defined for pure states only".into(),
            ))
        }
        (StateAction::Entropy, LoadedState::Mixed(_)) => {
            return Err(CliError::Unsupported(
                "entanglement entropy is not a valid measure for mixed states".into(),
            ))
        }
    };
    let table = match &result {
        StateResult::Schmidt { rank, coefficients } => {
            let c: Vec<String> = coefficients.iter().map(|x| format!("{x:.12}")).collect();
            format!("schmidt rank: {rank}\ncoefficients: {}\n", c.join(" "))
        }
        StateResult::Mes { is_mes, deviation } => {
            format!("mes: {is_mes} ({kind}, deviation {deviation:e})\n")
        }
        StateResult::Entropy { entropy_bits } => format!("entropy: {entropy_bits:.12} bits\n"),
    };
    let record = StateRecord {
        command: "state",
        action: name,
        file: (&src).into(),
        tolerances: tol.into(),
        dims: [dims.m, dims.n],
        kind,
        result,
    };
    Ok(Rendered::new(0, &record, table))
}

#[derive(Serialize)]
struct GenRecord {
    command: &'static str,
    kind: GenKind,
    seed: u64,
    path: String,
    sha256: String,
}

fn need<T: Copy>(v: Option<T>, flag: &str, kind: &str) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Usage(format!("{kind} requires --{flag}")))
}

/// The document `gen` would write, as text.
pub fn gen_document(args: &GenArgs) -> Result<String, CliError> {
    let usage = |e: locchan::Error| CliError::Usage(e.to_string());
    let mut rng = Seed(args.seed).rng();
    let kind = args
        .kind
        .to_possible_value()
        .expect("no skipped variants")
        .get_name()
        .to_string();
    let dims = || -> Result<BipartiteDims, CliError> {
        match &args.dims {
            Some(v) => dims_arg(v),
            None => Err(CliError::Usage(format!("{kind} requires --dims"))),
        }
    };
    let channel = |ch: KrausChannel| to_document(&ChannelSpecFile::from_channel(&ch));
    let doc = match args.kind {
        GenKind::Unitary => {
            let d = need(args.d, "d", &kind)?;
            if d == 0 {
                return Err(CliError::Usage("--d must be positive".into()));
            }
            channel(KrausChannel::new(vec![haar_unitary(d, &mut rng)]).map_err(usage)?)
        }
        GenKind::Isometry => {
            let (d_in, d_out) = (
                need(args.d_in, "d-in", &kind)?,
                need(args.d_out, "d-out", &kind)?,
            );
            let v = random_isometry(d_in, d_out, &mut rng).map_err(usage)?;
            channel(KrausChannel::new(vec![v]).map_err(usage)?)
        }
        GenKind::Cptp => {
            let (d_in, d_out) = (
                need(args.d_in, "d-in", &kind)?,
                need(args.d_out, "d-out", &kind)?,
            );
            let e = args.e.unwrap_or(2);
            channel(random_cptp(d_in, d_out, e, &mut rng).map_err(usage)?)
        }
        GenKind::ConstantPure => {
            let (d_in, d_out) = (
                need(args.d_in, "d-in", &kind)?,
                need(args.d_out, "d-out", &kind)?,
            );
            if d_out == 0 {
                return Err(CliError::Usage("--d-out must be positive".into()));
            }
            let omega = haar_vector(d_out, &mut rng);
            channel(constant_pure_channel(&omega, d_in).map_err(usage)?)
        }
        GenKind::Named => {
            let name = args
                .name
                .as_deref()
                .ok_or_else(|| CliError::Usage("named requires --name".into()))?;
            let name: NamedChannel = name.parse().map_err(usage)?;
            let p = need(args.param, "param", &kind)?;
            let d = args.d.unwrap_or(2);
            channel(named_channel(name, p, d).map_err(usage)?)
        }
        GenKind::MesPure => to_document(&StateSpecFile::from_pure(&random_mes_pure(
            dims()?,
            &mut rng,
        ))),
        GenKind::MesMixed => {
            let k = need(args.k, "k", &kind)?;
            let rho = random_mes_mixed(dims()?, k, None, &mut rng).map_err(usage)?;
            to_document(&StateSpecFile::from_density(&rho))
        }
        GenKind::PureRank => {
            let r = need(args.r, "r", &kind)?;
            let psi = random_pure_with_rank(dims()?, r, &mut rng).map_err(usage)?;
            to_document(&StateSpecFile::from_pure(&psi))
        }
    };
    Ok(doc)
}

pub fn cmd_gen(args: &GenArgs) -> Result<Rendered, CliError> {
    let doc = gen_document(args)?;
    let path = args.out.display().to_string();
    std::fs::write(&args.out, &doc)
        .map_err(|e| CliError::Usage(format!("cannot write {path}: {e}")))?;
    let record = GenRecord {
        command: "gen",
        kind: args.kind,
        seed: args.seed,
        sha256: sha256_hex(doc.as_bytes()),
        path,
    };
    let table = format!("{}  sha256:{}\n", record.path, record.sha256);
    Ok(Rendered::new(0, &record, table))
}
