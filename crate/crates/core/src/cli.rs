//! The `glh` command line: one subcommand per pipeline stage plus `run`,
//! which chains stages from a JSON config.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::circuits::{catalog_entry, toy_catalog, Circuit};
use crate::clockham::{
    build_clock_hamiltonian_with, clock_instance, clock_report, default_fidelity_promise, gap_certificate,
    recommended_delta, Backend, ClockReport, GapReport, InputPenalty,
};
use crate::error::{GlhError, Result};
use crate::excited::{lift_instance, GadgetOptions, NormSource, Rescaling};
use crate::gadgets::{certify_simulation, reduce_instance, reduce_instance_auto, MediatorRecord, SimulationCertificate};
use crate::guidestates::GuideState;
use crate::hamcore::Hamiltonian;
use crate::io;
use crate::spectra::{decide, DecisionReport, GlhleInstance, Verdict};

pub const EXIT_USAGE: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_CAPACITY: i32 = 4;
pub const EXIT_NO_CONVERGENCE: i32 = 5;
pub const EXIT_GAP: i32 = 6;
pub const EXIT_DEGENERACY: i32 = 7;
pub const EXIT_FORMAT: i32 = 8;
pub const EXIT_IO: i32 = 9;
pub const EXIT_CHECK_FAILED: i32 = 10;

const EXIT_CODES: &str = "\
Exit codes:
  0   success
  2   usage error (unknown subcommand or flag, bad value)
  3   validation error (input violates a precondition)
  4   capacity exceeded (dimension, subset size or nnz budget; see GLH_DIM_CAP)
  5   eigensolver did not converge
  6   gap precondition violated
  7   unresolvable degeneracy
  8   malformed artifact (bad header, kind or JSON)
  9   file system error
  10  a checked invariant failed (certificate, expected verdict, gap bound)";

pub fn exit_code(err: &GlhError) -> i32 {
    match err {
        GlhError::Validation(_) => EXIT_VALIDATION,
        GlhError::Capacity { .. } => EXIT_CAPACITY,
        GlhError::NoConvergence { .. } => EXIT_NO_CONVERGENCE,
        GlhError::GapPrecondition(_) => EXIT_GAP,
        GlhError::Degeneracy(_) => EXIT_DEGENERACY,
        GlhError::Format(_) | GlhError::Json(_) => EXIT_FORMAT,
        GlhError::Io(_) => EXIT_IO,
    }
}

#[derive(Parser, Debug)]
#[command(name = "glh", version, about = "Guided local Hamiltonian instances from small circuits", after_help = EXIT_CODES)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the clock Hamiltonian of a circuit and its ground-state instance.
    BuildClock(BuildClockArgs),
    /// Move an instance's ground state to level c with the excited-state gadget.
    Lift(LiftArgs),
    /// Reduce an instance to 2- or 3-local form with mediator gadgets.
    Reduce(ReduceArgs),
    /// Check a simulation certificate between two Hamiltonians.
    Certify(CertifyArgs),
    /// Decide an instance: YES, NO or PROMISE-VIOLATED.
    Decide(DecideArgs),
    /// Draw samples from a guiding state.
    Sample(SampleArgs),
    /// List the toy circuits.
    Catalog,
    /// Render a stored artifact as a table.
    Report(ReportArgs),
    /// Run a pipeline config.
    Run(RunArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BackendArg {
    Unary,
    Direct,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum PenaltyArg {
    Sum,
    Product,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum RescalingArg {
    Printed,
    Symmetric,
    Auto,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum NormArg {
    Exact,
    Bound,
}

#[derive(Args, Debug)]
struct CircuitSource {
    /// Circuit artifact.
    #[arg(long, conflicts_with = "catalog", required_unless_present = "catalog")]
    circuit: Option<PathBuf>,
    /// Name of a catalog circuit.
    #[arg(long)]
    catalog: Option<String>,
}

#[derive(Args, Debug)]
struct BuildClockArgs {
    #[command(flatten)]
    source: CircuitSource,
    /// Identity steps appended before the verifier gates.
    #[arg(long, default_value_t = 0)]
    idle: usize,
    /// Clock weight Δ, or "auto" for the recommended value.
    #[arg(long, default_value = "auto")]
    delta: String,
    #[arg(long, value_enum, default_value = "unary")]
    backend: BackendArg,
    #[arg(long, value_enum, default_value = "sum")]
    input_penalty: PenaltyArg,
    /// Fidelity promise δ; defaults to half of N/(m+N+1).
    #[arg(long)]
    fidelity_promise: Option<f64>,
    /// Instance (unary) or report (direct).
    #[arg(long)]
    out: PathBuf,
    /// Report file for the unary backend.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct LiftArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    c: usize,
    #[arg(long, value_enum, default_value = "auto")]
    rescaling: RescalingArg,
    #[arg(long, value_enum, default_value = "exact")]
    norm: NormArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ReduceArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value_t = 2)]
    to_locality: usize,
    /// First-round gadget strength Δ_g, or "auto" to search upward from 10³‖H‖.
    #[arg(long, default_value = "auto")]
    strength: String,
    #[arg(long)]
    out: PathBuf,
    /// Where to write the measured certificate.
    #[arg(long)]
    cert: Option<PathBuf>,
    /// Where to write the input Hamiltonian H.
    #[arg(long)]
    h: Option<PathBuf>,
    /// Where to write the unnormalised gadget output H′.
    #[arg(long)]
    hprime: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CertifyArgs {
    #[arg(long)]
    h: PathBuf,
    #[arg(long)]
    hprime: PathBuf,
    #[arg(long)]
    cert: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct DecideArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SampleArgs {
    /// State artifact, or an instance whose guide is sampled.
    #[arg(long)]
    state: PathBuf,
    #[arg(long)]
    shots: usize,
    #[arg(long)]
    seed: u64,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// Any glh artifact.
    file: PathBuf,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the config's output_dir.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

/// Parse `args` (including the program name) and run, writing to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::BuildClock(a) => build_clock_cmd(a, out),
        Command::Lift(a) => lift_cmd(a, out),
        Command::Reduce(a) => reduce_cmd(a, out),
        Command::Certify(a) => certify_cmd(a, out),
        Command::Decide(a) => decide_cmd(a, out),
        Command::Sample(a) => sample_cmd(a, out),
        Command::Catalog => catalog_cmd(out),
        Command::Report(a) => report_cmd(a, out),
        Command::Run(a) => run_cmd(a, out),
    }
}

fn parse_auto(value: &str, what: &str) -> Result<Option<f64>> {
    if value == "auto" {
        return Ok(None);
    }
    value
        .parse::<f64>()
        .map(Some)
        .map_err(|_| GlhError::Validation(format!("{what} must be a number or \"auto\", got {value:?}")))
}

/// A catalog name, or a path to a circuit artifact.
pub fn load_circuit(spec: &str) -> Result<Circuit> {
    if let Ok(entry) = catalog_entry(spec) {
        return Ok(entry.circuit);
    }
    io::read_circuit(Path::new(spec))
}

/// Everything measured while building a clock instance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BuildReport {
    pub clock: ClockReport,
    pub gap: GapReport,
    pub input_penalty: InputPenalty,
    pub normalization_factor: Option<f64>,
    pub fidelity_promise: Option<f64>,
}

struct ClockBuild {
    report: BuildReport,
    instance: Option<GlhleInstance>,
}

fn build_clock(
    circuit: &Circuit,
    idle: usize,
    delta: Option<f64>,
    backend: Backend,
    penalty: InputPenalty,
    promise: Option<f64>,
) -> Result<ClockBuild> {
    let idled = circuit.idle(idle);
    let delta = delta.unwrap_or_else(|| recommended_delta(idled.total_gates()));
    let ch = build_clock_hamiltonian_with(&idled, delta, backend, penalty)?;
    let clock = clock_report(&ch)?;
    let gap = gap_certificate(&ch)?;
    let (instance, factor, promise) = if backend == Backend::Unary {
        let promise = promise.unwrap_or_else(|| default_fidelity_promise(&idled));
        let (inst, f) = clock_instance(&ch, promise)?;
        (Some(inst), Some(f), Some(promise))
    } else {
        (None, None, None)
    };
    Ok(ClockBuild {
        report: BuildReport {
            clock,
            gap,
            input_penalty: penalty,
            normalization_factor: factor,
            fidelity_promise: promise,
        },
        instance,
    })
}

fn build_clock_cmd(a: BuildClockArgs, out: &mut dyn Write) -> Result<i32> {
    let circuit = match (&a.source.circuit, &a.source.catalog) {
        (Some(p), _) => io::read_circuit(p)?,
        (None, Some(name)) => catalog_entry(name)?.circuit,
        (None, None) => unreachable!("clap requires one source"),
    };
    let backend = match a.backend {
        BackendArg::Unary => Backend::Unary,
        BackendArg::Direct => Backend::Direct,
    };
    let penalty = match a.input_penalty {
        PenaltyArg::Sum => InputPenalty::Sum,
        PenaltyArg::Product => InputPenalty::Product,
    };
    let build = build_clock(&circuit, a.idle, parse_auto(&a.delta, "--delta")?, backend, penalty, a.fidelity_promise)?;
    let r = &build.report;
    writeln!(
        out,
        "M={} Δ={} λ0={:.12e} λ1={:.12e} gap={:.12e} overlap²={:.12} a={:.12e} b={:.12e}",
        r.clock.clock_steps, r.clock.delta, r.clock.lambda0, r.clock.lambda1, r.clock.gap, r.clock.history_overlap_sq, r.clock.a, r.clock.b
    )?;
    writeln!(out, "H0 gap {:.12e} vs bound {:.12e}: {}", r.gap.lambda1, r.gap.threshold, if r.gap.holds { "holds" } else { "FAILS" })?;
    match &build.instance {
        Some(inst) => {
            io::write_instance(&a.out, inst)?;
            if let Some(p) = &a.report {
                io::write_artifact(p, "clock-report", r)?;
            }
        }
        None => io::write_artifact(&a.out, "clock-report", r)?,
    }
    Ok(if r.gap.holds { 0 } else { EXIT_CHECK_FAILED })
}

fn gadget_options(rescaling: RescalingArg, norm: NormArg) -> GadgetOptions {
    GadgetOptions {
        rescaling: match rescaling {
            RescalingArg::Printed => Rescaling::Printed,
            RescalingArg::Symmetric => Rescaling::Symmetric,
            RescalingArg::Auto => Rescaling::Auto,
        },
        norm: match norm {
            NormArg::Exact => NormSource::Exact,
            NormArg::Bound => NormSource::Bound,
        },
    }
}

fn lift_cmd(a: LiftArgs, out: &mut dyn Write) -> Result<i32> {
    let inst = io::read_instance(&a.instance)?;
    let lifted = lift_instance(&inst, a.c, &gadget_options(a.rescaling, a.norm))?;
    io::write_instance(&a.out, &lifted.instance)?;
    writeln!(
        out,
        "lifted to level {} on {} qubits; a={:.12e} b={:.12e} normalization={:.12e}",
        lifted.instance.c,
        lifted.instance.hamiltonian.n_qubits(),
        lifted.instance.a,
        lifted.instance.b,
        lifted.factor
    )?;
    Ok(0)
}

/// What `reduce` records next to the reduced instance.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReductionSummary {
    pub ratio: f64,
    pub offset: f64,
    pub normalization_factor: f64,
    pub output_qubits: usize,
    pub rounds: Vec<RoundSummary>,
    pub certificate: SimulationCertificate,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RoundSummary {
    pub kind: crate::gadgets::GadgetKind,
    pub strength: f64,
    pub offset: f64,
    pub mediators: Vec<MediatorRecord>,
}

struct Reduction {
    input: Hamiltonian,
    output: Hamiltonian,
    instance: GlhleInstance,
    summary: ReductionSummary,
}

fn reduce(inst: &GlhleInstance, target: usize, strength: Option<f64>) -> Result<Reduction> {
    let red = match strength {
        Some(delta_g) => reduce_instance(inst, target, delta_g)?,
        None => reduce_instance_auto(inst, target)?,
    };
    let summary = ReductionSummary {
        ratio: red.chain.ratio,
        offset: red.chain.offset(),
        normalization_factor: red.factor,
        output_qubits: red.chain.output().n_qubits(),
        rounds: red
            .chain
            .steps
            .iter()
            .map(|s| RoundSummary {
                kind: s.kind,
                strength: s.strength,
                offset: s.offset,
                mediators: s.mediators.clone(),
            })
            .collect(),
        certificate: red.certificate.clone(),
    };
    Ok(Reduction {
        input: inst.hamiltonian.clone(),
        output: red.chain.output().clone(),
        instance: red.instance,
        summary,
    })
}

fn reduce_cmd(a: ReduceArgs, out: &mut dyn Write) -> Result<i32> {
    let inst = io::read_instance(&a.instance)?;
    let r = reduce(&inst, a.to_locality, parse_auto(&a.strength, "--strength")?)?;
    io::write_instance(&a.out, &r.instance)?;
    if let Some(p) = &a.cert {
        io::write_artifact(p, "certificate", &r.summary.certificate)?;
    }
    if let Some(p) = &a.h {
        io::write_hamiltonian(p, &r.input)?;
    }
    if let Some(p) = &a.hprime {
        io::write_hamiltonian(p, &r.output)?;
    }
    let cert = &r.summary.certificate;
    writeln!(
        out,
        "{} rounds, {} qubits, offset {:.12e}; measured ε={:.6e} η={:.6e}",
        r.summary.rounds.len(),
        r.summary.output_qubits,
        r.summary.offset,
        cert.epsilon.unwrap_or(f64::NAN),
        cert.eta.unwrap_or(f64::NAN)
    )?;
    Ok(0)
}

fn certify_cmd(a: CertifyArgs, out: &mut dyn Write) -> Result<i32> {
    let h = io::read_hamiltonian(&a.h)?;
    let hp = io::read_hamiltonian(&a.hprime)?;
    let cert: SimulationCertificate = io::read_artifact(&a.cert, "certificate")?;
    let report = certify_simulation(&h, &hp, &cert)?;
    if let Some(p) = &a.report {
        io::write_artifact(p, "certification-report", &report)?;
    }
    writeln!(
        out,
        "{} measured ε={:.6e} η={:.6e} max eigenvalue deviation={:.6e}{}",
        if report.ok { "OK" } else { "FAILED" },
        report.measured_epsilon,
        report.measured_eta,
        report.eigenvalue_deviation,
        if report.degenerate_cut { " (cut inside a degenerate cluster)" } else { "" }
    )?;
    Ok(if report.ok { 0 } else { EXIT_CHECK_FAILED })
}

fn decide_cmd(a: DecideArgs, out: &mut dyn Write) -> Result<i32> {
    let inst = io::read_instance(&a.instance)?;
    let d = decide(&inst)?;
    if let Some(p) = &a.report {
        io::write_artifact(p, "decision-report", &d)?;
    }
    write_decision(out, &d)?;
    Ok(0)
}

fn write_decision(out: &mut dyn Write, d: &DecisionReport) -> Result<()> {
    writeln!(out, "{}", d.verdict)?;
    writeln!(
        out,
        "λ_{}={:.12e} a={:.12e} b={:.12e} fidelity={:.12} δ={:.12}",
        d.c, d.lambda_c, d.a, d.b, d.fidelity, d.delta
    )?;
    for r in &d.reasons {
        writeln!(out, "  {r}")?;
    }
    Ok(())
}

/// A guide read either from a state artifact or from an instance.
pub fn load_guide(path: &Path) -> Result<GuideState> {
    let text = std::fs::read_to_string(path)?;
    let (kind, _) = io::split_artifact(&text)?;
    match kind.as_str() {
        "state" => io::from_artifact_str::<io::StateDoc>("state", &text)?.to_state(),
        "instance" => Ok(io::from_artifact_str::<io::InstanceDoc>("instance", &text)?.to_instance()?.guide),
        other => Err(GlhError::Format(format!("cannot sample from a {other} artifact"))),
    }
}

/// Samples as bit strings (qubit 0 first) plus a sorted histogram.
pub fn sample_text(guide: &GuideState, shots: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples = guide.sample_many(&mut rng, shots);
    let mut hist: BTreeMap<String, usize> = BTreeMap::new();
    let mut text = String::new();
    for s in &samples {
        let bits = s.to_string();
        let _ = writeln!(text, "{bits}");
        *hist.entry(bits).or_default() += 1;
    }
    let _ = writeln!(text, "# histogram ({shots} shots, seed {seed})");
    for (bits, count) in &hist {
        let _ = writeln!(text, "# {bits} {count} {:.6}", *count as f64 / shots.max(1) as f64);
    }
    text
}

fn sample_cmd(a: SampleArgs, out: &mut dyn Write) -> Result<i32> {
    let guide = load_guide(&a.state)?;
    out.write_all(sample_text(&guide, a.shots, a.seed).as_bytes())?;
    Ok(0)
}

fn catalog_cmd(out: &mut dyn Write) -> Result<i32> {
    writeln!(out, "{:<18} {:>6} {:>5} {:>9}  description", "name", "qubits", "gates", "p_accept")?;
    for e in toy_catalog() {
        writeln!(
            out,
            "{:<18} {:>6} {:>5} {:>9.4}  {}",
            e.name,
            e.circuit.n_qubits(),
            e.circuit.gates().len(),
            e.expected_acceptance,
            e.description
        )?;
    }
    Ok(0)
}

fn flatten(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&key, x, rows);
            }
        }
        Value::Array(items) if items.iter().all(|x| !x.is_object() && !x.is_array()) => {
            const SHOWN: usize = 12;
            let mut parts: Vec<String> = items.iter().take(SHOWN).map(scalar).collect();
            if items.len() > SHOWN {
                parts.push(format!("… ({} total)", items.len()));
            }
            rows.push((prefix.to_string(), format!("[{}]", parts.join(", "))));
        }
        Value::Array(items) => {
            for (i, x) in items.iter().enumerate() {
                flatten(&format!("{prefix}[{i}]"), x, rows);
            }
        }
        other => rows.push((prefix.to_string(), scalar(other))),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => "-".into(),
        other => other.to_string(),
    }
}

/// Human-readable rendering of an artifact body.
pub fn render_report(kind: &str, body: &Value) -> String {
    let mut rows = Vec::new();
    flatten("", body, &mut rows);
    let width = rows.iter().map(|(k, _)| k.chars().count()).max().unwrap_or(0);
    let mut text = format!("kind: {kind}\n");
    for (k, v) in rows {
        let pad = width - k.chars().count();
        let _ = writeln!(text, "{k}{}  {v}", " ".repeat(pad));
    }
    text
}

fn report_cmd(a: ReportArgs, out: &mut dyn Write) -> Result<i32> {
    let (kind, body) = io::split_artifact(&std::fs::read_to_string(&a.file)?)?;
    out.write_all(render_report(&kind, &body).as_bytes())?;
    Ok(0)
}

fn two() -> usize {
    2
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Caps {
    /// Largest Hilbert-space dimension any stage may produce.
    #[serde(default)]
    pub max_dim: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Stage {
    BuildClock {
        /// Catalog name or circuit artifact path.
        circuit: String,
        #[serde(default)]
        idle: usize,
        #[serde(default)]
        delta: Option<f64>,
        #[serde(default)]
        fidelity_promise: Option<f64>,
    },
    Load {
        instance: PathBuf,
    },
    Lift {
        c: usize,
        #[serde(default)]
        rescaling: Option<Rescaling>,
    },
    Reduce {
        #[serde(default = "two")]
        to_locality: usize,
        #[serde(default)]
        strength: Option<f64>,
    },
    Certify,
    Sample {
        shots: usize,
    },
    Decide {
        #[serde(default)]
        expect: Option<Verdict>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Carried {
    Nothing,
    Instance,
    Reduced,
    Decision,
}

impl Stage {
    pub fn name(&self) -> &'static str {
        match self {
            Stage::BuildClock { .. } => "build-clock",
            Stage::Load { .. } => "load",
            Stage::Lift { .. } => "lift",
            Stage::Reduce { .. } => "reduce",
            Stage::Certify => "certify",
            Stage::Sample { .. } => "sample",
            Stage::Decide { .. } => "decide",
        }
    }

    fn transition(&self, input: Carried) -> Option<Carried> {
        use Carried::*;
        match (self, input) {
            (Stage::BuildClock { .. } | Stage::Load { .. }, Nothing) => Some(Instance),
            (Stage::Lift { .. }, Instance) => Some(Instance),
            (Stage::Reduce { .. }, Instance | Reduced) => Some(Reduced),
            (Stage::Certify, Reduced) => Some(Reduced),
            (Stage::Sample { .. }, Instance) => Some(Instance),
            (Stage::Sample { .. }, Reduced) => Some(Reduced),
            (Stage::Decide { .. }, Instance | Reduced) => Some(Decision),
            _ => None,
        }
    }
}

/// A pipeline: ordered stages, a mandatory seed and an output directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub caps: Caps,
    pub stages: Vec<Stage>,
}

impl PipelineConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Every stage must accept what the previous one produces.
    pub fn validate(&self) -> Result<()> {
        if self.stages.is_empty() {
            return Err(GlhError::Validation("pipeline has no stages".into()));
        }
        let mut carried = Carried::Nothing;
        for (i, s) in self.stages.iter().enumerate() {
            carried = s.transition(carried).ok_or_else(|| {
                GlhError::Validation(format!("stage {} ({}) cannot follow {:?}", i + 1, s.name(), carried))
            })?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub artifacts: Vec<String>,
    pub ok: bool,
    pub summary: Value,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PipelineReport {
    pub seed: u64,
    pub ok: bool,
    pub stages: Vec<StageRecord>,
    pub error: Option<String>,
}

struct PipelineState {
    instance: Option<GlhleInstance>,
    reduction: Option<Reduction>,
}

fn check_caps(caps: &Caps, inst: &GlhleInstance) -> Result<()> {
    if let Some(cap) = caps.max_dim {
        let dim = inst.hamiltonian.dim();
        if dim > cap {
            return Err(GlhError::Capacity {
                what: "pipeline dimension".into(),
                needed: dim as u128,
                limit: cap as u128,
            });
        }
    }
    Ok(())
}

fn run_stage(cfg: &PipelineConfig, dir: &Path, idx: usize, stage: &Stage, st: &mut PipelineState) -> Result<StageRecord> {
    let base = format!("{:02}-{}", idx + 1, stage.name());
    let file = |suffix: &str| format!("{base}{suffix}.json");
    let mut artifacts = Vec::new();
    let mut ok = true;
    let summary;
    match stage {
        Stage::BuildClock {
            circuit,
            idle,
            delta,
            fidelity_promise,
        } => {
            let c = load_circuit(circuit)?;
            let build = build_clock(&c, *idle, *delta, Backend::Unary, InputPenalty::Sum, *fidelity_promise)?;
            let inst = build.instance.expect("unary build yields an instance");
            check_caps(&cfg.caps, &inst)?;
            io::write_instance(&dir.join(file("")), &inst)?;
            io::write_artifact(&dir.join(file("-report")), "clock-report", &build.report)?;
            artifacts.extend([file(""), file("-report")]);
            ok = build.report.gap.holds;
            summary = serde_json::to_value(&build.report)?;
            st.instance = Some(inst);
            st.reduction = None;
        }
        Stage::Load { instance } => {
            let inst = io::read_instance(instance)?;
            check_caps(&cfg.caps, &inst)?;
            summary = json!({ "qubits": inst.hamiltonian.n_qubits(), "c": inst.c, "a": inst.a, "b": inst.b, "delta": inst.delta });
            st.instance = Some(inst);
        }
        Stage::Lift { c, rescaling } => {
            let inst = st.instance.as_ref().expect("validated chain");
            let opts = GadgetOptions {
                rescaling: rescaling.unwrap_or(Rescaling::Auto),
                ..GadgetOptions::default()
            };
            let lifted = lift_instance(inst, *c, &opts)?;
            check_caps(&cfg.caps, &lifted.instance)?;
            io::write_instance(&dir.join(file("")), &lifted.instance)?;
            artifacts.push(file(""));
            summary = json!({
                "c": lifted.instance.c,
                "qubits": lifted.instance.hamiltonian.n_qubits(),
                "a": lifted.instance.a,
                "b": lifted.instance.b,
                "normalization_factor": lifted.factor,
            });
            st.instance = Some(lifted.instance);
        }
        Stage::Reduce { to_locality, strength } => {
            let inst = st.instance.as_ref().expect("validated chain");
            let r = reduce(inst, *to_locality, *strength)?;
            check_caps(&cfg.caps, &r.instance)?;
            io::write_instance(&dir.join(file("")), &r.instance)?;
            io::write_hamiltonian(&dir.join(file("-h")), &r.input)?;
            io::write_hamiltonian(&dir.join(file("-hprime")), &r.output)?;
            io::write_artifact(&dir.join(file("-certificate")), "certificate", &r.summary.certificate)?;
            io::write_artifact(&dir.join(file("-summary")), "reduction", &r.summary)?;
            artifacts.extend([file(""), file("-h"), file("-hprime"), file("-certificate"), file("-summary")]);
            summary = serde_json::to_value(&r.summary)?;
            st.instance = Some(r.instance.clone());
            st.reduction = Some(r);
        }
        Stage::Certify => {
            let r = st.reduction.as_ref().expect("validated chain");
            let report = certify_simulation(&r.input, &r.output, &r.summary.certificate)?;
            io::write_artifact(&dir.join(file("")), "certification-report", &report)?;
            artifacts.push(file(""));
            ok = report.ok;
            summary = json!({
                "ok": report.ok,
                "measured_epsilon": report.measured_epsilon,
                "measured_eta": report.measured_eta,
                "eigenvalue_deviation": report.eigenvalue_deviation,
                "degenerate_cut": report.degenerate_cut,
            });
        }
        Stage::Sample { shots } => {
            let inst = st.instance.as_ref().expect("validated chain");
            let text = sample_text(&inst.guide, *shots, cfg.seed);
            std::fs::write(dir.join(format!("{base}.txt")), &text)?;
            artifacts.push(format!("{base}.txt"));
            summary = json!({ "shots": shots, "seed": cfg.seed });
        }
        Stage::Decide { expect } => {
            let inst = st.instance.as_ref().expect("validated chain");
            let d = decide(inst)?;
            io::write_artifact(&dir.join(file("")), "decision-report", &d)?;
            artifacts.push(file(""));
            ok = expect.is_none_or(|v| v == d.verdict);
            summary = json!({
                "verdict": d.verdict,
                "expected": expect,
                "lambda_c": d.lambda_c,
                "a": d.a,
                "b": d.b,
                "fidelity": d.fidelity,
                "delta": d.delta,
            });
        }
    }
    Ok(StageRecord {
        stage: stage.name().into(),
        artifacts,
        ok,
        summary,
    })
}

/// Run every stage, writing one artifact per stage and a final report.
/// Returns the report; `ok` is true iff every checked invariant held.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineReport> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.output_dir)?;
    let mut st = PipelineState {
        instance: None,
        reduction: None,
    };
    let mut report = PipelineReport {
        seed: cfg.seed,
        ok: true,
        stages: Vec::new(),
        error: None,
    };
    let mut failure = None;
    for (i, stage) in cfg.stages.iter().enumerate() {
        match run_stage(cfg, &cfg.output_dir, i, stage, &mut st) {
            Ok(rec) => {
                report.ok &= rec.ok;
                report.stages.push(rec);
            }
            Err(e) => {
                report.ok = false;
                report.error = Some(format!("stage {} ({}): {e}", i + 1, stage.name()));
                failure = Some(e);
                break;
            }
        }
    }
    io::write_artifact(&cfg.output_dir.join("report.json"), "pipeline-report", &report)?;
    match failure {
        Some(e) => Err(with_context(e, report.error.as_deref().unwrap_or_default())),
        None => Ok(report),
    }
}

/// Prefix an error with its stage while keeping the variant (and exit code).
fn with_context(e: GlhError, ctx: &str) -> GlhError {
    let ctx = ctx.split(": ").next().unwrap_or(ctx);
    match e {
        GlhError::Validation(m) => GlhError::Validation(format!("{ctx}: {m}")),
        GlhError::Capacity { what, needed, limit } => GlhError::Capacity {
            what: format!("{ctx}: {what}"),
            needed,
            limit,
        },
        GlhError::GapPrecondition(m) => GlhError::GapPrecondition(format!("{ctx}: {m}")),
        GlhError::Degeneracy(m) => GlhError::Degeneracy(format!("{ctx}: {m}")),
        GlhError::Format(m) => GlhError::Format(format!("{ctx}: {m}")),
        GlhError::Json(j) => GlhError::Format(format!("{ctx}: {j}")),
        GlhError::Io(io) => GlhError::Io(std::io::Error::new(io.kind(), format!("{ctx}: {io}"))),
        other @ GlhError::NoConvergence { .. } => other,
    }
}

fn run_cmd(a: RunArgs, out: &mut dyn Write) -> Result<i32> {
    let mut cfg = PipelineConfig::from_json(&std::fs::read_to_string(&a.config)?)?;
    if let Some(dir) = a.output_dir {
        cfg.output_dir = dir;
    }
    let report = run_pipeline(&cfg)?;
    for s in &report.stages {
        writeln!(out, "{:<12} {}", s.stage, if s.ok { "ok" } else { "FAILED" })?;
        if let Some(v) = s.summary.get("verdict") {
            writeln!(out, "  verdict {}", scalar(v))?;
        }
        if let Some(e) = s.summary.get("measured_epsilon") {
            writeln!(out, "  measured ε {}", scalar(e))?;
        }
    }
    Ok(if report.ok { 0 } else { EXIT_CHECK_FAILED })
}
