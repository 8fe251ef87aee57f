//! Versioned JSON artifacts: `{"format": "glh", "version": 1, "kind": .., "body": ..}`.
//!
//! Matrices are row-major lists of `[re, im]` pairs and bit strings are hex,
//! so every f64 survives a round trip exactly.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::circuits::{Circuit, Gate};
use crate::error::{GlhError, Result};
use crate::guidestates::{BitString, EncodedState, GuideState, SubsetState};
use crate::hamcore::{FamilyTag, Hamiltonian, InteractionTerm};
use crate::linalg::{CMatrix, C64};
use crate::spectra::GlhleInstance;

pub const FORMAT: &str = "glh";
pub const VERSION: u32 = 1;

fn format_err(msg: impl Into<String>) -> GlhError {
    GlhError::Format(msg.into())
}

pub fn entries(m: &CMatrix) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            out.push([z.re, z.im]);
        }
    }
    out
}

pub fn matrix_from_entries(rows: usize, cols: usize, data: &[[f64; 2]]) -> Result<CMatrix> {
    if data.len() != rows * cols {
        return Err(format_err(format!("expected {} matrix entries, found {}", rows * cols, data.len())));
    }
    Ok(CMatrix::from_row_iterator(rows, cols, data.iter().map(|&[re, im]| C64::new(re, im))))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermDoc {
    pub support: Vec<usize>,
    pub weight: f64,
    pub matrix: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianDoc {
    pub n_qubits: usize,
    pub family_tag: Option<String>,
    pub positive_weights_only: bool,
    pub terms: Vec<TermDoc>,
}

impl From<&Hamiltonian> for HamiltonianDoc {
    fn from(h: &Hamiltonian) -> Self {
        Self {
            n_qubits: h.n_qubits(),
            family_tag: h.family_tag.as_ref().map(|t| t.as_str().to_string()),
            positive_weights_only: h.positive_weights_only(),
            terms: h
                .terms()
                .iter()
                .map(|t| TermDoc {
                    support: t.support().to_vec(),
                    weight: t.weight(),
                    matrix: entries(t.matrix()),
                })
                .collect(),
        }
    }
}

impl HamiltonianDoc {
    pub fn to_hamiltonian(&self) -> Result<Hamiltonian> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let dim = 1usize << t.support.len();
            terms.push(InteractionTerm::new(t.support.clone(), matrix_from_entries(dim, dim, &t.matrix)?, t.weight)?);
        }
        let mut h = Hamiltonian::from_terms(self.n_qubits, terms)?;
        if let Some(tag) = &self.family_tag {
            h = h.with_family(FamilyTag::parse(tag));
        }
        if self.positive_weights_only {
            h = h.with_positive_weights_only()?;
        }
        Ok(h)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateDoc {
    pub label: String,
    pub support: Vec<usize>,
    pub unitary: Vec<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitDoc {
    pub n_input: usize,
    pub n_ancilla: usize,
    /// Qubit 0 first.
    pub input_x: String,
    pub output_qubit: usize,
    pub gates: Vec<GateDoc>,
}

impl From<&Circuit> for CircuitDoc {
    fn from(c: &Circuit) -> Self {
        Self {
            n_input: c.n_input,
            n_ancilla: c.n_ancilla,
            input_x: c.input_x().to_string(),
            output_qubit: c.output_qubit,
            gates: c
                .gates()
                .iter()
                .map(|g| GateDoc {
                    label: g.label.clone(),
                    support: g.support().to_vec(),
                    unitary: entries(g.matrix()),
                })
                .collect(),
        }
    }
}

impl CircuitDoc {
    pub fn to_circuit(&self) -> Result<Circuit> {
        let mut gates = Vec::with_capacity(self.gates.len());
        for g in &self.gates {
            let dim = 1usize << g.support.len();
            gates.push(Gate::new(g.label.clone(), g.support.clone(), matrix_from_entries(dim, dim, &g.unitary)?)?);
        }
        Circuit::new(self.n_input, self.n_ancilla, gates, BitString::parse(&self.input_x)?, self.output_qubit)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixDoc {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<[f64; 2]>,
}

impl From<&CMatrix> for MatrixDoc {
    fn from(m: &CMatrix) -> Self {
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            data: entries(m),
        }
    }
}

impl MatrixDoc {
    pub fn to_matrix(&self) -> Result<CMatrix> {
        matrix_from_entries(self.rows, self.cols, &self.data)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum StateDoc {
    Subset {
        n: usize,
        elements: Vec<String>,
    },
    Encoded {
        n: usize,
        elements: Vec<String>,
        isometries: Vec<MatrixDoc>,
    },
}

fn hex_elements(s: &SubsetState) -> Vec<String> {
    s.elements().iter().map(|b| b.to_hex()).collect()
}

fn parse_subset(n: usize, elements: &[String]) -> Result<SubsetState> {
    let bits = elements
        .iter()
        .map(|h| BitString::from_hex(h, n))
        .collect::<Result<Vec<_>>>()?;
    SubsetState::new(n, bits)
}

impl From<&GuideState> for StateDoc {
    fn from(g: &GuideState) -> Self {
        match g {
            GuideState::Subset(s) => Self::Subset {
                n: s.n_qubits(),
                elements: hex_elements(s),
            },
            GuideState::Encoded(e) => Self::Encoded {
                n: e.base().n_qubits(),
                elements: hex_elements(e.base()),
                isometries: e.isometries().iter().map(MatrixDoc::from).collect(),
            },
        }
    }
}

impl StateDoc {
    pub fn to_state(&self) -> Result<GuideState> {
        match self {
            Self::Subset { n, elements } => Ok(GuideState::Subset(parse_subset(*n, elements)?)),
            Self::Encoded { n, elements, isometries } => {
                let isos = isometries.iter().map(MatrixDoc::to_matrix).collect::<Result<Vec<_>>>()?;
                Ok(GuideState::Encoded(EncodedState::new(parse_subset(*n, elements)?, isos)?))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceDoc {
    pub hamiltonian: HamiltonianDoc,
    pub guide: StateDoc,
    pub c: usize,
    pub a: f64,
    pub b: f64,
    pub delta: f64,
}

impl From<&GlhleInstance> for InstanceDoc {
    fn from(inst: &GlhleInstance) -> Self {
        Self {
            hamiltonian: HamiltonianDoc::from(&inst.hamiltonian),
            guide: StateDoc::from(&inst.guide),
            c: inst.c,
            a: inst.a,
            b: inst.b,
            delta: inst.delta,
        }
    }
}

impl InstanceDoc {
    pub fn to_instance(&self) -> Result<GlhleInstance> {
        GlhleInstance::new(self.hamiltonian.to_hamiltonian()?, self.guide.to_state()?, self.c, self.a, self.b, self.delta)
    }
}

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    format: String,
    version: u32,
    kind: String,
    body: T,
}

pub fn to_artifact_string<T: Serialize>(kind: &str, body: &T) -> Result<String> {
    let env = Envelope {
        format: FORMAT.into(),
        version: VERSION,
        kind: kind.into(),
        body,
    };
    let mut s = serde_json::to_string_pretty(&env)?;
    s.push('\n');
    Ok(s)
}

/// Parse an artifact, checking the header and kind.
pub fn from_artifact_str<T: DeserializeOwned>(kind: &str, text: &str) -> Result<T> {
    let (found, body) = split_artifact(text)?;
    if found != kind {
        return Err(format_err(format!("expected a {kind} artifact, found {found}")));
    }
    Ok(serde_json::from_value(body)?)
}

/// Kind and raw body of an artifact.
pub fn split_artifact(text: &str) -> Result<(String, Value)> {
    let env: Envelope<Value> = serde_json::from_str(text)?;
    if env.format != FORMAT {
        return Err(format_err(format!("not a glh artifact (format {:?})", env.format)));
    }
    if env.version != VERSION {
        return Err(format_err(format!("unsupported version {}", env.version)));
    }
    Ok((env.kind, env.body))
}

pub fn write_artifact<T: Serialize>(path: &Path, kind: &str, body: &T) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, to_artifact_string(kind, body)?)?;
    Ok(())
}

pub fn read_artifact<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<T> {
    from_artifact_str(kind, &fs::read_to_string(path)?)
}

pub fn write_hamiltonian(path: &Path, h: &Hamiltonian) -> Result<()> {
    write_artifact(path, "hamiltonian", &HamiltonianDoc::from(h))
}

pub fn read_hamiltonian(path: &Path) -> Result<Hamiltonian> {
    read_artifact::<HamiltonianDoc>(path, "hamiltonian")?.to_hamiltonian()
}

pub fn write_circuit(path: &Path, c: &Circuit) -> Result<()> {
    write_artifact(path, "circuit", &CircuitDoc::from(c))
}

pub fn read_circuit(path: &Path) -> Result<Circuit> {
    read_artifact::<CircuitDoc>(path, "circuit")?.to_circuit()
}

pub fn write_state(path: &Path, g: &GuideState) -> Result<()> {
    write_artifact(path, "state", &StateDoc::from(g))
}

pub fn read_state(path: &Path) -> Result<GuideState> {
    read_artifact::<StateDoc>(path, "state")?.to_state()
}

pub fn write_instance(path: &Path, inst: &GlhleInstance) -> Result<()> {
    write_artifact(path, "instance", &InstanceDoc::from(inst))
}

pub fn read_instance(path: &Path) -> Result<GlhleInstance> {
    read_artifact::<InstanceDoc>(path, "instance")?.to_instance()
}
