//! Operator representation: weighted local Hermitian terms on named qubits,
//! assembly into sparse matrices, norm bounds and Pauli decomposition.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, GlhError, Result};
use crate::linalg::{self, CMatrix, C64, ONE, ZERO};
use crate::sparse::CsrMatrix;

/// Largest support a single term may have.
pub const MAX_TERM_SUPPORT: usize = 6;
/// Absolute tolerance for Hermiticity of term matrices.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Default budget on the number of stored nonzeros during assembly.
pub const DEFAULT_NNZ_BUDGET: u128 = 1 << 24;

/// Nonzero budget, overridable through `GLH_DIM_CAP`.
pub fn nnz_budget() -> u128 {
    std::env::var("GLH_DIM_CAP")
        .ok()
        .and_then(|s| s.trim().parse::<u128>().ok())
        .unwrap_or(DEFAULT_NNZ_BUDGET)
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn matrix(self) -> CMatrix {
        match self {
            Pauli::I => linalg::identity(2),
            Pauli::X => linalg::pauli_x(),
            Pauli::Y => linalg::pauli_y(),
            Pauli::Z => linalg::pauli_z(),
        }
    }

    fn flips(self) -> bool {
        matches!(self, Pauli::X | Pauli::Y)
    }

    /// Phase picked up when acting on basis bit `b`.
    fn phase(self, b: bool) -> C64 {
        match (self, b) {
            (Pauli::I | Pauli::X, _) => ONE,
            (Pauli::Y, false) => linalg::I,
            (Pauli::Y, true) => -linalg::I,
            (Pauli::Z, false) => ONE,
            (Pauli::Z, true) => -ONE,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// A weighted Pauli product; letters absent from the map are identities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PauliString {
    pub n_qubits: usize,
    pub letters: BTreeMap<usize, Pauli>,
    pub coefficient: f64,
}

impl PauliString {
    pub fn new(n_qubits: usize, letters: impl IntoIterator<Item = (usize, Pauli)>, coefficient: f64) -> Self {
        let letters = letters
            .into_iter()
            .filter(|&(_, p)| p != Pauli::I)
            .collect();
        Self {
            n_qubits,
            letters,
            coefficient,
        }
    }

    pub fn locality(&self) -> usize {
        self.letters.len()
    }

    pub fn support(&self) -> Vec<usize> {
        self.letters.keys().copied().collect()
    }

    pub fn letter(&self, q: usize) -> Pauli {
        self.letters.get(&q).copied().unwrap_or(Pauli::I)
    }

    /// Dense matrix of the (unweighted) product on the given ordered support.
    pub fn matrix_on(&self, support: &[usize]) -> CMatrix {
        let ops: Vec<CMatrix> = support.iter().map(|&q| self.letter(q).matrix()).collect();
        linalg::local_product(&ops)
    }

    /// Label like `X0 Z3`, or `I` for the identity.
    pub fn label(&self) -> String {
        if self.letters.is_empty() {
            return "I".into();
        }
        self.letters
            .iter()
            .map(|(q, p)| format!("{}{}", p.letter(), q))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Weighted term with support equal to the non-identity letters.
    pub fn to_term(&self) -> Result<InteractionTerm> {
        let support = self.support();
        let matrix = self.matrix_on(&support);
        InteractionTerm::new(support, matrix, self.coefficient)
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:+.6} {}", self.coefficient, self.label())
    }
}

/// A weighted Hermitian operator on a small ordered support.
#[derive(Clone, Debug, PartialEq)]
pub struct InteractionTerm {
    support: Vec<usize>,
    matrix: CMatrix,
    weight: f64,
}

impl InteractionTerm {
    pub fn new(support: Vec<usize>, matrix: CMatrix, weight: f64) -> Result<Self> {
        if support.len() > MAX_TERM_SUPPORT {
            return Err(invalid(format!(
                "term support {:?} exceeds {MAX_TERM_SUPPORT} qubits",
                support
            )));
        }
        let mut sorted = support.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != support.len() {
            return Err(invalid(format!("term support {support:?} has repeated qubits")));
        }
        let dim = 1usize << support.len();
        if matrix.nrows() != dim || matrix.ncols() != dim {
            return Err(invalid(format!(
                "term matrix is {}x{}, support of size {} needs {dim}x{dim}",
                matrix.nrows(),
                matrix.ncols(),
                support.len()
            )));
        }
        let defect = linalg::hermiticity_defect(&matrix);
        if defect > HERMITIAN_TOL {
            return Err(invalid(format!("term matrix is not Hermitian (defect {defect:.3e})")));
        }
        if !weight.is_finite() {
            return Err(invalid("term weight must be finite"));
        }
        Ok(Self {
            support,
            matrix,
            weight,
        })
    }

    /// Term that is a product of single-qubit Paulis.
    pub fn pauli(letters: &[(usize, Pauli)], weight: f64) -> Result<Self> {
        let support: Vec<usize> = letters.iter().map(|&(q, _)| q).collect();
        let ops: Vec<CMatrix> = letters.iter().map(|&(_, p)| p.matrix()).collect();
        Self::new(support, linalg::local_product(&ops), weight)
    }

    /// Product of single-qubit operators, `ops[j]` on `support[j]`.
    pub fn product(support: Vec<usize>, ops: &[CMatrix], weight: f64) -> Result<Self> {
        Self::new(support, linalg::local_product(ops), weight)
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn locality(&self) -> usize {
        self.support.len()
    }

    pub fn with_weight(&self, weight: f64) -> Self {
        Self {
            weight,
            ..self.clone()
        }
    }

    /// Same operator with qubit labels passed through `map`.
    pub fn relabeled(&self, map: impl Fn(usize) -> usize) -> Self {
        Self {
            support: self.support.iter().map(|&q| map(q)).collect(),
            ..self.clone()
        }
    }

    /// Spectral norm of the (unweighted) matrix.
    pub fn matrix_norm(&self) -> f64 {
        linalg::hermitian_norm(&self.matrix)
    }
}

/// Interaction family labels used for bookkeeping and family checks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FamilyTag {
    General,
    XY,
    Heisenberg,
    PauliNoY,
    Other(String),
}

impl FamilyTag {
    pub fn as_str(&self) -> &str {
        match self {
            FamilyTag::General => "general",
            FamilyTag::XY => "XX+YY",
            FamilyTag::Heisenberg => "XX+YY+ZZ",
            FamilyTag::PauliNoY => "pauli-no-Y",
            FamilyTag::Other(s) => s,
        }
    }

    pub fn parse(s: &str) -> Self {
        match s {
            "general" => FamilyTag::General,
            "XX+YY" => FamilyTag::XY,
            "XX+YY+ZZ" => FamilyTag::Heisenberg,
            "pauli-no-Y" => FamilyTag::PauliNoY,
            other => FamilyTag::Other(other.to_string()),
        }
    }
}

impl fmt::Display for FamilyTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Sum of weighted local terms on `n_qubits` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct Hamiltonian {
    n_qubits: usize,
    terms: Vec<InteractionTerm>,
    pub family_tag: Option<FamilyTag>,
    positive_weights_only: bool,
}

/// Result of [`Hamiltonian::normalize`]: `hamiltonian = original / factor`.
#[derive(Clone, Debug)]
pub struct Normalized {
    pub hamiltonian: Hamiltonian,
    pub factor: f64,
}

impl Hamiltonian {
    pub fn new(n_qubits: usize) -> Self {
        Self {
            n_qubits,
            terms: Vec::new(),
            family_tag: None,
            positive_weights_only: false,
        }
    }

    pub fn from_terms(n_qubits: usize, terms: Vec<InteractionTerm>) -> Result<Self> {
        let mut h = Self::new(n_qubits);
        for t in terms {
            h.push(t)?;
        }
        Ok(h)
    }

    /// Declare the S⁺ sign restriction; fails if a negative weight is present.
    pub fn with_positive_weights_only(mut self) -> Result<Self> {
        if let Some(t) = self.terms.iter().find(|t| t.weight < 0.0) {
            return Err(invalid(format!(
                "positive-weights-only Hamiltonian has negative weight {}",
                t.weight
            )));
        }
        self.positive_weights_only = true;
        Ok(self)
    }

    pub fn with_family(mut self, tag: FamilyTag) -> Self {
        self.family_tag = Some(tag);
        self
    }

    pub fn push(&mut self, term: InteractionTerm) -> Result<()> {
        if let Some(&q) = term.support.iter().find(|&&q| q >= self.n_qubits) {
            return Err(invalid(format!(
                "term acts on qubit {q} but the Hamiltonian has {} qubits",
                self.n_qubits
            )));
        }
        if self.positive_weights_only && term.weight < 0.0 {
            return Err(invalid("negative weight in a positive-weights-only Hamiltonian"));
        }
        self.terms.push(term);
        Ok(())
    }

    pub fn extend(&mut self, terms: impl IntoIterator<Item = InteractionTerm>) -> Result<()> {
        for t in terms {
            self.push(t)?;
        }
        Ok(())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        1usize << self.n_qubits
    }

    pub fn terms(&self) -> &[InteractionTerm] {
        &self.terms
    }

    pub fn positive_weights_only(&self) -> bool {
        self.positive_weights_only
    }

    /// Largest term support, 0 for the empty Hamiltonian.
    pub fn locality(&self) -> usize {
        self.terms.iter().map(|t| t.locality()).max().unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Same terms on a larger register.
    pub fn widened(&self, n_qubits: usize) -> Result<Self> {
        if n_qubits < self.n_qubits {
            return Err(invalid("cannot shrink a Hamiltonian register"));
        }
        Ok(Self {
            n_qubits,
            ..self.clone()
        })
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.weight *= s;
        }
        if s < 0.0 {
            out.positive_weights_only = false;
        }
        out
    }

    /// Concatenate the terms of `other` (same register size required).
    pub fn plus(&self, other: &Hamiltonian) -> Result<Self> {
        let n = self.n_qubits.max(other.n_qubits);
        let mut out = self.widened(n)?;
        out.positive_weights_only = self.positive_weights_only && other.positive_weights_only;
        out.family_tag = if self.family_tag == other.family_tag {
            self.family_tag.clone()
        } else {
            None
        };
        out.terms.extend(other.terms.iter().cloned());
        Ok(out)
    }

    fn estimated_nnz(&self) -> u128 {
        let dim = 1u128 << self.n_qubits;
        self.terms
            .iter()
            .map(|t| {
                let local = t.matrix.iter().filter(|z| **z != ZERO).count() as u128;
                let local_dim = 1u128 << t.locality();
                dim / local_dim * local
            })
            .sum::<u128>()
            + dim
    }

    /// Sparse matrix Σ weight·(term ⊗ identity) over the full register.
    pub fn assemble_sparse(&self) -> Result<CsrMatrix> {
        self.assemble_sparse_with_budget(nnz_budget())
    }

    pub fn assemble_sparse_with_budget(&self, budget: u128) -> Result<CsrMatrix> {
        if self.n_qubits >= usize::BITS as usize - 1 {
            return Err(GlhError::Capacity {
                what: "register size".into(),
                needed: self.n_qubits as u128,
                limit: (usize::BITS - 2) as u128,
            });
        }
        let needed = self.estimated_nnz();
        if needed > budget {
            return Err(GlhError::Capacity {
                what: format!("sparse assembly of {} qubits", self.n_qubits),
                needed,
                limit: budget,
            });
        }
        let dim = self.dim();
        let mut triplets = Vec::with_capacity(needed.min(1 << 26) as usize);
        for term in &self.terms {
            let support = &term.support;
            let local_dim = 1usize << support.len();
            let entries: Vec<(usize, usize, C64)> = (0..local_dim)
                .flat_map(|r| (0..local_dim).map(move |c| (r, c)))
                .filter_map(|(r, c)| {
                    let v = term.matrix[(r, c)];
                    (v != ZERO).then_some((r, c, v * term.weight))
                })
                .collect();
            if entries.is_empty() {
                continue;
            }
            let mask: usize = support.iter().map(|&q| 1usize << q).sum();
            for base in 0..dim {
                if base & mask != 0 {
                    continue;
                }
                for &(r, c, v) in &entries {
                    let row = linalg::scatter_bits(base, support, r);
                    let col = linalg::scatter_bits(base, support, c);
                    triplets.push((row, col, v));
                }
            }
        }
        Ok(CsrMatrix::from_triplets(dim, triplets))
    }

    /// Dense matrix; intended for small registers.
    pub fn to_dense(&self) -> Result<CMatrix> {
        Ok(self.assemble_sparse()?.to_dense())
    }

    /// Triangle-inequality bound Σ |wᵢ|·‖Mᵢ‖ ≥ ‖H‖.
    pub fn operator_norm_bound(&self) -> f64 {
        self.terms
            .iter()
            .map(|t| t.weight.abs() * t.matrix_norm())
            .sum()
    }

    /// Divide every weight by the norm bound so that ‖H‖ ≤ 1.
    pub fn normalize(&self) -> Result<Normalized> {
        let factor = self.operator_norm_bound();
        if factor <= 0.0 || !factor.is_finite() {
            return Err(invalid("cannot normalize a zero Hamiltonian"));
        }
        Ok(Normalized {
            hamiltonian: self.scaled(1.0 / factor),
            factor,
        })
    }

    /// Pauli decomposition of the whole operator with like strings merged.
    pub fn pauli_decompose(&self) -> Result<Vec<PauliString>> {
        let mut merged: BTreeMap<Vec<(usize, Pauli)>, f64> = BTreeMap::new();
        for term in &self.terms {
            for mut p in pauli_decompose(term)? {
                p.coefficient *= term.weight;
                let key: Vec<(usize, Pauli)> = p.letters.iter().map(|(&q, &l)| (q, l)).collect();
                *merged.entry(key).or_insert(0.0) += p.coefficient;
            }
        }
        Ok(merged
            .into_iter()
            .filter(|(_, c)| c.abs() > 1e-14)
            .map(|(k, c)| PauliString::new(self.n_qubits, k, c))
            .collect())
    }

    /// Whether every 2-local Pauli component belongs to the tagged family.
    pub fn conforms_to_family(&self, tag: &FamilyTag) -> Result<bool> {
        let strings = self.pauli_decompose()?;
        let ok = match tag {
            FamilyTag::General | FamilyTag::Other(_) => true,
            FamilyTag::PauliNoY => strings
                .iter()
                .all(|p| p.locality() <= 2 && p.letters.values().all(|&l| l != Pauli::Y)),
            FamilyTag::XY | FamilyTag::Heisenberg => {
                let with_zz = matches!(tag, FamilyTag::Heisenberg);
                let mut pairs: BTreeMap<(usize, usize), [f64; 3]> = BTreeMap::new();
                for p in &strings {
                    if p.locality() != 2 {
                        return Ok(false);
                    }
                    let q: Vec<_> = p.letters.iter().collect();
                    let (a, la) = q[0];
                    let (b, lb) = q[1];
                    if la != lb {
                        return Ok(false);
                    }
                    let slot = match la {
                        Pauli::X => 0,
                        Pauli::Y => 1,
                        Pauli::Z => 2,
                        Pauli::I => unreachable!(),
                    };
                    pairs.entry((*a, *b)).or_insert([0.0; 3])[slot] += p.coefficient;
                }
                pairs.values().all(|w| {
                    let zz_ok = if with_zz {
                        (w[2] - w[0]).abs() < 1e-10
                    } else {
                        w[2].abs() < 1e-10
                    };
                    (w[0] - w[1]).abs() < 1e-10 && zz_ok
                })
            }
        };
        Ok(ok)
    }
}

/// Decompose a Hermitian term into real-weighted Pauli strings on its support.
///
/// Coefficients are returned unweighted (the term's weight is not applied).
pub fn pauli_decompose(term: &InteractionTerm) -> Result<Vec<PauliString>> {
    pauli_decompose_matrix(&term.matrix, &term.support)
}

/// Decompose a Hermitian matrix on an ordered support.
pub fn pauli_decompose_matrix(m: &CMatrix, support: &[usize]) -> Result<Vec<PauliString>> {
    let k = support.len();
    let dim = 1usize << k;
    if m.nrows() != dim || m.ncols() != dim {
        return Err(invalid("matrix dimension does not match support"));
    }
    let defect = linalg::hermiticity_defect(m);
    if defect > HERMITIAN_TOL {
        return Err(invalid(format!(
            "cannot Pauli-decompose a non-Hermitian matrix (defect {defect:.3e})"
        )));
    }
    let n_qubits = support.iter().max().map_or(0, |&q| q + 1);
    let mut out = Vec::new();
    for code in 0..(1usize << (2 * k)) {
        let letters: Vec<Pauli> = (0..k).map(|j| Pauli::ALL[(code >> (2 * j)) & 3]).collect();
        let xmask: usize = letters
            .iter()
            .enumerate()
            .filter(|(_, p)| p.flips())
            .map(|(j, _)| 1 << j)
            .sum();
        // Tr(P M) = Σ_l phase(l) M[l, l ⊕ x]
        let mut trace = ZERO;
        for l in 0..dim {
            let phase = letters
                .iter()
                .enumerate()
                .fold(ONE, |acc, (j, p)| acc * p.phase((l >> j) & 1 == 1));
            trace += phase * m[(l, l ^ xmask)];
        }
        let coeff = trace / dim as f64;
        if coeff.im.abs() > 1e-10 {
            return Err(invalid("Pauli coefficient with imaginary part on a Hermitian input"));
        }
        if coeff.re.abs() > 1e-15 {
            out.push(PauliString::new(
                n_qubits,
                support.iter().copied().zip(letters),
                coeff.re,
            ));
        }
    }
    Ok(out)
}

/// Rebuild the dense matrix Σ cᵢ Pᵢ on the given support.
pub fn reassemble(strings: &[PauliString], support: &[usize]) -> CMatrix {
    let dim = 1usize << support.len();
    strings.iter().fold(CMatrix::zeros(dim, dim), |acc, p| {
        acc + p.matrix_on(support) * linalg::c(p.coefficient)
    })
}
