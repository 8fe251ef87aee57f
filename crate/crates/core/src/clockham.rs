//! Kitaev clock Hamiltonians with a scaling factor Δ, their history and
//! guiding states, and the gap and separation reports built on them.
//!
//! Two backends share one component layout. The unary backend writes every
//! component as a local [`Hamiltonian`] over A ⊗ B ⊗ C₁…C_M with the clock in
//! unary, `|t⟩ = 1^t 0^{M−t}`. The direct backend stores the clock as a single
//! (M+1)-level index, basis index `sys + 2^{n_sys}·t`.

use serde::{Deserialize, Serialize};

use crate::circuits::IdledCircuit;
use crate::error::{invalid, GlhError, Result};
use crate::guidestates::{BitString, GuideState, SubsetState};
use crate::hamcore::{Hamiltonian, InteractionTerm};
use crate::linalg::{self, CMatrix, CVector, C64, ONE, ZERO};
use crate::sparse::CsrMatrix;
use crate::spectra::{self, GlhleInstance, SolverOptions};

/// Qubit budget of the unary backend, n_sys + M + 1.
pub const UNARY_MAX_QUBITS: usize = 22;
/// Dimension budget of the direct backend.
pub const DIRECT_MAX_DIM: usize = 1 << 22;
const ZERO_ENERGY_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    Unary,
    Direct,
}

impl std::str::FromStr for Backend {
    type Err = GlhError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unary" => Ok(Self::Unary),
            "direct" => Ok(Self::Direct),
            other => Err(invalid(format!("unknown backend {other:?}"))),
        }
    }
}

/// Form of the input penalty.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputPenalty {
    /// Per-qubit sum: Σ_A |¬x_i⟩⟨¬x_i| + Σ_B |1⟩⟨1|, each times |0⟩⟨0|_{C₁}.
    #[default]
    Sum,
    /// Product (I−|x⟩⟨x|)_A ⊗ (I−|0…0⟩⟨0…0|)_B ⊗ |0⟩⟨0|_{C₁}.
    Product,
}

/// Register layout: system qubits A then B, then clock qubits C₁…C_M.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Registers {
    pub n_input: usize,
    pub n_ancilla: usize,
    pub clock_steps: usize,
}

impl Registers {
    pub fn n_sys(&self) -> usize {
        self.n_input + self.n_ancilla
    }

    /// Qubit index of clock qubit C_j, j in 1..=M.
    pub fn clock_qubit(&self, j: usize) -> usize {
        self.n_sys() + j - 1
    }

    pub fn unary_qubits(&self) -> usize {
        self.n_sys() + self.clock_steps
    }

    pub fn direct_dim(&self) -> usize {
        (1 << self.n_sys()) * (self.clock_steps + 1)
    }

    /// Unary basis index of |sys⟩|t⟩.
    pub fn unary_index(&self, sys: usize, t: usize) -> usize {
        sys + (1 << self.n_sys()) * ((1 << t) - 1)
    }

    pub fn direct_index(&self, sys: usize, t: usize) -> usize {
        sys + (1 << self.n_sys()) * t
    }

    /// Unary indices of all legal states, ordered like the direct basis.
    pub fn legal_indices(&self) -> Vec<usize> {
        (0..=self.clock_steps)
            .flat_map(|t| (0..1usize << self.n_sys()).map(move |s| self.unary_index(s, t)))
            .collect()
    }
}

#[derive(Clone, Debug)]
pub enum Components {
    Unary {
        h_in: Hamiltonian,
        h_prop: Hamiltonian,
        h_stab: Hamiltonian,
        h_out: Hamiltonian,
    },
    Direct {
        h_in: CsrMatrix,
        h_prop: CsrMatrix,
        h_stab: CsrMatrix,
        h_out: CsrMatrix,
    },
}

#[derive(Clone, Debug)]
pub struct ClockHamiltonian {
    pub idled: IdledCircuit,
    pub delta: f64,
    pub backend: Backend,
    pub input_penalty: InputPenalty,
    pub registers: Registers,
    pub components: Components,
}

/// Δ ≥ 16·64M²/π².
pub fn recommended_delta(m: usize) -> f64 {
    let m = m as f64;
    16.0 * 64.0 * m * m / (std::f64::consts::PI * std::f64::consts::PI)
}

/// π²/(64M²).
pub fn gap_threshold(m: usize) -> f64 {
    let m = m as f64;
    std::f64::consts::PI.powi(2) / (64.0 * m * m)
}

pub fn registers(idled: &IdledCircuit) -> Registers {
    Registers {
        n_input: idled.base.n_input,
        n_ancilla: idled.base.n_ancilla,
        clock_steps: idled.total_gates(),
    }
}

fn check_capacity(reg: &Registers, backend: Backend) -> Result<()> {
    match backend {
        Backend::Unary => {
            let needed = reg.n_sys() + reg.clock_steps + 1;
            if needed > UNARY_MAX_QUBITS {
                return Err(GlhError::Capacity {
                    what: "unary clock qubits (n + M + 1)".into(),
                    needed: needed as u128,
                    limit: UNARY_MAX_QUBITS as u128,
                });
            }
        }
        Backend::Direct => {
            let needed = (1u128 << reg.n_sys()) * (reg.clock_steps as u128 + 1);
            if needed > DIRECT_MAX_DIM as u128 {
                return Err(GlhError::Capacity {
                    what: "direct clock dimension 2^n (M+1)".into(),
                    needed,
                    limit: DIRECT_MAX_DIM as u128,
                });
            }
        }
    }
    Ok(())
}

pub fn build_clock_hamiltonian(idled: &IdledCircuit, delta: f64, backend: Backend) -> Result<ClockHamiltonian> {
    build_clock_hamiltonian_with(idled, delta, backend, InputPenalty::Sum)
}

pub fn build_clock_hamiltonian_with(
    idled: &IdledCircuit,
    delta: f64,
    backend: Backend,
    input_penalty: InputPenalty,
) -> Result<ClockHamiltonian> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(invalid(format!("Δ must be positive, got {delta}")));
    }
    let reg = registers(idled);
    check_capacity(&reg, backend)?;
    let components = match backend {
        Backend::Unary => unary_components(idled, &reg, input_penalty)?,
        Backend::Direct => direct_components(idled, &reg, input_penalty),
    };
    Ok(ClockHamiltonian {
        idled: idled.clone(),
        delta,
        backend,
        input_penalty,
        registers: reg,
        components,
    })
}

/// Clock-local |t⟩⟨t−1|, |t⟩⟨t| and |t−1⟩⟨t−1| with their clock support.
fn clock_operators(reg: &Registers, t: usize) -> (Vec<usize>, CMatrix, CMatrix, CMatrix) {
    let m = reg.clock_steps;
    // (support as clock indices, local index of |t⟩, local index of |t−1⟩)
    let (clock, now, before): (Vec<usize>, usize, usize) = if m == 1 {
        (vec![1], 0b1, 0b0)
    } else if t == 1 {
        // (C1, C2): |10⟩ and |00⟩
        (vec![1, 2], 0b01, 0b00)
    } else if t == m {
        // (C_{M−1}, C_M): |11⟩ and |10⟩
        (vec![m - 1, m], 0b11, 0b01)
    } else {
        // (C_{t−1}, C_t, C_{t+1}): |110⟩ and |100⟩
        (vec![t - 1, t, t + 1], 0b011, 0b001)
    };
    let dim = 1 << clock.len();
    let support = clock.iter().map(|&j| reg.clock_qubit(j)).collect();
    (
        support,
        linalg::ket_bra(dim, now, before),
        linalg::ket_bra(dim, now, now),
        linalg::ket_bra(dim, before, before),
    )
}

fn unary_components(idled: &IdledCircuit, reg: &Registers, form: InputPenalty) -> Result<Components> {
    let n = reg.unary_qubits();
    let m = reg.clock_steps;
    let c1 = reg.clock_qubit(1);
    let x = idled.base.input_x();
    let p0 = linalg::bit_projector(false);
    let p1 = linalg::bit_projector(true);

    let mut h_in = Hamiltonian::new(n);
    match form {
        InputPenalty::Sum => {
            for i in 0..reg.n_input {
                let wrong = linalg::bit_projector(!x.bit(i));
                h_in.push(InteractionTerm::product(vec![i, c1], &[wrong, p0.clone()], 1.0)?)?;
            }
            for j in reg.n_input..reg.n_sys() {
                h_in.push(InteractionTerm::product(vec![j, c1], &[p1.clone(), p0.clone()], 1.0)?)?;
            }
        }
        InputPenalty::Product => {
            let a_dim = 1 << reg.n_input;
            let b_dim = 1 << reg.n_ancilla;
            let mut not_x = linalg::identity(a_dim);
            not_x[(x.to_index(), x.to_index())] -= ONE;
            let mut not_zero = linalg::identity(b_dim);
            not_zero[(0, 0)] -= ONE;
            let mut support: Vec<usize> = (0..reg.n_sys()).collect();
            support.push(c1);
            let matrix = linalg::kron(&p0, &linalg::kron(&not_zero, &not_x));
            h_in.push(InteractionTerm::new(support, matrix, 1.0)?)?;
        }
    }

    let mut h_out = Hamiltonian::new(n);
    h_out.push(InteractionTerm::product(
        vec![idled.base.output_qubit, reg.clock_qubit(m)],
        &[p0.clone(), p1.clone()],
        1.0,
    )?)?;

    let mut h_stab = Hamiltonian::new(n);
    for j in 1..m {
        h_stab.push(InteractionTerm::product(
            vec![reg.clock_qubit(j), reg.clock_qubit(j + 1)],
            &[p0.clone(), p1.clone()],
            1.0,
        )?)?;
    }

    let mut h_prop = Hamiltonian::new(n);
    for t in 1..=m {
        let gate = idled.gate(t);
        let (clock_support, fwd, now, before) = clock_operators(reg, t);
        let u = gate.matrix();
        let id = linalg::identity(u.nrows());
        let half = linalg::c(0.5);
        let matrix = (linalg::kron(&fwd, u) + linalg::kron(&fwd.adjoint(), &u.adjoint())) * (-half)
            + linalg::kron(&(now + before), &id) * half;
        let mut support = gate.support().to_vec();
        support.extend(clock_support);
        h_prop.push(InteractionTerm::new(support, matrix, 1.0)?)?;
    }

    Ok(Components::Unary {
        h_in,
        h_prop,
        h_stab,
        h_out,
    })
}

fn direct_components(idled: &IdledCircuit, reg: &Registers, form: InputPenalty) -> Components {
    let n_sys = reg.n_sys();
    let dim = reg.direct_dim();
    let sys_dim = 1usize << n_sys;
    let m = reg.clock_steps;
    let x = idled.base.input_x().to_index();
    let a_mask = (1usize << reg.n_input) - 1;

    let mut t_in = Vec::new();
    for s in 0..sys_dim {
        let a_bits = s & a_mask;
        let b_bits = s >> reg.n_input;
        let value = match form {
            InputPenalty::Sum => ((a_bits ^ x).count_ones() + b_bits.count_ones()) as f64,
            InputPenalty::Product => ((a_bits != x) && (b_bits != 0)) as u8 as f64,
        };
        if value != 0.0 {
            let i = reg.direct_index(s, 0);
            t_in.push((i, i, linalg::c(value)));
        }
    }

    let out = idled.base.output_qubit;
    let t_out = (0..sys_dim)
        .filter(|s| (s >> out) & 1 == 0)
        .map(|s| {
            let i = reg.direct_index(s, m);
            (i, i, ONE)
        })
        .collect();

    let mut t_prop = Vec::new();
    let half = linalg::c(0.5);
    for t in 1..=m {
        for (r, c, v) in idled.gate(t).embedded_entries(n_sys) {
            let now = reg.direct_index(r, t);
            let before = reg.direct_index(c, t - 1);
            t_prop.push((now, before, -half * v));
            t_prop.push((before, now, -half * v.conj()));
        }
        for s in 0..sys_dim {
            let a = reg.direct_index(s, t);
            let b = reg.direct_index(s, t - 1);
            t_prop.push((a, a, half));
            t_prop.push((b, b, half));
        }
    }

    Components::Direct {
        h_in: CsrMatrix::from_triplets(dim, t_in),
        h_prop: CsrMatrix::from_triplets(dim, t_prop),
        h_stab: CsrMatrix::zeros(dim),
        h_out: CsrMatrix::from_triplets(dim, t_out),
    }
}

impl ClockHamiltonian {
    pub fn clock_steps(&self) -> usize {
        self.registers.clock_steps
    }

    pub fn dim(&self) -> usize {
        match self.backend {
            Backend::Unary => 1 << self.registers.unary_qubits(),
            Backend::Direct => self.registers.direct_dim(),
        }
    }

    /// Δ(H_in + H_prop + H_stab) + H_out as a local Hamiltonian (unary only).
    pub fn total_hamiltonian(&self) -> Result<Hamiltonian> {
        match &self.components {
            Components::Unary {
                h_in,
                h_prop,
                h_stab,
                h_out,
            } => h_in
                .plus(h_prop)?
                .plus(h_stab)?
                .scaled(self.delta)
                .plus(h_out),
            Components::Direct { .. } => Err(invalid("the direct backend has no qubit-local form")),
        }
    }

    /// (H_in, H_prop, H_stab, H_out) assembled as sparse matrices.
    pub fn component_matrices(&self) -> Result<[CsrMatrix; 4]> {
        Ok(match &self.components {
            Components::Unary {
                h_in,
                h_prop,
                h_stab,
                h_out,
            } => [
                h_in.assemble_sparse()?,
                h_prop.assemble_sparse()?,
                h_stab.assemble_sparse()?,
                h_out.assemble_sparse()?,
            ],
            Components::Direct {
                h_in,
                h_prop,
                h_stab,
                h_out,
            } => [h_in.clone(), h_prop.clone(), h_stab.clone(), h_out.clone()],
        })
    }

    /// H₀ = H_in + H_prop + H_stab.
    pub fn h0_matrix(&self) -> Result<CsrMatrix> {
        let [i, p, s, _] = self.component_matrices()?;
        Ok(CsrMatrix::linear_combination(self.dim(), &[(1.0, &i), (1.0, &p), (1.0, &s)]))
    }

    pub fn total_matrix(&self) -> Result<CsrMatrix> {
        let [i, p, s, o] = self.component_matrices()?;
        let d = self.delta;
        Ok(CsrMatrix::linear_combination(
            self.dim(),
            &[(d, &i), (d, &p), (d, &s), (1.0, &o)],
        ))
    }

    pub fn out_matrix(&self) -> Result<CsrMatrix> {
        Ok(self.component_matrices()?[3].clone())
    }

    /// Restriction of an operator on this backend to the legal clock
    /// subspace, in direct-basis order.
    pub fn restrict_legal(&self, m: &CsrMatrix) -> CsrMatrix {
        match self.backend {
            Backend::Unary => m.restrict(&self.registers.legal_indices()),
            Backend::Direct => m.clone(),
        }
    }

    pub fn restrict_legal_vector(&self, v: &CVector) -> CVector {
        match self.backend {
            Backend::Unary => {
                let idx = self.registers.legal_indices();
                CVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
            }
            Backend::Direct => v.clone(),
        }
    }
}

fn history_amplitudes(idled: &IdledCircuit) -> Result<Vec<CVector>> {
    let mut psi = idled.base.initial_state()?;
    let mut out = Vec::with_capacity(idled.total_gates() + 1);
    out.push(psi.clone());
    for g in idled.gates() {
        g.apply(&mut psi);
        out.push(psi.clone());
    }
    Ok(out)
}

/// (M+1)^{-1/2} Σ_{t=0}^{M} U_t⋯U_1 |x⟩|0…0⟩|t⟩.
pub fn history_state(idled: &IdledCircuit, backend: Backend) -> Result<CVector> {
    let reg = registers(idled);
    check_capacity(&reg, backend)?;
    let steps = history_amplitudes(idled)?;
    let dim = match backend {
        Backend::Unary => 1 << reg.unary_qubits(),
        Backend::Direct => reg.direct_dim(),
    };
    let norm = linalg::c(1.0 / ((reg.clock_steps + 1) as f64).sqrt());
    let mut v = CVector::zeros(dim);
    for (t, phi) in steps.iter().enumerate() {
        for (s, &a) in phi.iter().enumerate() {
            if a != ZERO {
                let i = match backend {
                    Backend::Unary => reg.unary_index(s, t),
                    Backend::Direct => reg.direct_index(s, t),
                };
                v[i] = a * norm;
            }
        }
    }
    Ok(v)
}

/// The guiding subset state N^{-1/2} Σ_{t=1}^{N} |x⟩|0…0⟩|t⟩ in the unary layout.
pub fn guiding_state(idled: &IdledCircuit) -> Result<SubsetState> {
    let n_idle = idled.idle_steps;
    if n_idle == 0 {
        return Err(invalid("the guiding state needs at least one idle step"));
    }
    let reg = registers(idled);
    let sys = idled.base.input_x().concat(&BitString::zeros(reg.n_ancilla));
    let m = reg.clock_steps;
    let elements = (1..=n_idle)
        .map(|t| {
            let clock: Vec<bool> = (0..m).map(|j| j < t).collect();
            sys.concat(&BitString::new(clock))
        })
        .collect();
    SubsetState::new(reg.unary_qubits(), elements)
}

/// The guiding state as a vector on either backend.
pub fn guiding_vector(idled: &IdledCircuit, backend: Backend) -> Result<CVector> {
    let st = guiding_state(idled)?;
    match backend {
        Backend::Unary => st.to_dense(),
        Backend::Direct => {
            let reg = registers(idled);
            check_capacity(&reg, backend)?;
            let sys = idled.base.initial_index();
            let mut v = CVector::zeros(reg.direct_dim());
            let a = linalg::c(1.0 / (idled.idle_steps as f64).sqrt());
            for t in 1..=idled.idle_steps {
                v[reg.direct_index(sys, t)] = a;
            }
            Ok(v)
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GapReport {
    pub clock_steps: usize,
    pub lambda0: f64,
    /// Smallest eigenvalue of H₀ above zero.
    pub lambda1: f64,
    pub gap: f64,
    pub threshold: f64,
    pub zero_multiplicity: usize,
    pub holds: bool,
}

/// Smallest nonzero eigenvalue of H₀ on the legal subspace against π²/(64M²).
pub fn gap_certificate(ch: &ClockHamiltonian) -> Result<GapReport> {
    let h0 = ch.restrict_legal(&ch.h0_matrix()?);
    let k = h0.dim().min(8);
    let mut spec = spectra::low_spectrum_matrix(&h0, k, &SolverOptions::default())?;
    while spec.eigenvalues.iter().all(|&l| l <= ZERO_ENERGY_TOL) && spec.eigenvalues.len() < h0.dim() {
        spec = spectra::low_spectrum_matrix(&h0, h0.dim().min(2 * spec.eigenvalues.len()), &SolverOptions::default())?;
    }
    let lambda0 = spec.eigenvalues[0];
    let zero_multiplicity = spec.eigenvalues.iter().filter(|&&l| l.abs() <= ZERO_ENERGY_TOL).count();
    let lambda1 = spec
        .eigenvalues
        .iter()
        .copied()
        .find(|&l| l > ZERO_ENERGY_TOL)
        .ok_or_else(|| GlhError::Degeneracy("no nonzero eigenvalue found".into()))?;
    let threshold = gap_threshold(ch.clock_steps());
    Ok(GapReport {
        clock_steps: ch.clock_steps(),
        lambda0,
        lambda1,
        gap: lambda1 - lambda0,
        threshold,
        zero_multiplicity,
        holds: lambda1 > threshold && zero_multiplicity == 1,
    })
}

/// Low-energy facts about the full clock Hamiltonian.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ClockReport {
    pub clock_steps: usize,
    pub gates: usize,
    pub idle_steps: usize,
    pub delta: f64,
    pub backend: Backend,
    pub lambda0: f64,
    pub lambda1: f64,
    pub gap: f64,
    pub history_overlap_sq: f64,
    pub guide_fidelity: Option<f64>,
    pub a: f64,
    pub b: f64,
}

/// Unnormalized YES/NO thresholds 1/(4(M+1)) and 3/(4(M+1)).
pub fn clock_thresholds(m: usize) -> (f64, f64) {
    let d = 4.0 * (m as f64 + 1.0);
    (1.0 / d, 3.0 / d)
}

pub fn clock_report(ch: &ClockHamiltonian) -> Result<ClockReport> {
    let total = ch.restrict_legal(&ch.total_matrix()?);
    let spec = spectra::low_spectrum_matrix(&total, 2.min(total.dim()), &SolverOptions::default())?;
    let g = spec.vector(0).expect("vectors requested");
    let hist = ch.restrict_legal_vector(&history_state(&ch.idled, ch.backend)?);
    let history_overlap_sq = hist.dotc(&g).norm_sqr();
    let guide_fidelity = if ch.idled.idle_steps > 0 {
        let u = ch.restrict_legal_vector(&guiding_vector(&ch.idled, ch.backend)?);
        Some(spectra::level_report(&total, &u, 0)?.fidelity)
    } else {
        None
    };
    let m = ch.clock_steps();
    let (a, b) = clock_thresholds(m);
    let lambda1 = spec.eigenvalues.get(1).copied().unwrap_or(f64::INFINITY);
    Ok(ClockReport {
        clock_steps: m,
        gates: ch.idled.m(),
        idle_steps: ch.idled.idle_steps,
        delta: ch.delta,
        backend: ch.backend,
        lambda0: spec.eigenvalues[0],
        lambda1,
        gap: lambda1 - spec.eigenvalues[0],
        history_overlap_sq,
        guide_fidelity,
        a,
        b,
    })
}

/// Ground-state GLHLE instance: normalized unary H, the subset guide, and
/// thresholds rescaled by the normalization factor.
pub fn clock_instance(ch: &ClockHamiltonian, delta_fid: f64) -> Result<(GlhleInstance, f64)> {
    if ch.backend != Backend::Unary {
        return Err(invalid("instances need the unary backend"));
    }
    let normalized = ch.total_hamiltonian()?.normalize()?;
    let (a, b) = clock_thresholds(ch.clock_steps());
    let guide = GuideState::Subset(guiding_state(&ch.idled)?);
    let inst = GlhleInstance::new(
        normalized.hamiltonian,
        guide,
        0,
        a / normalized.factor,
        b / normalized.factor,
        delta_fid,
    )?;
    Ok((inst, normalized.factor))
}

/// Default fidelity promise: half the ideal overlap N/(m+N+1).
pub fn default_fidelity_promise(idled: &IdledCircuit) -> f64 {
    0.5 * idled.idle_steps as f64 / (idled.total_gates() + 1) as f64
}

/// Largest entry difference between the legal restriction of the unary
/// operator and the direct operator.
pub fn cross_backend_defect(idled: &IdledCircuit, delta: f64) -> Result<f64> {
    let unary = build_clock_hamiltonian(idled, delta, Backend::Unary)?;
    let direct = build_clock_hamiltonian(idled, delta, Backend::Direct)?;
    let a = unary.restrict_legal(&unary.total_matrix()?).to_dense();
    let b = direct.total_matrix()?.to_dense();
    Ok((a - b).iter().map(|z: &C64| z.norm()).fold(0.0, f64::max))
}
