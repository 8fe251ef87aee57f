//! Small quantum circuits: gates, idling, statevector simulation and a
//! catalog of toy verifier circuits.

use crate::error::{invalid, GlhError, Result};
use crate::guidestates::BitString;
use crate::linalg::{self, CMatrix, CVector, C64, ONE, ZERO};

/// Qubit cap for statevector simulation.
pub const MAX_SIM_QUBITS: usize = 20;
const UNITARY_TOL: f64 = 1e-12;

/// A 1- or 2-qubit unitary on an ordered support.
#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub label: String,
    support: Vec<usize>,
    matrix: CMatrix,
}

impl Gate {
    pub fn new(label: impl Into<String>, support: Vec<usize>, matrix: CMatrix) -> Result<Self> {
        if support.is_empty() || support.len() > 2 {
            return Err(invalid("gates act on one or two qubits"));
        }
        if support.len() == 2 && support[0] == support[1] {
            return Err(invalid("two-qubit gate with repeated qubit"));
        }
        let dim = 1usize << support.len();
        if matrix.shape() != (dim, dim) {
            return Err(invalid(format!("gate matrix must be {dim}x{dim}")));
        }
        let defect = linalg::isometry_defect(&matrix);
        if defect > UNITARY_TOL {
            return Err(invalid(format!("gate is not unitary (defect {defect:.3e})")));
        }
        Ok(Self {
            label: label.into(),
            support,
            matrix,
        })
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn identity(q: usize) -> Self {
        Self::new("I", vec![q], linalg::identity(2)).unwrap()
    }

    pub fn x(q: usize) -> Self {
        Self::new("X", vec![q], linalg::pauli_x()).unwrap()
    }

    pub fn z(q: usize) -> Self {
        Self::new("Z", vec![q], linalg::pauli_z()).unwrap()
    }

    pub fn h(q: usize) -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let m = CMatrix::from_row_slice(2, 2, &[linalg::c(s), linalg::c(s), linalg::c(s), linalg::c(-s)]);
        Self::new("H", vec![q], m).unwrap()
    }

    /// Rotation exp(−iθY/2).
    pub fn ry(q: usize, theta: f64) -> Self {
        let (s, co) = (theta / 2.0).sin_cos();
        let m = CMatrix::from_row_slice(2, 2, &[linalg::c(co), linalg::c(-s), linalg::c(s), linalg::c(co)]);
        Self::new(format!("RY({theta})"), vec![q], m).unwrap()
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        // local bit 0 = control, bit 1 = target
        let mut m = CMatrix::zeros(4, 4);
        for local in 0..4usize {
            let out = if local & 1 == 1 { local ^ 2 } else { local };
            m[(out, local)] = ONE;
        }
        Self::new("CNOT", vec![control, target], m).unwrap()
    }

    /// Apply in place to a statevector over `n` qubits.
    pub fn apply(&self, state: &mut CVector) {
        let dim = state.len();
        let local_dim = 1usize << self.support.len();
        let mask: usize = self.support.iter().map(|&q| 1usize << q).sum();
        let mut buf = vec![ZERO; local_dim];
        for base in 0..dim {
            if base & mask != 0 {
                continue;
            }
            for (l, slot) in buf.iter_mut().enumerate() {
                *slot = state[linalg::scatter_bits(base, &self.support, l)];
            }
            for r in 0..local_dim {
                let mut acc = ZERO;
                for (l, &amp) in buf.iter().enumerate() {
                    acc += self.matrix[(r, l)] * amp;
                }
                state[linalg::scatter_bits(base, &self.support, r)] = acc;
            }
        }
    }

    /// Nonzero entries ⟨row|U|col⟩ of the gate embedded on `n` qubits.
    pub fn embedded_entries(&self, n: usize) -> Vec<(usize, usize, C64)> {
        let dim = 1usize << n;
        let local_dim = 1usize << self.support.len();
        let mask: usize = self.support.iter().map(|&q| 1usize << q).sum();
        let mut out = Vec::new();
        for base in (0..dim).filter(|b| b & mask == 0) {
            for r in 0..local_dim {
                for l in 0..local_dim {
                    let v = self.matrix[(r, l)];
                    if v != ZERO {
                        out.push((
                            linalg::scatter_bits(base, &self.support, r),
                            linalg::scatter_bits(base, &self.support, l),
                            v,
                        ));
                    }
                }
            }
        }
        out
    }
}

/// Gate list acting on input register A and ancilla register B.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    pub n_input: usize,
    pub n_ancilla: usize,
    gates: Vec<Gate>,
    input_x: BitString,
    pub output_qubit: usize,
}

impl Circuit {
    pub fn new(
        n_input: usize,
        n_ancilla: usize,
        gates: Vec<Gate>,
        input_x: BitString,
        output_qubit: usize,
    ) -> Result<Self> {
        let n = n_input + n_ancilla;
        if n == 0 {
            return Err(invalid("circuit needs at least one qubit"));
        }
        if gates.is_empty() {
            return Err(invalid("circuit needs at least one gate"));
        }
        if input_x.len() != n_input {
            return Err(invalid(format!(
                "input string has {} bits, register A has {n_input}",
                input_x.len()
            )));
        }
        if output_qubit >= n {
            return Err(invalid("output qubit outside A∪B"));
        }
        if let Some(g) = gates.iter().find(|g| g.support.iter().any(|&q| q >= n)) {
            return Err(invalid(format!("gate {} acts outside A∪B", g.label)));
        }
        Ok(Self {
            n_input,
            n_ancilla,
            gates,
            input_x,
            output_qubit,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_input + self.n_ancilla
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn input_x(&self) -> &BitString {
        &self.input_x
    }

    /// Basis index of |x⟩_A|0…0⟩_B.
    pub fn initial_index(&self) -> usize {
        self.input_x.to_index()
    }

    pub fn initial_state(&self) -> Result<CVector> {
        check_sim_cap(self.n_qubits())?;
        let mut psi = CVector::zeros(1 << self.n_qubits());
        psi[self.initial_index()] = ONE;
        Ok(psi)
    }

    /// U_m⋯U_1 |x⟩|0…0⟩.
    pub fn simulate(&self) -> Result<CVector> {
        let mut psi = self.initial_state()?;
        for g in &self.gates {
            g.apply(&mut psi);
        }
        Ok(psi)
    }

    /// Probability of reading 1 on the output qubit.
    pub fn acceptance_probability(&self) -> Result<f64> {
        let psi = self.simulate()?;
        Ok(prob_one(&psi, self.output_qubit))
    }

    /// Prepend `idle_steps` identity gates on the output qubit.
    pub fn idle(&self, idle_steps: usize) -> IdledCircuit {
        IdledCircuit {
            base: self.clone(),
            idle_steps,
        }
    }
}

pub(crate) fn prob_one(psi: &CVector, qubit: usize) -> f64 {
    psi.iter()
        .enumerate()
        .filter(|(i, _)| (i >> qubit) & 1 == 1)
        .map(|(_, a)| a.norm_sqr())
        .sum()
}

fn check_sim_cap(n: usize) -> Result<()> {
    if n > MAX_SIM_QUBITS {
        return Err(GlhError::Capacity {
            what: "statevector qubits".into(),
            needed: n as u128,
            limit: MAX_SIM_QUBITS as u128,
        });
    }
    Ok(())
}

/// A circuit preceded by `idle_steps` identity gates.
#[derive(Clone, Debug, PartialEq)]
pub struct IdledCircuit {
    pub base: Circuit,
    pub idle_steps: usize,
}

impl IdledCircuit {
    /// Number of non-idle gates m.
    pub fn m(&self) -> usize {
        self.base.gates.len()
    }

    /// Total gate count M = m + N.
    pub fn total_gates(&self) -> usize {
        self.m() + self.idle_steps
    }

    /// Gate U_t for t in 1..=M (identities first).
    pub fn gate(&self, t: usize) -> Gate {
        assert!(t >= 1 && t <= self.total_gates(), "gate index out of range");
        if t <= self.idle_steps {
            Gate::identity(self.base.output_qubit)
        } else {
            self.base.gates[t - self.idle_steps - 1].clone()
        }
    }

    pub fn gates(&self) -> impl Iterator<Item = Gate> + '_ {
        (1..=self.total_gates()).map(move |t| self.gate(t))
    }

    /// Flattened circuit with the idle gates materialized.
    pub fn to_circuit(&self) -> Circuit {
        Circuit {
            gates: self.gates().collect(),
            ..self.base.clone()
        }
    }

    pub fn acceptance_probability(&self) -> Result<f64> {
        self.to_circuit().acceptance_probability()
    }
}

/// Named toy verifier with its exact acceptance probability.
#[derive(Clone, Debug)]
pub struct CatalogEntry {
    pub name: &'static str,
    pub description: &'static str,
    pub circuit: Circuit,
    pub expected_acceptance: f64,
}

/// Deterministic stand-ins for amplified verifiers.
pub fn toy_catalog() -> Vec<CatalogEntry> {
    let bits = |s: &str| BitString::parse(s).unwrap();
    vec![
        CatalogEntry {
            name: "accept",
            description: "X on the output qubit; accepts with certainty",
            circuit: Circuit::new(1, 0, vec![Gate::x(0)], bits("0"), 0).unwrap(),
            expected_acceptance: 1.0,
        },
        CatalogEntry {
            name: "reject",
            description: "identity on the output qubit; always rejects",
            circuit: Circuit::new(1, 0, vec![Gate::identity(0)], bits("0"), 0).unwrap(),
            expected_acceptance: 0.0,
        },
        CatalogEntry {
            name: "coin",
            description: "Hadamard on the output qubit; accepts half the time",
            circuit: Circuit::new(1, 0, vec![Gate::h(0)], bits("0"), 0).unwrap(),
            expected_acceptance: 0.5,
        },
        CatalogEntry {
            name: "entangle-accept",
            description: "H, CNOT into an ancilla, undo in the Bell basis, X on the output",
            circuit: Circuit::new(
                1,
                1,
                vec![Gate::h(0), Gate::cnot(0, 1), Gate::cnot(0, 1), Gate::h(0), Gate::x(1)],
                bits("0"),
                1,
            )
            .unwrap(),
            expected_acceptance: 1.0,
        },
        CatalogEntry {
            name: "input-copy",
            description: "copies input bit x=1 to the ancilla output with a CNOT",
            circuit: Circuit::new(1, 1, vec![Gate::cnot(0, 1)], bits("1"), 1).unwrap(),
            expected_acceptance: 1.0,
        },
        CatalogEntry {
            name: "input-copy-reject",
            description: "copies input bit x=0 to the ancilla output with a CNOT",
            circuit: Circuit::new(1, 1, vec![Gate::cnot(0, 1)], bits("0"), 1).unwrap(),
            expected_acceptance: 0.0,
        },
    ]
}

pub fn catalog_entry(name: &str) -> Result<CatalogEntry> {
    toy_catalog()
        .into_iter()
        .find(|e| e.name == name)
        .ok_or_else(|| invalid(format!("no catalog circuit named {name:?}")))
}

/// Random 1- and 2-qubit gates, for property tests.
pub fn random_circuit<R: rand::Rng>(rng: &mut R, n: usize, m: usize) -> Circuit {
    let mut gates = Vec::with_capacity(m);
    for _ in 0..m {
        if n >= 2 && rng.gen_bool(0.4) {
            let a = rng.gen_range(0..n);
            let mut b = rng.gen_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            gates.push(Gate::cnot(a, b));
        } else {
            let q = rng.gen_range(0..n);
            gates.push(random_single_qubit(rng, q));
        }
    }
    let n_input = (n + 1) / 2;
    let x: String = (0..n_input).map(|_| if rng.gen_bool(0.5) { '1' } else { '0' }).collect();
    Circuit::new(n_input, n - n_input, gates, BitString::parse(&x).unwrap(), rng.gen_range(0..n)).unwrap()
}

fn random_single_qubit<R: rand::Rng>(rng: &mut R, q: usize) -> Gate {
    use std::f64::consts::PI;
    let (a, b, g) = (rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..PI), rng.gen_range(0.0..2.0 * PI));
    let (s, co) = (b / 2.0).sin_cos();
    let e = |phi: f64| C64::from_polar(1.0, phi);
    let m = CMatrix::from_row_slice(
        2,
        2,
        &[
            e(-(a + g) / 2.0) * co,
            -e(-(a - g) / 2.0) * s,
            e((a - g) / 2.0) * s,
            e((a + g) / 2.0) * co,
        ],
    );
    Gate::new("U", vec![q], m).unwrap()
}
