//! Python bindings: Hamiltonians, toy circuits, clock instances and the
//! lift / reduce / decide / sample operations on them.

use glh_core::circuits::{catalog_entry, toy_catalog};
use glh_core::clockham::{
    build_clock_hamiltonian, clock_instance, default_fidelity_promise, gap_certificate, gap_threshold,
    recommended_delta, Backend,
};
use glh_core::excited::{lift_instance, GadgetOptions, Rescaling};
use glh_core::gadgets::{is_2sld as core_is_2sld, reduce_instance, reduce_instance_auto, SldVerdict};
use glh_core::guidestates::heisenberg_code_isometry as core_code;
use glh_core::hamcore::{self, InteractionTerm, Pauli};
use glh_core::io::{self, HamiltonianDoc, InstanceDoc};
use glh_core::linalg::{self, CMatrix};
use glh_core::spectra::{self, GlhleInstance};
use glh_core::GlhError;
use num_complex::Complex64;
use pyo3::exceptions::{PyIOError, PyMemoryError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn py_err(e: GlhError) -> PyErr {
    match e {
        GlhError::Validation(_) | GlhError::Format(_) | GlhError::Json(_) => PyValueError::new_err(e.to_string()),
        GlhError::Capacity { .. } => PyMemoryError::new_err(e.to_string()),
        GlhError::Io(_) => PyIOError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn matrix_from_rows(rows: &[Vec<Complex64>]) -> PyResult<CMatrix> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("matrix must be square"));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn rows_of(m: &CMatrix) -> Vec<Vec<Complex64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

/// Parse "X0 Z2 Y3" into qubit letters.
fn parse_letters(label: &str) -> PyResult<Vec<(usize, Pauli)>> {
    label
        .split_whitespace()
        .map(|tok| {
            let (p, q) = tok.split_at(1);
            let pauli = match p {
                "X" => Pauli::X,
                "Y" => Pauli::Y,
                "Z" => Pauli::Z,
                _ => return Err(PyValueError::new_err(format!("bad Pauli letter in {tok:?}"))),
            };
            let qubit = q.parse().map_err(|_| PyValueError::new_err(format!("bad qubit index in {tok:?}")))?;
            Ok((qubit, pauli))
        })
        .collect()
}

/// A k-local Hamiltonian on n qubits.
#[pyclass(module = "glh", skip_from_py_object)]
#[derive(Clone)]
struct Hamiltonian {
    inner: hamcore::Hamiltonian,
}

#[pymethods]
impl Hamiltonian {
    #[new]
    fn new(n_qubits: usize) -> Self {
        Self {
            inner: hamcore::Hamiltonian::new(n_qubits),
        }
    }

    /// Add weight·P for a Pauli label such as "X0 Z1".
    fn add_pauli(&mut self, label: &str, weight: f64) -> PyResult<()> {
        let term = InteractionTerm::pauli(&parse_letters(label)?, weight).map_err(py_err)?;
        self.inner.push(term).map_err(py_err)
    }

    /// Add weight·M on `support`; M is a list of rows of complex numbers.
    fn add_term(&mut self, support: Vec<usize>, matrix: Vec<Vec<Complex64>>, weight: f64) -> PyResult<()> {
        let term = InteractionTerm::new(support, matrix_from_rows(&matrix)?, weight).map_err(py_err)?;
        self.inner.push(term).map_err(py_err)
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.inner.n_qubits()
    }

    #[getter]
    fn locality(&self) -> usize {
        self.inner.locality()
    }

    fn norm_bound(&self) -> f64 {
        self.inner.operator_norm_bound()
    }

    /// The k lowest eigenvalues.
    fn eigenvalues(&self, k: usize) -> PyResult<Vec<f64>> {
        Ok(spectra::low_spectrum(&self.inner, k).map_err(py_err)?.eigenvalues)
    }

    /// Merged Pauli decomposition as (label, coefficient) pairs.
    fn pauli_terms(&self) -> PyResult<Vec<(String, f64)>> {
        Ok(self
            .inner
            .pauli_decompose()
            .map_err(py_err)?
            .into_iter()
            .map(|p| (p.label(), p.coefficient))
            .collect())
    }

    fn dense(&self) -> PyResult<Vec<Vec<Complex64>>> {
        Ok(rows_of(&self.inner.to_dense().map_err(py_err)?))
    }

    fn to_json(&self) -> PyResult<String> {
        io::to_artifact_string("hamiltonian", &HamiltonianDoc::from(&self.inner)).map_err(py_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let doc: HamiltonianDoc = io::from_artifact_str("hamiltonian", text).map_err(py_err)?;
        Ok(Self {
            inner: doc.to_hamiltonian().map_err(py_err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Hamiltonian(n_qubits={}, terms={}, locality={})",
            self.inner.n_qubits(),
            self.inner.terms().len(),
            self.inner.locality()
        )
    }
}

#[pyclass(module = "glh", get_all, skip_from_py_object)]
#[derive(Clone)]
struct Decision {
    verdict: String,
    c: usize,
    lambda_c: f64,
    a: f64,
    b: f64,
    delta: f64,
    fidelity: f64,
    reasons: Vec<String>,
}

#[pymethods]
impl Decision {
    fn __repr__(&self) -> String {
        format!(
            "Decision(verdict={:?}, lambda_c={:.6e}, fidelity={:.6})",
            self.verdict, self.lambda_c, self.fidelity
        )
    }
}

#[pyclass(module = "glh", get_all, skip_from_py_object)]
#[derive(Clone)]
struct Reduction {
    instance: Instance,
    epsilon: f64,
    eta: f64,
    offset: f64,
    rounds: usize,
    mediators: usize,
}

/// A guided local Hamiltonian instance (H, guide, c, a, b, δ).
#[pyclass(module = "glh", skip_from_py_object)]
#[derive(Clone)]
struct Instance {
    inner: GlhleInstance,
}

#[pymethods]
impl Instance {
    #[getter]
    fn hamiltonian(&self) -> Hamiltonian {
        Hamiltonian {
            inner: self.inner.hamiltonian.clone(),
        }
    }

    #[getter]
    fn c(&self) -> usize {
        self.inner.c
    }

    #[getter]
    fn thresholds(&self) -> (f64, f64) {
        (self.inner.a, self.inner.b)
    }

    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta
    }

    fn decide(&self) -> PyResult<Decision> {
        let d = spectra::decide(&self.inner).map_err(py_err)?;
        Ok(Decision {
            verdict: d.verdict.to_string(),
            c: d.c,
            lambda_c: d.lambda_c,
            a: d.a,
            b: d.b,
            delta: d.delta,
            fidelity: d.fidelity,
            reasons: d.reasons,
        })
    }

    /// Move the ground state to level c with the excited-state gadget.
    #[pyo3(signature = (c, rescaling = "auto"))]
    fn lift(&self, c: usize, rescaling: &str) -> PyResult<Instance> {
        let opts = GadgetOptions {
            rescaling: rescaling.parse::<Rescaling>().map_err(py_err)?,
            ..GadgetOptions::default()
        };
        Ok(Instance {
            inner: lift_instance(&self.inner, c, &opts).map_err(py_err)?.instance,
        })
    }

    /// Reduce to 2- or 3-local form; strength None searches upward from 10³‖H‖.
    #[pyo3(signature = (to_locality = 2, strength = None))]
    fn reduce(&self, to_locality: usize, strength: Option<f64>) -> PyResult<Reduction> {
        let r = match strength {
            Some(s) => reduce_instance(&self.inner, to_locality, s),
            None => reduce_instance_auto(&self.inner, to_locality),
        }
        .map_err(py_err)?;
        Ok(Reduction {
            epsilon: r.certificate.epsilon.unwrap_or(f64::NAN),
            eta: r.certificate.eta.unwrap_or(f64::NAN),
            offset: r.chain.offset(),
            rounds: r.chain.steps.len(),
            mediators: r.chain.mediator_count(),
            instance: Instance { inner: r.instance },
        })
    }

    /// Draw bit strings (qubit 0 first) from the guiding state.
    fn sample(&self, shots: usize, seed: u64) -> Vec<String> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.inner.guide.sample_many(&mut rng, shots).iter().map(|b| b.to_string()).collect()
    }

    fn to_json(&self) -> PyResult<String> {
        io::to_artifact_string("instance", &InstanceDoc::from(&self.inner)).map_err(py_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let doc: InstanceDoc = io::from_artifact_str("instance", text).map_err(py_err)?;
        Ok(Self {
            inner: doc.to_instance().map_err(py_err)?,
        })
    }

    fn __repr__(&self) -> String {
        format!(
            "Instance(n_qubits={}, c={}, a={:.6e}, b={:.6e}, delta={:.6})",
            self.inner.hamiltonian.n_qubits(),
            self.inner.c,
            self.inner.a,
            self.inner.b,
            self.inner.delta
        )
    }
}

/// Names of the toy verifier circuits.
#[pyfunction]
fn catalog() -> Vec<String> {
    toy_catalog().into_iter().map(|e| e.name.to_string()).collect()
}

/// Clock instance of a catalog circuit on the unary backend.
#[pyfunction]
#[pyo3(signature = (circuit, idle = 0, delta = None, fidelity_promise = None))]
fn build_clock(circuit: &str, idle: usize, delta: Option<f64>, fidelity_promise: Option<f64>) -> PyResult<Instance> {
    let idled = catalog_entry(circuit).map_err(py_err)?.circuit.idle(idle);
    let delta = delta.unwrap_or_else(|| recommended_delta(idled.total_gates()));
    let ch = build_clock_hamiltonian(&idled, delta, Backend::Unary).map_err(py_err)?;
    let promise = fidelity_promise.unwrap_or_else(|| default_fidelity_promise(&idled));
    let (inner, _) = clock_instance(&ch, promise).map_err(py_err)?;
    Ok(Instance { inner })
}

/// (λ1 of H₀, π²/(64M²)) for a catalog circuit's clock.
#[pyfunction]
#[pyo3(signature = (circuit, idle = 0))]
fn clock_gap(circuit: &str, idle: usize) -> PyResult<(f64, f64)> {
    let idled = catalog_entry(circuit).map_err(py_err)?.circuit.idle(idle);
    let ch = build_clock_hamiltonian(&idled, 1.0, Backend::Unary).map_err(py_err)?;
    let g = gap_certificate(&ch).map_err(py_err)?;
    Ok((g.lambda1, gap_threshold(idled.total_gates())))
}

#[pyfunction(name = "recommended_delta")]
fn py_recommended_delta(m: usize) -> f64 {
    recommended_delta(m)
}

/// "sld", "non-sld" or "inconclusive" for a family of 2-qubit terms.
#[pyfunction]
#[pyo3(signature = (terms, tol = 1e-6))]
fn is_2sld(terms: Vec<Vec<Vec<Complex64>>>, tol: f64) -> PyResult<(String, f64)> {
    let terms = terms
        .iter()
        .map(|m| InteractionTerm::new(vec![0, 1], matrix_from_rows(m)?, 1.0).map_err(py_err))
        .collect::<PyResult<Vec<_>>>()?;
    let v = core_is_2sld(&terms, tol);
    let tag = match v {
        SldVerdict::Sld { .. } => "sld",
        SldVerdict::NonSld { .. } => "non-sld",
        SldVerdict::Inconclusive { .. } => "inconclusive",
    };
    Ok((tag.to_string(), v.residual()))
}

/// The 1 → 4 qubit isometry as a 16×2 list of rows.
#[pyfunction]
fn heisenberg_code_isometry() -> Vec<Vec<Complex64>> {
    rows_of(&core_code())
}

/// Largest |entry| of V†V − I.
#[pyfunction]
fn isometry_defect(matrix: Vec<Vec<Complex64>>) -> PyResult<f64> {
    let cols = matrix.first().map_or(0, |r| r.len());
    if matrix.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err("ragged matrix"));
    }
    let m = CMatrix::from_fn(matrix.len(), cols, |i, j| matrix[i][j]);
    Ok(linalg::isometry_defect(&m))
}

#[pymodule]
fn glh(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Hamiltonian>()?;
    m.add_class::<Instance>()?;
    m.add_class::<Decision>()?;
    m.add_class::<Reduction>()?;
    m.add_function(wrap_pyfunction!(catalog, m)?)?;
    m.add_function(wrap_pyfunction!(build_clock, m)?)?;
    m.add_function(wrap_pyfunction!(clock_gap, m)?)?;
    m.add_function(wrap_pyfunction!(py_recommended_delta, m)?)?;
    m.add_function(wrap_pyfunction!(is_2sld, m)?)?;
    m.add_function(wrap_pyfunction!(heisenberg_code_isometry, m)?)?;
    m.add_function(wrap_pyfunction!(isometry_defect, m)?)?;
    Ok(())
}
