//! Numerical checks of a simulation H → H′: the (Δ, η, ε) certificate,
//! excited-state transfer, and Schrieffer–Wolf first-order scaling.

use serde::{Deserialize, Serialize};

use super::construct::ReductionChain;
use crate::error::{invalid, GlhError, Result};
use crate::hamcore::Hamiltonian;
use crate::linalg::{self, CMatrix, CVector, C64};
use crate::spectra::DENSE_MAX_DIM;

const DEGENERATE_CUT: f64 = 1e-8;

/// Encoding E(M) = V M V† with V = I ⊗ |0…0⟩ on appended ancillas (P = I, Q = 0).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Encoding {
    pub n_input: usize,
    pub n_ancilla: usize,
    /// Constant added to H before comparison with H′.
    pub offset: f64,
}

impl Encoding {
    pub fn n_output(&self) -> usize {
        self.n_input + self.n_ancilla
    }

    /// V as a dense 2^{n+m} × 2^n matrix.
    pub fn isometry(&self) -> CMatrix {
        let rows = 1usize << self.n_output();
        let cols = 1usize << self.n_input;
        CMatrix::from_fn(rows, cols, |r, c| if r == c { linalg::ONE } else { linalg::ZERO })
    }

    pub fn encode_vector(&self, v: &CVector) -> CVector {
        let mut out = CVector::zeros(1usize << self.n_output());
        out.rows_mut(0, v.len()).copy_from(v);
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationCertificate {
    pub encoding: Encoding,
    /// Energy cut separating the simulated block of H′, when known.
    pub delta_cut: Option<f64>,
    pub epsilon: Option<f64>,
    pub eta: Option<f64>,
}

impl SimulationCertificate {
    pub fn unclaimed(encoding: Encoding) -> Self {
        Self {
            encoding,
            delta_cut: None,
            epsilon: None,
            eta: None,
        }
    }

    pub fn for_chain(chain: &ReductionChain) -> Self {
        Self::unclaimed(Encoding {
            n_input: chain.input.n_qubits(),
            n_ancilla: chain.mediator_count(),
            offset: chain.offset(),
        })
    }

    /// Fill the claims with measured values.
    pub fn measured(h: &Hamiltonian, h_prime: &Hamiltonian, encoding: Encoding) -> Result<Self> {
        let report = certify_simulation(h, h_prime, &Self::unclaimed(encoding.clone()))?;
        Ok(Self {
            encoding,
            delta_cut: Some(report.cut),
            epsilon: Some(report.measured_epsilon),
            eta: Some(report.measured_eta),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub index: usize,
    pub target: f64,
    pub simulated: f64,
    pub difference: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub ok: bool,
    pub measured_epsilon: f64,
    pub measured_eta: f64,
    pub eigenvalue_deviation: f64,
    pub cut: f64,
    pub cut_gap: f64,
    pub degenerate_cut: bool,
    pub spectral_table: Vec<SpectrumRow>,
}

fn dense_checked(h: &Hamiltonian, what: &str) -> Result<CMatrix> {
    if h.dim() > DENSE_MAX_DIM {
        return Err(GlhError::Capacity {
            what: format!("dense certification of {what}"),
            needed: h.dim() as u128,
            limit: DENSE_MAX_DIM as u128,
        });
    }
    h.to_dense()
}

fn inverse_sqrt(m: &CMatrix) -> Result<CMatrix> {
    let (vals, vecs) = linalg::eigh(m);
    if vals[0] <= 1e-12 {
        return Err(invalid("encoded subspace is orthogonal to the low-energy subspace"));
    }
    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        vals.len(),
        vals.iter().map(|&x| C64::new(1.0 / x.sqrt(), 0.0)),
    ));
    Ok(&vecs * d * linalg::dagger(&vecs))
}

struct LowBlock {
    values: Vec<f64>,
    /// Columns of the unitary aligning the encoded basis with the low space,
    /// written in the eigenbasis of H′ (the polar factor of U_low† V).
    alignment: CMatrix,
    eta: f64,
    cut: f64,
    cut_gap: f64,
}

fn low_block(h_prime: &CMatrix, enc: &Encoding) -> Result<LowBlock> {
    let n = 1usize << enc.n_input;
    let (vals, vecs) = linalg::eigh(h_prime);
    let low = vecs.columns(0, n);
    // W = U_low† V keeps the first 2^n rows of U_low.
    let w = linalg::dagger(&low.rows(0, n).into_owned());
    let q = &w * inverse_sqrt(&(linalg::dagger(&w) * &w))?;
    let gram = CMatrix::identity(n, n) * C64::new(2.0, 0.0) - linalg::dagger(&q) * &w - linalg::dagger(&w) * &q;
    let eta = linalg::eigvalsh(&gram).last().copied().unwrap_or(0.0).max(0.0).sqrt();
    let (cut, cut_gap) = if vals.len() > n {
        (0.5 * (vals[n - 1] + vals[n]), vals[n] - vals[n - 1])
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    Ok(LowBlock {
        values: vals[..n].to_vec(),
        alignment: q,
        eta,
        cut,
        cut_gap,
    })
}

/// Measure how well H′ simulates H under the certificate's encoding.
/// η is ‖Ṽ − V‖ with Ṽ the polar factor of P_low V, the isometry onto the low
/// space closest to V; ε compares H′ on that space to Ṽ(H + offset)Ṽ†.
pub fn certify_simulation(h: &Hamiltonian, h_prime: &Hamiltonian, cert: &SimulationCertificate) -> Result<CertificationReport> {
    let enc = &cert.encoding;
    if h.n_qubits() != enc.n_input || h_prime.n_qubits() != enc.n_output() {
        return Err(invalid(format!(
            "encoding maps {} → {} qubits, got H on {} and H′ on {}",
            enc.n_input,
            enc.n_output(),
            h.n_qubits(),
            h_prime.n_qubits()
        )));
    }
    let hd = dense_checked(h, "H")?;
    let hp = dense_checked(h_prime, "H′")?;
    let block = low_block(&hp, enc)?;
    let n = hd.nrows();
    let shifted = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        block.values.iter().map(|&x| C64::new(x - enc.offset, 0.0)),
    ));
    let q = &block.alignment;
    let diff = linalg::dagger(q) * shifted * q - &hd;
    let measured_epsilon = linalg::hermitian_norm(&diff);
    let target = linalg::eigvalsh(&hd);
    let spectral_table: Vec<SpectrumRow> = target
        .iter()
        .zip(&block.values)
        .enumerate()
        .map(|(index, (&t, &s))| SpectrumRow {
            index,
            target: t,
            simulated: s - enc.offset,
            difference: s - enc.offset - t,
        })
        .collect();
    let eigenvalue_deviation = spectral_table.iter().map(|r| r.difference.abs()).fold(0.0, f64::max);
    let scale = linalg::hermitian_norm(&hp).max(1.0);
    let degenerate_cut = block.cut_gap < DEGENERATE_CUT * scale;
    let slack = 1e-9 * scale;
    let ok = cert.epsilon.is_none_or(|e| measured_epsilon <= e + slack && eigenvalue_deviation <= e + slack)
        && cert.eta.is_none_or(|e| block.eta <= e + slack)
        && cert.delta_cut.is_none_or(|d| block.values.last().is_none_or(|&top| top <= d));
    Ok(CertificationReport {
        ok,
        measured_epsilon,
        measured_eta: block.eta,
        eigenvalue_deviation,
        cut: block.cut,
        cut_gap: block.cut_gap,
        degenerate_cut,
        spectral_table,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransferReport {
    pub c: usize,
    pub gamma: f64,
    pub epsilon: f64,
    pub eta: f64,
    pub distance: f64,
    /// Smallest K with distance ≤ η + Kε/γ.
    pub k: f64,
    pub k_limit: f64,
    pub holds: bool,
}

pub const TRANSFER_K_LIMIT: f64 = 10.0;

/// Compare E_state(g_c(H)) with g_c(H′) against η + Kε/γ.
pub fn excited_transfer_check(h: &Hamiltonian, h_prime: &Hamiltonian, cert: &SimulationCertificate, c: usize) -> Result<TransferReport> {
    let (vals, vecs) = linalg::eigh(&dense_checked(h, "H")?);
    if c >= vals.len() {
        return Err(invalid(format!("level {c} out of range for dimension {}", vals.len())));
    }
    let below = if c > 0 { vals[c] - vals[c - 1] } else { f64::INFINITY };
    let above = if c + 1 < vals.len() { vals[c + 1] - vals[c] } else { f64::INFINITY };
    let gamma = below.min(above);
    let (epsilon, eta) = match (cert.epsilon, cert.eta) {
        (Some(e), Some(n)) => (e, n),
        _ => {
            let report = certify_simulation(h, h_prime, cert)?;
            (cert.epsilon.unwrap_or(report.measured_epsilon), cert.eta.unwrap_or(report.measured_eta))
        }
    };
    if !(2.0 * epsilon < gamma) {
        return Err(GlhError::GapPrecondition(format!(
            "need 2ε < γ, got ε = {epsilon:.3e}, γ = {gamma:.3e}"
        )));
    }
    let (_, vecs_prime) = linalg::eigh(&h_prime.to_dense()?);
    let encoded = cert.encoding.encode_vector(&vecs.column(c).into_owned());
    let distance = linalg::phase_aligned_distance(&encoded, &vecs_prime.column(c).into_owned());
    let excess = (distance - eta).max(0.0);
    let k = if excess == 0.0 {
        0.0
    } else if epsilon > 0.0 {
        excess * gamma / epsilon
    } else {
        f64::INFINITY
    };
    Ok(TransferReport {
        c,
        gamma,
        epsilon,
        eta,
        distance,
        k,
        k_limit: TRANSFER_K_LIMIT,
        holds: k <= TRANSFER_K_LIMIT,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwPoint {
    pub delta: f64,
    pub distance: f64,
    pub eigenvalue_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwReport {
    pub points: Vec<SwPoint>,
    pub distance_slope: Option<f64>,
    pub eigenvalue_slope: Option<f64>,
    pub expected_slope: f64,
    pub distance_tolerance: f64,
    pub eigenvalue_tolerance: f64,
    pub holds: bool,
}

fn log_log_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() < 2 || ys.iter().any(|&y| y <= 0.0) {
        return None;
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    Some(sxy / sxx)
}

/// Diagonalize ΔH0 + V across a sweep of Δ and fit log-log slopes of the
/// ground-state distance and of |λ0 − ⟨g0|V|g0⟩|.
pub fn sw_scaling_check(h0: &Hamiltonian, v: &Hamiltonian, deltas: &[f64]) -> Result<SwReport> {
    if h0.n_qubits() != v.n_qubits() {
        return Err(invalid("H0 and V act on different qubit counts"));
    }
    let d0 = dense_checked(h0, "H0")?;
    let dv = dense_checked(v, "V")?;
    let (vals0, vecs0) = linalg::eigh(&d0);
    if vals0[0].abs() > 1e-10 {
        return Err(invalid(format!("H0 ground energy must be 0, got {}", vals0[0])));
    }
    if vals0.len() > 1 && vals0[1] < 1.0 - 1e-10 {
        return Err(GlhError::Degeneracy(format!(
            "H0 must have a unique ground state and nonzero eigenvalues ≥ 1, next level {}",
            vals0[1]
        )));
    }
    let v_norm = linalg::hermitian_norm(&dv);
    let g0 = vecs0.column(0).into_owned();
    let first_order = (g0.adjoint() * &dv * &g0)[(0, 0)].re;
    let mut points = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        if !(v_norm <= delta / 16.0 + 1e-15) {
            return Err(invalid(format!("need ‖V‖ ≤ Δ/16, got ‖V‖ = {v_norm} at Δ = {delta}")));
        }
        let total = &d0 * C64::new(delta, 0.0) + &dv;
        let (vals, vecs) = linalg::eigh(&total);
        points.push(SwPoint {
            delta,
            distance: linalg::phase_aligned_distance(&g0, &vecs.column(0).into_owned()),
            eigenvalue_error: (vals[0] - first_order).abs(),
        });
    }
    let xs: Vec<f64> = points.iter().map(|p| p.delta).collect();
    let noise = 1e-12 * v_norm.max(1.0);
    let clean = |ys: Vec<f64>| if ys.iter().all(|&y| y <= noise) { None } else { Some(ys) };
    let distance_slope = clean(points.iter().map(|p| p.distance).collect()).and_then(|ys| log_log_slope(&xs, &ys));
    let eigenvalue_slope = clean(points.iter().map(|p| p.eigenvalue_error).collect()).and_then(|ys| log_log_slope(&xs, &ys));
    let expected_slope = -1.0;
    let (distance_tolerance, eigenvalue_tolerance) = (0.2, 0.3);
    let within = |s: Option<f64>, tol: f64| s.is_none_or(|s| (s - expected_slope).abs() <= tol);
    Ok(SwReport {
        holds: within(distance_slope, distance_tolerance) && within(eigenvalue_slope, eigenvalue_tolerance),
        points,
        distance_slope,
        eigenvalue_slope,
        expected_slope,
        distance_tolerance,
        eigenvalue_tolerance,
    })
}
