//! Eigensolvers, level fidelities and the GLHLE decision oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, GlhError, Result};
use crate::guidestates::GuideState;
use crate::hamcore::Hamiltonian;
use crate::linalg::{self, CMatrix, CVector, C64, ZERO};
use crate::sparse::CsrMatrix;

/// Largest dimension handed to the dense solver.
pub const DENSE_MAX_DIM: usize = 4096;
/// Largest dimension handed to the iterative solver.
pub const ITERATIVE_MAX_DIM: usize = 1 << 22;
pub const MAX_ITERATIVE_PAIRS: usize = 200;
pub const LANCZOS_TOL: f64 = 1e-10;
/// Relative width of one degenerate level.
pub const CLUSTER_TOL: f64 = 1e-8;
const LANCZOS_SEED: u64 = 0x6c68_0001;
const MAX_RESTARTS: usize = 400;
/// Basis storage limit for the iterative solver, in complex entries.
const BASIS_ENTRY_BUDGET: usize = 1 << 27;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dense,
    Iterative,
}

#[derive(Clone, Debug)]
pub struct SpectralResult {
    pub eigenvalues: Vec<f64>,
    /// Columns are eigenvectors, in eigenvalue order.
    pub eigenvectors: Option<CMatrix>,
    pub method: Method,
    pub residuals: Vec<f64>,
}

impl SpectralResult {
    pub fn vector(&self, i: usize) -> Option<CVector> {
        self.eigenvectors.as_ref().map(|v| v.column(i).into_owned())
    }
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub seed: u64,
    pub tol: f64,
    pub want_vectors: bool,
    /// Force the iterative path regardless of size.
    pub force_iterative: bool,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            seed: LANCZOS_SEED,
            tol: LANCZOS_TOL,
            want_vectors: true,
            force_iterative: false,
        }
    }
}

/// The `k` lowest eigenpairs of H.
pub fn low_spectrum(h: &Hamiltonian, k: usize) -> Result<SpectralResult> {
    let m = h.assemble_sparse()?;
    low_spectrum_matrix(&m, k, &SolverOptions::default())
}

pub fn low_spectrum_matrix(m: &CsrMatrix, k: usize, opts: &SolverOptions) -> Result<SpectralResult> {
    let dim = m.dim();
    if k == 0 || k > dim {
        return Err(invalid(format!("requested {k} eigenpairs of a {dim}-dimensional operator")));
    }
    if dim <= DENSE_MAX_DIM && !opts.force_iterative {
        return Ok(dense_low(m, k, opts.want_vectors));
    }
    if dim > ITERATIVE_MAX_DIM {
        return Err(GlhError::Capacity {
            what: "iterative eigensolver dimension".into(),
            needed: dim as u128,
            limit: ITERATIVE_MAX_DIM as u128,
        });
    }
    if k > MAX_ITERATIVE_PAIRS {
        return Err(GlhError::Capacity {
            what: "iterative eigenpairs".into(),
            needed: k as u128,
            limit: MAX_ITERATIVE_PAIRS as u128,
        });
    }
    lanczos(m, k, opts)
}

fn dense_low(m: &CsrMatrix, k: usize, want_vectors: bool) -> SpectralResult {
    let dense = m.to_dense();
    let (vals, vecs) = linalg::eigh(&dense);
    let vecs = vecs.columns(0, k).into_owned();
    let eigenvalues: Vec<f64> = vals[..k].to_vec();
    let residuals = residuals(m, &eigenvalues, &vecs);
    SpectralResult {
        eigenvalues,
        eigenvectors: want_vectors.then_some(vecs),
        method: Method::Dense,
        residuals,
    }
}

/// Full spectrum of a small operator.
pub fn full_spectrum(m: &CsrMatrix) -> Result<SpectralResult> {
    if m.dim() > DENSE_MAX_DIM {
        return Err(GlhError::Capacity {
            what: "dense eigensolver dimension".into(),
            needed: m.dim() as u128,
            limit: DENSE_MAX_DIM as u128,
        });
    }
    Ok(dense_low(m, m.dim(), true))
}

fn residuals(m: &CsrMatrix, vals: &[f64], vecs: &CMatrix) -> Vec<f64> {
    vals.iter()
        .enumerate()
        .map(|(i, &lam)| {
            let v = vecs.column(i).into_owned();
            (m.matvec(&v) - &v * linalg::c(lam)).norm()
        })
        .collect()
}

fn random_unit(dim: usize, rng: &mut ChaCha8Rng) -> CVector {
    let v = CVector::from_fn(dim, |_, _| C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5));
    let n = v.norm();
    v / linalg::c(n)
}

/// Two passes of classical Gram-Schmidt; returns the first-pass coefficients
/// plus corrections.
fn orthogonalize(w: &mut CVector, basis: &[CVector]) -> Vec<C64> {
    let mut coeffs = vec![ZERO; basis.len()];
    for _ in 0..2 {
        for (j, v) in basis.iter().enumerate() {
            let h = v.dotc(w);
            w.axpy(-h, v, linalg::ONE);
            coeffs[j] += h;
        }
    }
    coeffs
}

/// Thick-restart Lanczos with full reorthogonalization.
fn lanczos(m: &CsrMatrix, k: usize, opts: &SolverOptions) -> Result<SpectralResult> {
    let dim = m.dim();
    let max_basis = (2 * k + 40).max(60).min(dim);
    if max_basis.saturating_mul(dim) > BASIS_ENTRY_BUDGET {
        return Err(GlhError::Capacity {
            what: "Lanczos basis entries".into(),
            needed: (max_basis * dim) as u128,
            limit: BASIS_ENTRY_BUDGET as u128,
        });
    }
    let norm_bound = m.max_row_sum().max(f64::MIN_POSITIVE);
    let tol = opts.tol * norm_bound;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);

    let mut basis: Vec<CVector> = vec![random_unit(dim, &mut rng)];
    // projected matrix T = V†AV, stored densely
    let mut t = CMatrix::zeros(max_basis, max_basis);
    let mut worst = f64::INFINITY;

    for restart in 0..MAX_RESTARTS {
        let residual_vec: CVector;
        let mut beta;
        let mut j = basis.len() - 1;
        loop {
            let mut w = m.matvec(&basis[j]);
            let coeffs = orthogonalize(&mut w, &basis);
            for (i, h) in coeffs.iter().enumerate() {
                t[(i, j)] = *h;
                t[(j, i)] = h.conj();
            }
            t[(j, j)] = linalg::c(coeffs[j].re);
            beta = w.norm();
            if basis.len() == max_basis {
                residual_vec = w;
                break;
            }
            if beta <= 1e-12 * norm_bound {
                // invariant subspace: continue with a fresh direction
                let mut fresh = random_unit(dim, &mut rng);
                orthogonalize(&mut fresh, &basis);
                let n = fresh.norm();
                if n < 1e-8 {
                    residual_vec = CVector::zeros(dim);
                    beta = 0.0;
                    break;
                }
                basis.push(fresh / linalg::c(n));
            } else {
                basis.push(&w / linalg::c(beta));
                t[(j + 1, j)] = linalg::c(beta);
                t[(j, j + 1)] = linalg::c(beta);
            }
            j += 1;
        }
        let size = basis.len();
        let tm = t.view((0, 0), (size, size)).into_owned();
        let (theta, y) = linalg::eigh(&tm);
        let want = k.min(size);
        let ritz_res: Vec<f64> = (0..size).map(|i| beta * y[(size - 1, i)].norm()).collect();
        worst = ritz_res[..want].iter().cloned().fold(0.0, f64::max);
        let done = worst <= tol || size == dim;
        if done || restart + 1 == MAX_RESTARTS {
            if !done {
                break;
            }
            let vecs = CMatrix::from_fn(dim, want, |r, col| {
                basis.iter().enumerate().map(|(i, v)| v[r] * y[(i, col)]).sum()
            });
            let mut vecs = vecs;
            for col in 0..want {
                let n = vecs.column(col).norm();
                vecs.column_mut(col).scale_mut(1.0 / n);
            }
            let eigenvalues = theta[..want].to_vec();
            let res = residuals(m, &eigenvalues, &vecs);
            return Ok(SpectralResult {
                eigenvalues,
                eigenvectors: opts.want_vectors.then_some(vecs),
                method: Method::Iterative,
                residuals: res,
            });
        }
        // thick restart: keep the lowest Ritz vectors plus the residual direction
        let keep = (k + (max_basis - k) / 2).min(size - 1).max(k);
        let mut new_basis = Vec::with_capacity(max_basis);
        for col in 0..keep {
            let mut v = CVector::zeros(dim);
            for (i, b) in basis.iter().enumerate() {
                v.axpy(y[(i, col)], b, linalg::ONE);
            }
            new_basis.push(v);
        }
        t.fill(ZERO);
        for col in 0..keep {
            t[(col, col)] = linalg::c(theta[col]);
        }
        let f = residual_vec;
        if beta > 1e-14 * norm_bound {
            let fv = &f / linalg::c(beta);
            for col in 0..keep {
                let coupling = y[(size - 1, col)].conj() * beta;
                t[(keep, col)] = coupling;
                t[(col, keep)] = coupling.conj();
            }
            new_basis.push(fv);
        } else {
            let mut fresh = random_unit(dim, &mut rng);
            orthogonalize(&mut fresh, &new_basis);
            let n = fresh.norm();
            new_basis.push(fresh / linalg::c(n));
        }
        basis = new_basis;
    }
    Err(GlhError::NoConvergence {
        iterations: MAX_RESTARTS,
        residual: worst,
    })
}

/// Eigenpairs nearest `sigma`, from the lowest pairs of (A − σ)².
pub fn shift_fold(m: &CsrMatrix, sigma: f64, k: usize, opts: &SolverOptions) -> Result<SpectralResult> {
    let shifted = m.shifted(-sigma);
    let folded = square(&shifted);
    let mut inner = *opts;
    inner.want_vectors = true;
    // squaring the operator squares the tolerance scale
    inner.tol = opts.tol * opts.tol.sqrt();
    // a few extra pairs: ±δ around σ fold onto one value
    let extra = (k + 2).min(m.dim());
    let sq = low_spectrum_matrix(&folded, extra, &inner)?;
    let q = sq.eigenvectors.expect("vectors requested");
    // Rayleigh-Ritz with the unfolded operator separates the mixed pairs
    let mut aq = CMatrix::zeros(m.dim(), extra);
    for col in 0..extra {
        aq.set_column(col, &m.matvec(&q.column(col).into_owned()));
    }
    let proj = q.adjoint() * &aq;
    let (theta, y) = linalg::eigh(&proj);
    let ritz = &q * &y;
    let mut pairs: Vec<(f64, CVector)> = (0..extra).map(|i| (theta[i], ritz.column(i).into_owned())).collect();
    pairs.sort_by(|a, b| (a.0 - sigma).abs().total_cmp(&(b.0 - sigma).abs()));
    pairs.truncate(k);
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let eigenvalues: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mat = CMatrix::from_fn(m.dim(), k, |r, c| pairs[c].1[r]);
    let res = residuals(m, &eigenvalues, &mat);
    Ok(SpectralResult {
        eigenvalues,
        eigenvectors: opts.want_vectors.then_some(mat),
        method: sq.method,
        residuals: res,
    })
}

fn square(m: &CsrMatrix) -> CsrMatrix {
    let dim = m.dim();
    let mut t = Vec::new();
    for r in 0..dim {
        let mut row = std::collections::BTreeMap::new();
        for (j, a) in m.row(r) {
            for (l, b) in m.row(j) {
                *row.entry(l).or_insert(ZERO) += a * b;
            }
        }
        t.extend(row.into_iter().map(|(l, v)| (r, l, v)));
    }
    CsrMatrix::from_triplets(dim, t)
}

/// Everything measured about level `c` for one state.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LevelReport {
    pub c: usize,
    pub eigenvalue: f64,
    /// Indices [first, last] of the eigenvalues merged into level c.
    pub cluster: (usize, usize),
    pub fidelity: f64,
    pub gap_below: Option<f64>,
    pub gap_above: Option<f64>,
    pub eigenvalues: Vec<f64>,
    pub method: Method,
    pub max_residual: f64,
}

/// ‖Π_c|u⟩‖² where Π_c covers the whole degenerate cluster of λ_c.
pub fn fidelity_with_level(h: &Hamiltonian, state: &CVector, c: usize) -> Result<f64> {
    Ok(level_report(&h.assemble_sparse()?, state, c)?.fidelity)
}

pub fn level_report(m: &CsrMatrix, state: &CVector, c: usize) -> Result<LevelReport> {
    let dim = m.dim();
    if state.len() != dim {
        return Err(invalid(format!("state has dimension {}, operator {dim}", state.len())));
    }
    if c >= dim {
        return Err(invalid(format!("level {c} out of range for dimension {dim}")));
    }
    let scale = m.max_row_sum().max(f64::MIN_POSITIVE);
    let thresh = CLUSTER_TOL * scale;
    let opts = SolverOptions::default();
    let mut k = (c + 3).min(dim);
    let spec = loop {
        let spec = low_spectrum_matrix(m, k, &opts)?;
        let lam = spec.eigenvalues[c];
        let top = *spec.eigenvalues.last().unwrap();
        if k == dim || top - lam > 10.0 * thresh {
            break spec;
        }
        k = (2 * k).min(dim);
    };
    let vals = &spec.eigenvalues;
    let lam = vals[c];
    let mut first = c;
    while first > 0 && lam - vals[first - 1] <= thresh {
        first -= 1;
    }
    let mut last = c;
    while last + 1 < vals.len() && vals[last + 1] - lam <= thresh {
        last += 1;
    }
    let gap_below = (first > 0).then(|| vals[first] - vals[first - 1]);
    let gap_above = (last + 1 < vals.len()).then(|| vals[last + 1] - vals[last]);
    for g in [gap_below, gap_above].into_iter().flatten() {
        if g <= 10.0 * thresh {
            return Err(GlhError::Degeneracy(format!(
                "level {c} at {lam:.12e} has a neighbour {g:.3e} away, inside the ambiguity band"
            )));
        }
    }
    let vecs = spec.eigenvectors.as_ref().expect("vectors requested");
    let norm = state.norm();
    let fidelity = (first..=last)
        .map(|i| vecs.column(i).dotc(state).norm_sqr())
        .sum::<f64>()
        / (norm * norm);
    Ok(LevelReport {
        c,
        eigenvalue: lam,
        cluster: (first, last),
        fidelity,
        gap_below,
        gap_above,
        eigenvalues: vals.clone(),
        method: spec.method,
        max_residual: spec.residuals.iter().cloned().fold(0.0, f64::max),
    })
}

/// Projector onto the eigenspace of level c, as a dense matrix.
pub fn level_projector(m: &CsrMatrix, c: usize) -> Result<CMatrix> {
    let dim = m.dim();
    let dummy = CVector::from_element(dim, linalg::c(1.0 / (dim as f64).sqrt()));
    let rep = level_report(m, &dummy, c)?;
    let spec = low_spectrum_matrix(m, rep.eigenvalues.len(), &SolverOptions::default())?;
    let vecs = spec.eigenvectors.unwrap();
    let block = vecs.columns(rep.cluster.0, rep.cluster.1 - rep.cluster.0 + 1).into_owned();
    Ok(&block * block.adjoint())
}

/// A guided local Hamiltonian low-energy instance.
#[derive(Clone, Debug)]
pub struct GlhleInstance {
    pub hamiltonian: Hamiltonian,
    pub guide: GuideState,
    pub c: usize,
    pub a: f64,
    pub b: f64,
    pub delta: f64,
}

/// Slack allowed on the ‖H‖ ≤ 1 check for rounding in normalization.
const NORM_SLACK: f64 = 1e-12;

impl GlhleInstance {
    pub fn new(hamiltonian: Hamiltonian, guide: GuideState, c: usize, a: f64, b: f64, delta: f64) -> Result<Self> {
        let bound = hamiltonian.operator_norm_bound();
        if bound > 1.0 + NORM_SLACK {
            return Err(invalid(format!("‖H‖ bound {bound} exceeds 1")));
        }
        if guide.n_qubits() != hamiltonian.n_qubits() {
            return Err(invalid(format!(
                "guide has {} qubits, Hamiltonian has {}",
                guide.n_qubits(),
                hamiltonian.n_qubits()
            )));
        }
        if !(b > a) {
            return Err(invalid(format!("thresholds need b > a, got a={a}, b={b}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid(format!("fidelity promise δ={delta} outside (0,1)")));
        }
        if c >= hamiltonian.dim() {
            return Err(invalid(format!("level {c} exceeds the dimension")));
        }
        Ok(Self {
            hamiltonian,
            guide,
            c,
            a,
            b,
            delta,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    #[serde(rename = "YES")]
    Yes,
    #[serde(rename = "NO")]
    No,
    #[serde(rename = "PROMISE-VIOLATED")]
    PromiseViolated,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Yes => "YES",
            Self::No => "NO",
            Self::PromiseViolated => "PROMISE-VIOLATED",
        })
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DecisionReport {
    pub verdict: Verdict,
    pub c: usize,
    pub lambda_c: f64,
    pub a: f64,
    pub b: f64,
    pub delta: f64,
    pub fidelity: f64,
    pub reasons: Vec<String>,
    pub level: LevelReport,
}

pub fn decide(inst: &GlhleInstance) -> Result<DecisionReport> {
    let m = inst.hamiltonian.assemble_sparse()?;
    let u = inst.guide.to_dense()?;
    let level = level_report(&m, &u, inst.c)?;
    let lam = level.eigenvalue;
    let mut reasons = Vec::new();
    let mut verdict = if lam <= inst.a {
        Verdict::Yes
    } else if lam >= inst.b {
        Verdict::No
    } else {
        reasons.push(format!("λ_c = {lam:.6e} lies strictly between a and b"));
        Verdict::PromiseViolated
    };
    if level.fidelity < inst.delta {
        reasons.push(format!(
            "guide fidelity {:.6e} below promised δ = {:.6e}",
            level.fidelity, inst.delta
        ));
        verdict = Verdict::PromiseViolated;
    }
    Ok(DecisionReport {
        verdict,
        c: inst.c,
        lambda_c: lam,
        a: inst.a,
        b: inst.b,
        delta: inst.delta,
        fidelity: level.fidelity,
        reasons,
        level,
    })
}
