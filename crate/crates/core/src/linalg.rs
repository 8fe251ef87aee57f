//! Small dense linear-algebra helpers shared by every module.
//!
//! Basis convention used throughout the crate: qubit `q` is bit `q` of the
//! computational-basis index, so qubit 0 is the least significant bit. For a
//! local operator on an ordered support `[s0, s1, ...]`, local bit `j`
//! corresponds to `s_j`.

use nalgebra::{DMatrix, DVector};
pub use num_complex::Complex64 as C64;

pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(dim: usize) -> CMatrix {
    CMatrix::identity(dim, dim)
}

pub fn pauli_x() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, ONE, ONE, ZERO])
}

pub fn pauli_y() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ZERO, -I, I, ZERO])
}

pub fn pauli_z() -> CMatrix {
    CMatrix::from_row_slice(2, 2, &[ONE, ZERO, ZERO, -ONE])
}

/// |b⟩⟨b| for a single qubit.
pub fn bit_projector(b: bool) -> CMatrix {
    let mut m = CMatrix::zeros(2, 2);
    let k = b as usize;
    m[(k, k)] = ONE;
    m
}

/// |row⟩⟨col| on `dim` levels.
pub fn ket_bra(dim: usize, row: usize, col: usize) -> CMatrix {
    let mut m = CMatrix::zeros(dim, dim);
    m[(row, col)] = ONE;
    m
}

/// Standard Kronecker product, `a` is the more significant factor.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Tensor product of operators where `ops[j]` acts on local qubit `j`.
pub fn local_product(ops: &[CMatrix]) -> CMatrix {
    ops.iter()
        .fold(identity(1), |acc, op| kron(op, &acc))
}

pub fn dagger(m: &CMatrix) -> CMatrix {
    m.adjoint()
}

/// max |M − M†| over entries.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    let mut worst: f64 = 0.0;
    for i in 0..m.nrows() {
        for j in i..m.ncols() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// max |U†U − I| over entries.
pub fn isometry_defect(m: &CMatrix) -> f64 {
    let g = m.adjoint() * m;
    let mut worst: f64 = 0.0;
    for i in 0..g.nrows() {
        for j in 0..g.ncols() {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((g[(i, j)] - target).norm());
        }
    }
    worst
}

pub fn is_real(m: &CMatrix) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

/// Relative accuracy demanded of a dense eigendecomposition before the
/// second solver is consulted.
const EIGEN_CHECK_TOL: f64 = 1e-10;

fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5)
}

fn sorted(values: Vec<f64>, vectors: CMatrix) -> (Vec<f64>, CMatrix) {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let sorted_values = order.iter().map(|&k| values[k]).collect();
    let sorted_vectors = CMatrix::from_fn(n, n, |i, j| vectors[(i, order[j])]);
    (sorted_values, sorted_vectors)
}

fn nalgebra_eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = m.nrows();
    if is_real(m) {
        let re = DMatrix::<f64>::from_fn(n, n, |i, j| 0.5 * (m[(i, j)].re + m[(j, i)].re));
        let e = re.symmetric_eigen();
        sorted(e.eigenvalues.iter().copied().collect(), e.eigenvectors.map(c))
    } else {
        let e = hermitian_part(m).symmetric_eigen();
        sorted(e.eigenvalues.iter().copied().collect(), e.eigenvectors)
    }
}

fn faer_matrix(m: &CMatrix) -> faer::Mat<C64> {
    faer::Mat::from_fn(m.nrows(), m.ncols(), |i, j| 0.5 * (m[(i, j)] + m[(j, i)].conj()))
}

fn faer_eigh(m: &CMatrix) -> Option<(Vec<f64>, CMatrix)> {
    let e = faer_matrix(m).self_adjoint_eigen(faer::Side::Lower).ok()?;
    let values = e.S().column_vector().iter().map(|z| z.re).collect();
    let u = e.U();
    Some(sorted(values, CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| u[(i, j)])))
}

fn frobenius(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn residual(m: &CMatrix, values: &[f64], vectors: &CMatrix) -> f64 {
    let mut r = m * vectors;
    for (j, &l) in values.iter().enumerate() {
        let v = vectors.column(j) * c(l);
        let mut col = r.column_mut(j);
        col -= v;
    }
    r.column_iter().map(|col| col.norm()).fold(0.0, f64::max)
}

/// Trace and Frobenius identities; cheap evidence that eigenvalues are right.
fn moments_match(m: &CMatrix, values: &[f64]) -> bool {
    let f = frobenius(m).max(f64::MIN_POSITIVE);
    let trace: f64 = (0..m.nrows()).map(|i| m[(i, i)].re).sum();
    let sum: f64 = values.iter().sum();
    let squares: f64 = values.iter().map(|v| v * v).sum();
    (sum - trace).abs() <= EIGEN_CHECK_TOL * f * (m.nrows() as f64).sqrt()
        && (squares.sqrt() - f).abs() <= EIGEN_CHECK_TOL * f
}

/// Eigen-decomposition of a Hermitian matrix, ascending eigenvalues.
///
/// Neither dense solver is reliable on every input (clustered spectra, wide
/// dynamic range), so the result is checked against ‖MU − UΛ‖ and the other
/// solver is tried when the check fails; the smaller residual wins.
pub fn eigh(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    if m.nrows() == 0 {
        return (Vec::new(), CMatrix::zeros(0, 0));
    }
    let h = hermitian_part(m);
    let tol = EIGEN_CHECK_TOL * frobenius(&h).max(f64::MIN_POSITIVE);
    let first = nalgebra_eigh(&h);
    let r1 = residual(&h, &first.0, &first.1);
    if r1 <= tol {
        return first;
    }
    match faer_eigh(&h) {
        Some(second) if residual(&h, &second.0, &second.1) < r1 => second,
        _ => first,
    }
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(m: &CMatrix) -> Vec<f64> {
    let n = m.nrows();
    if n == 0 {
        return Vec::new();
    }
    let h = hermitian_part(m);
    let mut values: Vec<f64> = if is_real(&h) {
        let re = DMatrix::<f64>::from_fn(n, n, |i, j| h[(i, j)].re);
        re.symmetric_eigenvalues().iter().copied().collect()
    } else {
        h.symmetric_eigenvalues().iter().copied().collect()
    };
    values.sort_by(f64::total_cmp);
    if moments_match(&h, &values) {
        values
    } else {
        eigh(&h).0
    }
}

/// Spectral norm of a Hermitian matrix.
pub fn hermitian_norm(m: &CMatrix) -> f64 {
    eigvalsh(m)
        .into_iter()
        .fold(0.0, |acc: f64, v| acc.max(v.abs()))
}

/// Spectral norm of an arbitrary matrix via the largest singular value.
pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let gram = m.adjoint() * m;
    hermitian_norm(&gram).sqrt()
}

pub fn vdot(a: &CVector, b: &CVector) -> C64 {
    a.dotc(b)
}

/// Distance between two unit vectors after removing the relative global phase.
pub fn phase_aligned_distance(a: &CVector, b: &CVector) -> f64 {
    let ov = a.dotc(b);
    let phase = if ov.norm() > 0.0 { ov / ov.norm() } else { ONE };
    (a * phase - b).norm()
}

/// Orthonormal completion: returns an isometry whose first column is `v`.
pub fn complete_to_isometry(v: &CVector) -> CMatrix {
    let dim = v.len();
    let first = v / c(v.norm());
    let mut second: Option<CVector> = None;
    for k in 0..dim {
        let mut e = CVector::zeros(dim);
        e[k] = ONE;
        let proj = first.dotc(&e);
        let w = e - &first * proj;
        if w.norm() > 0.5 {
            second = Some(&w / c(w.norm()));
            break;
        }
    }
    let second = second.expect("dimension ≥ 2 always admits a completion");
    let mut m = CMatrix::zeros(dim, 2);
    m.set_column(0, &first);
    m.set_column(1, &second);
    m
}

/// Gather the bits of `index` at `positions` into a local index.
#[inline]
pub fn gather_bits(index: usize, positions: &[usize]) -> usize {
    positions
        .iter()
        .enumerate()
        .fold(0, |acc, (j, &q)| acc | (((index >> q) & 1) << j))
}

/// Overwrite the bits of `index` at `positions` with the bits of `local`.
#[inline]
pub fn scatter_bits(index: usize, positions: &[usize], local: usize) -> usize {
    positions.iter().enumerate().fold(index, |acc, (j, &q)| {
        let cleared = acc & !(1 << q);
        cleared | (((local >> j) & 1) << q)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn local_product_puts_first_operator_on_low_bit() {
        let xz = local_product(&[pauli_x(), pauli_z()]);
        // X on qubit 0: |00⟩ (index 0) ↦ |01⟩ (index 1, qubit0 = 1) with Z sign +1.
        assert_eq!(xz[(1, 0)], ONE);
        // |q0=0,q1=1⟩ = index 2 ↦ index 3 with Z sign −1.
        assert_eq!(xz[(3, 2)], -ONE);
    }

    #[test]
    fn eigh_sorts_and_reconstructs() {
        let m = kron(&pauli_x(), &pauli_x()) + kron(&pauli_y(), &pauli_y());
        let (vals, vecs) = eigh(&m);
        let expected = [-2.0, 0.0, 0.0, 2.0];
        for (v, e) in vals.iter().zip(expected) {
            assert!((v - e).abs() < 1e-12);
        }
        let d = CMatrix::from_diagonal(&CVector::from_iterator(4, vals.iter().map(|&x| c(x))));
        let back = &vecs * d * vecs.adjoint();
        assert!((back - m).norm() < 1e-12);
    }

    #[test]
    fn bit_gather_scatter_roundtrip() {
        let positions = [3, 0, 5];
        for idx in 0..64usize {
            let local = gather_bits(idx, &positions);
            assert_eq!(scatter_bits(idx, &positions, local), idx);
        }
        assert_eq!(gather_bits(0b101001, &positions), 0b111);
    }

    #[test]
    fn completion_is_isometry() {
        let v = CVector::from_vec(vec![c(0.6), C64::new(0.0, 0.8), ZERO, ZERO]);
        let m = complete_to_isometry(&v);
        assert!(isometry_defect(&m) < 1e-12);
    }
}
