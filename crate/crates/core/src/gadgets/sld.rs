//! Heuristic test for simultaneous local diagonalisability of 2-qubit terms:
//! search one U ∈ SU(2) such that every U⊗U h U†⊗U† is ZZ plus 1-local.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::hamcore::{InteractionTerm, Pauli};
use crate::linalg::{self, CMatrix, C64};

const GRID_ALPHA: usize = 4;
const GRID_BETA: usize = 3;
const GRID_GAMMA: usize = 2;
const NM_MAX_ITER: usize = 4000;
const NM_XTOL: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum SldVerdict {
    Sld { angles: [f64; 3], residual: f64 },
    NonSld { residual: f64 },
    Inconclusive { residual: f64 },
}

impl SldVerdict {
    pub fn residual(&self) -> f64 {
        match self {
            Self::Sld { residual, .. } | Self::NonSld { residual } | Self::Inconclusive { residual } => *residual,
        }
    }
}

/// U = Rz(α) Ry(β) Rz(γ).
pub fn euler_unitary(angles: [f64; 3]) -> CMatrix {
    let rz = |t: f64| {
        CMatrix::from_row_slice(2, 2, &[C64::from_polar(1.0, -t / 2.0), linalg::ZERO, linalg::ZERO, C64::from_polar(1.0, t / 2.0)])
    };
    let (s, c) = (angles[1] / 2.0).sin_cos();
    let ry = CMatrix::from_row_slice(2, 2, &[linalg::c(c), linalg::c(-s), linalg::c(s), linalg::c(c)]);
    rz(angles[0]) * ry * rz(angles[2])
}

fn off_diagonal_weight(h: &CMatrix, uu: &CMatrix) -> f64 {
    let conj = uu * h * linalg::dagger(uu);
    let mut sum = 0.0;
    for p in [Pauli::X, Pauli::Y, Pauli::Z] {
        for q in [Pauli::X, Pauli::Y, Pauli::Z] {
            if p == Pauli::Z && q == Pauli::Z {
                continue;
            }
            let pq = linalg::kron(&p.matrix(), &q.matrix());
            let coeff = (pq * &conj).trace() / C64::new(4.0, 0.0);
            sum += coeff.norm_sqr();
        }
    }
    sum.sqrt()
}

fn objective(terms: &[CMatrix], angles: [f64; 3]) -> f64 {
    let u = euler_unitary(angles);
    let uu = linalg::kron(&u, &u);
    terms.iter().map(|h| off_diagonal_weight(h, &uu)).fold(0.0, f64::max)
}

fn nelder_mead(f: impl Fn([f64; 3]) -> f64, start: [f64; 3], step: f64) -> ([f64; 3], f64) {
    let mut simplex: Vec<([f64; 3], f64)> = (0..4)
        .map(|i| {
            let mut x = start;
            if i > 0 {
                x[i - 1] += step;
            }
            (x, f(x))
        })
        .collect();
    let combine = |a: [f64; 3], b: [f64; 3], t: f64| [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]), a[2] + t * (b[2] - a[2])];
    for _ in 0..NM_MAX_ITER {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let size = simplex[1..]
            .iter()
            .map(|(x, _)| (0..3).map(|k| (x[k] - simplex[0].0[k]).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if size < NM_XTOL || simplex[0].1 == 0.0 {
            break;
        }
        let mut centroid = [0.0; 3];
        for (x, _) in &simplex[..3] {
            for k in 0..3 {
                centroid[k] += x[k] / 3.0;
            }
        }
        let worst = simplex[3];
        let reflected = combine(centroid, worst.0, -1.0);
        let fr = f(reflected);
        if fr < simplex[0].1 {
            let expanded = combine(centroid, worst.0, -2.0);
            let fe = f(expanded);
            simplex[3] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
        } else if fr < simplex[2].1 {
            simplex[3] = (reflected, fr);
        } else {
            let contracted = if fr < worst.1 {
                combine(centroid, reflected, 0.5)
            } else {
                combine(centroid, worst.0, 0.5)
            };
            let fc = f(contracted);
            if fc < worst.1.min(fr) {
                simplex[3] = (contracted, fc);
            } else {
                let best = simplex[0].0;
                for entry in simplex.iter_mut().skip(1) {
                    let x = combine(best, entry.0, 0.5);
                    *entry = (x, f(x));
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex[0]
}

/// Three-valued 2SLD decision. Non-2-qubit terms are treated as non-2SLD.
pub fn is_2sld(terms: &[InteractionTerm], tol: f64) -> SldVerdict {
    if terms.iter().any(|t| t.locality() != 2) {
        return SldVerdict::NonSld { residual: f64::INFINITY };
    }
    let mats: Vec<CMatrix> = terms.iter().map(|t| t.matrix() * C64::new(t.weight(), 0.0)).collect();
    let f = |a: [f64; 3]| objective(&mats, a);
    let mut best = ([0.0; 3], f64::INFINITY);
    for i in 0..GRID_ALPHA {
        for j in 0..GRID_BETA {
            for k in 0..GRID_GAMMA {
                let start = [
                    2.0 * PI * i as f64 / GRID_ALPHA as f64,
                    PI * j as f64 / (GRID_BETA - 1) as f64,
                    PI * k as f64 / GRID_GAMMA as f64,
                ];
                let found = nelder_mead(f, start, 0.4);
                if found.1 < best.1 {
                    best = found;
                }
            }
        }
    }
    let (angles, residual) = best;
    if residual < tol {
        SldVerdict::Sld { angles, residual }
    } else if residual > 10.0 * tol {
        SldVerdict::NonSld { residual }
    } else {
        SldVerdict::Inconclusive { residual }
    }
}
