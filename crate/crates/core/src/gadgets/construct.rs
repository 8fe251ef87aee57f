//! Subdivision and 3-to-2 mediator gadgets, applied in parallel to every
//! Pauli string of a Hamiltonian, and their chaining down to 2-local form.
//!
//! Each gadget is calibrated so that, in isolation, its lowest mediator
//! branch reproduces the target string exactly up to a constant offset.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::guidestates::GuideState;
use crate::hamcore::{reassemble, Hamiltonian, InteractionTerm, Pauli, PauliString};
use crate::linalg;

const BISECTION_STEPS: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GadgetKind {
    Subdivision,
    ThreeToTwo,
}

/// Constants of one mediator gadget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MediatorRecord {
    pub kind: GadgetKind,
    pub qubit: usize,
    pub target: String,
    pub coefficient: f64,
    pub delta: f64,
    pub mu: f64,
    pub nu: f64,
    pub kappa_a: f64,
    pub kappa_bc: f64,
    pub offset: f64,
}

/// One parallel round of gadgets.
#[derive(Clone, Debug)]
pub struct GadgetReduction {
    pub kind: GadgetKind,
    pub input: Hamiltonian,
    pub output: Hamiltonian,
    pub strength: f64,
    /// Sum of gadget offsets: low energies of `output` sit at those of
    /// `input` plus this constant.
    pub offset: f64,
    pub mediators: Vec<MediatorRecord>,
}

impl GadgetReduction {
    /// Attach |0⟩ for every mediator.
    pub fn state_transform(&self, guide: &GuideState) -> GuideState {
        guide.attach_zeros(self.mediators.len())
    }
}

fn sorted_letters(p: &PauliString) -> Vec<(usize, Pauli)> {
    p.letters.iter().map(|(&q, &l)| (q, l)).collect()
}

fn with_letter(mut letters: Vec<(usize, Pauli)>, q: usize, l: Pauli) -> Vec<(usize, Pauli)> {
    letters.push((q, l));
    letters
}

/// Pass-through strings regrouped into one term per support.
fn grouped_terms(strings: &[PauliString]) -> Result<Vec<InteractionTerm>> {
    let mut groups: BTreeMap<Vec<usize>, Vec<PauliString>> = BTreeMap::new();
    for p in strings {
        groups.entry(p.support()).or_default().push(p.clone());
    }
    let mut out = Vec::with_capacity(groups.len());
    for (support, group) in groups {
        if support.is_empty() {
            let constant: f64 = group.iter().map(|p| p.coefficient).sum();
            out.push(InteractionTerm::new(vec![0], linalg::identity(2), constant)?);
        } else {
            out.push(InteractionTerm::new(support.clone(), reassemble(&group, &support), 1.0)?);
        }
    }
    Ok(out)
}

/// Δ n_w + μ(A − sgn(c) B) X_w for c·A⊗B; low branch is −|c| + c·AB.
fn subdivision_gadget(p: &PauliString, delta: f64, w: usize) -> Result<(Vec<InteractionTerm>, MediatorRecord)> {
    let letters = sorted_letters(p);
    let split = letters.len().div_ceil(2);
    let (a, b) = letters.split_at(split);
    let c = p.coefficient;
    let s = c.signum();
    let mu = (c.abs() * delta / 2.0 + c * c).sqrt();
    let terms = vec![
        InteractionTerm::new(vec![w], linalg::bit_projector(true), delta)?,
        InteractionTerm::pauli(&with_letter(a.to_vec(), w, Pauli::X), mu)?,
        InteractionTerm::pauli(&with_letter(b.to_vec(), w, Pauli::X), -s * mu)?,
    ];
    let record = MediatorRecord {
        kind: GadgetKind::Subdivision,
        qubit: w,
        target: p.label(),
        coefficient: c,
        delta,
        mu,
        nu: 0.0,
        kappa_a: 0.0,
        kappa_bc: 0.0,
        offset: -c.abs(),
    };
    Ok((terms, record))
}

/// Lowest mediator energy when the A-dependent detuning is `x` = Δ + νa.
fn branch(x: f64, mu: f64) -> f64 {
    (x - (x * x + 16.0 * mu * mu).sqrt()) / 2.0
}

/// Solve for ν so that the isolated gadget's ABC coefficient is `c`.
pub fn three_to_two_constants(c: f64, delta: f64) -> Result<(f64, f64)> {
    let mu = (c.abs() / 2.0).cbrt() * delta.powf(2.0 / 3.0);
    let h_abc = |nu: f64| (branch(delta + nu, mu) - branch(delta - nu, mu)) / 4.0;
    let (mut lo, mut hi) = (-delta / 2.0, delta / 2.0);
    if !(h_abc(lo) <= c && c <= h_abc(hi)) {
        return Err(invalid(format!(
            "3-to-2 strength Δ = {delta} too small for coefficient {c}"
        )));
    }
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if h_abc(mid) < c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((mu, 0.5 * (lo + hi)))
}

/// Δ n_w + μ(B + C) X_w + ν A n_w + κ_A A + κ_BC BC for c·ABC.
/// The gadget conserves A, so A is taken on the highest qubit: after earlier
/// rounds that is the most recent mediator, whose large penalty would
/// otherwise not commute with the couplings.
fn three_to_two_gadget(p: &PauliString, delta: f64, w: usize) -> Result<(Vec<InteractionTerm>, MediatorRecord)> {
    let letters = sorted_letters(p);
    if letters.len() != 3 {
        return Err(invalid(format!("3-to-2 gadget needs a 3-local string, got {}", p.label())));
    }
    let c = p.coefficient;
    let (mu, nu) = three_to_two_constants(c, delta)?;
    let f_plus = branch(delta + nu, mu);
    let f_minus = branch(delta - nu, mu);
    let h_a = (f_plus - f_minus) / 4.0;
    let h0 = (f_plus + f_minus) / 4.0;
    let (qb, lb) = letters[0];
    let (qc, lc) = letters[1];
    let (qa, la) = letters[2];
    let a_n = linalg::kron(&linalg::bit_projector(true), &la.matrix());
    let terms = vec![
        InteractionTerm::new(vec![w], linalg::bit_projector(true), delta)?,
        InteractionTerm::pauli(&[(qb, lb), (w, Pauli::X)], mu)?,
        InteractionTerm::pauli(&[(qc, lc), (w, Pauli::X)], mu)?,
        InteractionTerm::new(vec![qa, w], a_n, nu)?,
        InteractionTerm::pauli(&[(qa, la)], -h_a)?,
        InteractionTerm::pauli(&[(qb, lb), (qc, lc)], -h0)?,
    ];
    let record = MediatorRecord {
        kind: GadgetKind::ThreeToTwo,
        qubit: w,
        target: p.label(),
        coefficient: c,
        delta,
        mu,
        nu,
        kappa_a: -h_a,
        kappa_bc: -h0,
        offset: h0,
    };
    Ok((terms, record))
}

fn apply_round(h: &Hamiltonian, delta: f64, kind: GadgetKind, split: impl Fn(&PauliString) -> bool) -> Result<GadgetReduction> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(invalid(format!("gadget strength must be positive, got {delta}")));
    }
    let strings = h.pauli_decompose()?;
    let (targets, keep): (Vec<PauliString>, Vec<PauliString>) = strings.into_iter().partition(|p| split(p));
    let n = h.n_qubits();
    let mut output = Hamiltonian::new(n + targets.len());
    output.extend(grouped_terms(&keep)?)?;
    let mut mediators = Vec::with_capacity(targets.len());
    for (j, p) in targets.iter().enumerate() {
        let w = n + j;
        let (terms, record) = match kind {
            GadgetKind::Subdivision => subdivision_gadget(p, delta, w)?,
            GadgetKind::ThreeToTwo => three_to_two_gadget(p, delta, w)?,
        };
        output.extend(terms)?;
        mediators.push(record);
    }
    let offset = mediators.iter().map(|m| m.offset).sum();
    Ok(GadgetReduction {
        kind,
        input: h.clone(),
        output,
        strength: delta,
        offset,
        mediators,
    })
}

/// Largest Pauli-string locality of H.
pub fn pauli_locality(h: &Hamiltonian) -> Result<usize> {
    Ok(h.pauli_decompose()?.iter().map(|p| p.locality()).max().unwrap_or(0))
}

/// One round of subdivision gadgets. For k ≥ 4 every string of locality ≥ 4
/// is split; for k = 3 the 3-local strings are split.
pub fn subdivide(h: &Hamiltonian, delta_g: f64) -> Result<GadgetReduction> {
    let k = pauli_locality(h)?;
    if k < 3 {
        return Err(invalid(format!("subdivision needs locality ≥ 3, got {k}")));
    }
    let threshold = if k >= 4 { 4 } else { 3 };
    apply_round(h, delta_g, GadgetKind::Subdivision, |p| p.locality() >= threshold)
}

/// One round of 3-to-2 gadgets on every 3-local string.
pub fn three_to_two(h: &Hamiltonian, delta_g: f64) -> Result<GadgetReduction> {
    let k = pauli_locality(h)?;
    if k != 3 {
        return Err(invalid(format!("3-to-2 reduction needs a 3-local input, got locality {k}")));
    }
    apply_round(h, delta_g, GadgetKind::ThreeToTwo, |p| p.locality() == 3)
}

/// A sequence of rounds taking H to the requested locality.
#[derive(Clone, Debug)]
pub struct ReductionChain {
    pub input: Hamiltonian,
    pub steps: Vec<GadgetReduction>,
    /// Δ_r / ‖H_{r−1}‖ for every round.
    pub ratio: f64,
}

impl ReductionChain {
    pub fn output(&self) -> &Hamiltonian {
        self.steps.last().map_or(&self.input, |s| &s.output)
    }

    pub fn offset(&self) -> f64 {
        self.steps.iter().map(|s| s.offset).sum()
    }

    pub fn mediator_count(&self) -> usize {
        self.steps.iter().map(|s| s.mediators.len()).sum()
    }

    pub fn state_transform(&self, guide: &GuideState) -> GuideState {
        guide.attach_zeros(self.mediator_count())
    }
}

/// Subdivide while the locality exceeds 3, then (for target 2) apply 3-to-2.
/// With ratio = Δ_g/‖H‖, a subdivision round uses Δ_r = ratio·‖H_{r−1}‖ and a
/// 3-to-2 round uses ratio^{3/2}·‖H_{r−1}‖, since its error falls as Δ^{-1/3}
/// rather than Δ^{-1/2}.
pub fn reduce_locality(h: &Hamiltonian, target: usize, delta_g: f64) -> Result<ReductionChain> {
    if !(2..=3).contains(&target) {
        return Err(invalid(format!("target locality must be 2 or 3, got {target}")));
    }
    let norm = h.operator_norm_bound();
    if norm <= 0.0 {
        return Err(invalid("cannot reduce a zero Hamiltonian"));
    }
    let ratio = delta_g / norm;
    let mut steps: Vec<GadgetReduction> = Vec::new();
    let mut current = h.clone();
    loop {
        let k = pauli_locality(&current)?;
        if k <= target {
            break;
        }
        let norm = current.operator_norm_bound();
        let step = if k >= 4 {
            subdivide(&current, ratio * norm)?
        } else {
            three_to_two(&current, ratio.powf(1.5) * norm)?
        };
        current = step.output.clone();
        steps.push(step);
    }
    Ok(ReductionChain {
        input: h.clone(),
        steps,
        ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_string(n: usize, letters: &[(usize, Pauli)], c: f64) -> Hamiltonian {
        Hamiltonian::from_terms(n, vec![InteractionTerm::pauli(letters, c).unwrap()]).unwrap()
    }

    fn low_eigs(h: &Hamiltonian, k: usize) -> Vec<f64> {
        linalg::eigvalsh(&h.to_dense().unwrap())[..k].to_vec()
    }

    #[test]
    fn isolated_subdivision_is_exact() {
        let h = single_string(4, &[(0, Pauli::X), (1, Pauli::Z), (2, Pauli::Y), (3, Pauli::Z)], -0.7);
        let r = subdivide(&h, 50.0).unwrap();
        assert_eq!(r.output.n_qubits(), 5);
        assert_eq!(pauli_locality(&r.output).unwrap(), 3);
        let want = low_eigs(&h, 16);
        let got = low_eigs(&r.output, 16);
        for (a, b) in want.iter().zip(&got) {
            assert!((a + r.offset - b).abs() < 1e-10, "{a} {b}");
        }
    }

    #[test]
    fn isolated_three_to_two_is_exact() {
        let h = single_string(3, &[(0, Pauli::X), (1, Pauli::Z), (2, Pauli::X)], 0.4);
        let r = three_to_two(&h, 200.0).unwrap();
        assert_eq!(pauli_locality(&r.output).unwrap(), 2);
        let want = low_eigs(&h, 8);
        let got = low_eigs(&r.output, 8);
        for (a, b) in want.iter().zip(&got) {
            assert!((a + r.offset - b).abs() < 1e-8, "{a} {b}");
        }
    }

    #[test]
    fn locality_schedule_five_to_two() {
        let h = single_string(
            5,
            &[(0, Pauli::X), (1, Pauli::Y), (2, Pauli::Z), (3, Pauli::X), (4, Pauli::Z)],
            0.5,
        );
        let chain = reduce_locality(&h, 2, 100.0).unwrap();
        let localities: Vec<usize> = chain.steps.iter().map(|s| pauli_locality(&s.output).unwrap()).collect();
        assert_eq!(localities, vec![4, 3, 2]);
        assert_eq!(chain.output().n_qubits(), 10);
    }

    #[test]
    fn two_local_terms_pass_through() {
        let mut h = single_string(3, &[(0, Pauli::Z), (1, Pauli::Z), (2, Pauli::Z)], 1.0);
        h.push(InteractionTerm::pauli(&[(0, Pauli::X), (1, Pauli::X)], 0.3).unwrap()).unwrap();
        let r = three_to_two(&h, 100.0).unwrap();
        assert_eq!(r.mediators.len(), 1);
        let strings = r.output.pauli_decompose().unwrap();
        assert!(strings.iter().any(|p| p.label() == "X0 X1" && (p.coefficient - 0.3).abs() < 1e-15));
    }

    #[test]
    fn reductions_reject_wrong_locality() {
        let h = single_string(2, &[(0, Pauli::Z), (1, Pauli::Z)], 1.0);
        assert!(subdivide(&h, 10.0).is_err());
        assert!(three_to_two(&h, 10.0).is_err());
    }
}
