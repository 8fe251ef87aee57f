//! The excited-state gadget: lift a ground-state instance on n qubits to one
//! whose c-th eigenvalue carries the answer, using one flag qubit.
//!
//! `H^(c) = H^(z) ⊗ |0⟩⟨0| + H^(s) ⊗ |1⟩⟨1|`. The ladder H^(z) has exactly c
//! negative eigenvalues, the largest being −½, and a rescaled copy H^(s) of
//! the input fits between −¼ and ¼, so λ_c(H^(c)) is the image of λ₀(H).

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::guidestates::{BitString, EncodedState, GuideState};
use crate::hamcore::{Hamiltonian, InteractionTerm};
use crate::linalg::{self, CMatrix};
use crate::spectra::GlhleInstance;

/// Slack on the −¼ test that decides whether the printed map is usable.
const PRINTED_SLACK: f64 = 1e-12;
/// Largest register for which the exact norm is computed by diagonalization.
const EXACT_NORM_MAX_QUBITS: usize = 12;

/// ⌈log₂ c⌉, with d = 0 for c = 1.
pub fn ladder_depth(c: usize) -> usize {
    assert!(c >= 1);
    (usize::BITS - (c - 1).leading_zeros()) as usize
}

/// Ladder weights on `qubits` qubits: 2^i for i ≤ d, then 2^{d+1}.
pub fn ladder_weights(qubits: usize, c: usize) -> Vec<f64> {
    let d = ladder_depth(c);
    (0..qubits)
        .map(|i| if i <= d { (1u64 << i) as f64 } else { (1u64 << (d + 1)) as f64 })
        .collect()
}

fn check_ladder(qubits: usize, c: usize) -> Result<()> {
    if c == 0 || qubits >= 63 || c > (1usize << qubits) - 1 {
        return Err(invalid(format!(
            "excitation index {c} outside 1..=2^{qubits}−1 for a {qubits}-qubit ladder"
        )));
    }
    Ok(())
}

/// Σ_i w_i |1⟩⟨1|_i − (c − ½) I on `qubits` qubits.
pub fn build_ladder(qubits: usize, c: usize) -> Result<Hamiltonian> {
    check_ladder(qubits, c)?;
    let mut h = Hamiltonian::new(qubits);
    for (i, w) in ladder_weights(qubits, c).into_iter().enumerate() {
        h.push(InteractionTerm::new(vec![i], linalg::bit_projector(true), w)?)?;
    }
    h.push(InteractionTerm::new(vec![0], linalg::identity(2), -(c as f64 - 0.5))?)?;
    Ok(h)
}

/// Ladder spectrum, ascending, by enumeration of its diagonal.
pub fn ladder_spectrum(qubits: usize, c: usize) -> Result<Vec<f64>> {
    check_ladder(qubits, c)?;
    let w = ladder_weights(qubits, c);
    let mut vals: Vec<f64> = (0..1usize << qubits)
        .map(|x| {
            (0..qubits).filter(|&i| (x >> i) & 1 == 1).map(|i| w[i]).sum::<f64>() - (c as f64 - 0.5)
        })
        .collect();
    vals.sort_by(f64::total_cmp);
    Ok(vals)
}

/// Which affine map squeezes H into [−¼, ¼].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rescaling {
    /// ½(H + I/4)/(‖H‖ + ¼) − ¼; lands in [−¼, ¼] only when λ_min(H) ≥ −¼.
    Printed,
    /// H/(4‖H‖).
    Symmetric,
    /// Printed when it fits, otherwise symmetric.
    Auto,
}

impl std::str::FromStr for Rescaling {
    type Err = crate::GlhError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "printed" => Ok(Self::Printed),
            "symmetric" => Ok(Self::Symmetric),
            "auto" => Ok(Self::Auto),
            other => Err(invalid(format!("unknown rescaling {other:?}"))),
        }
    }
}

/// Where ‖H‖ comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormSource {
    /// Spectral norm by diagonalization.
    Exact,
    /// Σ|w_i|‖h_i‖; safe but shrinks the image.
    Bound,
}

/// λ ↦ scale·λ + shift.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub scale: f64,
    pub shift: f64,
}

impl AffineMap {
    pub fn apply(&self, x: f64) -> f64 {
        self.scale * x + self.shift
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GadgetOptions {
    pub rescaling: Rescaling,
    pub norm: NormSource,
}

impl Default for GadgetOptions {
    fn default() -> Self {
        Self {
            rescaling: Rescaling::Auto,
            norm: NormSource::Exact,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RescaledBase {
    pub hamiltonian: Hamiltonian,
    pub map: AffineMap,
    pub rescaling: Rescaling,
    pub norm_used: f64,
}

fn extreme_eigenvalues(h: &Hamiltonian) -> Result<(f64, f64)> {
    let vals = linalg::eigvalsh(&h.to_dense()?);
    Ok((vals[0], *vals.last().unwrap()))
}

/// Affine image of H inside [−¼, ¼], as a Hamiltonian on the same qubits.
pub fn build_rescaled_base(h: &Hamiltonian, opts: &GadgetOptions) -> Result<RescaledBase> {
    if h.n_qubits() == 0 {
        return Err(invalid("cannot rescale a Hamiltonian on zero qubits"));
    }
    let exact = match opts.norm {
        NormSource::Exact => {
            if h.n_qubits() > EXACT_NORM_MAX_QUBITS {
                return Err(invalid(format!(
                    "exact norm limited to {EXACT_NORM_MAX_QUBITS} qubits; use the bound"
                )));
            }
            Some(extreme_eigenvalues(h)?)
        }
        NormSource::Bound => None,
    };
    let norm = match exact {
        Some((lo, hi)) => lo.abs().max(hi.abs()),
        None => h.operator_norm_bound(),
    };
    if !(norm > f64::EPSILON) {
        return Err(invalid("cannot rescale a zero Hamiltonian"));
    }
    // λ_min lower bound for the printed map
    let lambda_min = exact.map(|e| e.0).unwrap_or(-norm);
    let printed_fits = lambda_min >= -0.25 - PRINTED_SLACK;
    let rescaling = match opts.rescaling {
        Rescaling::Auto if printed_fits => Rescaling::Printed,
        Rescaling::Auto => Rescaling::Symmetric,
        Rescaling::Printed if !printed_fits => {
            return Err(invalid(format!(
                "printed rescaling maps λ_min = {lambda_min:.6} below −¼; use the symmetric map"
            )))
        }
        other => other,
    };
    let map = match rescaling {
        Rescaling::Printed => {
            let scale = 0.5 / (norm + 0.25);
            AffineMap {
                scale,
                shift: scale * 0.25 - 0.25,
            }
        }
        _ => AffineMap {
            scale: 0.25 / norm,
            shift: 0.0,
        },
    };
    let mut out = Hamiltonian::from_terms(h.n_qubits(), h.scaled(map.scale).terms().to_vec())?;
    if map.shift != 0.0 {
        out.push(InteractionTerm::new(vec![0], linalg::identity(2), map.shift)?)?;
    }
    Ok(RescaledBase {
        hamiltonian: out,
        map,
        rescaling,
        norm_used: norm,
    })
}

#[derive(Clone, Debug)]
pub struct ExcitedGadget {
    pub c: usize,
    pub d: usize,
    /// Ladder qubits 0..n−1; the flag is qubit n.
    pub hz: Hamiltonian,
    pub hs: RescaledBase,
    pub combined: Hamiltonian,
}

impl ExcitedGadget {
    pub fn flag_qubit(&self) -> usize {
        self.combined.n_qubits() - 1
    }
}

/// H^(z) ⊗ |0⟩⟨0|_flag + H^(s) ⊗ |1⟩⟨1|_flag on n + 1 qubits.
pub fn build_excited_gadget(h: &Hamiltonian, c: usize, opts: &GadgetOptions) -> Result<ExcitedGadget> {
    let n = h.n_qubits();
    check_ladder(n, c)?;
    let hz = build_ladder(n, c)?;
    let hs = build_rescaled_base(h, opts)?;
    let flag = n;
    let mut combined = Hamiltonian::new(n + 1);
    for (branch, part) in [(false, &hz), (true, &hs.hamiltonian)] {
        let proj = linalg::bit_projector(branch);
        for term in part.terms() {
            let mut support = term.support().to_vec();
            support.push(flag);
            let matrix: CMatrix = linalg::kron(&proj, term.matrix());
            combined.push(InteractionTerm::new(support, matrix, term.weight())?)?;
        }
    }
    Ok(ExcitedGadget {
        c,
        d: ladder_depth(c),
        hz,
        hs,
        combined,
    })
}

#[derive(Clone, Debug)]
pub struct LiftedInstance {
    pub instance: GlhleInstance,
    pub gadget: Option<ExcitedGadget>,
    /// Normalization factor applied after the gadget.
    pub factor: f64,
}

/// Guide ⊗ |1⟩ on the flag qubit.
pub fn lift_guide(guide: &GuideState) -> Result<GuideState> {
    let one = BitString::parse("1")?;
    Ok(match guide {
        GuideState::Subset(s) => GuideState::Subset(s.with_fixed_suffix(&one)),
        GuideState::Encoded(e) => {
            let mut isometries = e.isometries().to_vec();
            isometries.push(linalg::identity(2));
            GuideState::Encoded(EncodedState::new(e.base().with_fixed_suffix(&one), isometries)?)
        }
    })
}

/// Lift a ground-state instance to target level c.
pub fn lift_instance(inst: &GlhleInstance, c: usize, opts: &GadgetOptions) -> Result<LiftedInstance> {
    if inst.c != 0 {
        return Err(invalid(format!("lifting needs a ground-state instance, got level {}", inst.c)));
    }
    if c == 0 {
        return Ok(LiftedInstance {
            instance: inst.clone(),
            gadget: None,
            factor: 1.0,
        });
    }
    let gadget = build_excited_gadget(&inst.hamiltonian, c, opts)?;
    let normalized = gadget.combined.normalize()?;
    let map = gadget.hs.map;
    let instance = GlhleInstance::new(
        normalized.hamiltonian,
        lift_guide(&inst.guide)?,
        c,
        map.apply(inst.a) / normalized.factor,
        map.apply(inst.b) / normalized.factor,
        inst.delta,
    )?;
    Ok(LiftedInstance {
        instance,
        gadget: Some(gadget),
        factor: normalized.factor,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamcore::Pauli;

    #[test]
    fn ladder_depths() {
        assert_eq!(ladder_depth(1), 0);
        assert_eq!(ladder_depth(2), 1);
        assert_eq!(ladder_depth(3), 2);
        assert_eq!(ladder_depth(4), 2);
        assert_eq!(ladder_depth(5), 3);
    }

    #[test]
    fn ladder_c1() {
        let v = ladder_spectrum(2, 1).unwrap();
        assert_eq!(v.iter().filter(|&&x| x < 0.0).count(), 1);
        assert_eq!(v[0], -0.5);
        assert!(v[1..].iter().all(|&x| x >= 0.5));
    }

    #[test]
    fn ladder_c3() {
        let v = ladder_spectrum(3, 3).unwrap();
        assert_eq!(&v[..4], &[-2.5, -1.5, -0.5, 0.5]);
    }

    #[test]
    fn ladder_max_eigenvalue() {
        // n + 1 = 5 ladder qubits, c = 4, d = 2
        let v = ladder_spectrum(5, 4).unwrap();
        assert_eq!(*v.last().unwrap(), 19.5);
        let dense = linalg::eigvalsh(&build_ladder(5, 4).unwrap().to_dense().unwrap());
        for (a, b) in v.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn ladder_range_checked() {
        assert!(build_ladder(2, 0).is_err());
        assert!(build_ladder(2, 4).is_err());
        assert!(build_ladder(2, 3).is_ok());
    }

    #[test]
    fn printed_map_leaves_range_for_z() {
        let mut h = Hamiltonian::new(1);
        h.push(InteractionTerm::pauli(&[(0, Pauli::Z)], 1.0).unwrap()).unwrap();
        let printed: f64 = 0.5 * (-1.0 + 0.25) / (1.0 + 0.25) - 0.25;
        assert!((printed + 0.55).abs() < 1e-15);
        let opts = GadgetOptions {
            rescaling: Rescaling::Printed,
            norm: NormSource::Exact,
        };
        assert!(build_rescaled_base(&h, &opts).is_err());
        let auto = build_rescaled_base(&h, &GadgetOptions::default()).unwrap();
        assert_eq!(auto.rescaling, Rescaling::Symmetric);
        let vals = linalg::eigvalsh(&auto.hamiltonian.to_dense().unwrap());
        assert!((vals[0] + 0.25).abs() < 1e-15 && (vals[1] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn printed_map_on_psd_input() {
        let mut h = Hamiltonian::new(1);
        h.push(InteractionTerm::new(vec![0], linalg::bit_projector(true), 1.0).unwrap()).unwrap();
        let r = build_rescaled_base(&h, &GadgetOptions::default()).unwrap();
        assert_eq!(r.rescaling, Rescaling::Printed);
        let vals = linalg::eigvalsh(&r.hamiltonian.to_dense().unwrap());
        assert!((vals[0] - r.map.apply(0.0)).abs() < 1e-15);
        assert!((vals[1] - r.map.apply(1.0)).abs() < 1e-15);
        assert!(vals.iter().all(|v| v.abs() <= 0.25 + 1e-15));
    }
}
