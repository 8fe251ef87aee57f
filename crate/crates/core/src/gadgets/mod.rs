//! Perturbative locality reductions and their numerical certification.

mod certify;
mod construct;
mod sld;

pub use certify::{
    certify_simulation, excited_transfer_check, sw_scaling_check, CertificationReport, Encoding, SimulationCertificate,
    SpectrumRow, SwPoint, SwReport, TransferReport, TRANSFER_K_LIMIT,
};
pub use construct::{
    pauli_locality, reduce_locality, subdivide, three_to_two, three_to_two_constants, GadgetKind, GadgetReduction,
    MediatorRecord, ReductionChain,
};
pub use sld::{euler_unitary, is_2sld, SldVerdict};

use crate::error::{invalid, Result};
use crate::spectra::GlhleInstance;

/// A reduced instance together with the chain and certificate behind it.
#[derive(Clone, Debug)]
pub struct ReducedInstance {
    pub instance: GlhleInstance,
    pub chain: ReductionChain,
    pub certificate: SimulationCertificate,
    /// ‖H′‖ bound used to normalise the reduced Hamiltonian.
    pub factor: f64,
}

/// Reduce an instance's Hamiltonian to `target` locality and carry the
/// thresholds, guide and fidelity promise through the measured (ε, η).
pub fn reduce_instance(inst: &GlhleInstance, target: usize, delta_g: f64) -> Result<ReducedInstance> {
    let (chain, certificate) = reduce_and_measure(inst, target, delta_g)?;
    carry(inst, chain, certificate)
}

/// Largest multiple of ‖H‖ tried by [`reduce_instance_auto`]; beyond it the
/// dense eigensolve of H′ loses the digits the window needs.
pub const AUTO_STRENGTH_LIMIT: f64 = 1e7;

/// [`reduce_instance`] with the weakest Δ_g = 2^k·10³‖H‖ whose measured ε
/// leaves the threshold window open. Weaker gadgets keep the low spectrum of
/// the normalised H′ wider apart.
pub fn reduce_instance_auto(inst: &GlhleInstance, target: usize) -> Result<ReducedInstance> {
    let norm = inst.hamiltonian.operator_norm_bound();
    let window = inst.b - inst.a;
    let mut scale = 1e3;
    loop {
        let (chain, certificate) = reduce_and_measure(inst, target, scale * norm)?;
        let eps = certificate.epsilon.unwrap_or(0.0);
        if 2.0 * eps < window || scale * 2.0 > AUTO_STRENGTH_LIMIT {
            return carry(inst, chain, certificate);
        }
        scale *= 2.0;
    }
}

fn reduce_and_measure(inst: &GlhleInstance, target: usize, delta_g: f64) -> Result<(ReductionChain, SimulationCertificate)> {
    let chain = reduce_locality(&inst.hamiltonian, target, delta_g)?;
    let enc = SimulationCertificate::for_chain(&chain).encoding;
    let certificate = SimulationCertificate::measured(&inst.hamiltonian, chain.output(), enc)?;
    Ok((chain, certificate))
}

fn carry(inst: &GlhleInstance, chain: ReductionChain, certificate: SimulationCertificate) -> Result<ReducedInstance> {
    let eps = certificate.epsilon.unwrap_or(0.0);
    let eta = certificate.eta.unwrap_or(0.0);
    let offset = chain.offset();
    let a = inst.a + offset + eps;
    let b = inst.b + offset - eps;
    if !(a < b) {
        return Err(invalid(format!(
            "measured ε = {eps:.3e} closes the threshold window; raise the gadget strength"
        )));
    }
    let delta = (inst.delta.sqrt() - 2.0 * eta).max(0.0).powi(2);
    let normalized = chain.output().normalize()?;
    let f = normalized.factor;
    let guide = chain.state_transform(&inst.guide);
    let instance = GlhleInstance::new(normalized.hamiltonian, guide, inst.c, a / f, b / f, delta.max(f64::MIN_POSITIVE))?;
    Ok(ReducedInstance {
        instance,
        chain,
        certificate,
        factor: f,
    })
}
