use glh_core::circuits::{random_circuit, toy_catalog};
use glh_core::clockham::cross_backend_defect;
use glh_core::excited::{build_excited_gadget, lift_guide, GadgetOptions};
use glh_core::gadgets::{euler_unitary, is_2sld, pauli_locality, subdivide, SldVerdict};
use glh_core::guidestates::{
    apply_local_isometry, attach_product, attach_subset, heisenberg_code_isometry, BitString, EncodedState, GuideState,
    SubsetState,
};
use glh_core::hamcore::{pauli_decompose_matrix, reassemble, Hamiltonian, InteractionTerm, Pauli};
use glh_core::linalg::{self, CMatrix, CVector, C64};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_hermitian(rng: &mut ChaCha8Rng, dim: usize) -> CMatrix {
    let a = CMatrix::from_fn(dim, dim, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
    (&a + a.adjoint()) * linalg::c(0.5)
}

fn random_hamiltonian(rng: &mut ChaCha8Rng, n: usize, terms: usize) -> Hamiltonian {
    let mut h = Hamiltonian::new(n);
    let qubits: Vec<usize> = (0..n).collect();
    for _ in 0..terms {
        let k = rng.gen_range(1..=n.min(3));
        let support: Vec<usize> = qubits.choose_multiple(rng, k).copied().collect();
        let m = random_hermitian(rng, 1 << k);
        h.push(InteractionTerm::new(support, m, rng.gen_range(-1.0..1.0)).unwrap()).unwrap();
    }
    h
}

fn random_subset(rng: &mut ChaCha8Rng, n: usize) -> SubsetState {
    let mut idx: Vec<usize> = (0..1usize << n).collect();
    idx.shuffle(rng);
    let size = rng.gen_range(1..=idx.len().min(6));
    SubsetState::new(n, idx[..size].iter().map(|&i| BitString::from_index(i, n)).collect()).unwrap()
}

fn random_unitary(rng: &mut ChaCha8Rng) -> CMatrix {
    euler_unitary([rng.gen_range(0.0..6.3), rng.gen_range(0.0..3.2), rng.gen_range(0.0..6.3)])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn assembled_hamiltonians_are_hermitian(seed in any::<u64>(), n in 1usize..=8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_hamiltonian(&mut rng, n, 6);
        prop_assert!(h.assemble_sparse().unwrap().hermiticity_defect() <= 1e-12);
    }

    #[test]
    fn norm_bound_dominates_spectrum(seed in any::<u64>(), n in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_hamiltonian(&mut rng, n, 5);
        let norm = linalg::hermitian_norm(&h.to_dense().unwrap());
        prop_assert!(h.operator_norm_bound() >= norm - 1e-12);
    }

    #[test]
    fn normalization_divides_the_spectrum(seed in any::<u64>(), n in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_hamiltonian(&mut rng, n, 4);
        let norm = h.normalize().unwrap();
        let a = linalg::eigvalsh(&h.to_dense().unwrap());
        let b = linalg::eigvalsh(&norm.hamiltonian.to_dense().unwrap());
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x / norm.factor - y).abs() <= 1e-10);
        }
    }

    #[test]
    fn pauli_round_trip(seed in any::<u64>(), k in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_hermitian(&mut rng, 1 << k);
        let support: Vec<usize> = (0..k).collect();
        let back = reassemble(&pauli_decompose_matrix(&m, &support).unwrap(), &support);
        prop_assert!((back - &m).iter().all(|z| z.norm() <= 1e-12));
    }

    #[test]
    fn simulation_preserves_norm(seed in any::<u64>(), n in 1usize..=6, m in 1usize..=20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_circuit(&mut rng, n, m);
        prop_assert!((c.simulate().unwrap().norm() - 1.0).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn idling_keeps_acceptance(seed in any::<u64>(), idle in 0usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = random_circuit(&mut rng, 3, 4);
        prop_assert_eq!(c.idle(idle).acceptance_probability().unwrap(), c.acceptance_probability().unwrap());
    }

    #[test]
    fn backends_agree_on_legal_subspace(seed in any::<u64>(), m in 1usize..=3, idle in 0usize..=2) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let idled = random_circuit(&mut rng, 2, m).idle(idle);
        prop_assert!(cross_backend_defect(&idled, 7.5).unwrap() <= 1e-9);
    }

    #[test]
    fn excited_gadget_spectrum_is_a_merge(seed in any::<u64>(), n in 1usize..=3, c_raw in 1usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = c_raw.min((1 << n) - 1);
        let h = random_hamiltonian(&mut rng, n, 3);
        let g = build_excited_gadget(&h, c, &GadgetOptions::default()).unwrap();
        let hz = linalg::eigvalsh(&g.hz.to_dense().unwrap());
        let hs = linalg::eigvalsh(&g.hs.hamiltonian.to_dense().unwrap());
        let all = linalg::eigvalsh(&g.combined.to_dense().unwrap());
        prop_assert_eq!(hz.iter().filter(|&&x| x < 0.0).count(), c);
        prop_assert!(hs.iter().all(|&x| x.abs() <= 0.25 + 1e-12));
        let mut merged: Vec<f64> = hz.iter().chain(&hs).copied().collect();
        merged.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (x, y) in merged.iter().zip(&all) {
            prop_assert!((x - y).abs() <= 1e-10);
        }
        prop_assert!((all[c] - hs[0]).abs() <= 1e-10);
        prop_assert!(all[c - 1] < hs[0]);
    }

    #[test]
    fn lifting_appends_a_one(seed in any::<u64>(), n in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_subset(&mut rng, n);
        let GuideState::Subset(lifted) = lift_guide(&GuideState::Subset(s.clone())).unwrap() else {
            panic!("subset guide lifts to a subset guide");
        };
        prop_assert_eq!(lifted.size(), s.size());
        for x in s.elements() {
            prop_assert!(lifted.contains(&x.concat(&BitString::parse("1").unwrap())));
        }
    }

    #[test]
    fn state_pipelines_stay_valid(seed in any::<u64>(), n in 1usize..=3, steps in 1usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut st = EncodedState::from_subset(random_subset(&mut rng, n));
        for _ in 0..steps {
            st = match rng.gen_range(0..4) {
                0 => {
                    let extra = random_subset(&mut rng, 1);
                    let base = attach_subset(st.base(), &extra).unwrap();
                    let mut isos = st.isometries().to_vec();
                    isos.push(linalg::identity(2));
                    EncodedState::new(base, isos).unwrap()
                }
                1 => {
                    let v = CVector::from_fn(2, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
                    attach_product(&st, &[v.normalize()]).unwrap()
                }
                2 => {
                    let i = rng.gen_range(0..st.isometries().len());
                    let dim = st.isometries()[i].nrows();
                    if dim == 2 {
                        apply_local_isometry(&st, i, &random_unitary(&mut rng)).unwrap()
                    } else {
                        st
                    }
                }
                _ => {
                    let i = rng.gen_range(0..st.isometries().len());
                    if st.isometries()[i].nrows() == 2 && st.n_qubits() <= 10 {
                        apply_local_isometry(&st, i, &heisenberg_code_isometry().columns(0, 2).into_owned())
                            .unwrap_or_else(|_| st.clone())
                    } else {
                        st
                    }
                }
            };
        }
        for v in st.isometries() {
            prop_assert!(linalg::isometry_defect(v) <= 1e-12);
        }
        let dense = st.to_dense().unwrap();
        prop_assert!((dense.norm() - 1.0).abs() <= 1e-10);
        let m = st.n_qubits();
        for _ in 0..20 {
            let i = rng.gen_range(0..1usize << m);
            let amp = st.amplitude(&BitString::from_index(i, m)).unwrap();
            prop_assert!((amp - dense[i]).norm() <= 1e-10);
        }
    }

    #[test]
    fn subdivision_lowers_locality(seed in any::<u64>(), k in 4usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let letters: Vec<(usize, Pauli)> = (0..k).map(|q| (q, [Pauli::X, Pauli::Y, Pauli::Z][rng.gen_range(0..3)])).collect();
        let h = Hamiltonian::from_terms(k, vec![InteractionTerm::pauli(&letters, rng.gen_range(0.2..1.0)).unwrap()]).unwrap();
        let r = subdivide(&h, 100.0).unwrap();
        prop_assert!(pauli_locality(&r.output).unwrap() < k);
        prop_assert_eq!(r.output.n_qubits(), k + 1);
    }

    #[test]
    fn local_rotations_keep_ising_terms_sld(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let u = random_unitary(&mut rng);
        let uu = linalg::kron(&u, &u);
        let zz = linalg::kron(&linalg::pauli_z(), &linalg::pauli_z());
        let z0 = linalg::kron(&linalg::identity(2), &linalg::pauli_z());
        let m = (&zz + z0 * linalg::c(rng.gen_range(-1.0..1.0))).clone();
        let rotated = &uu * m * uu.adjoint();
        let term = InteractionTerm::new(vec![0, 1], rotated, 1.0).unwrap();
        let v = is_2sld(&[term], 1e-6);
        prop_assert!(matches!(v, SldVerdict::Sld { .. }), "{:?}", v);
    }
}

#[test]
fn catalog_circuits_preserve_norm() {
    for e in toy_catalog() {
        assert!((e.circuit.simulate().unwrap().norm() - 1.0).abs() <= 1e-12, "{}", e.name);
    }
}
