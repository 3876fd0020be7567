mod common;

use common::*;
use nalgebra::{DMatrix, SymmetricEigen};
use orbcorr::fci::{
    build_hamiltonian_matrix, enumerate_basis, ground_state, hamiltonian_element, hubbard_hamiltonian,
    SolverOptions, SolverPath,
};
use orbcorr::orbitals::rotate_integrals;
use orbcorr::trace::one_body_rdm;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Sector Hamiltonian assembled from the Fock-space operator oracle.
fn oracle_matrix(h: &orbcorr::fci::Hamiltonian<f64>, na: usize, nb: usize) -> DMatrix<f64> {
    let m = h.n_spatial();
    let basis = enumerate_basis(m, na, nb).unwrap();
    let vecs: Vec<Vec<f64>> = basis.determinants().map(|d| basis_vector(2 * m, &d)).collect();
    let hv: Vec<Vec<f64>> = vecs.iter().map(|v| apply_hamiltonian(h, v)).collect();
    DMatrix::from_fn(vecs.len(), vecs.len(), |a, b| dot(&vecs[a], &hv[b]))
}

fn lowest(m: DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

#[test]
fn slater_condon_matches_operator_algebra() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for m in [2, 3] {
        let h = random_hamiltonian(&mut rng, m);
        for na in 0..=m {
            for nb in 0..=m {
                let basis = enumerate_basis(m, na, nb).unwrap();
                let dets: Vec<_> = basis.determinants().collect();
                let want = oracle_matrix(&h, na, nb);
                for (a, da) in dets.iter().enumerate() {
                    for (b, db) in dets.iter().enumerate() {
                        let got = hamiltonian_element(&h, da, db);
                        assert!((got - want[(a, b)]).abs() < 1e-12, "M={m} ({na},{nb}) {da:?} {db:?}");
                    }
                }
            }
        }
    }
}

#[test]
fn ground_energy_matches_oracle_spectrum() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let h = random_hamiltonian(&mut rng, 4);
    for (na, nb) in [(2, 2), (3, 1), (1, 0)] {
        let gs = ground_state(&h, na, nb, &SolverOptions::default()).unwrap();
        assert!((gs.energy - lowest(oracle_matrix(&h, na, nb))).abs() < 1e-10);
    }
}

#[test]
fn fixture_energies_match_reference() {
    // reference FCI energies from an independent quantum-chemistry package
    for (name, na, nb, e) in [
        ("h2_sto3g", 1, 1, -1.137283834489),
        ("h4_chain_sto3g", 2, 2, -1.996150325519),
        ("lih_sto3g", 2, 2, -7.882324378883),
        ("h2o_sto3g", 5, 5, -75.012437432493),
    ] {
        let h = fixture(name);
        h.check_symmetry().unwrap();
        let gs = ground_state(&h, na, nb, &SolverOptions::default()).unwrap();
        assert!((gs.energy - e).abs() < 1e-8, "{name}: {} vs {e}", gs.energy);
    }
}

#[test]
fn fixtures_match_dense_diagonalization() {
    for (name, na, nb) in [("h2_sto3g", 1, 1), ("h4_chain_sto3g", 2, 2), ("lih_sto3g", 2, 2)] {
        let h = fixture(name);
        let basis = enumerate_basis(h.n_spatial(), na, nb).unwrap();
        let dense = build_hamiltonian_matrix(&h, &basis).unwrap().to_dense();
        let e = lowest(dense);
        let iterative = ground_state(
            &h,
            na,
            nb,
            &SolverOptions {
                dense_threshold: 1,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((iterative.energy - e).abs() < 1e-9, "{name}");
    }
}

#[test]
fn davidson_path_on_water() {
    let h = fixture("h2o_sto3g");
    let opts = SolverOptions {
        dense_threshold: 100,
        ..Default::default()
    };
    let gs = ground_state(&h, 5, 5, &opts).unwrap();
    assert_eq!(gs.path, SolverPath::Davidson);
    assert!((gs.energy - -75.012437432493).abs() < 1e-8);
}

#[test]
fn free_fermion_band_filling() {
    let (sites, t) = (5usize, 1.3);
    let h = hubbard_hamiltonian::<f64>(sites, t, 0.0, false).unwrap();
    let mut levels: Vec<f64> = (1..=sites)
        .map(|k| -2.0 * t * (k as f64 * std::f64::consts::PI / (sites + 1) as f64).cos())
        .collect();
    levels.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (na, nb) in [(3, 2), (1, 1), (4, 0)] {
        let want: f64 = levels[..na].iter().sum::<f64>() + levels[..nb].iter().sum::<f64>();
        let gs = ground_state(&h, na, nb, &SolverOptions::default()).unwrap();
        assert!((gs.energy - want).abs() < 1e-10);
    }
}

#[test]
fn variational_bound_and_rdm_trace() {
    let h = fixture("lih_sto3g");
    let basis = enumerate_basis(6, 2, 2).unwrap();
    let opts = SolverOptions {
        dense_threshold: 50,
        ..Default::default()
    };
    let gs = ground_state(&h, 2, 2, &opts).unwrap();
    for d in basis.determinants() {
        assert!(gs.energy <= hamiltonian_element(&h, &d, &d) + 1e-10);
    }
    let rdm = one_body_rdm(&gs.wavefunction).unwrap();
    assert!((rdm.trace() - 4.0).abs() < 1e-10);
}

#[test]
fn energy_is_invariant_under_orbital_rotation() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for (name, na, nb) in [("h4_chain_sto3g", 2, 2), ("lih_sto3g", 2, 2)] {
        let h = fixture(name);
        let e0 = ground_state(&h, na, nb, &SolverOptions::default()).unwrap().energy;
        for _ in 0..3 {
            let u = random_orthogonal(&mut rng, h.n_spatial());
            let r = rotate_integrals(&h, &u).unwrap();
            let e1 = ground_state(&r, na, nb, &SolverOptions::default()).unwrap().energy;
            assert!((e1 - e0).abs() < 1e-8, "{name}: {e0} vs {e1}");
        }
    }
}

#[test]
fn degenerate_ground_state_is_flagged() {
    // one electron on a three-site ring: levels -2t, t, t
    let h = hubbard_hamiltonian::<f64>(3, -1.0, 0.0, true).unwrap();
    let gs = ground_state(&h, 1, 0, &SolverOptions::default()).unwrap();
    assert!(gs.degenerate);
    assert!(gs.gap.unwrap() < 1e-8);
    let h = hubbard_hamiltonian::<f64>(3, 1.0, 0.0, true).unwrap();
    assert!(!ground_state(&h, 1, 0, &SolverOptions::default()).unwrap().degenerate);
}
