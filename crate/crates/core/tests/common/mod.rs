#![allow(dead_code)]

use nalgebra::DMatrix;
use orbcorr::fci::Hamiltonian;
use orbcorr::orbitals::{parse_fcidump, OrbitalRotation};
use orbcorr::wfncore::{Determinant, SparseWavefunction};
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub type Wfn = SparseWavefunction<f64>;

pub fn fixture(name: &str) -> Hamiltonian<f64> {
    let path = format!("{}/tests/data/{name}.fcidump", env!("CARGO_MANIFEST_DIR"));
    let text = std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"));
    parse_fcidump(&text).unwrap()
}

/// Normalized state with `chi` distinct random determinants over `n` qubits.
pub fn random_state(rng: &mut ChaCha8Rng, n: usize, chi: usize) -> Wfn {
    let chi = chi.min(1 << n);
    let picks = sample(rng, 1 << n, chi);
    let terms = picks
        .iter()
        .map(|bits| (Determinant::from_u64(n, bits as u64), rng.random_range(-1.0..1.0)))
        .collect();
    Wfn::new(n, 0, 0, terms).unwrap().normalize().unwrap()
}

/// Random normalized state of `2m` qubits with fixed `(na, nb)` occupations.
pub fn random_sector_state(rng: &mut ChaCha8Rng, m: usize, na: usize, nb: usize, chi: usize) -> Wfn {
    let strings = |k: usize| -> Vec<u64> { (0u64..1 << m).filter(|s| s.count_ones() as usize == k).collect() };
    let (sa, sb) = (strings(na), strings(nb));
    let total = sa.len() * sb.len();
    let picks = sample(rng, total, chi.min(total));
    let terms = picks
        .iter()
        .map(|k| {
            let bits = sa[k / sb.len()] | sb[k % sb.len()] << m;
            (Determinant::from_u64(2 * m, bits), rng.random_range(-1.0..1.0))
        })
        .collect();
    Wfn::new(2 * m, na, nb, terms).unwrap().normalize().unwrap()
}

pub fn random_orthogonal(rng: &mut ChaCha8Rng, m: usize) -> OrbitalRotation<f64> {
    let a = DMatrix::from_fn(m, m, |_, _| rng.random_range(-1.0..1.0));
    OrbitalRotation::new(a.qr().q()).unwrap()
}

/// Random integrals with the physical symmetries.
pub fn random_hamiltonian(rng: &mut ChaCha8Rng, m: usize) -> Hamiltonian<f64> {
    let mut h = Hamiltonian::zeros(m);
    for p in 0..m {
        for q in 0..=p {
            h.set_h1(p, q, rng.random_range(-1.0..1.0));
        }
    }
    for p in 0..m {
        for q in 0..=p {
            for r in 0..m {
                for s in 0..=r {
                    if p * (p + 1) / 2 + q >= r * (r + 1) / 2 + s {
                        h.set_eri(p, q, r, s, rng.random_range(-0.5..0.5));
                    }
                }
            }
        }
    }
    h.e_core = rng.random_range(-1.0..1.0);
    h
}

// ---- dense Fock-space oracle, index = sum_q b_q 2^q ----

pub fn to_dense(w: &Wfn) -> Vec<f64> {
    let mut psi = vec![0.0; 1 << w.n_qubits()];
    for (d, c) in w.terms() {
        let idx: usize = (0..w.n_qubits()).filter(|&q| d.get(q)).map(|q| 1 << q).sum();
        psi[idx] = *c;
    }
    psi
}

/// `a_q` with the Jordan–Wigner string over qubits below `q`.
pub fn annihilate(psi: &[f64], q: usize) -> Vec<f64> {
    let mut out = vec![0.0; psi.len()];
    for (k, &c) in psi.iter().enumerate() {
        if c != 0.0 && k >> q & 1 == 1 {
            let sign = if (k & ((1 << q) - 1)).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
            out[k ^ (1 << q)] += sign * c;
        }
    }
    out
}

pub fn create(psi: &[f64], q: usize) -> Vec<f64> {
    let mut out = vec![0.0; psi.len()];
    for (k, &c) in psi.iter().enumerate() {
        if c != 0.0 && k >> q & 1 == 0 {
            let sign = if (k & ((1 << q) - 1)).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
            out[k | (1 << q)] += sign * c;
        }
    }
    out
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `<psi| a_k† a_l |psi>`.
pub fn dense_hop(psi: &[f64], k: usize, l: usize) -> f64 {
    dot(psi, &create(&annihilate(psi, l), k))
}

/// `rho_ij` by summing over every environment configuration.
pub fn dense_pair_trace(psi: &[f64], n: usize, i: usize, j: usize) -> [[f64; 4]; 4] {
    let mut rho = [[0.0; 4]; 4];
    for env in 0usize..1 << n {
        if env >> i & 1 == 1 || env >> j & 1 == 1 {
            continue;
        }
        let idx = |a: usize| env | (a >> 1) << i | (a & 1) << j;
        for a in 0..4 {
            for b in 0..4 {
                rho[a][b] += psi[idx(a)] * psi[idx(b)];
            }
        }
    }
    rho
}

/// `H psi` with `H = sum h_pq a†_p a_q + 1/2 sum (pq|rs) a†_p a†_r a_s a_q + e_core`
/// over spin-orbitals (α block then β block).
pub fn apply_hamiltonian(h: &Hamiltonian<f64>, psi: &[f64]) -> Vec<f64> {
    let m = h.n_spatial();
    let n = 2 * m;
    let mut out: Vec<f64> = psi.iter().map(|c| c * h.e_core).collect();
    let add = |out: &mut Vec<f64>, v: &[f64], w: f64| {
        for (o, x) in out.iter_mut().zip(v) {
            *o += w * x;
        }
    };
    for a in 0..n {
        for b in 0..n {
            if a / m != b / m {
                continue;
            }
            let w = h.h1[(a % m, b % m)];
            if w != 0.0 {
                add(&mut out, &create(&annihilate(psi, b), a), w);
            }
        }
    }
    for p in 0..n {
        for q in 0..n {
            if p / m != q / m {
                continue;
            }
            let aq = annihilate(psi, q);
            for r in 0..n {
                for s in 0..n {
                    if r / m != s / m {
                        continue;
                    }
                    let w = h.eri(p % m, q % m, r % m, s % m);
                    if w == 0.0 {
                        continue;
                    }
                    let v = create(&create(&annihilate(&aq, s), r), p);
                    add(&mut out, &v, 0.5 * w);
                }
            }
        }
    }
    out
}

pub fn basis_vector(n: usize, d: &Determinant) -> Vec<f64> {
    let mut v = vec![0.0; 1 << n];
    let idx: usize = (0..n).filter(|&q| d.get(q)).map(|q| 1 << q).sum();
    v[idx] = 1.0;
    v
}
