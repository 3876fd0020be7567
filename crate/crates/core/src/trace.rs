//! Traced density matrices of one and two qubits, the one-body reduced
//! density matrix, and fermionic evaluations of same-spin coherences.
//!
//! Pair matrices use the basis `|00>, |01>, |10>, |11>` with the first bit
//! belonging to qubit `i`, i.e. local index `2·b_i + b_j`.

use nalgebra::{DMatrix, Matrix2, Matrix4};
use rayon::prelude::*;
use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::wfncore::{apply_ladders, Determinant, Ladder, SparseWavefunction};

/// Largest qubit count accepted by [`dense_statevector`].
pub const DENSE_MAX_QUBITS: usize = 24;

/// Terms per block in the chunked reductions. Fixed so that results do not
/// depend on the number of worker threads.
const REDUCE_CHUNK: usize = 4096;

/// Two-qubit traced density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct PairDensityMatrix<T> {
    pub i: usize,
    pub j: usize,
    pub m: Matrix4<T>,
}

impl<T: Real> PairDensityMatrix<T> {
    /// Diagonal of the matrix: the joint occupation distribution.
    pub fn probabilities(&self) -> [T; 4] {
        [self.m[(0, 0)], self.m[(1, 1)], self.m[(2, 2)], self.m[(3, 3)]]
    }

    /// Reduced matrix of qubit `i` (`first = true`) or `j`.
    pub fn reduce(&self, first: bool) -> Matrix2<T> {
        let mut out = Matrix2::zeros();
        for a in 0..4 {
            for b in 0..4 {
                let (keep_a, keep_b, env_a, env_b) = if first {
                    (a >> 1, b >> 1, a & 1, b & 1)
                } else {
                    (a & 1, b & 1, a >> 1, b >> 1)
                };
                if env_a == env_b {
                    out[(keep_a, keep_b)] += self.m[(a, b)];
                }
            }
        }
        out
    }

    /// The `|01><10|` coherence.
    #[inline]
    pub fn coherence(&self) -> T {
        self.m[(1, 2)]
    }
}

/// Single-qubit traced density matrix. Only the diagonal is stored: for
/// particle-number-conserving states the coherence vanishes identically.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SingleDensityMatrix<T> {
    pub i: usize,
    pub p0: T,
    pub p1: T,
}

/// One-body reduced density matrix `<a_k† a_l>` over spin-orbitals.
#[derive(Clone, Debug, PartialEq)]
pub struct OneBodyRDM<T> {
    pub m: DMatrix<T>,
}

impl<T: Real> OneBodyRDM<T> {
    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn trace(&self) -> T {
        self.m.trace()
    }

    /// Spin-traced `M x M` matrix `alpha-alpha + beta-beta`.
    pub fn spatial(&self) -> Result<DMatrix<T>> {
        let n = self.dim();
        if !n.is_multiple_of(2) {
            return Err(Error::Dimension(format!(
                "spin-orbital RDM of odd dimension {n} has no alpha/beta split"
            )));
        }
        let m = n / 2;
        Ok(DMatrix::from_fn(m, m, |p, q| {
            self.m[(p, q)] + self.m[(p + m, q + m)]
        }))
    }
}

/// Joint occupation probabilities of every ordered qubit pair.
#[derive(Clone, Debug, PartialEq)]
pub struct PairProbabilities<T> {
    n: usize,
    p1: Vec<T>,
    p11: Vec<T>,
    total: T,
}

impl<T: Real> PairProbabilities<T> {
    pub fn n_qubits(&self) -> usize {
        self.n
    }

    /// Probability that qubit `i` is occupied.
    pub fn marginal(&self, i: usize) -> T {
        self.p1[i]
    }

    /// `[p(00), p(01), p(10), p(11)]` for `(b_i, b_j)`.
    pub fn get(&self, i: usize, j: usize) -> [T; 4] {
        if i == j {
            let p1 = self.p1[i];
            return [self.total - p1, T::zero(), T::zero(), p1];
        }
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        let p11 = self.p11[lo * self.n + hi];
        let p10 = self.p1[i] - p11;
        let p01 = self.p1[j] - p11;
        let p00 = self.total - self.p1[i] - self.p1[j] + p11;
        [p00, p01, p10, p11]
    }
}

fn check_qubit<T: Real>(wfn: &SparseWavefunction<T>, q: usize) -> Result<()> {
    if q >= wfn.n_qubits() {
        Err(Error::Dimension(format!(
            "qubit {q} out of range for {} qubits",
            wfn.n_qubits()
        )))
    } else {
        Ok(())
    }
}

/// Partial trace of `|psi><psi|` onto qubits `{i, j}`.
///
/// Terms are grouped by their environment (the bitstring with `i` and `j`
/// cleared); each group contributes the outer product of its local
/// four-component amplitude vector. Groups are reduced in key order.
pub fn pair_density_matrix<T: Real>(
    wfn: &SparseWavefunction<T>,
    i: usize,
    j: usize,
) -> Result<PairDensityMatrix<T>> {
    check_qubit(wfn, i)?;
    check_qubit(wfn, j)?;
    if i == j {
        return Err(Error::Argument(format!("pair needs two distinct qubits, got ({i}, {i})")));
    }
    let mut groups: FxHashMap<Determinant, [T; 4]> =
        FxHashMap::with_capacity_and_hasher(wfn.len(), Default::default());
    for (det, c) in wfn.terms() {
        let local = det.local_pair(i, j);
        let mut env = det.clone();
        env.clear(i);
        env.clear(j);
        groups.entry(env).or_insert([T::zero(); 4])[local] += *c;
    }
    let mut groups: Vec<_> = groups.into_iter().collect();
    groups.sort_unstable_by(|a, b| a.0.cmp(&b.0));

    let mut m = Matrix4::<T>::zeros();
    for (_, v) in &groups {
        for a in 0..4 {
            if v[a] == T::zero() {
                continue;
            }
            for b in a..4 {
                m[(a, b)] += v[a] * v[b];
            }
        }
    }
    for a in 0..4 {
        for b in 0..a {
            m[(a, b)] = m[(b, a)];
        }
    }
    Ok(PairDensityMatrix { i, j, m })
}

pub fn single_density_matrix<T: Real>(
    wfn: &SparseWavefunction<T>,
    i: usize,
) -> Result<SingleDensityMatrix<T>> {
    check_qubit(wfn, i)?;
    let p1 = wfn
        .terms()
        .iter()
        .filter(|(d, _)| d.get(i))
        .fold(T::zero(), |acc, &(_, c)| acc + c * c);
    Ok(SingleDensityMatrix {
        i,
        p0: T::one() - p1,
        p1,
    })
}

/// Full 2x2 traced matrix of qubit `i`, coherence included.
///
/// Equal to the diagonal [`SingleDensityMatrix`] for particle-conserving
/// states; kept for arbitrary qubit states.
pub fn single_qubit_matrix<T: Real>(wfn: &SparseWavefunction<T>, i: usize) -> Result<Matrix2<T>> {
    check_qubit(wfn, i)?;
    let (mut p1, mut coh) = (T::zero(), T::zero());
    for (det, c) in wfn.terms() {
        if det.get(i) {
            p1 += *c * *c;
        } else {
            let mut partner = det.clone();
            partner.set(i);
            coh += *c * wfn.amplitude(&partner);
        }
    }
    Ok(Matrix2::new(wfn.norm_sqr() - p1, coh, coh, p1))
}

/// Joint occupation distribution of every qubit pair in one sweep.
///
/// Uses `p(11)` accumulated over occupied pairs of each determinant; the
/// other three cells follow from the marginals. Per-block partial tables are
/// merged in block order.
pub fn all_pair_probabilities<T: Real>(wfn: &SparseWavefunction<T>) -> PairProbabilities<T> {
    let n = wfn.n_qubits();
    let mut p1 = vec![T::zero(); n];
    let mut p11 = vec![T::zero(); n * n];
    let mut total = T::zero();

    let partial = |block: &[(Determinant, T)]| {
        let mut p1 = vec![T::zero(); n];
        let mut p11 = vec![T::zero(); n * n];
        let mut total = T::zero();
        let mut occ = Vec::with_capacity(n);
        for (det, c) in block {
            let w = *c * *c;
            total += w;
            occ.clear();
            occ.extend(det.occupied());
            for (k, &a) in occ.iter().enumerate() {
                p1[a] += w;
                let row = a * n;
                for &b in &occ[k + 1..] {
                    p11[row + b] += w;
                }
            }
        }
        (p1, p11, total)
    };

    let batch = (8_000_000 / (n * n).max(1)).clamp(1, 64) * REDUCE_CHUNK;
    for super_block in wfn.terms().chunks(batch) {
        let partials: Vec<_> = super_block.par_chunks(REDUCE_CHUNK).map(partial).collect();
        for (bp1, bp11, bt) in partials {
            total += bt;
            p1.iter_mut().zip(&bp1).for_each(|(a, b)| *a += *b);
            p11.iter_mut().zip(&bp11).for_each(|(a, b)| *a += *b);
        }
    }
    PairProbabilities { n, p1, p11, total }
}

/// One-body reduced density matrix `rho[k][l] = <a_k† a_l>`.
///
/// Column `l` collects, for every determinant with `l` occupied, the moves of
/// that electron to each empty `k`, with sign `(-1)^(occupied strictly
/// between k and l)`. Columns are computed independently.
pub fn one_body_rdm<T: Real>(wfn: &SparseWavefunction<T>) -> Result<OneBodyRDM<T>> {
    wfn.require_particle_conserving()?;
    let n = wfn.n_qubits();
    let columns: Vec<Vec<T>> = (0..n)
        .into_par_iter()
        .map(|l| {
            let mut col = vec![T::zero(); n];
            for (det, c) in wfn.terms() {
                if !det.get(l) {
                    continue;
                }
                col[l] += *c * *c;
                let mut moved = det.clone();
                moved.clear(l);
                for (k, slot) in col.iter_mut().enumerate() {
                    if k == l || det.get(k) {
                        continue;
                    }
                    moved.set(k);
                    let partner = wfn.amplitude(&moved);
                    moved.clear(k);
                    if partner != T::zero() {
                        let term = *c * partner;
                        if det.count_between(k, l) % 2 == 0 {
                            *slot += term;
                        } else {
                            *slot -= term;
                        }
                    }
                }
            }
            col
        })
        .collect();
    let half = T::from_f64(0.5).expect("0.5");
    let m = DMatrix::from_fn(n, n, |k, l| (columns[l][k] + columns[k][l]) * half);
    Ok(OneBodyRDM { m })
}

/// `<psi| O |psi>` for an operator product `O` (rightmost applied first).
pub fn expectation<T: Real>(wfn: &SparseWavefunction<T>, ops: &[Ladder]) -> Result<T> {
    for op in ops {
        let (Ladder::Create(q) | Ladder::Annihilate(q)) = *op;
        check_qubit(wfn, q)?;
    }
    Ok(wfn.terms().iter().fold(T::zero(), |acc, (det, c)| {
        match apply_ladders(det, ops) {
            Some((out, sign)) => {
                let v = wfn.amplitude(&out) * *c;
                if sign > 0 {
                    acc + v
                } else {
                    acc - v
                }
            }
            None => acc,
        }
    }))
}

fn check_same_spin_pair<T: Real>(wfn: &SparseWavefunction<T>, i: usize, j: usize) -> Result<usize> {
    let m = wfn.require_sz_conserving()?;
    if i == j {
        return Err(Error::Argument(format!("same-spin pair needs i != j, got ({i}, {j})")));
    }
    if i >= m || j >= m {
        return Err(Error::Argument(format!(
            "({i}, {j}) must both index alpha spin-orbitals (< {m}); use spin symmetry for beta"
        )));
    }
    Ok(m)
}

/// `<01|rho_ij|10>` for α spin-orbitals `i`, `j`, evaluated in second
/// quantization.
///
/// The qubit-space coherence is `<a_j† a_i P>` where `P = prod_k (1 - 2 n_k)`
/// runs over the spin-orbitals lying between `i` and `j` in the Jordan–Wigner
/// ordering. This function applies the hop `a_j† a_i` with explicit ladder
/// signs and multiplies by the parity string. When the string consists of the
/// single β partner `j̄` this is exactly
/// `<a_j† a_i> - 2 <a_j̄† a_j† a_i a_j̄>` (see [`orbital_pair_offdiag`]); in
/// the block α/β layout used here the string holds the α orbitals between
/// `i` and `j` and never a β orbital.
///
/// Must agree with `pair_density_matrix(i, j).m[(1, 2)]`.
pub fn same_spin_offdiag<T: Real>(wfn: &SparseWavefunction<T>, i: usize, j: usize) -> Result<T> {
    check_same_spin_pair(wfn, i, j)?;
    let hop = [Ladder::Create(j), Ladder::Annihilate(i)];
    let mut value = T::zero();
    for (det, c) in wfn.terms() {
        let Some((target, sign)) = apply_ladders(det, &hop) else {
            continue;
        };
        let partner = wfn.amplitude(&target);
        if partner == T::zero() {
            continue;
        }
        let string_parity = det.count_between(i, j) % 2;
        let v = partner * *c;
        if (sign < 0) != (string_parity == 1) {
            value -= v;
        } else {
            value += v;
        }
    }
    Ok(value)
}

/// Orbital-pair form of the same-spin coherence:
/// `<a_j† a_i> - 2 <a_j̄† a_j† a_i a_j̄>`, with `j̄ = j + M` the β partner.
///
/// This is the coherence of the qubit pair `(i, j)` in a Jordan–Wigner
/// ordering where `j̄` is the only mode between them, e.g.
/// `(β_i, α_i, β_j, α_j, ...)`. It differs from [`same_spin_offdiag`] for the
/// block layout whenever the α modes between `i` and `j` or `j̄` are occupied.
pub fn orbital_pair_offdiag<T: Real>(wfn: &SparseWavefunction<T>, i: usize, j: usize) -> Result<T> {
    let m = check_same_spin_pair(wfn, i, j)?;
    let jb = j + m;
    let one_body = expectation(wfn, &[Ladder::Create(j), Ladder::Annihilate(i)])?;
    let two_body = expectation(
        wfn,
        &[
            Ladder::Create(jb),
            Ladder::Create(j),
            Ladder::Annihilate(i),
            Ladder::Annihilate(jb),
        ],
    )?;
    Ok(one_body - (two_body + two_body))
}

/// Dense `2^N` statevector, amplitude at index `sum_q b_q 2^q`.
pub fn dense_statevector<T: Real>(wfn: &SparseWavefunction<T>) -> Result<Vec<T>> {
    let n = wfn.n_qubits();
    if n > DENSE_MAX_QUBITS {
        return Err(Error::Capacity(format!(
            "dense statevector limited to {DENSE_MAX_QUBITS} qubits, got {n}"
        )));
    }
    let mut psi = vec![T::zero(); 1usize << n];
    for (det, c) in wfn.terms() {
        psi[det.words()[0] as usize] = *c;
    }
    Ok(psi)
}
