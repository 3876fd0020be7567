//! Desk-scale full configuration interaction.
//!
//! Builds the Hamiltonian matrix over all determinants of an `(N_alpha,
//! N_beta)` sector with the Slater–Condon rules and returns the lowest
//! eigenpair as a [`SparseWavefunction`]. Small sectors are diagonalized
//! densely, larger ones with a Davidson iteration.

mod davidson;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::scalar::{lit, tol, Real};
use crate::wfncore::{apply_ladders, Determinant, Ladder, SparseWavefunction};

pub use davidson::{davidson, DavidsonOutcome};

/// Largest determinant basis accepted by [`enumerate_basis`].
pub const MAX_BASIS: usize = 1_000_000;
/// Hard ceiling on the dense-diagonalization threshold.
pub const MAX_DENSE: usize = 20_000;

/// Metadata carried alongside integrals (mostly from FCIDUMP headers).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct IntegralMeta {
    pub nelec: Option<usize>,
    pub ms2: Option<i64>,
    pub orbsym: Option<Vec<i64>>,
    pub isym: Option<i64>,
    pub warnings: Vec<String>,
}

/// Second-quantized electronic Hamiltonian in an orthonormal spatial
/// orbital basis. Two-electron integrals `(pq|rs)` are in chemists' notation
/// and stored densely with all eight permutational images filled.
#[derive(Clone, Debug, PartialEq)]
pub struct Hamiltonian<T> {
    n_spatial: usize,
    pub h1: DMatrix<T>,
    eri: Vec<T>,
    pub e_core: T,
    pub meta: IntegralMeta,
}

impl<T: Real> Hamiltonian<T> {
    pub fn zeros(n_spatial: usize) -> Self {
        Self {
            n_spatial,
            h1: DMatrix::zeros(n_spatial, n_spatial),
            eri: vec![T::zero(); n_spatial.pow(4)],
            e_core: T::zero(),
            meta: IntegralMeta::default(),
        }
    }

    /// Builds from a dense `M^4` integral array (index `((p M + q) M + r) M + s`).
    pub fn from_parts(h1: DMatrix<T>, eri: Vec<T>, e_core: T) -> Result<Self> {
        let m = h1.nrows();
        if h1.ncols() != m || eri.len() != m.pow(4) {
            return Err(Error::Dimension(format!(
                "h1 is {}x{}, eri has {} entries; expected square and M^4",
                h1.nrows(),
                h1.ncols(),
                eri.len()
            )));
        }
        Ok(Self {
            n_spatial: m,
            h1,
            eri,
            e_core,
            meta: IntegralMeta::default(),
        })
    }

    #[inline]
    pub fn n_spatial(&self) -> usize {
        self.n_spatial
    }

    #[inline]
    fn idx(&self, p: usize, q: usize, r: usize, s: usize) -> usize {
        let m = self.n_spatial;
        ((p * m + q) * m + r) * m + s
    }

    /// `(pq|rs)`.
    #[inline]
    pub fn eri(&self, p: usize, q: usize, r: usize, s: usize) -> T {
        self.eri[self.idx(p, q, r, s)]
    }

    pub fn eri_data(&self) -> &[T] {
        &self.eri
    }

    /// Sets `(pq|rs)` and its seven symmetry images.
    pub fn set_eri(&mut self, p: usize, q: usize, r: usize, s: usize, v: T) {
        for (a, b, c, d) in [
            (p, q, r, s),
            (q, p, r, s),
            (p, q, s, r),
            (q, p, s, r),
            (r, s, p, q),
            (s, r, p, q),
            (r, s, q, p),
            (s, r, q, p),
        ] {
            let k = self.idx(a, b, c, d);
            self.eri[k] = v;
        }
    }

    /// Sets `h_pq` and `h_qp`.
    pub fn set_h1(&mut self, p: usize, q: usize, v: T) {
        self.h1[(p, q)] = v;
        self.h1[(q, p)] = v;
    }

    /// Checks `h1` symmetry and eight-fold `eri` symmetry within `1e-10`.
    pub fn check_symmetry(&self) -> Result<()> {
        let m = self.n_spatial;
        let eps = tol::<T>(1e-10);
        for p in 0..m {
            for q in 0..p {
                if (self.h1[(p, q)] - self.h1[(q, p)]).abs() > eps {
                    return Err(Error::Argument(format!("h1 not symmetric at ({p}, {q})")));
                }
            }
        }
        for p in 0..m {
            for q in 0..m {
                for r in 0..m {
                    for s in 0..m {
                        let v = self.eri(p, q, r, s);
                        for w in [
                            self.eri(q, p, r, s),
                            self.eri(p, q, s, r),
                            self.eri(r, s, p, q),
                        ] {
                            if (v - w).abs() > eps {
                                return Err(Error::Argument(format!(
                                    "eri lacks 8-fold symmetry at ({p}{q}|{r}{s})"
                                )));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// `[ab|cd]` over spin-orbitals: zero unless `a,b` and `c,d` share spin.
    #[inline]
    fn so_eri(&self, a: usize, b: usize, c: usize, d: usize) -> T {
        let m = self.n_spatial;
        if a / m != b / m || c / m != d / m {
            return T::zero();
        }
        self.eri(a % m, b % m, c % m, d % m)
    }

    #[inline]
    fn so_h1(&self, a: usize, b: usize) -> T {
        let m = self.n_spatial;
        if a / m != b / m {
            return T::zero();
        }
        self.h1[(a % m, b % m)]
    }

    fn diagonal_energy(&self, occ: &[usize]) -> T {
        let mut one = T::zero();
        let mut two = T::zero();
        for (k, &a) in occ.iter().enumerate() {
            one += self.so_h1(a, a);
            for &b in &occ[k + 1..] {
                two += self.so_eri(a, a, b, b) - self.so_eri(a, b, b, a);
            }
        }
        one + two + self.e_core
    }
}

/// Hubbard chain: hopping `-t` between neighbours and on-site `(pp|pp) = u`.
/// `periodic` adds the bond between the end sites (chains of three or more).
pub fn hubbard_hamiltonian<T: Real>(sites: usize, t: T, u: T, periodic: bool) -> Result<Hamiltonian<T>> {
    if sites < 2 {
        return Err(Error::Argument(format!("Hubbard chain needs at least 2 sites, got {sites}")));
    }
    let mut h = Hamiltonian::zeros(sites);
    for p in 0..sites - 1 {
        h.set_h1(p, p + 1, -t);
    }
    if periodic && sites > 2 {
        h.set_h1(0, sites - 1, -t);
    }
    for p in 0..sites {
        h.set_eri(p, p, p, p, u);
    }
    Ok(h)
}

/// `<d1|H|d2>` by the Slater–Condon rules, phases from ascending-order
/// creation strings. Determinants are over `2M` spin-orbitals (α block
/// first).
pub fn hamiltonian_element<T: Real>(h: &Hamiltonian<T>, d1: &Determinant, d2: &Determinant) -> T {
    let mut particles = [0usize; 2];
    let mut holes = [0usize; 2];
    let (mut np, mut nh) = (0, 0);
    for (k, (&w1, &w2)) in d1.words().iter().zip(d2.words()).enumerate() {
        let mut only1 = w1 & !w2;
        let mut only2 = w2 & !w1;
        while only1 != 0 {
            if np == 2 {
                return T::zero();
            }
            particles[np] = k * 64 + only1.trailing_zeros() as usize;
            np += 1;
            only1 &= only1 - 1;
        }
        while only2 != 0 {
            if nh == 2 {
                return T::zero();
            }
            holes[nh] = k * 64 + only2.trailing_zeros() as usize;
            nh += 1;
            only2 &= only2 - 1;
        }
    }
    if np != nh {
        return T::zero();
    }
    match np {
        0 => {
            let occ: Vec<usize> = d1.occupied().collect();
            h.diagonal_energy(&occ)
        }
        1 => {
            let (m, p) = (particles[0], holes[0]);
            let mut v = h.so_h1(m, p);
            for n in d2.occupied() {
                if n != p {
                    v += h.so_eri(m, p, n, n) - h.so_eri(m, n, n, p);
                }
            }
            if d2.count_between(m, p).is_multiple_of(2) {
                v
            } else {
                -v
            }
        }
        _ => {
            let (m, n, p, q) = (particles[0], particles[1], holes[0], holes[1]);
            let ops = [
                Ladder::Create(m),
                Ladder::Create(n),
                Ladder::Annihilate(q),
                Ladder::Annihilate(p),
            ];
            let (_, sign) = apply_ladders(d2, &ops).expect("excitation connects d2 to d1");
            let v = h.so_eri(m, p, n, q) - h.so_eri(m, q, n, p);
            if sign > 0 {
                v
            } else {
                -v
            }
        }
    }
}

/// Every determinant of an `(N_alpha, N_beta)` sector over `M` spatial
/// orbitals: α strings × β strings, each string list in ascending order.
#[derive(Clone, Debug)]
pub struct CIBasis {
    n_spatial: usize,
    n_alpha: usize,
    n_beta: usize,
    alpha: Vec<u64>,
    beta: Vec<u64>,
    alpha_index: FxHashMap<u64, usize>,
    beta_index: FxHashMap<u64, usize>,
}

impl CIBasis {
    pub fn len(&self) -> usize {
        self.alpha.len() * self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_spatial(&self) -> usize {
        self.n_spatial
    }

    pub fn n_alpha(&self) -> usize {
        self.n_alpha
    }

    pub fn n_beta(&self) -> usize {
        self.n_beta
    }

    /// Determinant number `k`.
    pub fn det(&self, k: usize) -> Determinant {
        let nb = self.beta.len();
        self.compose(self.alpha[k / nb], self.beta[k % nb])
    }

    pub fn determinants(&self) -> impl Iterator<Item = Determinant> + '_ {
        (0..self.len()).map(|k| self.det(k))
    }

    /// Position of the determinant with the given α and β strings.
    pub fn index_of(&self, alpha: u64, beta: u64) -> Option<usize> {
        let a = self.alpha_index.get(&alpha)?;
        let b = self.beta_index.get(&beta)?;
        Some(a * self.beta.len() + b)
    }

    fn compose(&self, alpha: u64, beta: u64) -> Determinant {
        let m = self.n_spatial;
        let mut det = Determinant::vacuum(2 * m);
        for q in bits(alpha) {
            det.set(q);
        }
        for q in bits(beta) {
            det.set(m + q);
        }
        det
    }
}

fn bits(mut w: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        (w != 0).then(|| {
            let b = w.trailing_zeros() as usize;
            w &= w - 1;
            b
        })
    })
}

/// All `k`-subsets of `m` bits in ascending integer order.
fn combinations(m: usize, k: usize) -> Vec<u64> {
    if k == 0 {
        return vec![0];
    }
    let limit = if m == 64 { u64::MAX } else { (1u64 << m) - 1 };
    let mut out = Vec::new();
    let mut x: u64 = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
    loop {
        out.push(x);
        // Gosper's hack
        let c = x & x.wrapping_neg();
        let r = x.wrapping_add(c);
        if r == 0 || r > limit {
            break;
        }
        let next = (((r ^ x) >> 2) / c) | r;
        if next > limit {
            break;
        }
        x = next;
    }
    out
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

pub fn enumerate_basis(n_spatial: usize, n_alpha: usize, n_beta: usize) -> Result<CIBasis> {
    if n_alpha > n_spatial || n_beta > n_spatial {
        return Err(Error::Argument(format!(
            "({n_alpha}, {n_beta}) electrons do not fit in {n_spatial} orbitals per spin"
        )));
    }
    if n_spatial > 64 {
        return Err(Error::Capacity(format!(
            "FCI supports at most 64 spatial orbitals, got {n_spatial}"
        )));
    }
    let size = binomial(n_spatial, n_alpha) * binomial(n_spatial, n_beta);
    if size > MAX_BASIS as u128 {
        return Err(Error::Capacity(format!(
            "sector has {size} determinants, limit is {MAX_BASIS}"
        )));
    }
    let alpha = combinations(n_spatial, n_alpha);
    let beta = combinations(n_spatial, n_beta);
    let index = |v: &[u64]| v.iter().enumerate().map(|(k, &s)| (s, k)).collect();
    Ok(CIBasis {
        n_spatial,
        n_alpha,
        n_beta,
        alpha_index: index(&alpha),
        beta_index: index(&beta),
        alpha,
        beta,
    })
}

/// Single and double excitations of a string, as string values.
fn string_excitations(s: u64, m: usize) -> (Vec<u64>, Vec<u64>) {
    let occ: Vec<usize> = bits(s).collect();
    let vir: Vec<usize> = (0..m).filter(|&q| s >> q & 1 == 0).collect();
    let mut singles = Vec::with_capacity(occ.len() * vir.len());
    for &i in &occ {
        for &a in &vir {
            singles.push(s ^ (1 << i) ^ (1 << a));
        }
    }
    let mut doubles = Vec::new();
    for (x, &i) in occ.iter().enumerate() {
        for &j in &occ[x + 1..] {
            for (y, &a) in vir.iter().enumerate() {
                for &b in &vir[y + 1..] {
                    doubles.push(s ^ (1 << i) ^ (1 << j) ^ (1 << a) ^ (1 << b));
                }
            }
        }
    }
    (singles, doubles)
}

/// Symmetric Hamiltonian matrix in compressed-row form.
#[derive(Clone, Debug)]
pub struct SparseHamiltonian<T> {
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
    diag: Vec<T>,
}

impl<T: Real> SparseHamiltonian<T> {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diagonal(&self) -> &[T] {
        &self.diag
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn matvec(&self, x: &DVector<T>) -> DVector<T> {
        let out: Vec<T> = (0..self.dim())
            .into_par_iter()
            .map(|r| {
                let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
                self.cols[lo..hi]
                    .iter()
                    .zip(&self.vals[lo..hi])
                    .fold(T::zero(), |acc, (&c, &v)| acc + v * x[c])
            })
            .collect();
        DVector::from_vec(out)
    }

    pub fn to_dense(&self) -> DMatrix<T> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for r in 0..n {
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                m[(r, self.cols[k])] = self.vals[k];
            }
        }
        m
    }
}

/// Assembles the sector Hamiltonian; rows are built in parallel.
pub fn build_hamiltonian_matrix<T: Real>(h: &Hamiltonian<T>, basis: &CIBasis) -> Result<SparseHamiltonian<T>> {
    let m = basis.n_spatial;
    if h.n_spatial() != m {
        return Err(Error::Dimension(format!(
            "Hamiltonian has {} orbitals, basis {m}",
            h.n_spatial()
        )));
    }
    let excite = |strings: &[u64]| -> Vec<(Vec<u64>, Vec<u64>)> {
        strings.par_iter().map(|&s| string_excitations(s, m)).collect()
    };
    let a_exc = excite(&basis.alpha);
    let b_exc = excite(&basis.beta);
    let nb = basis.beta.len();

    let rows: Vec<Vec<(usize, T)>> = (0..basis.len())
        .into_par_iter()
        .map(|k| {
            let (ia, ib) = (k / nb, k % nb);
            let (a, b) = (basis.alpha[ia], basis.beta[ib]);
            let (a_s, a_d) = &a_exc[ia];
            let (b_s, b_d) = &b_exc[ib];
            let mut cols = vec![k];
            cols.extend(a_s.iter().chain(a_d).map(|&a2| basis.alpha_index[&a2] * nb + ib));
            cols.extend(b_s.iter().chain(b_d).map(|&b2| ia * nb + basis.beta_index[&b2]));
            for &a2 in a_s {
                let row = basis.alpha_index[&a2] * nb;
                cols.extend(b_s.iter().map(|&b2| row + basis.beta_index[&b2]));
            }
            cols.sort_unstable();
            let dk = basis.compose(a, b);
            cols.into_iter()
                .filter_map(|c| {
                    let v = hamiltonian_element(h, &dk, &basis.det(c));
                    (v != T::zero() || c == k).then_some((c, v))
                })
                .collect()
        })
        .collect();

    let mut row_ptr = Vec::with_capacity(rows.len() + 1);
    row_ptr.push(0);
    let mut cols = Vec::new();
    let mut vals = Vec::new();
    let mut diag = Vec::with_capacity(rows.len());
    for (r, row) in rows.into_iter().enumerate() {
        for (c, v) in row {
            if c == r {
                diag.push(v);
            }
            cols.push(c);
            vals.push(v);
        }
        row_ptr.push(cols.len());
    }
    Ok(SparseHamiltonian {
        row_ptr,
        cols,
        vals,
        diag,
    })
}

#[derive(Clone, Debug)]
pub struct SolverOptions {
    /// Sectors up to this size are diagonalized densely (capped at [`MAX_DENSE`]).
    pub dense_threshold: usize,
    pub max_iter: usize,
    /// Davidson residual-norm convergence threshold.
    pub residual_tol: f64,
    pub max_subspace: usize,
    /// Gap below which the ground state is flagged as degenerate.
    pub degeneracy_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            dense_threshold: 2000,
            max_iter: 200,
            residual_tol: 1e-9,
            max_subspace: 48,
            degeneracy_tol: 1e-8,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolverPath {
    Dense,
    Davidson,
}

#[derive(Clone, Debug)]
pub struct GroundState<T> {
    pub energy: T,
    pub wavefunction: SparseWavefunction<T>,
    /// `E_1 - E_0` when the sector has a second state.
    pub gap: Option<T>,
    /// Set when `gap` is below the degeneracy tolerance.
    pub degenerate: bool,
    pub path: SolverPath,
    pub iterations: usize,
    pub residual: T,
    pub basis_size: usize,
}

/// Lowest eigenpair of `h` in the `(n_alpha, n_beta)` sector.
pub fn ground_state<T: Real>(
    h: &Hamiltonian<T>,
    n_alpha: usize,
    n_beta: usize,
    opts: &SolverOptions,
) -> Result<GroundState<T>> {
    let basis = enumerate_basis(h.n_spatial(), n_alpha, n_beta)?;
    let hm = build_hamiltonian_matrix(h, &basis)?;
    let n = basis.len();
    let dense_limit = opts.dense_threshold.min(MAX_DENSE);

    let (energies, mut vector, path, iterations, residual) = if n <= dense_limit {
        let eig = SymmetricEigen::new(hm.to_dense());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[a]
                .partial_cmp(&eig.eigenvalues[b])
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let energies: Vec<T> = order.iter().take(2).map(|&k| eig.eigenvalues[k]).collect();
        let vector = eig.eigenvectors.column(order[0]).into_owned();
        (energies, vector, SolverPath::Dense, 0, T::zero())
    } else {
        let diag = DVector::from_column_slice(hm.diagonal());
        let out = davidson(|x| hm.matvec(x), &diag, 2, opts)?;
        let vector = out.vectors.into_iter().next().expect("at least one root");
        (out.values, vector, SolverPath::Davidson, out.iterations, out.residual)
    };

    // deterministic global sign: largest-magnitude coefficient positive
    let mut pivot = 0;
    for k in 1..vector.len() {
        if vector[k].abs() > vector[pivot].abs() {
            pivot = k;
        }
    }
    if vector[pivot] < T::zero() {
        vector.neg_mut();
    }
    let norm = vector.norm();
    vector /= norm;

    let terms = (0..n)
        .filter(|&k| vector[k] != T::zero())
        .map(|k| (basis.det(k), vector[k]))
        .collect();
    let wavefunction = SparseWavefunction::new(2 * h.n_spatial(), n_alpha, n_beta, terms)?;
    let gap = energies.get(1).map(|&e1| e1 - energies[0]);
    let degenerate = gap.is_some_and(|g| g < lit(opts.degeneracy_tol));
    Ok(GroundState {
        energy: energies[0],
        wavefunction,
        gap,
        degenerate,
        path,
        iterations,
        residual,
        basis_size: n,
    })
}
