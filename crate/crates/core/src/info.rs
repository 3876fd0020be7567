//! Entropies, quantum and classical mutual information, the measurement
//! channel, and the scalar diagnostics `L1` and `gamma`.
//!
//! All logarithms are natural; entropies are in nats.

use std::cmp::Ordering;

use nalgebra::{DMatrix, Matrix2, Matrix4, SMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::{lit, nan, to_f64, tol, xlnx_neg, Real};
use crate::trace::{
    all_pair_probabilities, one_body_rdm, pair_density_matrix, single_qubit_matrix, OneBodyRDM,
};
use crate::wfncore::SparseWavefunction;

/// Unit label recorded in reports.
pub const ENTROPY_UNIT: &str = "nats";

/// Number of qubits kept for heatmaps.
pub const TOP_QUBITS: usize = 100;

/// Von Neumann entropy `-tr(rho ln rho)` of a small symmetric matrix.
///
/// Eigenvalues in `[-1e-12, 0)` are treated as roundoff and clamped to zero;
/// anything more negative is rejected.
pub fn von_neumann_entropy<T: Real, const D: usize>(dm: &SMatrix<T, D, D>) -> Result<T> {
    let trace = dm.trace();
    if (trace - T::one()).abs() > tol(1e-6) {
        return Err(Error::Normalization(to_f64(trace - T::one())));
    }
    let dynamic = DMatrix::from_iterator(D, D, dm.iter().copied());
    let eigenvalues = SymmetricEigen::new(dynamic).eigenvalues;
    let floor = -tol::<T>(1e-12);
    let mut s = T::zero();
    for &lambda in eigenvalues.iter() {
        if lambda < floor {
            return Err(Error::PsdViolation(to_f64(lambda)));
        }
        s += xlnx_neg(lambda.clamp(T::zero(), T::one()));
    }
    Ok(s)
}

/// Shannon entropy `-sum p ln p` of a probability vector.
pub fn shannon_entropy<T: Real>(p: &[T]) -> Result<T> {
    let sum = p.iter().fold(T::zero(), |a, &x| a + x);
    if (sum - T::one()).abs() > tol(1e-6) {
        return Err(Error::Normalization(to_f64(sum - T::one())));
    }
    let floor = -tol::<T>(1e-12);
    p.iter().try_fold(T::zero(), |acc, &x| {
        if x < floor {
            Err(Error::Argument(format!("negative probability {}", to_f64(x))))
        } else {
            Ok(acc + xlnx_neg(x))
        }
    })
}

/// Orthogonal measurement in the computational basis: keeps the diagonal.
pub fn measurement_channel<T: Real, const D: usize>(dm: &SMatrix<T, D, D>) -> SMatrix<T, D, D> {
    SMatrix::from_diagonal(&dm.diagonal())
}

/// Measures only one qubit of a pair matrix (`first = true` for qubit `i`).
pub fn dephase_qubit<T: Real>(dm: &Matrix4<T>, first: bool) -> Matrix4<T> {
    let bit = if first { 2 } else { 1 };
    Matrix4::from_fn(|a, b| {
        if (a & bit) == (b & bit) {
            dm[(a, b)]
        } else {
            T::zero()
        }
    })
}

/// Quantum mutual information `S(i) + S(j) - S(ij)` computed from a pair
/// matrix and its two partial traces.
pub fn quantum_mutual_information<T: Real>(dm: &Matrix4<T>) -> Result<T> {
    let (a, b) = partial_traces(dm);
    Ok(von_neumann_entropy(&a)? + von_neumann_entropy(&b)? - von_neumann_entropy(dm)?)
}

/// Classical mutual information of a joint distribution over `(b_i, b_j)`
/// given as `[p00, p01, p10, p11]`.
pub fn classical_mutual_information<T: Real>(joint: &[T; 4]) -> Result<T> {
    let pi = [joint[0] + joint[1], joint[2] + joint[3]];
    let pj = [joint[0] + joint[2], joint[1] + joint[3]];
    Ok(shannon_entropy(&pi)? + shannon_entropy(&pj)? - shannon_entropy(joint)?)
}

fn partial_traces<T: Real>(dm: &Matrix4<T>) -> (Matrix2<T>, Matrix2<T>) {
    let a = Matrix2::from_fn(|x, y| dm[(2 * x, 2 * y)] + dm[(2 * x + 1, 2 * y + 1)]);
    let b = Matrix2::from_fn(|x, y| dm[(x, y)] + dm[(x + 2, y + 2)]);
    (a, b)
}

/// Quantum and classical mutual information of qubits `i` and `j`.
pub fn mutual_information_pair<T: Real>(
    wfn: &SparseWavefunction<T>,
    i: usize,
    j: usize,
) -> Result<(T, T)> {
    let pair = pair_density_matrix(wfn, i, j)?;
    let quantum = quantum_mutual_information(&pair.m)?;
    let classical = classical_mutual_information(&pair.probabilities())?;
    Ok((quantum, classical))
}

/// Symmetric quantum and classical mutual-information matrices. Diagonal
/// entries are undefined and hold NaN.
#[derive(Clone, Debug, PartialEq)]
pub struct MutualInformationMatrix<T> {
    pub n: usize,
    pub quantum: DMatrix<T>,
    pub classical: DMatrix<T>,
}

impl<T: Real> MutualInformationMatrix<T> {
    /// `(quantum, classical)` for `i != j`, `None` on the diagonal.
    pub fn get(&self, i: usize, j: usize) -> Option<(T, T)> {
        (i != j).then(|| (self.quantum[(i, j)], self.classical[(i, j)]))
    }

    /// Upper-triangle pairs `(i, j, quantum, classical)` in row-major order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, T, T)> + '_ {
        (0..self.n).flat_map(move |i| {
            (i + 1..self.n).map(move |j| (i, j, self.quantum[(i, j)], self.classical[(i, j)]))
        })
    }
}

struct Analysis<T> {
    mi: MutualInformationMatrix<T>,
    entropies_vn: Vec<T>,
    entropies_sh: Vec<T>,
}

fn analyze<T: Real>(wfn: &SparseWavefunction<T>) -> Result<Analysis<T>> {
    let n = wfn.n_qubits();
    let singles: Vec<Matrix2<T>> = (0..n)
        .into_par_iter()
        .map(|i| single_qubit_matrix(wfn, i))
        .collect::<Result<_>>()?;
    let entropies_vn: Vec<T> = singles
        .iter()
        .map(von_neumann_entropy)
        .collect::<Result<_>>()?;
    let probs = all_pair_probabilities(wfn);
    let entropies_sh: Vec<T> = (0..n)
        .map(|i| {
            let p1 = probs.marginal(i);
            shannon_entropy(&[T::one() - p1, p1])
        })
        .collect::<Result<_>>()?;

    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let values: Vec<(T, T)> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let pair = pair_density_matrix(wfn, i, j)?;
            let s_ij = von_neumann_entropy(&pair.m)?;
            let quantum = entropies_vn[i] + entropies_vn[j] - s_ij;
            let classical = classical_mutual_information(&probs.get(i, j))?;
            Ok((quantum, classical))
        })
        .collect::<Result<_>>()?;

    let mut quantum = DMatrix::from_element(n, n, nan::<T>());
    let mut classical = DMatrix::from_element(n, n, nan::<T>());
    for (&(i, j), &(q, c)) in pairs.iter().zip(&values) {
        quantum[(i, j)] = q;
        quantum[(j, i)] = q;
        classical[(i, j)] = c;
        classical[(j, i)] = c;
    }
    Ok(Analysis {
        mi: MutualInformationMatrix {
            n,
            quantum,
            classical,
        },
        entropies_vn,
        entropies_sh,
    })
}

/// Quantum and classical mutual information for all qubit pairs.
///
/// Pairs are evaluated in parallel; the classical matrix comes from the
/// single-sweep pair distribution table.
pub fn mutual_information_matrix<T: Real>(
    wfn: &SparseWavefunction<T>,
) -> Result<MutualInformationMatrix<T>> {
    Ok(analyze(wfn)?.mi)
}

/// Percentage excess of total quantum over total classical pair mutual
/// information.
pub fn l1_metric<T: Real>(mi: &MutualInformationMatrix<T>) -> Result<T> {
    let (mut q, mut c) = (T::zero(), T::zero());
    for (_, _, iq, ic) in mi.pairs() {
        q += iq;
        c += ic;
    }
    if q <= tol(1e-14) {
        return Err(Error::UndefinedMetric(
            "total quantum mutual information is zero".into(),
        ));
    }
    Ok(lit::<T>(100.0) * (q - c) / q)
}

/// Electron-normalized sum of absolute off-diagonal RDM elements.
pub fn gamma_metric<T: Real>(rdm: &OneBodyRDM<T>, n_electrons: usize) -> Result<T> {
    if n_electrons == 0 {
        return Err(Error::Consistency("gamma needs at least one electron".into()));
    }
    let ne = lit::<T>(n_electrons as f64);
    let trace = rdm.trace();
    if (trace - ne).abs() > tol(1e-6) {
        return Err(Error::Consistency(format!(
            "RDM trace {} does not match {n_electrons} electrons",
            to_f64(trace)
        )));
    }
    let n = rdm.dim();
    let mut off = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                off += rdm.m[(i, j)].abs();
            }
        }
    }
    Ok(off / ne)
}

/// Everything needed to draw the mutual-information heatmaps and sorted
/// curves, plus the scalar diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationReport<T> {
    pub mi: MutualInformationMatrix<T>,
    pub entropies_vn: Vec<T>,
    pub entropies_sh: Vec<T>,
    /// `None` when the state carries no quantum mutual information.
    pub l1_percent: Option<T>,
    /// `None` for particle-number-violating or empty-occupation states.
    pub gamma: Option<T>,
    pub sorted_mi_quantum: Vec<T>,
    pub sorted_mi_classical: Vec<T>,
    /// `sort(I_Sh) - sort(I_vN)` element by element.
    pub sorted_mi_difference: Vec<T>,
    pub sorted_entropy: Vec<T>,
    pub sorted_entropy_sh: Vec<T>,
    pub sorted_entropy_difference: Vec<T>,
    /// Qubits of largest von Neumann entropy, at most [`TOP_QUBITS`].
    pub top_entropy_qubits: Vec<usize>,
    pub unit: &'static str,
    pub warnings: Vec<String>,
}

fn sorted_desc<T: Real>(values: impl Iterator<Item = T>) -> Vec<T> {
    let mut v: Vec<T> = values.collect();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    v
}

pub fn build_report<T: Real>(wfn: &SparseWavefunction<T>) -> Result<CorrelationReport<T>> {
    if !wfn.is_normalized() {
        return Err(Error::Argument(format!(
            "wavefunction must be normalized (squared norm {})",
            to_f64(wfn.norm_sqr())
        )));
    }
    let mut warnings = Vec::new();
    let Analysis {
        mi,
        entropies_vn,
        entropies_sh,
    } = analyze(wfn)?;

    let l1_percent = match l1_metric(&mi) {
        Ok(v) => Some(v),
        Err(Error::UndefinedMetric(msg)) => {
            warnings.push(format!("L1 undefined: {msg}"));
            None
        }
        Err(e) => return Err(e),
    };
    let gamma = match wfn.particle_number() {
        Some(ne) if ne > 0 => Some(gamma_metric(&one_body_rdm(wfn)?, ne)?),
        _ => {
            warnings.push("gamma undefined: state has no fixed nonzero electron count".into());
            None
        }
    };

    let sorted_mi_quantum = sorted_desc(mi.pairs().map(|p| p.2));
    let sorted_mi_classical = sorted_desc(mi.pairs().map(|p| p.3));
    let sorted_mi_difference = sorted_mi_classical
        .iter()
        .zip(&sorted_mi_quantum)
        .map(|(&c, &q)| c - q)
        .collect();
    let sorted_entropy = sorted_desc(entropies_vn.iter().copied());
    let sorted_entropy_sh = sorted_desc(entropies_sh.iter().copied());
    let sorted_entropy_difference = sorted_entropy_sh
        .iter()
        .zip(&sorted_entropy)
        .map(|(&c, &q)| c - q)
        .collect();

    let mut order: Vec<usize> = (0..wfn.n_qubits()).collect();
    order.sort_by(|&a, &b| {
        entropies_vn[b]
            .partial_cmp(&entropies_vn[a])
            .unwrap_or(Ordering::Equal)
            .then(a.cmp(&b))
    });
    order.truncate(TOP_QUBITS);

    Ok(CorrelationReport {
        mi,
        entropies_vn,
        entropies_sh,
        l1_percent,
        gamma,
        sorted_mi_quantum,
        sorted_mi_classical,
        sorted_mi_difference,
        sorted_entropy,
        sorted_entropy_sh,
        sorted_entropy_difference,
        top_entropy_qubits: order,
        unit: ENTROPY_UNIT,
        warnings,
    })
}
