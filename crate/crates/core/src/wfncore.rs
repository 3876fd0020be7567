//! Determinant bitstrings and sparse configuration-interaction wavefunctions.
//!
//! Qubit `q` of a [`Determinant`] is the occupancy of spin-orbital `q`. For a
//! wavefunction over `N = 2M` qubits the first `M` qubits are the α
//! spin-orbitals and the last `M` the β spin-orbitals. A determinant stands
//! for the product of creation operators in ascending qubit order acting on
//! the vacuum, so stored amplitudes coincide with qubit-basis amplitudes
//! under the Jordan–Wigner identification.

use std::cmp::Ordering;
use std::fmt::{self, Write as _};
use std::io::Write;
use std::str::FromStr;

use rustc_hash::FxHashMap;
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::scalar::{lit, tol, Real};

/// Largest supported number of qubits.
pub const MAX_QUBITS: usize = 1024;

const WORD: usize = 64;

#[inline]
fn words_for(n_qubits: usize) -> usize {
    n_qubits.div_ceil(WORD).max(1)
}

/// Occupation bitstring of a Slater determinant.
///
/// Ordering (`Ord`) compares the bitstrings as unsigned integers with qubit 0
/// the least significant bit.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Determinant {
    words: SmallVec<[u64; 2]>,
}

impl Determinant {
    /// Empty determinant (vacuum) wide enough for `n_qubits`.
    pub fn vacuum(n_qubits: usize) -> Self {
        Self {
            words: SmallVec::from_elem(0, words_for(n_qubits)),
        }
    }

    pub fn from_occupied<I: IntoIterator<Item = usize>>(n_qubits: usize, occupied: I) -> Self {
        let mut det = Self::vacuum(n_qubits);
        for q in occupied {
            det.set(q);
        }
        det
    }

    /// Builds a determinant from the low bits of `bits` (qubit 0 = bit 0).
    pub fn from_u64(n_qubits: usize, bits: u64) -> Self {
        let mut det = Self::vacuum(n_qubits);
        det.words[0] = bits;
        det
    }

    /// Parses a `'0'`/`'1'` string with qubit 0 leftmost.
    pub fn from_bitstring(s: &str) -> Option<Self> {
        let mut det = Self::vacuum(s.len());
        for (q, ch) in s.bytes().enumerate() {
            match ch {
                b'0' => {}
                b'1' => det.set(q),
                _ => return None,
            }
        }
        Some(det)
    }

    pub fn to_bitstring(&self, n_qubits: usize) -> String {
        (0..n_qubits)
            .map(|q| if self.get(q) { '1' } else { '0' })
            .collect()
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, q: usize) -> bool {
        self.words
            .get(q / WORD)
            .is_some_and(|w| (w >> (q % WORD)) & 1 == 1)
    }

    #[inline]
    pub fn set(&mut self, q: usize) {
        self.words[q / WORD] |= 1 << (q % WORD);
    }

    #[inline]
    pub fn clear(&mut self, q: usize) {
        self.words[q / WORD] &= !(1 << (q % WORD));
    }

    #[inline]
    pub fn flip(&mut self, q: usize) {
        self.words[q / WORD] ^= 1 << (q % WORD);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    /// Number of occupied qubits in `lo..hi`.
    pub fn count_ones_in(&self, lo: usize, hi: usize) -> usize {
        if hi <= lo {
            return 0;
        }
        self.count_ones_below(hi) - self.count_ones_below(lo)
    }

    /// Number of occupied qubits with index `< q`.
    pub fn count_ones_below(&self, q: usize) -> usize {
        let full = (q / WORD).min(self.words.len());
        let mut n: usize = self.words[..full]
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum();
        let rem = q % WORD;
        if rem > 0 && full < self.words.len() {
            n += (self.words[full] & ((1u64 << rem) - 1)).count_ones() as usize;
        }
        n
    }

    /// Number of occupied qubits strictly between `a` and `b` (either order).
    #[inline]
    pub fn count_between(&self, a: usize, b: usize) -> usize {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        self.count_ones_in(lo + 1, hi)
    }

    /// Occupied qubit indices in ascending order.
    pub fn occupied(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(k * WORD + b)
                }
            })
        })
    }

    /// Local two-qubit basis index `2·b_i + b_j`.
    #[inline]
    pub fn local_pair(&self, i: usize, j: usize) -> usize {
        (usize::from(self.get(i)) << 1) | usize::from(self.get(j))
    }

    /// Applies `a_q` in place. Returns the Jordan–Wigner sign, or `None` if
    /// the mode was empty.
    pub fn annihilate(&mut self, q: usize) -> Option<i8> {
        if !self.get(q) {
            return None;
        }
        let sign = parity_sign(self.count_ones_below(q));
        self.clear(q);
        Some(sign)
    }

    /// Applies `a_q†` in place. Returns the Jordan–Wigner sign, or `None` if
    /// the mode was occupied.
    pub fn create(&mut self, q: usize) -> Option<i8> {
        if self.get(q) {
            return None;
        }
        let sign = parity_sign(self.count_ones_below(q));
        self.set(q);
        Some(sign)
    }

    /// True when no bit at index `>= n_qubits` is set.
    fn fits(&self, n_qubits: usize) -> bool {
        if self.words.len() != words_for(n_qubits) {
            return false;
        }
        let rem = n_qubits % WORD;
        rem == 0 || self.words[self.words.len() - 1] >> rem == 0
    }
}

#[inline]
fn parity_sign(n: usize) -> i8 {
    if n.is_multiple_of(2) {
        1
    } else {
        -1
    }
}

impl Ord for Determinant {
    fn cmp(&self, other: &Self) -> Ordering {
        self.words
            .len()
            .cmp(&other.words.len())
            .then_with(|| self.words.iter().rev().cmp(other.words.iter().rev()))
    }
}

impl PartialOrd for Determinant {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Determinant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.words.len() * WORD;
        let last = (0..n).rev().find(|&q| self.get(q)).map_or(1, |q| q + 1);
        write!(f, "|{}>", self.to_bitstring(last))
    }
}

/// One ladder operator in an operator string.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ladder {
    Create(usize),
    Annihilate(usize),
}

/// Applies an operator product to `det`, rightmost operator first.
///
/// Returns the resulting determinant and its sign, or `None` when the product
/// annihilates `det`.
pub fn apply_ladders(det: &Determinant, ops: &[Ladder]) -> Option<(Determinant, i8)> {
    let mut out = det.clone();
    let mut sign = 1i8;
    for op in ops.iter().rev() {
        let s = match *op {
            Ladder::Create(q) => out.create(q)?,
            Ladder::Annihilate(q) => out.annihilate(q)?,
        };
        sign *= s;
    }
    Some((out, sign))
}

/// Real-amplitude wavefunction stored as a sparse list of determinants.
#[derive(Clone, Debug)]
pub struct SparseWavefunction<T> {
    n_qubits: usize,
    n_alpha: usize,
    n_beta: usize,
    terms: Vec<(Determinant, T)>,
    index: FxHashMap<Determinant, usize>,
}

impl<T: Real> PartialEq for SparseWavefunction<T> {
    fn eq(&self, other: &Self) -> bool {
        self.n_qubits == other.n_qubits
            && self.n_alpha == other.n_alpha
            && self.n_beta == other.n_beta
            && self.terms == other.terms
    }
}

impl<T: Real> SparseWavefunction<T> {
    /// Validates and builds a wavefunction. Terms keep the given order.
    pub fn new(
        n_qubits: usize,
        n_alpha: usize,
        n_beta: usize,
        terms: Vec<(Determinant, T)>,
    ) -> Result<Self> {
        check_header(n_qubits, n_alpha, n_beta)?;
        let mut index = FxHashMap::with_capacity_and_hasher(terms.len(), Default::default());
        for (k, (det, amp)) in terms.iter().enumerate() {
            if !det.fits(n_qubits) {
                return Err(Error::Dimension(format!(
                    "determinant {det:?} does not fit in {n_qubits} qubits"
                )));
            }
            if !amp.is_finite() {
                return Err(Error::Argument(format!("non-finite amplitude for {det:?}")));
            }
            if let Some(first) = index.insert(det.clone(), k) {
                return Err(Error::Duplicate {
                    line: k + 1,
                    first: first + 1,
                });
            }
        }
        Ok(Self {
            n_qubits,
            n_alpha,
            n_beta,
            terms,
            index,
        })
    }

    /// Builds from bitstrings (qubit 0 leftmost); convenient in tests.
    pub fn from_bitstrings(
        n_alpha: usize,
        n_beta: usize,
        terms: &[(&str, f64)],
    ) -> Result<Self> {
        let n = terms.first().map_or(0, |(s, _)| s.len());
        let terms = terms
            .iter()
            .map(|&(s, c)| {
                if s.len() != n {
                    return Err(Error::Dimension(format!(
                        "bitstring {s:?} has length {}, expected {n}",
                        s.len()
                    )));
                }
                let det = Determinant::from_bitstring(s)
                    .ok_or_else(|| Error::Argument(format!("invalid bitstring {s:?}")))?;
                Ok((det, lit::<T>(c)))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, n_alpha, n_beta, terms)
    }

    #[inline]
    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    #[inline]
    pub fn n_alpha(&self) -> usize {
        self.n_alpha
    }

    #[inline]
    pub fn n_beta(&self) -> usize {
        self.n_beta
    }

    /// Number of spatial orbitals `M` when `N = 2M`.
    pub fn n_spatial(&self) -> Option<usize> {
        self.n_qubits.is_multiple_of(2).then_some(self.n_qubits / 2)
    }

    #[inline]
    pub fn terms(&self) -> &[(Determinant, T)] {
        &self.terms
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Amplitude of `det`, zero if absent.
    #[inline]
    pub fn amplitude(&self, det: &Determinant) -> T {
        self.index
            .get(det)
            .map_or_else(T::zero, |&k| self.terms[k].1)
    }

    pub fn contains(&self, det: &Determinant) -> bool {
        self.index.contains_key(det)
    }

    pub fn norm_sqr(&self) -> T {
        self.terms
            .iter()
            .fold(T::zero(), |acc, &(_, c)| acc + c * c)
    }

    /// Common electron count of all determinants, if there is one.
    pub fn particle_number(&self) -> Option<usize> {
        let mut it = self.terms.iter().map(|(d, _)| d.count_ones());
        let first = it.next()?;
        it.all(|n| n == first).then_some(first)
    }

    /// True when every determinant has `n_alpha` α and `n_beta` β electrons.
    pub fn is_sz_conserving(&self) -> bool {
        let Some(m) = self.n_spatial() else {
            return false;
        };
        self.terms.iter().all(|(d, _)| {
            d.count_ones_in(0, m) == self.n_alpha && d.count_ones_in(m, 2 * m) == self.n_beta
        })
    }

    /// Electron count, or a model error for particle-number-violating states.
    pub fn require_particle_conserving(&self) -> Result<usize> {
        self.particle_number().ok_or_else(|| {
            Error::Model("wavefunction does not conserve particle number".into())
        })
    }

    /// Spatial orbital count, or a model error unless the state conserves
    /// `(N_alpha, N_beta)`.
    pub fn require_sz_conserving(&self) -> Result<usize> {
        match self.n_spatial() {
            Some(m) if self.is_sz_conserving() => Ok(m),
            _ => Err(Error::Model(format!(
                "wavefunction is not an (N_alpha={}, N_beta={}) eigenstate over {} qubits",
                self.n_alpha, self.n_beta, self.n_qubits
            ))),
        }
    }

    /// True when the squared norm is 1 within `1e-10`.
    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - T::one()).abs() <= tol(1e-10)
    }

    pub fn normalize(&self) -> Result<Self> {
        let norm = self.norm_sqr();
        if self.is_empty() || norm <= T::zero() {
            return Err(Error::DegenerateState);
        }
        let scale = T::one() / norm.sqrt();
        Ok(self.with_terms(
            self.terms
                .iter()
                .map(|(d, c)| (d.clone(), *c * scale))
                .collect(),
        ))
    }

    /// Keeps the `chi` terms of largest `|c|` (ties: smaller bitstring first),
    /// preserving their original relative order.
    pub fn truncate_top_chi(&self, chi: usize, renormalize: bool) -> Result<Self> {
        if chi == 0 {
            return Err(Error::Argument("chi must be at least 1".into()));
        }
        let kept = if chi >= self.len() {
            self.clone()
        } else {
            let mut order: Vec<usize> = (0..self.len()).collect();
            order.sort_unstable_by(|&a, &b| {
                let (da, ca) = &self.terms[a];
                let (db, cb) = &self.terms[b];
                cb.abs()
                    .partial_cmp(&ca.abs())
                    .unwrap_or(Ordering::Equal)
                    .then_with(|| da.cmp(db))
            });
            order.truncate(chi);
            order.sort_unstable();
            self.with_terms(order.into_iter().map(|k| self.terms[k].clone()).collect())
        };
        if renormalize {
            kept.normalize()
        } else {
            Ok(kept)
        }
    }

    /// Re-expresses the state in a new Jordan–Wigner ordering in which qubit
    /// `p` holds old mode `order[p]`. Amplitudes pick up the sign of the
    /// permutation restricted to the occupied modes.
    pub fn permute_modes(&self, order: &[usize]) -> Result<Self> {
        let n = self.n_qubits;
        let mut seen = vec![false; n];
        if order.len() != n || order.iter().any(|&q| q >= n || std::mem::replace(&mut seen[q], true)) {
            return Err(Error::Argument(format!(
                "mode order must be a permutation of 0..{n}"
            )));
        }
        let mut new_pos = vec![0usize; n];
        for (p, &q) in order.iter().enumerate() {
            new_pos[q] = p;
        }
        let terms = self
            .terms
            .iter()
            .map(|(d, c)| {
                let targets: Vec<usize> = d.occupied().map(|q| new_pos[q]).collect();
                let mut inversions = 0usize;
                for a in 0..targets.len() {
                    for b in a + 1..targets.len() {
                        if targets[a] > targets[b] {
                            inversions += 1;
                        }
                    }
                }
                let det = Determinant::from_occupied(n, targets);
                let c = if inversions.is_multiple_of(2) { *c } else { -*c };
                (det, c)
            })
            .collect();
        Self::new(n, self.n_alpha, self.n_beta, terms)
    }

    /// Same wavefunction with terms sorted by determinant.
    pub fn canonical(&self) -> Self {
        let mut terms = self.terms.clone();
        terms.sort_by(|a, b| a.0.cmp(&b.0));
        self.with_terms(terms)
    }

    fn with_terms(&self, terms: Vec<(Determinant, T)>) -> Self {
        Self::new(self.n_qubits, self.n_alpha, self.n_beta, terms)
            .expect("terms derived from a valid wavefunction")
    }

    /// Serializes to the line-oriented text format.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(self.len() * (self.n_qubits + 24) + 16);
        let _ = writeln!(out, "{} {} {}", self.n_qubits, self.n_alpha, self.n_beta);
        for (d, c) in &self.terms {
            let _ = writeln!(out, "{} {}", d.to_bitstring(self.n_qubits), c);
        }
        out
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_text().as_bytes())?;
        Ok(())
    }
}

impl<T: Real + FromStr> SparseWavefunction<T> {
    /// Parses the line-oriented text format.
    ///
    /// ```text
    /// # comment
    /// 4 1 1
    /// 1010 0.9
    /// 0101 -0.43588989435406733
    /// ```
    pub fn parse(text: &str) -> Result<Self> {
        let mut header: Option<(usize, usize, usize)> = None;
        let mut terms = Vec::new();
        let mut lines_of: FxHashMap<Determinant, usize> = FxHashMap::default();
        for (k, raw) in text.lines().enumerate() {
            let line_no = k + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let Some((n, _, _)) = header else {
                header = Some(parse_header(&fields, line_no)?);
                continue;
            };
            let [bits, amp] = fields[..] else {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("expected `<bitstring> <amplitude>`, got {line:?}"),
                });
            };
            if !bits.bytes().all(|b| b == b'0' || b == b'1') {
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("bitstring {bits:?} contains characters other than 0/1"),
                });
            }
            if bits.len() != n {
                return Err(Error::Dimension(format!(
                    "line {line_no}: bitstring has {} qubits, header declares {n}",
                    bits.len()
                )));
            }
            let amp: T = amp
                .parse()
                .ok()
                .filter(|a: &T| a.is_finite())
                .ok_or_else(|| Error::Parse {
                    line: line_no,
                    msg: format!("invalid amplitude {amp:?}"),
                })?;
            let det = Determinant::from_bitstring(bits).expect("validated above");
            if let Some(&first) = lines_of.get(&det) {
                return Err(Error::Duplicate {
                    line: line_no,
                    first,
                });
            }
            lines_of.insert(det.clone(), line_no);
            terms.push((det, amp));
        }
        let (n, na, nb) = header.ok_or_else(|| Error::Parse {
            line: 1,
            msg: "missing header `N N_alpha N_beta`".into(),
        })?;
        Self::new(n, na, nb, terms)
    }
}

fn parse_header(fields: &[&str], line: usize) -> Result<(usize, usize, usize)> {
    let bad = || Error::Parse {
        line,
        msg: format!("expected header `N N_alpha N_beta`, got {:?}", fields.join(" ")),
    };
    let [n, na, nb] = fields else {
        return Err(bad());
    };
    let parse = |s: &str| s.parse::<usize>().map_err(|_| bad());
    let (n, na, nb) = (parse(n)?, parse(na)?, parse(nb)?);
    check_header(n, na, nb)?;
    Ok((n, na, nb))
}

fn check_header(n: usize, na: usize, nb: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::Dimension(format!(
            "qubit count {n} outside 1..={MAX_QUBITS}"
        )));
    }
    if na + nb > n {
        return Err(Error::Dimension(format!(
            "{na} alpha + {nb} beta electrons exceed {n} spin-orbitals"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    type Wfn = SparseWavefunction<f64>;

    fn det(s: &str) -> Determinant {
        Determinant::from_bitstring(s).unwrap()
    }

    #[test]
    fn bit_ops_and_ordering() {
        let d = det("1011");
        assert!(d.get(0) && !d.get(1) && d.get(2) && d.get(3));
        assert_eq!(d.count_ones(), 3);
        assert_eq!(d.count_between(0, 3), 1);
        assert_eq!(d.occupied().collect::<Vec<_>>(), vec![0, 2, 3]);
        // qubit 0 is the least significant bit
        assert!(det("10") < det("01"));
        assert!(det("11") > det("01"));
        assert_eq!(d.local_pair(0, 1), 2);
        assert_eq!(d.local_pair(1, 2), 1);
    }

    #[test]
    fn multiword_determinants() {
        let d = Determinant::from_occupied(200, [0, 63, 64, 130, 199]);
        assert_eq!(d.words().len(), 4);
        assert_eq!(d.count_ones(), 5);
        assert_eq!(d.count_ones_below(64), 2);
        assert_eq!(d.count_between(0, 199), 3);
        assert_eq!(d.occupied().collect::<Vec<_>>(), vec![0, 63, 64, 130, 199]);
        let back = Determinant::from_bitstring(&d.to_bitstring(200)).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn ladder_signs_follow_ascending_creation_order() {
        // two occupied modes below qubit 2: even string
        let mut d = det("1100");
        assert_eq!(d.create(2), Some(1));
        assert_eq!(d.annihilate(1), Some(-1));
        assert_eq!(d.create(0), None);
        let (out, s) = apply_ladders(&det("1010"), &[Ladder::Create(1), Ladder::Annihilate(2)]).unwrap();
        assert_eq!(out, det("1100"));
        assert_eq!(s, 1);
    }

    #[test]
    fn parse_single_determinant() {
        let w = Wfn::parse("2 1 0\n10 1.0\n").unwrap();
        assert_eq!(w.n_qubits(), 2);
        assert_eq!(w.len(), 1);
        assert_eq!(w.terms()[0], (det("10"), 1.0));
    }

    #[test]
    fn parse_bell_like_keeps_file_order() {
        let w = Wfn::parse("# bell\n2 1 0\n10 0.7071067811865476\n01 0.7071067811865476\n").unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!(w.terms()[0].0, det("10"));
        assert_eq!(w.terms()[1].0, det("01"));
        assert!(w.is_normalized());
    }

    #[test]
    fn parse_errors() {
        match Wfn::parse("2 1 0\n1x 0.5\n") {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("expected parse error at line 2, got {other:?}"),
        }
        assert!(matches!(Wfn::parse("2 1 0\n101 0.5\n"), Err(Error::Dimension(_))));
        assert!(matches!(
            Wfn::parse("2 1 0\n10 0.5\n10 0.5\n"),
            Err(Error::Duplicate { line: 3, first: 2 })
        ));
        assert!(matches!(Wfn::parse("2 1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(Wfn::parse("2 1 0\n10 nan\n"), Err(Error::Parse { .. })));
        assert!(matches!(Wfn::parse(""), Err(Error::Parse { .. })));
    }

    #[test]
    fn normalize_examples() {
        let w = Wfn::from_bitstrings(1, 0, &[("10", 2.0)]).unwrap().normalize().unwrap();
        assert_eq!(w.terms()[0].1, 1.0);

        let w = Wfn::from_bitstrings(1, 0, &[("10", 0.9), ("01", 0.3)]).unwrap();
        let n = w.normalize().unwrap();
        assert!((n.amplitude(&det("10")) - 0.9 / 0.9f64.sqrt()).abs() < 1e-15);
        assert!((n.amplitude(&det("01")) - 0.3 / 0.9f64.sqrt()).abs() < 1e-15);

        let empty = Wfn::new(2, 1, 0, vec![]).unwrap();
        assert!(matches!(empty.normalize(), Err(Error::DegenerateState)));
        let zero = Wfn::from_bitstrings(1, 0, &[("10", 0.0)]).unwrap();
        assert!(matches!(zero.normalize(), Err(Error::DegenerateState)));
    }

    #[test]
    fn truncation_examples() {
        let w = Wfn::from_bitstrings(
            1,
            1,
            &[("1001", 0.9), ("0110", 0.3), ("1010", 0.3), ("0101", 0.1)],
        )
        .unwrap();
        let t = w.truncate_top_chi(2, true).unwrap();
        assert_eq!(t.len(), 2);
        // |1010> (value 5) sorts before |0110> (value 6)
        assert!(t.contains(&det("1010")));
        let s = (0.9f64 * 0.9 + 0.3 * 0.3).sqrt();
        assert!((t.amplitude(&det("1001")) - 0.9 / s).abs() < 1e-15);
        assert!((t.amplitude(&det("1010")) - 0.9486832980505138 / 3.0).abs() < 1e-12);

        let same = w.truncate_top_chi(10, false).unwrap();
        assert_eq!(same, w);

        let bell = Wfn::from_bitstrings(1, 0, &[("10", 0.5f64.sqrt()), ("01", 0.5f64.sqrt())]).unwrap();
        let one = bell.truncate_top_chi(1, true).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one.terms()[0], (det("10"), 1.0));

        assert!(matches!(w.truncate_top_chi(0, true), Err(Error::Argument(_))));
    }

    #[test]
    fn permute_modes_tracks_fermionic_sign() {
        // |q0 q1> -> swap -> a_1† a_0† = -a_0† a_1†
        let w = Wfn::from_bitstrings(1, 1, &[("11", 1.0)]).unwrap();
        let p = w.permute_modes(&[1, 0]).unwrap();
        assert_eq!(p.terms()[0], (det("11"), -1.0));
        let w = Wfn::from_bitstrings(1, 0, &[("10", 1.0)]).unwrap();
        let p = w.permute_modes(&[1, 0]).unwrap();
        assert_eq!(p.terms()[0], (det("01"), 1.0));
        assert!(w.permute_modes(&[0, 0]).is_err());
    }

    #[test]
    fn conservation_checks() {
        let w = Wfn::from_bitstrings(1, 1, &[("1001", 0.6), ("0110", 0.8)]).unwrap();
        assert!(w.is_sz_conserving());
        assert_eq!(w.require_particle_conserving().unwrap(), 2);
        let w = Wfn::from_bitstrings(1, 1, &[("1001", 0.6), ("0100", 0.8)]).unwrap();
        assert!(!w.is_sz_conserving());
        assert!(matches!(w.require_particle_conserving(), Err(Error::Model(_))));
    }

    fn arb_wavefunction() -> impl Strategy<Value = Wfn> {
        (1usize..=10).prop_flat_map(|n| {
            prop::collection::btree_map(0u64..(1u64 << n), -1.0f64..1.0, 1..40).prop_map(move |m| {
                let terms = m
                    .into_iter()
                    .map(|(bits, c)| (Determinant::from_u64(n, bits), c))
                    .collect();
                Wfn::new(n, 0, 0, terms).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn text_round_trip(w in arb_wavefunction()) {
            let back = Wfn::parse(&w.to_text()).unwrap();
            prop_assert_eq!(back, w);
        }

        #[test]
        fn truncation_is_idempotent_and_keeps_max(w in arb_wavefunction(), chi in 1usize..50) {
            prop_assume!(w.norm_sqr() > 1e-12);
            let w = w.normalize().unwrap();
            let once = w.truncate_top_chi(chi, true).unwrap();
            let twice = once.truncate_top_chi(chi, true).unwrap();
            prop_assert_eq!(once.len(), twice.len());
            for ((d1, c1), (d2, c2)) in once.terms().iter().zip(twice.terms()) {
                prop_assert_eq!(d1, d2);
                prop_assert!((c1 - c2).abs() < 1e-12);
            }
            prop_assert!((once.norm_sqr() - 1.0).abs() < 1e-12);
            let max_before = w.terms().iter().map(|t| t.1.abs()).fold(0.0, f64::max);
            let max_after = once.terms().iter().map(|t| t.1.abs()).fold(0.0, f64::max);
            prop_assert!(max_after >= max_before * (1.0 - 1e-15));
        }
    }
}
