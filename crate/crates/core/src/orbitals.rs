//! FCIDUMP ingestion, orbital rotations of integrals, natural orbitals and
//! the iterative natural-orbital loop.

use std::fmt::Write as _;

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fci::{ground_state, Hamiltonian, IntegralMeta, SolverOptions};
use crate::info::{gamma_metric, l1_metric, mutual_information_matrix};
use crate::scalar::{lit, to_f64, tol, Real};
use crate::trace::{one_body_rdm, OneBodyRDM};
use crate::wfncore::SparseWavefunction;

fn parse_number(tok: &str) -> Option<f64> {
    tok.replace(['D', 'd'], "E").parse().ok()
}

struct Header {
    norb: usize,
    nelec: Option<usize>,
    ms2: Option<i64>,
    orbsym: Option<Vec<i64>>,
    isym: Option<i64>,
}

/// Splits `KEY=v1,v2 KEY2 = v` into `(KEY, [values])`.
fn header_fields(text: &str) -> Vec<(String, Vec<String>)> {
    let mut tokens: Vec<String> = Vec::new();
    for word in text.replace(',', " ").split_whitespace() {
        let mut rest = word;
        while let Some(k) = rest.find('=') {
            if k > 0 {
                tokens.push(rest[..k].to_string());
            }
            tokens.push("=".into());
            rest = &rest[k + 1..];
        }
        if !rest.is_empty() {
            tokens.push(rest.to_string());
        }
    }
    let mut fields: Vec<(String, Vec<String>)> = Vec::new();
    let mut k = 0;
    while k < tokens.len() {
        if k + 1 < tokens.len() && tokens[k + 1] == "=" {
            fields.push((tokens[k].to_ascii_uppercase(), Vec::new()));
            k += 2;
        } else {
            if let Some(last) = fields.last_mut() {
                last.1.push(tokens[k].clone());
            }
            k += 1;
        }
    }
    fields
}

fn parse_header(text: &str) -> Result<Header> {
    let mut h = Header {
        norb: 0,
        nelec: None,
        ms2: None,
        orbsym: None,
        isym: None,
    };
    let mut norb = None;
    let int = |key: &str, vals: &[String]| -> Result<i64> {
        vals.first()
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| Error::Format(format!("header field {key} needs an integer value")))
    };
    for (key, vals) in header_fields(text) {
        match key.as_str() {
            "NORB" => norb = Some(int(&key, &vals)?),
            "NELEC" => h.nelec = Some(int(&key, &vals)?.max(0) as usize),
            "MS2" => h.ms2 = Some(int(&key, &vals)?),
            "ISYM" => h.isym = Some(int(&key, &vals)?),
            "ORBSYM" => {
                let syms = vals
                    .iter()
                    .map(|v| v.parse())
                    .collect::<std::result::Result<Vec<i64>, _>>()
                    .map_err(|_| Error::Format("ORBSYM must be a list of integers".into()))?;
                h.orbsym = Some(syms);
            }
            _ => {}
        }
    }
    match norb {
        Some(n) if n > 0 => h.norb = n as usize,
        _ => return Err(Error::Format("FCIDUMP header lacks a positive NORB".into())),
    }
    Ok(h)
}

/// Reads a FCIDUMP. Unique integrals are expanded to all eight symmetry
/// images; orbital-energy lines (`e i 0 0 0`) are skipped.
pub fn parse_fcidump<T: Real>(text: &str) -> Result<Hamiltonian<T>> {
    let mut lines = text.lines().enumerate();
    let mut header = String::new();
    let mut started = false;
    let mut closed = false;
    for (_, line) in lines.by_ref() {
        let upper = line.trim().to_ascii_uppercase();
        let segment = if started {
            upper.as_str()
        } else if upper.is_empty() {
            continue;
        } else if let Some(rest) = upper.strip_prefix("&FCI") {
            started = true;
            rest
        } else {
            return Err(Error::Format("missing &FCI header".into()));
        };
        if let Some(k) = segment.find("&END") {
            header.push_str(&segment[..k]);
            closed = true;
        } else if let Some(body) = segment.strip_suffix('/') {
            header.push_str(body);
            closed = true;
        } else {
            header.push_str(segment);
            header.push(' ');
        }
        if closed {
            break;
        }
    }
    if !started {
        return Err(Error::Format("missing &FCI header".into()));
    }
    if !closed {
        return Err(Error::Format("unterminated &FCI header".into()));
    }
    let hd = parse_header(&header)?;
    let m = hd.norb;
    let mut ham = Hamiltonian::<T>::zeros(m);

    for (k, line) in lines {
        let lineno = k + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        if fields.len() != 5 {
            return Err(Error::Parse {
                line: lineno,
                msg: format!("expected `value i j k l`, got {} fields", fields.len()),
            });
        }
        let value = parse_number(fields[0]).ok_or_else(|| Error::Parse {
            line: lineno,
            msg: format!("bad number `{}`", fields[0]),
        })?;
        let mut idx = [0usize; 4];
        for (slot, f) in idx.iter_mut().zip(&fields[1..]) {
            *slot = f.parse().map_err(|_| Error::Parse {
                line: lineno,
                msg: format!("bad index `{f}`"),
            })?;
            if *slot > m {
                return Err(Error::Dimension(format!(
                    "line {lineno}: index {slot} exceeds NORB={m}"
                )));
            }
        }
        let v: T = lit(value);
        match idx {
            [0, 0, 0, 0] => ham.e_core = v,
            [i, j, 0, 0] if i > 0 && j > 0 => ham.set_h1(i - 1, j - 1, v),
            [_, 0, 0, 0] => {}
            [i, j, k, l] if i > 0 && j > 0 && k > 0 && l > 0 => {
                ham.set_eri(i - 1, j - 1, k - 1, l - 1, v)
            }
            _ => {
                return Err(Error::Parse {
                    line: lineno,
                    msg: format!("unrecognized index pattern {idx:?}"),
                })
            }
        }
    }

    let mut warnings = Vec::new();
    if let Some(sym) = &hd.orbsym {
        if sym.iter().any(|&s| s != sym[0]) {
            warnings.push("ORBSYM point-group labels are ignored".to_string());
        }
    }
    ham.meta = IntegralMeta {
        nelec: hd.nelec,
        ms2: hd.ms2,
        orbsym: hd.orbsym,
        isym: hd.isym,
        warnings,
    };
    Ok(ham)
}

/// Canonical `(pq|rs)` quadruples: `p >= q`, `r >= s`, `pq >= rs`.
fn unique_quadruples(m: usize) -> impl Iterator<Item = (usize, usize, usize, usize)> {
    (0..m).flat_map(move |p| {
        (0..=p).flat_map(move |q| {
            let pq = p * (p + 1) / 2 + q;
            (0..m).flat_map(move |r| {
                (0..=r)
                    .filter(move |&s| r * (r + 1) / 2 + s <= pq)
                    .map(move |s| (p, q, r, s))
            })
        })
    })
}

/// Writes symmetry-unique nonzero integrals, then `h1`, then the core energy.
pub fn write_fcidump<T: Real>(h: &Hamiltonian<T>) -> String {
    let m = h.n_spatial();
    let mut out = String::new();
    let _ = write!(out, "&FCI NORB={m},");
    if let Some(n) = h.meta.nelec {
        let _ = write!(out, "NELEC={n},");
    }
    if let Some(s) = h.meta.ms2 {
        let _ = write!(out, "MS2={s},");
    }
    out.push('\n');
    if let Some(sym) = &h.meta.orbsym {
        out.push_str(" ORBSYM=");
        for s in sym {
            let _ = write!(out, "{s},");
        }
        out.push('\n');
    }
    if let Some(s) = h.meta.isym {
        let _ = writeln!(out, " ISYM={s},");
    }
    out.push_str("&END\n");
    let line = |out: &mut String, v: T, i: usize, j: usize, k: usize, l: usize| {
        let _ = writeln!(out, "{:e} {i} {j} {k} {l}", to_f64(v));
    };
    for (p, q, r, s) in unique_quadruples(m) {
        let v = h.eri(p, q, r, s);
        if v != T::zero() {
            line(&mut out, v, p + 1, q + 1, r + 1, s + 1);
        }
    }
    for p in 0..m {
        for q in 0..=p {
            let v = h.h1[(p, q)];
            if v != T::zero() {
                line(&mut out, v, p + 1, q + 1, 0, 0);
            }
        }
    }
    line(&mut out, h.e_core, 0, 0, 0, 0);
    out
}

/// Real orthogonal change of orbital basis; column `k` is new orbital `k`
/// expanded in the old orbitals.
#[derive(Clone, Debug, PartialEq)]
pub struct OrbitalRotation<T> {
    u: DMatrix<T>,
}

impl<T: Real> OrbitalRotation<T> {
    /// Rejects matrices with `|u^T u - 1| > 1e-8` anywhere.
    pub fn new(u: DMatrix<T>) -> Result<Self> {
        if !u.is_square() {
            return Err(Error::Dimension(format!(
                "rotation must be square, got {}x{}",
                u.nrows(),
                u.ncols()
            )));
        }
        let dev = (u.transpose() * &u - DMatrix::identity(u.nrows(), u.nrows())).amax();
        if dev > tol(1e-8) {
            return Err(Error::Argument(format!(
                "rotation is not orthogonal (|u^T u - 1| = {:e})",
                to_f64(dev)
            )));
        }
        Ok(Self { u })
    }

    pub fn identity(m: usize) -> Self {
        Self {
            u: DMatrix::identity(m, m),
        }
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.u
    }

    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    /// Rotation equivalent to applying `self` and then `next`.
    pub fn then(&self, next: &Self) -> Self {
        Self {
            u: &self.u * &next.u,
        }
    }
}

/// `out[b, c, d, p] = sum_a u[a, p] src[a, b, c, d]`: transforms the leading
/// index and moves it to the back, so four calls restore the index order.
fn transform_leading<T: Real>(src: &[T], u: &DMatrix<T>) -> Vec<T> {
    let m = u.nrows();
    let rest = m * m * m;
    let mut out = vec![T::zero(); m * rest];
    out.par_chunks_mut(m).enumerate().for_each(|(bcd, row)| {
        for (p, slot) in row.iter_mut().enumerate() {
            let mut acc = T::zero();
            for a in 0..m {
                acc += u[(a, p)] * src[a * rest + bcd];
            }
            *slot = acc;
        }
    });
    out
}

/// Integrals in the rotated basis: `h1' = u^T h1 u` and the four-index
/// transform of `eri`. Core energy and metadata are carried over.
pub fn rotate_integrals<T: Real>(h: &Hamiltonian<T>, rot: &OrbitalRotation<T>) -> Result<Hamiltonian<T>> {
    let m = h.n_spatial();
    if rot.dim() != m {
        return Err(Error::Dimension(format!(
            "rotation is {0}x{0}, Hamiltonian has {m} orbitals",
            rot.dim()
        )));
    }
    let u = rot.matrix();
    let h1 = u.transpose() * &h.h1 * u;
    let mut eri = h.eri_data().to_vec();
    for _ in 0..4 {
        eri = transform_leading(&eri, u);
    }
    let staged = Hamiltonian::from_parts(h1.clone(), eri, h.e_core)?;

    // copy canonical elements over their images; symmetrize h1 the same way
    let mut out = Hamiltonian::zeros(m);
    for (p, q, r, s) in unique_quadruples(m) {
        out.set_eri(p, q, r, s, staged.eri(p, q, r, s));
    }
    for p in 0..m {
        for q in 0..=p {
            out.set_h1(p, q, h1[(p, q)]);
        }
    }
    out.e_core = h.e_core;
    out.meta = h.meta.clone();
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct NaturalOrbitals<T> {
    pub rotation: OrbitalRotation<T>,
    /// Descending occupation numbers in `[0, 2]`.
    pub occupations: Vec<T>,
    /// Two occupations coincide within `1e-8`; the rotation inside that
    /// block is arbitrary.
    pub degenerate: bool,
}

/// Eigenvectors of a symmetric spatial RDM, sorted by descending
/// occupation, each column signed so its largest entry is positive.
pub fn spatial_natural_orbitals<T: Real>(d: &DMatrix<T>) -> Result<NaturalOrbitals<T>> {
    if !d.is_square() {
        return Err(Error::Dimension("spatial RDM must be square".into()));
    }
    let asym = (d - d.transpose()).amax();
    if asym > tol(1e-8) {
        return Err(Error::Argument(format!(
            "RDM is not symmetric (max asymmetry {:e})",
            to_f64(asym)
        )));
    }
    let m = d.nrows();
    let sym = (d + d.transpose()) * lit::<T>(0.5);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let mut u = DMatrix::zeros(m, m);
    for (col, &k) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        let max = v.amax();
        // first entry within rounding of the maximum decides the sign
        let pivot = (0..m)
            .find(|&i| v[i].abs() >= max * lit(1.0 - 1e-10))
            .unwrap_or(0);
        let s = if v[pivot] < T::zero() { -T::one() } else { T::one() };
        u.set_column(col, &(v * s));
    }
    let occupations: Vec<T> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let degenerate = occupations
        .windows(2)
        .any(|w| (w[0] - w[1]).abs() < tol(1e-8));
    Ok(NaturalOrbitals {
        rotation: OrbitalRotation::new(u)?,
        occupations,
        degenerate,
    })
}

/// Spin-traced natural orbitals of a spin-orbital RDM. The same spatial
/// rotation applies to both spin blocks.
pub fn natural_orbitals<T: Real>(rdm: &OneBodyRDM<T>) -> Result<NaturalOrbitals<T>> {
    let n = rdm.dim();
    let asym = (&rdm.m - rdm.m.transpose()).amax();
    if asym > tol(1e-8) {
        return Err(Error::Argument(format!(
            "RDM is not symmetric (max asymmetry {:e})",
            to_f64(asym)
        )));
    }
    let spatial = rdm.spatial()?;
    let m = n / 2;
    let cross = rdm.m.view((0, m), (m, m)).amax();
    if cross > tol(1e-8) {
        return Err(Error::Model(format!(
            "RDM has alpha-beta coherence {:e}; Sz is not conserved",
            to_f64(cross)
        )));
    }
    spatial_natural_orbitals(&spatial)
}

#[derive(Clone, Debug)]
pub struct InoOptions {
    pub gamma_tol: f64,
    pub max_iter: usize,
    pub solver: SolverOptions,
}

impl Default for InoOptions {
    fn default() -> Self {
        Self {
            gamma_tol: 1e-8,
            max_iter: 10,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InoIteration<T> {
    pub energy: T,
    pub gamma: T,
    /// `None` when L1 is undefined (no quantum mutual information).
    pub l1_percent: Option<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InoTrace<T> {
    pub iterations: Vec<InoIteration<T>>,
    pub converged: bool,
    /// Gamma rose on two consecutive iterations at some point.
    pub oscillation: bool,
    pub warnings: Vec<String>,
}

impl<T: Real> InoTrace<T> {
    pub fn final_gamma(&self) -> T {
        self.iterations.last().map(|r| r.gamma).unwrap_or_else(T::zero)
    }
}

#[derive(Clone, Debug)]
pub struct InoResult<T> {
    /// Integrals in the basis of the final wavefunction.
    pub hamiltonian: Hamiltonian<T>,
    pub wavefunction: SparseWavefunction<T>,
    pub trace: InoTrace<T>,
    /// Accumulated rotation from the input orbitals to the final ones.
    pub rotation: OrbitalRotation<T>,
    /// Natural occupations of the final wavefunction.
    pub occupations: Vec<T>,
}

/// Iterates FCI solve, natural orbitals and integral rotation until gamma
/// drops below `gamma_tol` or `max_iter` solves have been done.
pub fn ino_loop<T: Real>(
    h: &Hamiltonian<T>,
    n_alpha: usize,
    n_beta: usize,
    opts: &InoOptions,
) -> Result<InoResult<T>> {
    if opts.max_iter == 0 {
        return Err(Error::Argument("max_iter must be at least 1".into()));
    }
    let ne = n_alpha + n_beta;
    if ne == 0 {
        return Err(Error::Argument("INO needs at least one electron".into()));
    }
    let mut ham = h.clone();
    let mut total = OrbitalRotation::identity(h.n_spatial());
    let mut trace = InoTrace {
        iterations: Vec::new(),
        converged: false,
        oscillation: false,
        warnings: Vec::new(),
    };
    let mut rises = 0;
    loop {
        let gs = ground_state(&ham, n_alpha, n_beta, &opts.solver)?;
        let iter = trace.iterations.len() + 1;
        if gs.degenerate {
            trace
                .warnings
                .push(format!("iteration {iter}: degenerate ground state"));
        }
        let rdm = one_body_rdm(&gs.wavefunction)?;
        let gamma = gamma_metric(&rdm, ne)?;
        let l1_percent = match l1_metric(&mutual_information_matrix(&gs.wavefunction)?) {
            Ok(v) => Some(v),
            Err(Error::UndefinedMetric(_)) => None,
            Err(e) => return Err(e),
        };
        if let Some(prev) = trace.iterations.last() {
            if gamma > prev.gamma {
                rises += 1;
                if rises >= 2 {
                    trace.oscillation = true;
                }
            } else {
                rises = 0;
            }
        }
        trace.iterations.push(InoIteration {
            energy: gs.energy,
            gamma,
            l1_percent,
        });
        let nos = natural_orbitals(&rdm)?;
        if nos.degenerate {
            trace
                .warnings
                .push(format!("iteration {iter}: degenerate natural occupations"));
        }
        if gamma < lit(opts.gamma_tol) || iter >= opts.max_iter {
            trace.converged = gamma < lit(opts.gamma_tol);
            return Ok(InoResult {
                hamiltonian: ham,
                wavefunction: gs.wavefunction,
                trace,
                rotation: total,
                occupations: nos.occupations,
            });
        }
        ham = rotate_integrals(&ham, &nos.rotation)?;
        total = total.then(&nos.rotation);
    }
}
