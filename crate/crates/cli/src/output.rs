use std::fmt::Write as _;

use orbcorr::fci::{GroundState, SolverPath};
use orbcorr::info::{CorrelationReport, ENTROPY_UNIT};
use orbcorr::orbitals::{InoResult, InoTrace};
use serde::Serialize;

use crate::{ConfigEcho, VERSION};

const SIG_DIGITS: usize = 12;

/// Rounds to 12 significant digits; non-finite values pass through.
pub fn round_sig(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return if x == 0.0 { 0.0 } else { x };
    }
    let r: f64 = format!("{:.*e}", SIG_DIGITS - 1, x).parse().expect("formatted float");
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// Shortest text of the 12-significant-digit rounding.
pub fn fmt_float(x: f64) -> String {
    let r = round_sig(x);
    if !r.is_finite() {
        return "NaN".into();
    }
    let a = r.abs();
    if a != 0.0 && !(1e-5..1e15).contains(&a) {
        format!("{r:e}")
    } else {
        format!("{r}")
    }
}

fn rounded(v: &[f64]) -> Vec<Option<f64>> {
    v.iter()
        .map(|&x| x.is_finite().then(|| round_sig(x)))
        .collect()
}

fn matrix_rows(m: &orbcorr::nalgebra::DMatrix<f64>) -> Vec<Vec<Option<f64>>> {
    (0..m.nrows())
        .map(|i| rounded(&m.row(i).iter().copied().collect::<Vec<_>>()))
        .collect()
}

fn to_json<S: Serialize>(value: &S) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

#[derive(Serialize)]
struct Header<'a> {
    tool: &'static str,
    version: &'static str,
    config: &'a ConfigEcho,
    chi: u64,
    entropy_unit: &'static str,
}

fn header(cfg: &ConfigEcho) -> Header<'_> {
    Header {
        tool: "orbcorr",
        version: VERSION,
        config: cfg,
        chi: cfg.chi,
        entropy_unit: ENTROPY_UNIT,
    }
}

#[derive(Serialize)]
struct Sorted {
    mi_quantum: Vec<Option<f64>>,
    mi_classical: Vec<Option<f64>>,
    mi_difference: Vec<Option<f64>>,
    entropy_vn: Vec<Option<f64>>,
    entropy_sh: Vec<Option<f64>>,
    entropy_difference: Vec<Option<f64>>,
}

#[derive(Serialize)]
struct AnalysisJson<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    determinants_read: usize,
    determinants_used: usize,
    n_qubits: usize,
    l1_percent: Option<f64>,
    gamma: Option<f64>,
    entropies_vn: Vec<Option<f64>>,
    entropies_sh: Vec<Option<f64>>,
    /// Diagonal is null.
    mi_quantum: Vec<Vec<Option<f64>>>,
    mi_classical: Vec<Vec<Option<f64>>>,
    sorted: Sorted,
    top_entropy_qubits: &'a [usize],
    warnings: &'a [String],
}

pub fn analysis_json(r: &CorrelationReport<f64>, cfg: &ConfigEcho, n_in: usize, n_used: usize) -> String {
    to_json(&AnalysisJson {
        header: header(cfg),
        determinants_read: n_in,
        determinants_used: n_used,
        n_qubits: r.mi.n,
        l1_percent: r.l1_percent.map(round_sig),
        gamma: r.gamma.map(round_sig),
        entropies_vn: rounded(&r.entropies_vn),
        entropies_sh: rounded(&r.entropies_sh),
        mi_quantum: matrix_rows(&r.mi.quantum),
        mi_classical: matrix_rows(&r.mi.classical),
        sorted: Sorted {
            mi_quantum: rounded(&r.sorted_mi_quantum),
            mi_classical: rounded(&r.sorted_mi_classical),
            mi_difference: rounded(&r.sorted_mi_difference),
            entropy_vn: rounded(&r.sorted_entropy),
            entropy_sh: rounded(&r.sorted_entropy_sh),
            entropy_difference: rounded(&r.sorted_entropy_difference),
        },
        top_entropy_qubits: &r.top_entropy_qubits,
        warnings: &r.warnings,
    })
}

/// Top-entropy qubits in index order; upper triangle quantum, lower
/// triangle classical, empty diagonal.
pub fn heatmap_csv(r: &CorrelationReport<f64>) -> String {
    let mut qubits = r.top_entropy_qubits.clone();
    qubits.sort_unstable();
    let mut out = String::from("qubit");
    for q in &qubits {
        let _ = write!(out, ",{q}");
    }
    out.push('\n');
    for (a, &i) in qubits.iter().enumerate() {
        let _ = write!(out, "{i}");
        for (b, &j) in qubits.iter().enumerate() {
            out.push(',');
            if a < b {
                out.push_str(&fmt_float(r.mi.quantum[(i, j)]));
            } else if a > b {
                out.push_str(&fmt_float(r.mi.classical[(i, j)]));
            }
        }
        out.push('\n');
    }
    out
}

/// Sorted curves by rank; shorter columns leave trailing fields empty.
pub fn curves_csv(r: &CorrelationReport<f64>) -> String {
    let cols: [&[f64]; 6] = [
        &r.sorted_mi_quantum,
        &r.sorted_mi_classical,
        &r.sorted_mi_difference,
        &r.sorted_entropy,
        &r.sorted_entropy_sh,
        &r.sorted_entropy_difference,
    ];
    let rows = cols.iter().map(|c| c.len()).max().unwrap_or(0);
    let mut out = String::from("rank,mi_quantum,mi_classical,mi_difference,entropy_vn,entropy_sh,entropy_difference\n");
    for k in 0..rows {
        let _ = write!(out, "{}", k + 1);
        for c in &cols {
            out.push(',');
            if let Some(&v) = c.get(k) {
                out.push_str(&fmt_float(v));
            }
        }
        out.push('\n');
    }
    out
}

#[derive(Serialize)]
struct FciJson<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    n_alpha: usize,
    n_beta: usize,
    energy: f64,
    gap: Option<f64>,
    degenerate: bool,
    solver: &'static str,
    iterations: usize,
    residual: f64,
    basis_size: usize,
    determinants_written: usize,
    warnings: &'a [String],
}

pub fn fci_json(
    gs: &GroundState<f64>,
    cfg: &ConfigEcho,
    na: usize,
    nb: usize,
    written: usize,
    warnings: &[String],
) -> String {
    to_json(&FciJson {
        header: header(cfg),
        n_alpha: na,
        n_beta: nb,
        energy: round_sig(gs.energy),
        gap: gs.gap.map(round_sig),
        degenerate: gs.degenerate,
        solver: match gs.path {
            SolverPath::Dense => "dense",
            SolverPath::Davidson => "davidson",
        },
        iterations: gs.iterations,
        residual: round_sig(gs.residual),
        basis_size: gs.basis_size,
        determinants_written: written,
        warnings,
    })
}

pub fn ino_csv(trace: &InoTrace<f64>) -> String {
    let mut out = String::from("iter,energy,gamma,l1_percent\n");
    for (k, it) in trace.iterations.iter().enumerate() {
        let l1 = it.l1_percent.map(fmt_float).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{l1}", k + 1, fmt_float(it.energy), fmt_float(it.gamma));
    }
    let _ = writeln!(out, "# converged={}", trace.converged);
    out
}

#[derive(Serialize)]
struct InoRow {
    iter: usize,
    energy: f64,
    gamma: f64,
    l1_percent: Option<f64>,
}

#[derive(Serialize)]
struct InoJson<'a> {
    #[serde(flatten)]
    header: Header<'a>,
    converged: bool,
    oscillation: bool,
    iterations: Vec<InoRow>,
    occupations: Vec<Option<f64>>,
    rotation: Vec<Vec<Option<f64>>>,
    warnings: &'a [String],
}

pub fn ino_json(res: &InoResult<f64>, cfg: &ConfigEcho, warnings: &[String]) -> String {
    to_json(&InoJson {
        header: header(cfg),
        converged: res.trace.converged,
        oscillation: res.trace.oscillation,
        iterations: res
            .trace
            .iterations
            .iter()
            .enumerate()
            .map(|(k, it)| InoRow {
                iter: k + 1,
                energy: round_sig(it.energy),
                gamma: round_sig(it.gamma),
                l1_percent: it.l1_percent.map(round_sig),
            })
            .collect(),
        occupations: rounded(&res.occupations),
        rotation: matrix_rows(res.rotation.matrix()),
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_float(2.0 - 2.0 * 2f64.sqrt()), "-0.828427124746");
        assert_eq!(fmt_float(50.0), "50");
        assert_eq!(fmt_float(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_float(-0.0), "0");
        assert_eq!(fmt_float(1.234567890123456e-9), "1.23456789012e-9");
        assert_eq!(fmt_float(f64::NAN), "NaN");
        assert_eq!(round_sig(123456.7890123456), 123456.789012);
    }
}
