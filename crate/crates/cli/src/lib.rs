//! Command-line front end: wavefunction analysis, FCI solves and the
//! iterative natural-orbital loop, with JSON/CSV reports.

mod output;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use orbcorr::fci::{ground_state, hubbard_hamiltonian, Hamiltonian, SolverOptions};
use orbcorr::info::build_report;
use orbcorr::orbitals::{ino_loop, parse_fcidump, write_fcidump, InoOptions};
use orbcorr::wfncore::SparseWavefunction;
use serde::Serialize;

pub use output::{fmt_float, round_sig};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "orbcorr", version, about = "Quantum vs classical orbital correlations in CI wavefunctions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Mutual-information report for a wavefunction file.
    Analyze {
        /// Wavefunction file.
        wfn: PathBuf,
    },
    /// Ground state of an FCIDUMP or a Hubbard chain.
    Fci(SystemArgs),
    /// Iterative natural orbitals starting from an FCIDUMP or Hubbard chain.
    Ino(SystemArgs),
}

#[derive(Debug, Clone, Args)]
pub struct SystemArgs {
    /// FCIDUMP file with the integrals.
    #[arg(conflicts_with = "hubbard", required_unless_present = "hubbard")]
    pub fcidump: Option<PathBuf>,
    /// Use a Hubbard chain with this many sites.
    #[arg(long, requires = "u")]
    pub hubbard: Option<usize>,
    /// Hubbard hopping.
    #[arg(long = "t", default_value_t = 1.0, allow_negative_numbers = true)]
    pub t: f64,
    /// Hubbard on-site repulsion.
    #[arg(long = "u", allow_negative_numbers = true)]
    pub u: Option<f64>,
    /// Close the Hubbard chain into a ring.
    #[arg(long)]
    pub periodic: bool,
    /// Electron count (defaults to NELEC from the FCIDUMP).
    #[arg(long)]
    pub nelec: Option<usize>,
    /// Twice S_z (defaults to MS2 from the FCIDUMP, else nelec mod 2).
    #[arg(long, allow_negative_numbers = true)]
    pub ms2: Option<i64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Keep at most this many determinants.
    #[arg(long, global = true, default_value_t = 1_000_000, value_parser = clap::value_parser!(u64).range(1..))]
    pub chi: u64,
    /// Do not renormalize after truncation.
    #[arg(long, global = true)]
    pub no_renormalize: bool,
    #[arg(long, global = true, default_value_t = 1e-8)]
    pub gamma_tol: f64,
    #[arg(long, global = true, default_value_t = 10)]
    pub max_iter: usize,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: Option<u64>,
    #[arg(long, global = true, value_delimiter = ',', default_value = "json,csv")]
    pub format: Vec<Format>,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Input {
        path: PathBuf,
        source: orbcorr::Error,
    },
    #[error("{0}")]
    Core(#[from] orbcorr::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// 2 for unreadable or malformed inputs, 3 for solver non-convergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Input { .. } => 2,
            CliError::Core(orbcorr::Error::Convergence { .. }) => 3,
            _ => 1,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// Everything a run echoes into its reports. Worker count and output
/// directory are left out so reports depend only on inputs.
#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub command: &'static str,
    pub input: Option<String>,
    pub hubbard: Option<HubbardEcho>,
    pub nelec: Option<usize>,
    pub ms2: Option<i64>,
    pub chi: u64,
    pub renormalize: bool,
    pub gamma_tol: f64,
    pub max_iter: usize,
    pub formats: Vec<Format>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HubbardEcho {
    pub sites: usize,
    pub t: f64,
    pub u: f64,
    pub periodic: bool,
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub(crate) fn write(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Runs a parsed command line, on a dedicated pool when `--workers` is set.
pub fn run(cli: &Cli) -> CliResult<Vec<String>> {
    match cli.common.workers {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n as usize)
                .build()
                .map_err(|e| CliError::Usage(format!("cannot start {n} workers: {e}")))?;
            pool.install(|| dispatch(cli))
        }
        None => dispatch(cli),
    }
}

fn dispatch(cli: &Cli) -> CliResult<Vec<String>> {
    let c = &cli.common;
    if c.format.is_empty() {
        return Err(CliError::Usage("--format needs json and/or csv".into()));
    }
    fs::create_dir_all(&c.out).map_err(|source| CliError::Io {
        path: c.out.clone(),
        source,
    })?;
    match &cli.command {
        Command::Analyze { wfn } => cmd_analyze(wfn, c),
        Command::Fci(sys) => cmd_fci(sys, c),
        Command::Ino(sys) => cmd_ino(sys, c),
    }
}

fn echo(command: &'static str, c: &CommonArgs, input: Option<&Path>, sys: Option<&SystemArgs>) -> ConfigEcho {
    ConfigEcho {
        command,
        input: input.map(|p| p.display().to_string()),
        hubbard: sys.and_then(|s| {
            s.hubbard.map(|sites| HubbardEcho {
                sites,
                t: s.t,
                u: s.u.unwrap_or(0.0),
                periodic: s.periodic,
            })
        }),
        nelec: sys.and_then(|s| s.nelec),
        ms2: sys.and_then(|s| s.ms2),
        chi: c.chi,
        renormalize: !c.no_renormalize,
        gamma_tol: c.gamma_tol,
        max_iter: c.max_iter,
        formats: c.format.clone(),
    }
}

/// Reads and truncates a wavefunction file.
pub fn load_wavefunction(path: &Path, chi: u64, renormalize: bool) -> CliResult<(SparseWavefunction<f64>, usize)> {
    let text = read(path)?;
    let wfn = SparseWavefunction::<f64>::parse(&text).map_err(|source| CliError::Input {
        path: path.to_path_buf(),
        source,
    })?;
    let n_in = wfn.len();
    let kept = wfn.truncate_top_chi(chi.min(usize::MAX as u64) as usize, renormalize)?;
    Ok((kept, n_in))
}

fn cmd_analyze(path: &Path, c: &CommonArgs) -> CliResult<Vec<String>> {
    let (wfn, n_in) = load_wavefunction(path, c.chi, !c.no_renormalize)?;
    let report = build_report(&wfn)?;
    let cfg = echo("analyze", c, Some(path), None);
    let mut written = Vec::new();
    if c.format.contains(&Format::Json) {
        let json = output::analysis_json(&report, &cfg, n_in, wfn.len());
        let p = c.out.join("report.json");
        write(&p, &json)?;
        written.push(p.display().to_string());
    }
    if c.format.contains(&Format::Csv) {
        let p = c.out.join("heatmap.csv");
        write(&p, &output::heatmap_csv(&report))?;
        written.push(p.display().to_string());
        let p = c.out.join("curves.csv");
        write(&p, &output::curves_csv(&report))?;
        written.push(p.display().to_string());
    }
    let mut lines = vec![
        format!("qubits = {}", wfn.n_qubits()),
        format!("determinants = {} (of {n_in})", wfn.len()),
        format!(
            "l1_percent = {}",
            report.l1_percent.map_or("undefined".to_string(), fmt_float)
        ),
        format!("gamma = {}", report.gamma.map_or("undefined".to_string(), fmt_float)),
    ];
    lines.extend(report.warnings.iter().map(|w| format!("warning: {w}")));
    lines.extend(written.into_iter().map(|p| format!("wrote {p}")));
    Ok(lines)
}

/// Hamiltonian and `(n_alpha, n_beta)` from the system arguments.
pub fn load_system(sys: &SystemArgs) -> CliResult<(Hamiltonian<f64>, usize, usize)> {
    let h = match (&sys.fcidump, sys.hubbard) {
        (Some(path), _) => parse_fcidump(&read(path)?).map_err(|source| CliError::Input {
            path: path.clone(),
            source,
        })?,
        (None, Some(sites)) => {
            let u = sys.u.ok_or_else(|| CliError::Usage("--hubbard needs --u".into()))?;
            hubbard_hamiltonian(sites, sys.t, u, sys.periodic)?
        }
        (None, None) => return Err(CliError::Usage("give an FCIDUMP or --hubbard".into())),
    };
    let nelec = sys
        .nelec
        .or(h.meta.nelec)
        .ok_or_else(|| CliError::Usage("electron count unknown: pass --nelec".into()))?;
    let ms2 = sys.ms2.or(h.meta.ms2).unwrap_or((nelec % 2) as i64);
    let n = nelec as i64;
    if ms2.abs() > n || (n + ms2) % 2 != 0 {
        return Err(CliError::Usage(format!("ms2={ms2} is incompatible with nelec={nelec}")));
    }
    Ok((h, ((n + ms2) / 2) as usize, ((n - ms2) / 2) as usize))
}

fn cmd_fci(sys: &SystemArgs, c: &CommonArgs) -> CliResult<Vec<String>> {
    let (h, na, nb) = load_system(sys)?;
    let gs = ground_state(&h, na, nb, &SolverOptions::default())?;
    let wfn = gs.wavefunction.truncate_top_chi(c.chi as usize, !c.no_renormalize)?;
    let p = c.out.join("wavefunction.txt");
    write(&p, &wfn.to_text())?;
    let mut lines = vec![format!("energy = {:.9}", gs.energy)];
    let mut warnings: Vec<String> = h.meta.warnings.clone();
    if gs.degenerate {
        warnings.push("ground state is degenerate; analyses depend on the chosen vector".into());
    }
    lines.extend(warnings.iter().map(|w| format!("warning: {w}")));
    lines.push(format!("wrote {}", p.display()));
    if c.format.contains(&Format::Json) {
        let cfg = echo("fci", c, sys.fcidump.as_deref(), Some(sys));
        let j = c.out.join("fci.json");
        write(&j, &output::fci_json(&gs, &cfg, na, nb, wfn.len(), &warnings))?;
        lines.push(format!("wrote {}", j.display()));
    }
    Ok(lines)
}

fn cmd_ino(sys: &SystemArgs, c: &CommonArgs) -> CliResult<Vec<String>> {
    let (h, na, nb) = load_system(sys)?;
    let opts = InoOptions {
        gamma_tol: c.gamma_tol,
        max_iter: c.max_iter,
        solver: SolverOptions::default(),
    };
    let res = ino_loop(&h, na, nb, &opts)?;
    let mut warnings = h.meta.warnings.clone();
    warnings.extend(res.trace.warnings.iter().cloned());
    if res.trace.oscillation {
        warnings.push("gamma increased on consecutive iterations".into());
    }

    let trace_path = c.out.join("ino_trace.csv");
    write(&trace_path, &output::ino_csv(&res.trace))?;
    let dump_path = c.out.join("final.fcidump");
    write(&dump_path, &write_fcidump(&res.hamiltonian))?;
    let wfn = res.wavefunction.truncate_top_chi(c.chi as usize, !c.no_renormalize)?;
    let wfn_path = c.out.join("final_wavefunction.txt");
    write(&wfn_path, &wfn.to_text())?;

    let last = res.trace.iterations.last().expect("at least one iteration");
    let mut lines = vec![
        format!("iterations = {}", res.trace.iterations.len()),
        format!("converged = {}", res.trace.converged),
        format!("energy = {:.9}", last.energy),
        format!("gamma = {}", fmt_float(last.gamma)),
    ];
    lines.extend(warnings.iter().map(|w| format!("warning: {w}")));
    for p in [&trace_path, &dump_path, &wfn_path] {
        lines.push(format!("wrote {}", p.display()));
    }
    if c.format.contains(&Format::Json) {
        let cfg = echo("ino", c, sys.fcidump.as_deref(), Some(sys));
        let j = c.out.join("ino.json");
        write(&j, &output::ino_json(&res, &cfg, &warnings))?;
        lines.push(format!("wrote {}", j.display()));
    }
    Ok(lines)
}
