use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use stabdep_core::basis::{self, BasisFormat, TripleBasis};
use stabdep_core::certificate::MAX_CERTIFY_QUBITS;
use stabdep_core::enumeration::{
    self, checked_lagrangian_count, checked_state_count, LagrangianList, StateOrdering, DEFAULT_MAX_ENUM_QUBITS,
    HARD_MAX_ENUM_QUBITS, MAX_COUNT_QUBITS,
};
use stabdep_core::extent::{self, ExtentResult, SolverParams, MAX_DICTIONARY_QUBITS};
use stabdep_core::states::StateSpec;
use stabdep_core::verify::{self, Suite, VerifyOptions};
use stabdep_core::{Error, Result};

const EXIT_VALIDATION: u8 = 2;
const EXIT_GUARD: u8 = 3;
const EXIT_VERIFY: u8 = 4;
const EXIT_NOT_CONVERGED: u8 = 5;

#[derive(Parser, Debug)]
#[command(name = "stabdep", version, about = "Stabiliser-state dependencies and stabiliser extent")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Memory ceiling for estimated footprints, e.g. 512M or 16G.
    #[arg(long, global = true, default_value = "16G", value_parser = parse_bytes)]
    max_mem: u64,
    /// Run even when guards would refuse.
    #[arg(long, global = true)]
    force: bool,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    /// Machine-readable output.
    #[arg(long, global = true)]
    json: bool,
    /// Default location for Lagrangian caches.
    #[arg(long, global = true, env = "STABDEP_CACHE_DIR")]
    cache_dir: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Enumerate Lagrangian subspaces, or just count them.
    Enumerate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        count_only: bool,
    },
    /// Build the triple basis of linear dependencies.
    Basis {
        #[arg(long)]
        n: usize,
        /// Stream the basis to this file instead of holding it in memory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FormatArg::Bin)]
        format: FormatArg,
        /// Lagrangian cache to read, or to create when missing.
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Stabiliser extent of a state.
    Extent {
        /// dicke:n,k | czk:n | t:n | ghz:n | file:path
        #[arg(long)]
        state: String,
        #[arg(long, value_enum, default_value_t = Method::Basis)]
        method: Method,
        /// Binary basis written by `stabdep basis --out`.
        #[arg(long)]
        basis_file: Option<PathBuf>,
        #[arg(long, allow_negative_numbers = true)]
        rho: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
        /// Relative tolerance; the absolute tolerance is a tenth of it.
        #[arg(long)]
        tol: Option<f64>,
        /// Rescale file input to unit norm instead of rejecting it.
        #[arg(long)]
        normalize: bool,
        /// Stop on residuals only, without dual certificates.
        #[arg(long)]
        no_certify: bool,
    },
    /// Run a verification suite.
    Verify {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "all")]
        suite: Suite,
        #[arg(long, default_value_t = VerifyOptions::default().seed)]
        seed: u64,
    },
    /// Limits, defaults and size table.
    Info,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FormatArg {
    Bin,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Method {
    Basis,
    Dictionary,
}

fn parse_bytes(s: &str) -> std::result::Result<u64, String> {
    let s = s.trim();
    let split = s.find(|c: char| !c.is_ascii_digit()).unwrap_or(s.len());
    let (num, unit) = s.split_at(split);
    let num: u64 = num.parse().map_err(|_| format!("bad size {s:?}"))?;
    let shift = match unit.to_ascii_uppercase().trim_end_matches("IB").trim_end_matches('B') {
        "" => 0,
        "K" => 10,
        "M" => 20,
        "G" => 30,
        "T" => 40,
        _ => return Err(format!("bad size unit in {s:?}")),
    };
    num.checked_mul(1 << shift).ok_or_else(|| format!("size {s:?} too large"))
}

fn human_bytes(b: u128) -> String {
    const UNITS: [&str; 5] = ["B", "KiB", "MiB", "GiB", "TiB"];
    let mut v = b as f64;
    let mut u = 0;
    while v >= 1024.0 && u + 1 < UNITS.len() {
        v /= 1024.0;
        u += 1;
    }
    format!("{v:.1} {}", UNITS[u])
}

/// Prints the estimate and refuses to go over the ceiling unless forced.
fn memory_guard(g: &Global, what: &str, bytes: u128) -> Result<()> {
    eprintln!("estimated memory for {what}: {}", human_bytes(bytes));
    if bytes > g.max_mem as u128 && !g.force {
        return Err(Error::Guard(format!(
            "{what} needs about {}, above --max-mem {} (use --force to override)",
            human_bytes(bytes),
            human_bytes(g.max_mem as u128)
        )));
    }
    Ok(())
}

fn counts(n: usize) -> Result<(u128, u128)> {
    match (checked_lagrangian_count(n), checked_state_count(n)) {
        (Some(l), Some(s)) if n >= 1 => Ok((l, s)),
        _ => Err(Error::Guard(format!("counts are supported for 1 <= n <= {MAX_COUNT_QUBITS}, got {n}"))),
    }
}

fn enumeration_bytes(n: usize) -> Result<u128> {
    Ok(counts(n)?.0 * (8 * n as u128 + 1))
}

fn enum_allowed(g: &Global, n: usize) -> Result<()> {
    if n == 0 || n > HARD_MAX_ENUM_QUBITS || (n > DEFAULT_MAX_ENUM_QUBITS && !g.force) {
        return Err(Error::Guard(format!(
            "enumeration supports 1 <= n <= {DEFAULT_MAX_ENUM_QUBITS} (up to {HARD_MAX_ENUM_QUBITS} with --force), got {n}"
        )));
    }
    Ok(())
}

fn default_cache(g: &Global, n: usize) -> Option<PathBuf> {
    g.cache_dir.as_ref().map(|d| d.join(format!("lagrangians-n{n}.stlg")))
}

/// Loads the Lagrangian list from `cache` when present, otherwise enumerates
/// and writes the cache.
fn lagrangians(g: &Global, n: usize, cache: Option<&Path>) -> Result<LagrangianList> {
    enum_allowed(g, n)?;
    if let Some(path) = cache.filter(|p| p.exists()) {
        eprintln!("loading Lagrangian cache {}", path.display());
        return enumeration::load_cache(path, Some(n));
    }
    memory_guard(g, "enumeration", enumeration_bytes(n)?)?;
    let list = enumeration::enumerate_lagrangians_with(n, g.force)?;
    if let Some(path) = cache {
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        enumeration::save_cache(&list, path)?;
        eprintln!("wrote Lagrangian cache {}", path.display());
    }
    Ok(list)
}

#[derive(Serialize)]
struct CountReport {
    n: usize,
    lagrangians: String,
    states: String,
    out: Option<PathBuf>,
}

fn cmd_enumerate(g: &Global, n: usize, out: Option<PathBuf>, count_only: bool) -> Result<u8> {
    let (l, s) = counts(n)?;
    let out = if count_only { None } else { out.or_else(|| default_cache(g, n)) };
    if !count_only {
        enum_allowed(g, n)?;
        memory_guard(g, "enumeration", enumeration_bytes(n)?)?;
        let list = enumeration::enumerate_lagrangians_with(n, g.force)?;
        if list.len() as u128 != l {
            return Err(Error::Mismatch(format!("enumerated {} Lagrangians, formula gives {l}", list.len())));
        }
        if let Some(path) = &out {
            enumeration::save_cache(&list, path)?;
        }
    }
    if g.json {
        let report = CountReport {
            n,
            lagrangians: l.to_string(),
            states: s.to_string(),
            out,
        };
        println!("{}", serde_json::to_string(&report).expect("serialisable"));
    } else {
        println!("lagrangians={l} states={s}");
        if let Some(path) = out {
            println!("wrote {}", path.display());
        }
    }
    Ok(0)
}

#[derive(Serialize)]
struct BasisReport {
    n: usize,
    rows: u64,
    cols: u64,
    nnz: u64,
    out: Option<PathBuf>,
}

fn cmd_basis(g: &Global, n: usize, out: Option<PathBuf>, format: FormatArg, cache: Option<PathBuf>) -> Result<u8> {
    let cache = cache.or_else(|| default_cache(g, n));
    let (_, states) = counts(n)?;
    enum_allowed(g, n)?;
    let format = match format {
        FormatArg::Bin => BasisFormat::Binary,
        FormatArg::Csv => BasisFormat::Csv,
    };
    let report = match &out {
        // Streaming keeps one batch of columns in memory at a time.
        Some(path) => {
            memory_guard(g, "basis (streamed)", enumeration_bytes(n)?)?;
            let ordering = StateOrdering::new(lagrangians(g, n, cache.as_deref())?);
            basis::stream_basis(&ordering, path, format)?;
            let cols = ordering.num_noncomputational();
            BasisReport {
                n,
                rows: ordering.num_states(),
                cols,
                nnz: 3 * cols,
                out: out.clone(),
            }
        }
        None => {
            memory_guard(g, "basis", enumeration_bytes(n)? + basis::basis_memory_bytes(n))?;
            let ordering = StateOrdering::new(lagrangians(g, n, cache.as_deref())?);
            let b = basis::build_basis(&ordering, None)?;
            BasisReport {
                n,
                rows: b.num_rows(),
                cols: b.num_cols(),
                nnz: b.nnz(),
                out: None,
            }
        }
    };
    debug_assert_eq!(report.rows as u128, states);
    if g.json {
        println!("{}", serde_json::to_string(&report).expect("serialisable"));
    } else {
        println!("{}x{}, nnz={}", report.rows, report.cols, report.nnz);
        if let Some(path) = &report.out {
            println!("wrote {}", path.display());
        }
    }
    Ok(0)
}

#[derive(Serialize)]
struct ExtentReport<'a> {
    state_spec: String,
    n: usize,
    xi: f64,
    l1: f64,
    rational_hint: Option<String>,
    iterations: usize,
    primal_residual: f64,
    dual_residual: f64,
    wall_time_s: f64,
    params: &'a SolverParams,
    method: Method,
    converged: bool,
    l1_lower_bound: Option<f64>,
}

/// Working vectors of the solver, in units of `|S|`: iterate, split copy,
/// dual, target and scratch, plus the residual copies.
const SOLVER_VECTORS: u128 = 8;

fn extent_bytes(n: usize, method: Method, with_basis: bool) -> Result<u128> {
    let (_, states) = counts(n)?;
    let vectors = SOLVER_VECTORS * 16 * states;
    let model = match method {
        Method::Dictionary => (2 * 16 * states) << n,
        Method::Basis if with_basis => enumeration_bytes(n)? + basis::basis_memory_bytes(n),
        Method::Basis => enumeration_bytes(n)?,
    };
    let certificate = if n <= MAX_CERTIFY_QUBITS { (20 * states) << n } else { 0 };
    Ok(vectors + model + certificate)
}

#[allow(clippy::too_many_arguments)]
fn cmd_extent(
    g: &Global,
    spec: &str,
    method: Method,
    basis_file: Option<PathBuf>,
    rho: Option<f64>,
    max_iter: Option<usize>,
    tol: Option<f64>,
    normalize: bool,
    no_certify: bool,
) -> Result<u8> {
    let spec: StateSpec = spec.parse()?;
    let mut params = SolverParams::default();
    if let Some(r) = rho {
        params.rho = r;
    }
    if let Some(m) = max_iter {
        params.max_iter = m;
    }
    if let Some(t) = tol {
        params.eps_rel = t;
        params.eps_abs = t / 10.0;
    }
    params.certify = !no_certify;
    params.validate()?;
    if method == Method::Dictionary && basis_file.is_some() {
        return Err(Error::InvalidState("--basis-file only applies to --method basis".into()));
    }
    if let Some(n) = spec.qubits() {
        pre_check(g, n, method, basis_file.is_none())?;
    }
    let psi = spec.build(normalize)?;
    let n = psi.len().trailing_zeros() as usize;
    if spec.qubits().is_none() {
        pre_check(g, n, method, basis_file.is_none())?;
    }
    let result = match method {
        Method::Dictionary => extent::extent_dictionary(&psi, &params)?,
        Method::Basis => {
            let b = match &basis_file {
                Some(path) => load_basis(path, n)?,
                None => basis::build_basis(&StateOrdering::new(lagrangians(g, n, default_cache(g, n).as_deref())?), None)?,
            };
            let c = extent::computational_decomposition(&psi)?;
            extent::minimize_l1_affine(&c, &b, &params)?
        }
    };
    print_extent(g, &spec, n, method, &params, &result);
    Ok(if result.converged { 0 } else { EXIT_NOT_CONVERGED })
}

fn pre_check(g: &Global, n: usize, method: Method, build_basis: bool) -> Result<()> {
    if method == Method::Dictionary && n > MAX_DICTIONARY_QUBITS {
        return Err(Error::Guard(format!("dictionary mode limited to {MAX_DICTIONARY_QUBITS} qubits, got {n}")));
    }
    if method == Method::Basis && build_basis {
        enum_allowed(g, n)?;
    }
    memory_guard(g, "extent solve", extent_bytes(n, method, build_basis)?)
}

fn load_basis(path: &Path, n: usize) -> Result<TripleBasis> {
    let b = basis::import_basis(path)?;
    if b.n() != n {
        return Err(Error::Mismatch(format!("basis file is for n = {}, state has n = {n}", b.n())));
    }
    Ok(b)
}

fn print_extent(g: &Global, spec: &StateSpec, n: usize, method: Method, params: &SolverParams, r: &ExtentResult) {
    let hint = r.rational_hint.map(|(p, q)| format!("{p}/{q}"));
    if g.json {
        let report = ExtentReport {
            state_spec: spec.to_string(),
            n,
            xi: r.xi,
            l1: r.l1,
            rational_hint: hint,
            iterations: r.iterations,
            primal_residual: r.primal_residual,
            dual_residual: r.dual_residual,
            wall_time_s: r.wall_time_s,
            params,
            method,
            converged: r.converged,
            l1_lower_bound: r.l1_lower_bound,
        };
        println!("{}", serde_json::to_string_pretty(&report).expect("serialisable"));
        return;
    }
    println!("state       {spec} (n = {n})");
    println!("method      {}", if method == Method::Basis { "basis" } else { "dictionary" });
    match hint {
        Some(h) => println!("xi          {:.9}  ~ {h}", r.xi),
        None => println!("xi          {:.9}", r.xi),
    }
    println!("l1          {:.9}", r.l1);
    if let Some(lo) = r.l1_lower_bound {
        println!("xi bounds   [{:.9}, {:.9}]", lo * lo, r.xi);
    }
    // A certified stop leaves the ADMM residuals wherever they were.
    let status = match (r.converged, r.l1_lower_bound) {
        (false, _) => "NOT converged",
        (true, Some(lo)) if r.l1 - lo <= params.eps_abs + params.eps_rel * r.l1 => "converged, bounds certified",
        (true, _) => "converged on residuals",
    };
    println!("iterations  {} ({status})", r.iterations);
    println!("residuals   primal {:.2e}, dual {:.2e}", r.primal_residual, r.dual_residual);
    println!("time        {:.3} s", r.wall_time_s);
}

fn cmd_verify(g: &Global, n: usize, suite: Suite, seed: u64) -> Result<u8> {
    let opts = VerifyOptions {
        seed,
        ..Default::default()
    };
    let reports = verify::run(n, suite, &opts)?;
    let failed = reports.iter().any(|r| !r.passed);
    if g.json {
        println!("{}", serde_json::to_string_pretty(&reports).expect("serialisable"));
    } else {
        for r in &reports {
            let tag = if r.passed { "PASS" } else { "FAIL" };
            println!("{tag} {:<13} n={} {}", r.suite, r.n, r.summary);
        }
    }
    Ok(if failed { EXIT_VERIFY } else { 0 })
}

#[derive(Serialize)]
struct InfoRow {
    n: usize,
    lagrangians: String,
    states: String,
    basis_bytes: String,
}

fn cmd_info(g: &Global) -> Result<u8> {
    let rows: Vec<InfoRow> = (1..=HARD_MAX_ENUM_QUBITS)
        .map(|n| {
            let (l, s) = counts(n).expect("small n");
            InfoRow {
                n,
                lagrangians: l.to_string(),
                states: s.to_string(),
                basis_bytes: basis::basis_memory_bytes(n).to_string(),
            }
        })
        .collect();
    if g.json {
        let info = serde_json::json!({
            "version": env!("CARGO_PKG_VERSION"),
            "threads": rayon::current_num_threads(),
            "cache_dir": g.cache_dir,
            "max_mem": g.max_mem,
            "default_params": SolverParams::default(),
            "max_dictionary_qubits": MAX_DICTIONARY_QUBITS,
            "max_certify_qubits": MAX_CERTIFY_QUBITS,
            "sizes": rows,
        });
        println!("{}", serde_json::to_string_pretty(&info).expect("serialisable"));
        return Ok(0);
    }
    println!("stabdep {}", env!("CARGO_PKG_VERSION"));
    println!("threads          {}", rayon::current_num_threads());
    match &g.cache_dir {
        Some(d) => println!("cache dir        {}", d.display()),
        None => println!("cache dir        (unset; STABDEP_CACHE_DIR)"),
    }
    println!("max mem          {}", human_bytes(g.max_mem as u128));
    println!("enumeration      n <= {DEFAULT_MAX_ENUM_QUBITS} ({HARD_MAX_ENUM_QUBITS} with --force)");
    println!("dictionary mode  n <= {MAX_DICTIONARY_QUBITS}; certificates n <= {MAX_CERTIFY_QUBITS}");
    println!();
    println!("{:>2} {:>14} {:>18} {:>12}", "n", "lagrangians", "states", "basis");
    for r in rows {
        let bytes: u128 = r.basis_bytes.parse().expect("number");
        println!("{:>2} {:>14} {:>18} {:>12}", r.n, r.lagrangians, r.states, human_bytes(bytes));
    }
    Ok(0)
}

fn run(cli: Cli) -> Result<u8> {
    let g = &cli.global;
    if g.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(g.threads)
            .build_global()
            .map_err(|e| Error::InvalidState(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Enumerate { n, out, count_only } => cmd_enumerate(g, n, out, count_only),
        Command::Basis { n, out, format, cache } => cmd_basis(g, n, out, format, cache),
        Command::Extent {
            state,
            method,
            basis_file,
            rho,
            max_iter,
            tol,
            normalize,
            no_certify,
        } => cmd_extent(g, &state, method, basis_file, rho, max_iter, tol, normalize, no_certify),
        Command::Verify { n, suite, seed } => cmd_verify(g, n, suite, seed),
        Command::Info => cmd_info(g),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Guard(_) => EXIT_GUARD,
                _ => EXIT_VALIDATION,
            })
        }
    }
}
