//! Self-check suites run by `stabdep verify`.

use std::fmt;
use std::str::FromStr;

use num_complex::{Complex, Complex64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::basis::{build_basis, canonical_dependency, TripleBasis};
use crate::enumeration::{
    enumerate_lagrangians, enumerate_lagrangians_by_extension, lagrangian_count, state_count, StateOrdering,
    MAX_EXTENSION_QUBITS,
};
use crate::error::{Error, Result};
use crate::extent::{computational_decomposition, extent_dictionary, minimize_l1_affine, SolverParams, MAX_DICTIONARY_QUBITS};
use crate::gf2::BitVec;
use crate::pauli::dense::{dense_matrix, Entry, MAX_DENSE_QUBITS};
use crate::pauli::{PhasedPauli, SymplecticVector, Z4Phase};
use crate::states;

/// Random column sample size for `columns` beyond four qubits.
pub const COLUMN_SAMPLE: usize = 100_000;
/// Random canonical dependencies checked by `solve`.
pub const SOLVE_SAMPLE: usize = 100;
pub const SOLVE_TOLERANCE: f64 = 1e-10;
/// Minimum number of states compared by `extent-cross`.
pub const CROSS_STATES: usize = 10;
pub const CROSS_TOLERANCE: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Pauli,
    Counts,
    Columns,
    Triangular,
    Solve,
    ExtentCross,
    All,
}

impl Suite {
    pub const EACH: [Suite; 6] = [
        Suite::Pauli,
        Suite::Counts,
        Suite::Columns,
        Suite::Triangular,
        Suite::Solve,
        Suite::ExtentCross,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Pauli => "pauli",
            Suite::Counts => "counts",
            Suite::Columns => "columns",
            Suite::Triangular => "triangular",
            Suite::Solve => "solve",
            Suite::ExtentCross => "extent-cross",
            Suite::All => "all",
        }
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::EACH
            .into_iter()
            .chain([Suite::All])
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidState(format!("unknown suite {s:?}")))
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: String,
    pub n: usize,
    pub passed: bool,
    pub checked: u64,
    pub failures: u64,
    pub summary: String,
    /// Largest numerical deviation, for suites that have one.
    pub max_deviation: Option<f64>,
}

impl SuiteReport {
    fn new(suite: Suite, n: usize, checked: u64, failures: u64, summary: String) -> Self {
        Self {
            suite: suite.name().into(),
            n,
            passed: failures == 0,
            checked,
            failures,
            summary,
            max_deviation: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    pub seed: u64,
    pub params: SolverParams,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 0x5eed,
            params: SolverParams::default(),
        }
    }
}

/// Shared lazily built artefacts for one qubit count.
struct Context {
    n: usize,
    ordering: Option<StateOrdering>,
    basis: Option<TripleBasis>,
}

impl Context {
    fn ordering(&mut self) -> Result<&StateOrdering> {
        if self.ordering.is_none() {
            self.ordering = Some(StateOrdering::for_qubits(self.n)?);
        }
        Ok(self.ordering.as_ref().expect("just set"))
    }

    fn basis(&mut self) -> Result<(&StateOrdering, &TripleBasis)> {
        if self.basis.is_none() {
            let b = build_basis(self.ordering()?, None)?;
            self.basis = Some(b);
        }
        Ok((self.ordering.as_ref().expect("set"), self.basis.as_ref().expect("set")))
    }
}

/// Runs one suite, or every suite for [`Suite::All`].
pub fn run(n: usize, suite: Suite, opts: &VerifyOptions) -> Result<Vec<SuiteReport>> {
    let mut ctx = Context {
        n,
        ordering: None,
        basis: None,
    };
    let suites: Vec<Suite> = if suite == Suite::All { Suite::EACH.to_vec() } else { vec![suite] };
    suites.into_iter().map(|s| run_one(&mut ctx, s, opts)).collect()
}

fn run_one(ctx: &mut Context, suite: Suite, opts: &VerifyOptions) -> Result<SuiteReport> {
    let n = ctx.n;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ n as u64);
    match suite {
        Suite::Pauli => pauli_suite(n, &mut rng),
        Suite::Counts => counts_suite(n),
        Suite::Columns => {
            let (ord, b) = ctx.basis()?;
            columns_suite(ord, b, &mut rng)
        }
        Suite::Triangular => {
            let (ord, b) = ctx.basis()?;
            let dims_ok = b.num_cols() == ord.num_states() - (1 << n);
            let structural = b.check_triangular(ord);
            let failures = u64::from(!dims_ok) + u64::from(structural.is_err());
            let summary = match structural {
                Ok(()) if dims_ok => format!(
                    "{}x{} basis, unit diagonal, off-diagonal entries at lower support rank",
                    b.num_rows(),
                    b.num_cols()
                ),
                Ok(()) => format!("expected {} columns, found {}", ord.num_states() - (1 << n), b.num_cols()),
                Err(e) => e.to_string(),
            };
            Ok(SuiteReport::new(suite, n, b.num_cols(), failures, summary))
        }
        Suite::Solve => {
            let (ord, b) = ctx.basis()?;
            solve_suite(ord, b, &mut rng)
        }
        Suite::ExtentCross => {
            let (_, b) = ctx.basis()?;
            extent_cross_suite(n, b, &opts.params, &mut rng)
        }
        Suite::All => unreachable!("expanded by run"),
    }
}

fn random_pauli(n: usize, rng: &mut impl Rng) -> PhasedPauli {
    let mask = (1u64 << n) - 1;
    PhasedPauli::with_phase(
        SymplecticVector::raw(n, rng.gen::<u64>() & mask, rng.gen::<u64>() & mask),
        Z4Phase::new(rng.gen_range(0..4)),
    )
}

/// Checks product, commutation and basis-state action of `a`, `b` against
/// dense matrices; returns the number of failed checks.
fn pauli_pair_failures(a: &PhasedPauli, b: &PhasedPauli) -> Result<u64> {
    let n = a.n();
    let (da, db) = (dense_matrix(a)?, dense_matrix(b)?);
    let (ab, ba) = (da.matmul(&db), db.matmul(&da));
    let mut failures = u64::from(dense_matrix(&a.multiply(b)?)? != ab);
    failures += u64::from(a.commutes(b)? != (ab == ba));
    for z in 0..1u64 << n {
        let (phase, out) = a.apply_to_basis_state(&BitVec::raw(n, z))?;
        let mut e = vec![Entry::new(0, 0); 1 << n];
        e[z as usize] = Entry::new(1, 0);
        let (re, im) = phase.to_unit();
        let mut want = vec![Entry::new(0, 0); 1 << n];
        want[out.bits() as usize] = Complex::new(re, im);
        failures += u64::from(da.apply(&e) != want);
    }
    Ok(failures)
}

fn pauli_suite(n: usize, rng: &mut impl Rng) -> Result<SuiteReport> {
    if n > MAX_DENSE_QUBITS {
        return Err(Error::Guard(format!("pauli suite uses dense matrices, limited to {MAX_DENSE_QUBITS} qubits")));
    }
    let mut checked = 0u64;
    let mut failures = 0u64;
    if n <= 2 {
        let all: Vec<PhasedPauli> = (0..1u64 << n)
            .flat_map(|p| (0..1u64 << n).map(move |q| (p, q)))
            .flat_map(|(p, q)| (0..4).map(move |k| PhasedPauli::with_phase(SymplecticVector::raw(n, p, q), Z4Phase::new(k))))
            .collect();
        for a in &all {
            for b in &all {
                failures += pauli_pair_failures(a, b)?;
                checked += 1;
            }
        }
    } else {
        for _ in 0..10_000 {
            failures += pauli_pair_failures(&random_pauli(n, rng), &random_pauli(n, rng))?;
            checked += 1;
        }
    }
    let mode = if n <= 2 { "exhaustive" } else { "random" };
    let summary = format!("{checked} Pauli pairs ({mode}), {failures} mismatches against dense matrices");
    Ok(SuiteReport::new(Suite::Pauli, n, checked, failures, summary))
}

fn counts_suite(n: usize) -> Result<SuiteReport> {
    let mut failures = 0;
    let mut parts = Vec::new();
    for k in 1..=n {
        let list = enumerate_lagrangians(k)?;
        let mut ok = list.len() as u128 == lagrangian_count(k);
        if k <= MAX_EXTENSION_QUBITS {
            ok &= enumerate_lagrangians_by_extension(k)?.len() == list.len();
        }
        failures += u64::from(!ok);
        parts.push(format!("n={k}: lagrangians={} states={}", list.len(), (list.len() as u128) << k));
    }
    let _ = state_count(n);
    Ok(SuiteReport::new(Suite::Counts, n, n as u64, failures, parts.join("; ")))
}

fn columns_suite(ord: &StateOrdering, b: &TripleBasis, rng: &mut impl Rng) -> Result<SuiteReport> {
    let n = ord.n();
    let total = b.num_cols() as usize;
    let cols: Vec<usize> = if n <= 4 {
        (0..total).collect()
    } else {
        (0..COLUMN_SAMPLE.min(total)).map(|_| rng.gen_range(0..total)).collect()
    };
    let mut failures = 0u64;
    for &j in &cols {
        failures += u64::from(!b.column_is_exact(ord, j)?);
    }
    let exact = cols.len() as u64 - failures;
    let scope = if n <= 4 { String::new() } else { format!(" (random sample of {total})") };
    let summary = format!("{exact}/{} columns exact{scope}", cols.len());
    Ok(SuiteReport::new(Suite::Columns, n, cols.len() as u64, failures, summary))
}

fn solve_suite(ord: &StateOrdering, b: &TripleBasis, rng: &mut impl Rng) -> Result<SuiteReport> {
    let n = ord.n();
    let mut worst = 0.0f64;
    let mut failures = 0;
    for _ in 0..SOLVE_SAMPLE {
        let s = rng.gen_range(1 << n..ord.num_states());
        let dep = canonical_dependency(ord, s)?;
        let sol = b.triangular_solve(&dep.entries)?;
        worst = worst.max(sol.residual);
        failures += u64::from(sol.residual >= SOLVE_TOLERANCE);
    }
    let summary = format!("{SOLVE_SAMPLE} canonical dependencies solved, max residual {worst:.2e}");
    let mut r = SuiteReport::new(Suite::Solve, n, SOLVE_SAMPLE as u64, failures, summary);
    r.max_deviation = Some(worst);
    Ok(r)
}

/// Haar-random state from normally distributed components.
pub fn random_state(n: usize, rng: &mut impl Rng) -> Vec<Complex64> {
    let mut gauss = || {
        let (u1, u2): (f64, f64) = (rng.gen_range(f64::EPSILON..1.0), rng.gen());
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    };
    let v: Vec<Complex64> = (0..1 << n).map(|_| Complex64::new(gauss(), gauss())).collect();
    let norm = crate::extent::norm2(&v);
    v.into_iter().map(|x| x / norm).collect()
}

/// Family states for `n` qubits, topped up with random stabiliser and Haar
/// states to at least [`CROSS_STATES`].
pub fn cross_check_states(n: usize, ord: &StateOrdering, rng: &mut impl Rng) -> Result<Vec<(String, Vec<Complex64>)>> {
    let mut out = vec![(format!("t:{n}"), states::t_tensor(n)?), (format!("ghz:{n}"), states::ghz(n)?)];
    if n >= 2 {
        out.push((format!("czk:{n}"), states::ckz_magic(n)?));
    }
    for k in 0..=n {
        out.push((format!("dicke:{n},{k}"), states::dicke(n, k)?));
    }
    let mut extra = 0;
    while out.len() < CROSS_STATES {
        if extra % 2 == 0 {
            let i = rng.gen_range(0..ord.num_states());
            out.push((format!("stabiliser #{i}"), ord.check_matrix(i)?.amplitudes()?.to_dense()));
        } else {
            out.push((format!("random #{extra}"), random_state(n, rng)));
        }
        extra += 1;
    }
    Ok(out)
}

fn extent_cross_suite(n: usize, b: &TripleBasis, params: &SolverParams, rng: &mut impl Rng) -> Result<SuiteReport> {
    if n > MAX_DICTIONARY_QUBITS {
        return Err(Error::Guard(format!("extent-cross needs dictionary mode, limited to {MAX_DICTIONARY_QUBITS} qubits")));
    }
    let ord = StateOrdering::for_qubits(n)?;
    let targets = cross_check_states(n, &ord, rng)?;
    let mut worst = 0.0f64;
    let mut failures = 0;
    let mut lines = Vec::new();
    for (name, psi) in &targets {
        let via_basis = minimize_l1_affine(&computational_decomposition(psi)?, b, params)?;
        let via_dict = extent_dictionary(psi, params)?;
        let delta = (via_basis.xi - via_dict.xi).abs();
        worst = worst.max(delta);
        let ok = delta < CROSS_TOLERANCE && via_basis.converged && via_dict.converged;
        failures += u64::from(!ok);
        lines.push(format!("{name}: basis {:.6} dictionary {:.6}", via_basis.xi, via_dict.xi));
    }
    let summary = format!("{} states, max |delta xi| {worst:.2e}; {}", targets.len(), lines.join(", "));
    let mut r = SuiteReport::new(Suite::ExtentCross, n, targets.len() as u64, failures, summary);
    r.max_deviation = Some(worst);
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::EACH.into_iter().chain([Suite::All]) {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("bogus".parse::<Suite>().is_err());
    }

    #[test]
    fn all_suites_pass_at_two_qubits() {
        let reports = run(2, Suite::All, &VerifyOptions::default()).unwrap();
        assert_eq!(reports.len(), 6);
        for r in &reports {
            assert!(r.passed, "{}: {}", r.suite, r.summary);
        }
        assert_eq!(reports[2].summary, "56/56 columns exact");
    }

    #[test]
    fn guards() {
        assert!(run(5, Suite::Pauli, &VerifyOptions::default()).is_err());
    }

    #[test]
    fn random_states_are_normalised() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for n in 1..=5 {
            assert!((crate::extent::norm2(&random_state(n, &mut rng)) - 1.0).abs() < 1e-12);
        }
    }
}
