//! Stabiliser extent by l1 minimisation over stabiliser decompositions.
//!
//! Two independent paths:
//!
//! * [`minimize_l1_affine`] minimises `||c + Bx||_1` over the affine space of
//!   decompositions spanned by the triple basis, with ADMM. The x-update is a
//!   least-squares solve done by conjugate gradients on `B^H B`,
//!   preconditioned by the unit triangular block `B_N`.
//! * [`extent_dictionary`] minimises `||y||_1` subject to `S y = psi` with
//!   the dense dictionary `S` of all stabiliser states (small `n` only).
//!
//! Both report the objective of a feasible iterate, so the value is always
//! an upper bound that tightens as the solver converges. For `n <= 4` the
//! dual iterate also yields a certified lower bound and a polished candidate
//! (see [`crate::certificate`]); the solver stops once the two bounds meet.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::basis::TripleBasis;
use crate::certificate::{Certificate, SparseDictionary, MAX_CERTIFY_QUBITS};
use crate::enumeration::StateOrdering;
use crate::error::{Error, Result};

/// Dictionary mode is limited to this many qubits (36720 columns).
pub const MAX_DICTIONARY_QUBITS: usize = 4;

/// Tolerance on `||psi||_2 = 1`.
pub const NORM_TOLERANCE: f64 = 1e-12;

const ADAPT_INTERVAL: usize = 500;

/// Dual certificates are evaluated every this many iterations.
const CERT_INTERVAL: usize = 50;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolverParams {
    /// ADMM penalty, in units of the frame constant `sqrt(|S| / 2^n)`
    /// (`S S^H = (|S| / 2^n) I`). Without the scaling the best penalty grows
    /// with `n`; with it `rho = 1` works across `n <= 4`.
    pub rho: f64,
    pub max_iter: usize,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub over_relaxation: f64,
    /// Worker threads; `0` uses the global rayon pool.
    pub threads: usize,
    /// Residual balancing: every `ADAPT_INTERVAL` iterations, rescale `rho`
    /// when primal and dual residuals are more than a factor 10 apart.
    /// Off by default; frequent rescaling can stall convergence.
    pub adaptive_rho: bool,
    /// Dual lower bounds and active-set polishing (`n <= 4`). Stops early
    /// once `upper - lower <= eps_abs + eps_rel * upper`.
    pub certify: bool,
    /// Keep the best objective after every iteration in `ExtentResult::history`.
    #[serde(skip)]
    pub record_history: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            rho: 1.0,
            max_iter: 200_000,
            eps_abs: 1e-8,
            eps_rel: 1e-7,
            over_relaxation: 1.6,
            threads: 0,
            adaptive_rho: false,
            certify: true,
            record_history: false,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidState(format!("solver parameter {m}")));
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return bad("rho must be positive");
        }
        if self.max_iter == 0 {
            return bad("max_iter must be positive");
        }
        if !(self.eps_abs > 0.0 && self.eps_rel > 0.0) {
            return bad("tolerances must be positive");
        }
        if !(1.0..=1.8).contains(&self.over_relaxation) {
            return bad("over_relaxation must lie in [1, 1.8]");
        }
        Ok(())
    }
}

/// Sparse coefficients over the global state order, sorted by index.
#[derive(Clone, Debug, PartialEq)]
pub struct Decomposition {
    pub n: usize,
    pub coefficients: Vec<(u64, Complex64)>,
}

impl Decomposition {
    pub fn l1_norm(&self) -> f64 {
        self.coefficients.iter().map(|(_, v)| v.norm()).sum()
    }

    fn from_dense(n: usize, v: &[Complex64]) -> Self {
        let coefficients = v
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != ZERO)
            .map(|(i, c)| (i as u64, *c))
            .collect();
        Self { n, coefficients }
    }
}

#[derive(Clone, Debug)]
pub struct ExtentResult {
    pub l1: f64,
    pub xi: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub wall_time_s: f64,
    pub converged: bool,
    pub rational_hint: Option<(u64, u64)>,
    /// Certified lower bound on the optimal l1 norm, when certificates ran.
    pub l1_lower_bound: Option<f64>,
    pub decomposition: Option<Decomposition>,
    pub history: Vec<f64>,
}

fn qubits_of_len(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::InvalidState(format!("vector length {len} is not 2^n with n >= 1")));
    }
    Ok(len.trailing_zeros() as usize)
}

pub fn norm2(v: &[Complex64]) -> f64 {
    v.iter().map(Complex64::norm_sqr).sum::<f64>().sqrt()
}

fn check_normalised(psi: &[Complex64]) -> Result<usize> {
    let n = qubits_of_len(psi.len())?;
    let norm = norm2(psi);
    if (norm - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::InvalidState(format!("state has norm {norm}, expected 1")));
    }
    Ok(n)
}

/// `psi_z` at the computational-basis indices `0..2^n`.
pub fn computational_decomposition(psi: &[Complex64]) -> Result<Decomposition> {
    let n = check_normalised(psi)?;
    Ok(Decomposition::from_dense(n, psi))
}

/// `sum_s alpha_s |s>` as a dense vector.
pub fn evaluate_decomposition(d: &Decomposition, ordering: &StateOrdering) -> Result<Vec<Complex64>> {
    if d.n != ordering.n() {
        return Err(Error::Mismatch(format!("decomposition has n = {}, ordering n = {}", d.n, ordering.n())));
    }
    let mut out = vec![ZERO; 1 << d.n];
    for &(i, a) in &d.coefficients {
        let table = ordering.check_matrix(i)?.amplitudes()?;
        let m = table.magnitude();
        for (z, ph) in &table.entries {
            out[z.bits() as usize] += a * ph.to_complex() * m;
        }
    }
    Ok(out)
}

/// `p/q` with `q <= 64` and `|value - p/q| < 1e-6`, smallest `q` first.
pub fn rational_hint(value: f64) -> Option<(u64, u64)> {
    if !value.is_finite() || value < 0.0 {
        return None;
    }
    (1u64..=64).find_map(|q| {
        let p = (value * q as f64).round();
        ((value - p / q as f64).abs() < 1e-6).then_some((p as u64, q))
    })
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.par_iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn abs(z: &Complex64) -> f64 {
    // Faster than `Complex::norm`, which goes through `hypot`.
    z.norm_sqr().sqrt()
}

fn l1(v: &[Complex64]) -> f64 {
    v.par_iter().map(abs).sum()
}

/// `z * max(0, 1 - kappa/|z|)`.
fn shrink(z: Complex64, kappa: f64) -> Complex64 {
    let m = abs(&z);
    if m <= kappa {
        ZERO
    } else {
        z * (1.0 - kappa / m)
    }
}

fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidState(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// x-update of the basis path: the point `c + Bx` nearest to a target.
///
/// With `y = B_N x` we have `Bx = (W y, y)` where `W = B_c B_N^-1`, so the
/// least-squares problem becomes `(I + W^H W) y = t_N + W^H t_c`. That is the
/// normal equation of `B` preconditioned on both sides by the triangular
/// block; conjugate gradients on it converge in a handful of steps because
/// `W^H W` has rank at most `2^n`. `y` and `W y` are kept between calls as a
/// warm start.
struct ReducedLeastSquares<'a> {
    b: &'a TripleBasis,
    y: Vec<Complex64>,
    wy: Vec<Complex64>,
}

impl<'a> ReducedLeastSquares<'a> {
    const MAX_CG: usize = 50;
    const CG_TOL: f64 = 1e-13;

    fn new(b: &'a TripleBasis) -> Self {
        Self {
            b,
            y: vec![ZERO; b.num_cols() as usize],
            wy: vec![ZERO; 1 << b.n()],
        }
    }

    fn w(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut u = v.to_vec();
        self.b.solve_block(&mut u);
        self.b.apply_computational(&u)
    }

    fn w_adjoint(&self, r: &[Complex64]) -> Vec<Complex64> {
        let mut u = self.b.apply_computational_adjoint(r);
        self.b.solve_block_adjoint(&mut u);
        u
    }

    /// Least squares against `t = (t_c, t_N)`; afterwards `(wy, y) = B x`.
    fn solve(&mut self, t: &[Complex64]) {
        let (t_c, t_n) = t.split_at(self.wy.len());
        let scale = norm2(t).max(f64::MIN_POSITIVE);
        let gap: Vec<Complex64> = t_c.iter().zip(&self.wy).map(|(a, b)| a - b).collect();
        let mut r = self.w_adjoint(&gap);
        r.par_iter_mut().zip(t_n).zip(&self.y).for_each(|((ri, ti), yi)| *ri += ti - yi);
        let mut p = r.clone();
        let mut rr = dot(&r, &r).re;
        for _ in 0..Self::MAX_CG {
            if rr.sqrt() <= Self::CG_TOL * scale {
                break;
            }
            let wp = self.w(&p);
            let mut ap = self.w_adjoint(&wp);
            ap.par_iter_mut().zip(&p).for_each(|(a, pi)| *a += pi);
            let alpha = rr / dot(&p, &ap).re;
            self.y.par_iter_mut().zip(&p).for_each(|(yi, pi)| *yi += alpha * pi);
            self.wy.iter_mut().zip(&wp).for_each(|(wi, v)| *wi += alpha * v);
            r.par_iter_mut().zip(&ap).for_each(|(ri, a)| *ri -= alpha * a);
            let rr_new = dot(&r, &r).re;
            let beta = rr_new / rr;
            rr = rr_new;
            p.par_iter_mut().zip(&r).for_each(|(pi, ri)| *pi = ri + beta * *pi);
        }
    }

    /// Recomputes `W y` from `y`, removing drift from incremental updates.
    fn refresh(&mut self) {
        self.wy = self.w(&self.y);
    }
}

/// Residuals and stopping test are evaluated every this many iterations.
const CHECK_INTERVAL: usize = 10;

/// Shared ADMM driver for `min ||v||_1` over an affine set `F`, split as
/// `v in F`, `z = v`. `project(target, out)` writes the point of `F` nearest
/// to `target`; `adjoint_norm` measures dual residuals in the coordinates of
/// the free variable.
struct Admm<'a> {
    params: &'a SolverParams,
    dim: usize,
    dual_dim: usize,
    n: usize,
}

struct AdmmOutcome {
    best: Vec<Complex64>,
    best_l1: f64,
    iterations: usize,
    primal: f64,
    dual: f64,
    converged: bool,
    lower: Option<f64>,
    history: Vec<f64>,
}

impl Admm<'_> {
    fn run(
        &self,
        mut project: impl FnMut(&[Complex64], &mut Vec<Complex64>),
        adjoint_norm: impl Fn(&[Complex64]) -> f64,
        start: Vec<Complex64>,
        cert: Option<&Certificate>,
    ) -> AdmmOutcome {
        let p = self.params;
        let alpha = p.over_relaxation;
        let mut rho = p.rho * frame_constant(self.n, self.dim);
        let mut feasible = start;
        let mut z = feasible.clone();
        let mut z_old = z.clone();
        let mut w = vec![ZERO; self.dim];
        let mut best_l1 = l1(&feasible);
        let mut best = feasible.clone();
        let mut history = Vec::new();
        let mut target = vec![ZERO; self.dim];
        let (mut primal, mut dual) = (f64::INFINITY, f64::INFINITY);
        let mut lower: Option<f64> = None;
        let mut polished = Vec::new();
        for it in 1..=p.max_iter {
            target.par_iter_mut().zip(&z).zip(&w).for_each(|((t, zi), wi)| *t = zi - wi);
            project(&target, &mut feasible);
            let obj = l1(&feasible);
            if obj < best_l1 {
                best_l1 = obj;
                best.clone_from(&feasible);
            }
            if p.record_history {
                history.push(best_l1);
            }
            let check = it % CHECK_INTERVAL == 0 || it == p.max_iter;
            if check {
                z_old.clone_from(&z);
            }
            // Over-relaxed z- and dual updates, fused per coordinate.
            let kappa = 1.0 / rho;
            z.par_iter_mut().zip(&mut w).zip(&feasible).for_each(|((zi, wi), f)| {
                let h = alpha * f + (1.0 - alpha) * *zi;
                let zn = shrink(h + *wi, kappa);
                *wi += h - zn;
                *zi = zn;
            });
            if !check {
                continue;
            }
            let diff: Vec<Complex64> = feasible.par_iter().zip(&z).map(|(a, b)| a - b).collect();
            primal = norm2(&diff);
            let dz: Vec<Complex64> = z.par_iter().zip(&z_old).map(|(a, b)| a - b).collect();
            dual = rho * adjoint_norm(&dz);
            let f_norm = norm2(&feasible).max(norm2(&z));
            let w_norm = rho * adjoint_norm(&w);
            let eps_pri = (self.dim as f64).sqrt() * p.eps_abs + p.eps_rel * f_norm;
            let eps_dual = (self.dual_dim as f64).sqrt() * p.eps_abs + p.eps_rel * w_norm;
            let mut certified = false;
            if let Some(cert) = cert.filter(|_| it % CERT_INTERVAL == 0) {
                let u: Vec<Complex64> = w.par_iter().map(|wi| wi * rho).collect();
                if let Some(v) = cert.evaluate(&u, &z) {
                    lower = Some(lower.map_or(v.lower, |l| l.max(v.lower)));
                    for candidate in v.candidates {
                        project(&candidate, &mut polished);
                        let obj = l1(&polished);
                        if obj < best_l1 {
                            best_l1 = obj;
                            best.clone_from(&polished);
                            if let Some(last) = history.last_mut() {
                                *last = best_l1;
                            }
                        }
                    }
                }
                certified = lower.is_some_and(|l| best_l1 - l <= p.eps_abs + p.eps_rel * best_l1);
            }
            if certified || (primal <= eps_pri && dual <= eps_dual) {
                return AdmmOutcome {
                    best,
                    best_l1,
                    iterations: it,
                    primal,
                    dual,
                    converged: true,
                    lower,
                    history,
                };
            }
            if p.adaptive_rho && it % ADAPT_INTERVAL == 0 {
                // Balance residuals relative to their own scales; only act on
                // a clear imbalance so rho stays put most of the time.
                let tiny = f64::MIN_POSITIVE;
                let ratio = ((primal / f_norm.max(tiny)) / (dual / w_norm.max(tiny)).max(tiny)).sqrt();
                if ratio.is_finite() && !(0.2..=5.0).contains(&ratio) {
                    let scale = ratio.clamp(1e-3, 1e3);
                    rho *= scale;
                    // w is the scaled dual u / rho
                    w.par_iter_mut().for_each(|wi| *wi /= scale);
                }
            }
        }
        AdmmOutcome {
            best,
            best_l1,
            iterations: p.max_iter,
            primal,
            dual,
            converged: false,
            lower,
            history,
        }
    }
}

/// `sqrt(|S| / 2^n)`.
fn frame_constant(n: usize, num_states: usize) -> f64 {
    (num_states as f64 / (1u64 << n) as f64).sqrt()
}

fn finish(out: AdmmOutcome, n: usize, started: Instant) -> ExtentResult {
    let xi = out.best_l1 * out.best_l1;
    ExtentResult {
        l1: out.best_l1,
        xi,
        iterations: out.iterations,
        primal_residual: out.primal,
        dual_residual: out.dual,
        wall_time_s: started.elapsed().as_secs_f64(),
        converged: out.converged,
        rational_hint: rational_hint(xi),
        l1_lower_bound: out.lower,
        decomposition: Some(Decomposition::from_dense(n, &out.best)),
        history: out.history,
    }
}

/// `min ||c + Bx||_1` over complex `x`; `xi` is the square of the optimum.
/// Non-convergence is reported through `converged = false` with the best
/// feasible value found.
pub fn minimize_l1_affine(c: &Decomposition, b: &TripleBasis, params: &SolverParams) -> Result<ExtentResult> {
    params.validate()?;
    if c.n != b.n() {
        return Err(Error::Mismatch(format!("decomposition has n = {}, basis n = {}", c.n, b.n())));
    }
    let rows = b.num_rows() as usize;
    let mut c_dense = vec![ZERO; rows];
    for &(i, v) in &c.coefficients {
        if i >= b.num_rows() {
            return Err(Error::OutOfRange { index: i, limit: b.num_rows() });
        }
        c_dense[i as usize] += v;
    }
    let started = Instant::now();
    let out = with_threads(params.threads, || {
        let dict = certificate_dictionary(c.n, params)?;
        let cert = dict.as_ref().map(|d| Certificate {
            dict: d,
            psi: d.synthesise(&c_dense),
        });
        let mut ls = ReducedLeastSquares::new(b);
        let mut calls = 0usize;
        let admm = Admm {
            params,
            dim: rows,
            dual_dim: b.num_cols() as usize,
            n: b.n(),
        };
        let split = 1usize << b.n();
        Ok::<_, Error>(admm.run(
            |target, out| {
                calls += 1;
                if calls.is_multiple_of(100) {
                    ls.refresh();
                }
                let t: Vec<Complex64> = target.par_iter().zip(&c_dense).map(|(a, c)| a - c).collect();
                ls.solve(&t);
                out.clear();
                out.extend(c_dense[..split].iter().zip(&ls.wy).map(|(c, v)| c + v));
                out.par_extend(c_dense[split..].par_iter().zip(&ls.y).map(|(c, v)| c + v));
            },
            |v| norm2(&b.apply_adjoint(v)),
            c_dense.clone(),
            cert.as_ref(),
        ))
    })??;
    Ok(finish(out, c.n, started))
}

fn certificate_dictionary(n: usize, params: &SolverParams) -> Result<Option<SparseDictionary>> {
    if !params.certify || n > MAX_CERTIFY_QUBITS {
        return Ok(None);
    }
    SparseDictionary::new(&StateOrdering::for_qubits(n)?).map(Some)
}

/// Dense dictionary `S` with one column per stabiliser state.
pub fn dictionary_matrix(ordering: &StateOrdering) -> Result<DMatrix<Complex64>> {
    let n = ordering.n();
    if n > MAX_DICTIONARY_QUBITS {
        return Err(Error::Guard(format!("dictionary mode limited to {MAX_DICTIONARY_QUBITS} qubits, got {n}")));
    }
    let cols = ordering.num_states() as usize;
    let mut s = DMatrix::<Complex64>::zeros(1 << n, cols);
    for j in 0..cols {
        let table = ordering.check_matrix(j as u64)?.amplitudes()?;
        let m = table.magnitude();
        for (z, ph) in &table.entries {
            s[(z.bits() as usize, j)] = ph.to_complex() * m;
        }
    }
    Ok(s)
}

/// `min ||y||_1` subject to `S y = psi`, independent of the triple basis.
pub fn extent_dictionary(psi: &[Complex64], params: &SolverParams) -> Result<ExtentResult> {
    params.validate()?;
    let n = check_normalised(psi)?;
    if n > MAX_DICTIONARY_QUBITS {
        return Err(Error::Guard(format!("dictionary mode limited to {MAX_DICTIONARY_QUBITS} qubits, got {n}")));
    }
    let ordering = StateOrdering::for_qubits(n)?;
    let s = dictionary_matrix(&ordering)?;
    let s_adj = s.adjoint();
    let gram = nalgebra::linalg::Cholesky::new(&s * &s_adj)
        .ok_or_else(|| Error::InvalidState("dictionary Gram matrix is not positive definite".into()))?;
    let target_state = DVector::from_column_slice(psi);
    let started = Instant::now();
    let dim = s.ncols();
    // Least-norm feasible start: S^H (S S^H)^-1 psi.
    let start: Vec<Complex64> = (&s_adj * gram.solve(&target_state)).iter().copied().collect();
    let out = with_threads(params.threads, || {
        let dict = certificate_dictionary(n, params)?;
        let cert = dict.as_ref().map(|d| Certificate { dict: d, psi: psi.to_vec() });
        let admm = Admm {
            params,
            dim,
            dual_dim: dim,
            n,
        };
        Ok::<_, Error>(admm.run(
            |target, out| {
                let v = DVector::from_column_slice(target);
                let corr = &s_adj * gram.solve(&(&s * &v - &target_state));
                out.clear();
                out.extend(v.iter().zip(corr.iter()).map(|(a, b)| a - b));
            },
            norm2,
            start,
            cert.as_ref(),
        ))
    })??;
    Ok(finish(out, n, started))
}
