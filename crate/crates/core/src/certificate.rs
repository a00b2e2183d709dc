//! Dual lower bounds and active-set polishing for the extent solvers.
//!
//! For any `lambda`, writing `psi = sum_s x_s |s>` gives
//! `|<lambda|psi>| <= ||x||_1 max_s |<s|lambda>|`, so
//! `|<lambda|psi>| / max_s |<s|lambda>|` bounds the optimum from below.
//! ADMM's scaled dual `rho w` converges to `S^H lambda*`; since
//! `S S^H = (|S| / 2^n) I`, `lambda` is recovered by one synthesis.
//!
//! The same `lambda` suggests the optimal support: optimal coefficients sit
//! on states with `|<s|lambda>|` maximal and carry the phase of
//! `<s|lambda>`. A nonnegative least-squares fit on those states gives a
//! candidate decomposition that often hits the optimum exactly. A second
//! candidate keeps the support of the sparse ADMM iterate and corrects it
//! onto `S x = psi` there; the feasible ADMM iterate itself is dense and its
//! l1 norm converges slowly.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::enumeration::StateOrdering;
use crate::error::{Error, Result};

/// Certificates need every amplitude in memory; keep to small `n`.
pub const MAX_CERTIFY_QUBITS: usize = 4;

/// States within this relative distance of the maximal overlap are active.
const ACTIVE_SLACK: f64 = 1e-3;
const MAX_ACTIVE: usize = 2048;
/// Polished candidates are accepted only if they reproduce `psi` this well.
const FIT_TOLERANCE: f64 = 1e-9;
/// Relative magnitude floors for the support used in dual refinement.
const SUPPORT_CUTS: [f64; 2] = [0.0, 1e-2];

/// Amplitudes of every state, compressed by state.
pub(crate) struct SparseDictionary {
    dim: usize,
    offsets: Vec<usize>,
    rows: Vec<u32>,
    values: Vec<Complex64>,
}

impl SparseDictionary {
    pub(crate) fn new(ordering: &StateOrdering) -> Result<Self> {
        let n = ordering.n();
        if n > MAX_CERTIFY_QUBITS {
            return Err(Error::Guard(format!("certificates limited to {MAX_CERTIFY_QUBITS} qubits, got {n}")));
        }
        let columns: Vec<Vec<(u32, Complex64)>> = (0..ordering.num_states())
            .into_par_iter()
            .map(|j| {
                let table = ordering.check_matrix(j)?.amplitudes()?;
                let m = table.magnitude();
                Ok(table.entries.iter().map(|(z, ph)| (z.bits() as u32, ph.to_complex() * m)).collect())
            })
            .collect::<Result<_>>()?;
        let mut offsets = Vec::with_capacity(columns.len() + 1);
        offsets.push(0);
        let (mut rows, mut values) = (Vec::new(), Vec::new());
        for col in columns {
            for (r, v) in col {
                rows.push(r);
                values.push(v);
            }
            offsets.push(rows.len());
        }
        Ok(Self {
            dim: 1 << n,
            offsets,
            rows,
            values,
        })
    }

    pub(crate) fn num_states(&self) -> usize {
        self.offsets.len() - 1
    }

    fn column(&self, j: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let r = self.offsets[j]..self.offsets[j + 1];
        self.rows[r.clone()].iter().map(|&i| i as usize).zip(self.values[r].iter().copied())
    }

    /// `S u`.
    pub(crate) fn synthesise(&self, u: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.dim];
        for (j, uj) in u.iter().enumerate() {
            if uj.re != 0.0 || uj.im != 0.0 {
                for (i, v) in self.column(j) {
                    out[i] += v * uj;
                }
            }
        }
        out
    }

    /// `S^H lambda`.
    pub(crate) fn analyse(&self, lambda: &[Complex64]) -> Vec<Complex64> {
        (0..self.num_states())
            .into_par_iter()
            .map(|j| self.column(j).map(|(i, v)| v.conj() * lambda[i]).sum())
            .collect()
    }
}

pub(crate) struct Certificate<'a> {
    pub(crate) dict: &'a SparseDictionary,
    pub(crate) psi: Vec<Complex64>,
}

pub(crate) struct Verdict {
    /// Lower bound on the optimal l1 norm.
    pub(crate) lower: f64,
    /// Candidate decompositions over all states, not yet projected.
    pub(crate) candidates: Vec<Vec<Complex64>>,
}

impl Certificate<'_> {
    /// `dual` is the unscaled ADMM dual `rho w` and `sparse` the shrunk
    /// iterate, both in state coordinates.
    pub(crate) fn evaluate(&self, dual: &[Complex64], sparse: &[Complex64]) -> Option<Verdict> {
        let mut lambda = self.dict.synthesise(dual);
        let g: Complex64 = lambda.iter().zip(&self.psi).map(|(l, p)| l.conj() * p).sum();
        if g.norm() == 0.0 {
            return None;
        }
        // Rotate so that <lambda|psi> is real and positive.
        let phase = g / g.norm();
        lambda.iter_mut().for_each(|l| *l *= phase);
        let overlaps = self.dict.analyse(&lambda);
        let top = overlaps.iter().map(|a| a.norm()).fold(0.0, f64::max);
        if top == 0.0 {
            return None;
        }
        let mut lower = g.norm() / top;
        let mut active: Vec<usize> = (0..overlaps.len())
            .filter(|&j| overlaps[j].norm() >= (1.0 - ACTIVE_SLACK) * top)
            .collect();
        if active.len() > MAX_ACTIVE {
            active.sort_by(|&a, &b| overlaps[b].norm().total_cmp(&overlaps[a].norm()));
            active.truncate(MAX_ACTIVE);
        }
        let candidates: Vec<Vec<Complex64>> =
            [self.polish(&active, &overlaps), self.restrict(sparse)].into_iter().flatten().collect();
        lambda.iter_mut().for_each(|l| *l /= top);
        for x in &candidates {
            // Tiny coefficients are mostly solver noise; try the support
            // with and without them.
            let big = x.iter().map(|c| c.norm()).fold(0.0, f64::max);
            for cut in SUPPORT_CUTS {
                if let Some(l) = self.refine_bound(lambda.clone(), x, cut * big, &overlaps) {
                    lower = lower.max(l);
                }
            }
        }
        Some(Verdict { lower, candidates })
    }

    /// Least-norm correction of `z` onto `S x = psi` without leaving its support.
    fn restrict(&self, z: &[Complex64]) -> Option<Vec<Complex64>> {
        let mut support: Vec<usize> = (0..z.len()).filter(|&j| z[j].norm_sqr() > 0.0).collect();
        if support.is_empty() {
            return None;
        }
        if support.len() > MAX_ACTIVE {
            support.sort_by(|&a, &b| z[b].norm_sqr().total_cmp(&z[a].norm_sqr()));
            support.truncate(MAX_ACTIVE);
        }
        let mut a = DMatrix::<Complex64>::zeros(self.dict.dim, support.len());
        for (k, &j) in support.iter().enumerate() {
            for (i, v) in self.dict.column(j) {
                a[(i, k)] = v;
            }
        }
        let zk = DVector::from_iterator(support.len(), support.iter().map(|&j| z[j]));
        let psi = DVector::from_column_slice(&self.psi);
        let step = a.clone().svd(true, true).solve(&(&psi - &a * &zk), 1e-12).ok()?;
        let xk = zk + step;
        if (&a * &xk - psi).norm() > FIT_TOLERANCE {
            return None;
        }
        let mut x = vec![Complex64::new(0.0, 0.0); z.len()];
        for (k, &j) in support.iter().enumerate() {
            x[j] = xk[k];
        }
        Some(x)
    }

    /// Complementary slackness asks `|<s|lambda>| = 1` on the support of an
    /// optimal `x`; nudge `lambda` onto those equations, keeping the current
    /// overlap phases, by least squares and bound again.
    fn refine_bound(&self, lambda: Vec<Complex64>, x: &[Complex64], floor: f64, overlaps: &[Complex64]) -> Option<f64> {
        let support: Vec<usize> = (0..x.len()).filter(|&j| x[j].norm() > floor).collect();
        if support.is_empty() {
            return None;
        }
        let dim = self.dict.dim;
        let mut a = DMatrix::<Complex64>::zeros(support.len(), dim);
        let mut rhs = DVector::<Complex64>::zeros(support.len());
        for (k, &j) in support.iter().enumerate() {
            for (i, v) in self.dict.column(j) {
                a[(k, i)] = v.conj();
            }
            rhs[k] = overlaps[j] / overlaps[j].norm();
        }
        let lam = DVector::from_vec(lambda);
        let gap = rhs - &a * &lam;
        let step = a.svd(true, true).solve(&gap, 1e-10).ok()?;
        let refined: Vec<Complex64> = (lam + step).iter().copied().collect();
        let g: Complex64 = refined.iter().zip(&self.psi).map(|(l, p)| l.conj() * p).sum();
        let top = self.dict.analyse(&refined).iter().map(|a| a.norm()).fold(0.0, f64::max);
        (top > 0.0).then(|| g.norm() / top)
    }

    fn polish(&self, active: &[usize], overlaps: &[Complex64]) -> Option<Vec<Complex64>> {
        let dim = self.dict.dim;
        let mut m = DMatrix::<f64>::zeros(2 * dim, active.len());
        let phases: Vec<Complex64> = active.iter().map(|&j| overlaps[j] / overlaps[j].norm()).collect();
        for (k, &j) in active.iter().enumerate() {
            for (i, v) in self.dict.column(j) {
                let a = v * phases[k];
                m[(i, k)] = a.re;
                m[(dim + i, k)] = a.im;
            }
        }
        let b = DVector::from_iterator(2 * dim, self.psi.iter().map(|p| p.re).chain(self.psi.iter().map(|p| p.im)));
        let t = nnls(&m, &b)?;
        if (&m * &t - &b).norm() > FIT_TOLERANCE {
            return None;
        }
        let mut x = vec![Complex64::new(0.0, 0.0); overlaps.len()];
        for (k, &j) in active.iter().enumerate() {
            x[j] = phases[k] * t[k];
        }
        Some(x)
    }
}

/// Lawson-Hanson nonnegative least squares, `min ||M t - b||` with `t >= 0`.
pub(crate) fn nnls(m: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let cols = m.ncols();
    let tol = 1e-12 * m.norm().max(1.0) * b.norm().max(1.0);
    let mut t = DVector::<f64>::zeros(cols);
    let mut passive = vec![false; cols];
    let solve_passive = |passive: &[bool]| -> Option<DVector<f64>> {
        let idx: Vec<usize> = (0..cols).filter(|&j| passive[j]).collect();
        let sub = m.select_columns(&idx);
        let s = sub.svd(true, true).solve(b, 1e-12).ok()?;
        let mut full = DVector::<f64>::zeros(cols);
        for (k, &j) in idx.iter().enumerate() {
            full[j] = s[k];
        }
        Some(full)
    };
    for _ in 0..3 * cols + 10 {
        let grad = m.transpose() * (b - m * &t);
        let next = (0..cols).filter(|&j| !passive[j]).max_by(|&a, &c| grad[a].total_cmp(&grad[c]));
        match next {
            Some(j) if grad[j] > tol => passive[j] = true,
            _ => return Some(t),
        }
        loop {
            let s = solve_passive(&passive)?;
            if (0..cols).all(|j| !passive[j] || s[j] > 0.0) {
                t = s;
                break;
            }
            // Step back to the boundary and drop whatever hits zero.
            let alpha = (0..cols)
                .filter(|&j| passive[j] && s[j] <= 0.0)
                .map(|j| t[j] / (t[j] - s[j]))
                .fold(f64::INFINITY, f64::min);
            t += (s - &t) * alpha;
            for j in 0..cols {
                if passive[j] && t[j] <= 1e-15 {
                    passive[j] = false;
                    t[j] = 0.0;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    Some(t)
}
