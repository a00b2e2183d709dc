//! The splitting lemma and the sparse triple basis of the dependency space.
//!
//! Every noncomputational state `|s>` of support rank `r` is
//! `2^(-1/2) (|t_a> + i^phi |t_b>)` for two phase-normalised states of rank
//! `r - 1` sharing one Lagrangian. The column `D_s = |s> - 2^(-1/2)|t_a> -
//! 2^(-1/2) i^phi |t_b>` is a linear dependency; the columns for all
//! noncomputational states form a basis of the dependency space.
//!
//! Entries are stored as one-byte codes: [`CODE_ONE`] is `+1`, `k` in `0..4`
//! is `-2^(-1/2) i^k`. Column `j` belongs to state `2^n + j` and carries the
//! `+1` there; its other two entries sit at rows of smaller support rank.
//! In matrix terms the square noncomputational block is therefore unit
//! upper triangular.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::enumeration::{state_count, LagrangianList, StateOrdering};
use crate::error::{Error, Result};
use crate::exact::ExactScalar;
use crate::gf2::BitVec;
use crate::pauli::{SymplecticVector, Z4Phase};
use crate::stabiliser::{support_of, transport_phase, CheckMatrix, Lagrangian, SignTransform};

pub const CODE_ONE: u8 = 255;

const BASIS_MAGIC: &[u8; 4] = b"STBB";
const BASIS_VERSION: u8 = 1;
const HEADER_LEN: usize = 4 + 1 + 1 + 8 + 8;
const RECORD_LEN: usize = 9;

const OFF_DIAGONAL: [Complex64; 4] = {
    const R: f64 = std::f64::consts::FRAC_1_SQRT_2;
    [
        Complex64::new(-R, 0.0),
        Complex64::new(0.0, -R),
        Complex64::new(R, 0.0),
        Complex64::new(0.0, R),
    ]
};

/// Value of an off-diagonal code (`0..4`).
fn off_diagonal(code: u8) -> Complex64 {
    OFF_DIAGONAL[(code & 3) as usize]
}

/// Complex value of an entry code.
pub fn decode(code: u8) -> Option<Complex64> {
    match code {
        CODE_ONE => Some(Complex64::new(1.0, 0.0)),
        0..=3 => Some(-Z4Phase::new(code as i64).to_complex() * std::f64::consts::FRAC_1_SQRT_2),
        _ => None,
    }
}

pub fn decode_exact(code: u8) -> Option<ExactScalar> {
    match code {
        CODE_ONE => Some(ExactScalar::one()),
        0..=3 => Some(-ExactScalar::unit(Z4Phase::new(code as i64), 1)),
        _ => None,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BasisEntry {
    pub row: u64,
    pub code: u8,
}

impl BasisEntry {
    pub fn value(&self) -> Complex64 {
        decode(self.code).expect("entries hold valid codes")
    }

    pub fn exact(&self) -> ExactScalar {
        decode_exact(self.code).expect("entries hold valid codes")
    }
}

/// Result of splitting one noncomputational state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    /// Common canonical Lagrangian of both children.
    pub lagrangian: Lagrangian,
    /// Child eigenvalue bits, ordered by anchor.
    pub lambdas: [BitVec; 2],
    /// Smallest support bitstring of each child; `anchors[0] < anchors[1]`.
    pub anchors: [BitVec; 2],
    /// `|s> = 2^(-1/2) (i^codes[0] |t_0> + i^codes[1] |t_1>)`; `codes[0]` is always `1`.
    pub codes: [Z4Phase; 2],
}

impl Split {
    pub fn children(&self) -> [CheckMatrix; 2] {
        self.lambdas
            .map(|l| CheckMatrix::new(self.lagrangian.clone(), l).expect("lengths agree"))
    }
}

/// Replaces row 1 by `Z_k`, `k` the leading one of its `q` part, and returns
/// the canonicalisation of the new generators.
fn split_transform(lag: &Lagrangian) -> Result<SignTransform> {
    if lag.is_computational() {
        return Err(Error::ComputationalState);
    }
    let n = lag.n();
    let k = lag.rows()[0].q().leading_index().expect("leading row has q != 0");
    let mut rows = lag.rows().to_vec();
    rows[0] = SymplecticVector::raw(n, 1 << (n - 1 - k), 0);
    SignTransform::new(&rows)
}

struct SplitParts {
    lambdas: [BitVec; 2],
    anchors: [BitVec; 2],
    phi: Z4Phase,
}

fn split_parts(lag: &Lagrangian, t: &SignTransform, lambdas: BitVec) -> Result<SplitParts> {
    let n = lag.n();
    let top = 1u64 << (n - 1);
    let mut kids = [0u64, top].map(|b| BitVec::raw(n, t.apply((lambdas.bits() & !top) | b)));
    let mut anchors = kids.map(|l| support_of(&t.canonical, l).min_element());
    if anchors[1] < anchors[0] {
        kids.swap(0, 1);
        anchors.swap(0, 1);
    }
    let phi = transport_phase(lag, lambdas, &anchors[0], &anchors[1])?;
    Ok(SplitParts { lambdas: kids, anchors, phi })
}

pub fn split(cm: &CheckMatrix) -> Result<Split> {
    let t = split_transform(cm.lagrangian())?;
    let parts = split_parts(cm.lagrangian(), &t, cm.lambdas())?;
    Ok(Split {
        lagrangian: t.canonical,
        lambdas: parts.lambdas,
        anchors: parts.anchors,
        codes: [Z4Phase::ONE, parts.phi],
    })
}

/// Bytes needed to hold the basis for `n` qubits in memory.
pub fn basis_memory_bytes(n: usize) -> u128 {
    let cols = state_count(n) - (1u128 << n);
    cols * 3 * RECORD_LEN as u128
}

/// Sparse `|S| x |S_N|` matrix with exactly three entries per column,
/// stored column-major with rows ascending inside each column.
#[derive(Clone, PartialEq, Eq)]
pub struct TripleBasis {
    n: usize,
    num_rows: u64,
    rows: Vec<u64>,
    codes: Vec<u8>,
    /// Columns at or beyond this index have no computational-row entries.
    computational_cols: usize,
}

impl std::fmt::Debug for TripleBasis {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "TripleBasis(n={}, {}x{})", self.n, self.num_rows, self.num_cols())
    }
}

/// Writes the three entries of every column of Lagrangian `l` (`l >= 1`).
fn fill_lagrangian(list: &LagrangianList, l: usize, rows: &mut [u64], codes: &mut [u8]) -> Result<()> {
    let n = list.n();
    let lag = list.get(l);
    let t = split_transform(&lag)?;
    let child = list
        .find(&t.canonical)
        .ok_or_else(|| Error::InvalidCheckMatrix(format!("split child {:?} missing from list", t.canonical)))?
        as u64;
    for lam in 0..1u64 << n {
        let parts = split_parts(&lag, &t, BitVec::raw(n, lam))?;
        let at = 3 * lam as usize;
        let mut entries = [
            ((child << n) | parts.lambdas[0].bits(), 0u8),
            ((child << n) | parts.lambdas[1].bits(), parts.phi.k()),
        ];
        entries.sort_unstable();
        for (i, (r, c)) in entries.into_iter().enumerate() {
            rows[at + i] = r;
            codes[at + i] = c;
        }
        rows[at + 2] = ((l as u64) << n) | lam;
        codes[at + 2] = CODE_ONE;
    }
    Ok(())
}

fn memory_guard(n: usize, max_mem: Option<u64>) -> Result<()> {
    let need = basis_memory_bytes(n);
    match max_mem {
        Some(limit) if need > limit as u128 => Err(Error::Guard(format!(
            "basis for n = {n} needs about {need} bytes, limit is {limit}"
        ))),
        _ => Ok(()),
    }
}

/// Builds all columns in global state order. `max_mem` bounds the estimated
/// footprint of the entry arrays.
pub fn build_basis(ordering: &StateOrdering, max_mem: Option<u64>) -> Result<TripleBasis> {
    let n = ordering.n();
    memory_guard(n, max_mem)?;
    let list = ordering.lagrangians();
    let cols = ordering.num_noncomputational() as usize;
    let mut rows = vec![0u64; 3 * cols];
    let mut codes = vec![0u8; 3 * cols];
    let block = 3 << n;
    rows.par_chunks_mut(block)
        .zip(codes.par_chunks_mut(block))
        .enumerate()
        .try_for_each(|(i, (r, c))| fill_lagrangian(list, i + 1, r, c))?;
    Ok(TripleBasis::from_parts(n, ordering.num_states(), rows, codes))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisFormat {
    Binary,
    Csv,
}

trait ColumnSink {
    fn begin(&mut self, n: usize, num_rows: u64, num_cols: u64) -> Result<()>;
    fn column(&mut self, j: u64, rows: &[u64], codes: &[u8]) -> Result<()>;
    fn finish(&mut self) -> Result<()>;
}

struct BinarySink<W: Write>(W);

impl<W: Write> ColumnSink for BinarySink<W> {
    fn begin(&mut self, n: usize, num_rows: u64, num_cols: u64) -> Result<()> {
        self.0.write_all(BASIS_MAGIC)?;
        self.0.write_all(&[BASIS_VERSION, n as u8])?;
        self.0.write_all(&num_rows.to_le_bytes())?;
        self.0.write_all(&num_cols.to_le_bytes())?;
        Ok(())
    }

    fn column(&mut self, _j: u64, rows: &[u64], codes: &[u8]) -> Result<()> {
        for (r, c) in rows.iter().zip(codes) {
            self.0.write_all(&r.to_le_bytes())?;
            self.0.write_all(&[*c])?;
        }
        Ok(())
    }

    fn finish(&mut self) -> Result<()> {
        Ok(self.0.flush()?)
    }
}

struct CsvSink<W: Write>(W);

impl<W: Write> ColumnSink for CsvSink<W> {
    fn begin(&mut self, _n: usize, _num_rows: u64, _num_cols: u64) -> Result<()> {
        writeln!(self.0, "col,row,code")?;
        Ok(())
    }

    fn column(&mut self, j: u64, rows: &[u64], codes: &[u8]) -> Result<()> {
        for (r, c) in rows.iter().zip(codes) {
            writeln!(self.0, "{j},{r},{c}")?;
        }
        Ok(())
    }

    fn finish(&mut self) -> Result<()> {
        Ok(self.0.flush()?)
    }
}

fn sink_for(path: &Path, format: BasisFormat) -> Result<Box<dyn ColumnSink>> {
    let w = BufWriter::new(File::create(path)?);
    Ok(match format {
        BasisFormat::Binary => Box::new(BinarySink(w)),
        BasisFormat::Csv => Box::new(CsvSink(w)),
    })
}

pub fn export_basis(b: &TripleBasis, path: &Path, format: BasisFormat) -> Result<()> {
    let mut sink = sink_for(path, format)?;
    sink.begin(b.n, b.num_rows, b.num_cols())?;
    for j in 0..b.num_cols() as usize {
        sink.column(j as u64, &b.rows[3 * j..3 * j + 3], &b.codes[3 * j..3 * j + 3])?;
    }
    sink.finish()
}

/// Generates and writes the basis in batches of Lagrangians without holding
/// the whole matrix in memory.
pub fn stream_basis(ordering: &StateOrdering, path: &Path, format: BasisFormat) -> Result<()> {
    const BATCH: usize = 1024;
    let n = ordering.n();
    let list = ordering.lagrangians();
    let mut sink = sink_for(path, format)?;
    sink.begin(n, ordering.num_states(), ordering.num_noncomputational())?;
    let block = 3 << n;
    let mut start = 1;
    while start < list.len() {
        let end = (start + BATCH).min(list.len());
        let mut rows = vec![0u64; (end - start) * block];
        let mut codes = vec![0u8; (end - start) * block];
        rows.par_chunks_mut(block)
            .zip(codes.par_chunks_mut(block))
            .enumerate()
            .try_for_each(|(i, (r, c))| fill_lagrangian(list, start + i, r, c))?;
        let first_col = ((start - 1) << n) as u64;
        for (j, (r, c)) in rows.chunks(3).zip(codes.chunks(3)).enumerate() {
            sink.column(first_col + j as u64, r, c)?;
        }
        start = end;
    }
    sink.finish()
}

/// Reads a binary basis file. CSV exports are for inspection only.
pub fn import_basis(path: &Path) -> Result<TripleBasis> {
    let mut r = BufReader::new(File::open(path)?);
    let corrupt = |msg: String| Error::CorruptCache(format!("{}: {msg}", path.display()));
    let mut header = [0u8; HEADER_LEN];
    r.read_exact(&mut header).map_err(|_| corrupt("truncated header".into()))?;
    if &header[..4] != BASIS_MAGIC {
        let hint = if header.starts_with(b"col,") { " (CSV files cannot be imported)" } else { "" };
        return Err(corrupt(format!("bad magic{hint}")));
    }
    if header[4] != BASIS_VERSION {
        return Err(Error::Mismatch(format!("basis version {} (expected {BASIS_VERSION})", header[4])));
    }
    let n = header[5] as usize;
    let num_rows = u64::from_le_bytes(header[6..14].try_into().expect("8 bytes"));
    let num_cols = u64::from_le_bytes(header[14..22].try_into().expect("8 bytes"));
    if n == 0 || n > crate::enumeration::HARD_MAX_ENUM_QUBITS {
        return Err(corrupt(format!("qubit count {n} out of range")));
    }
    if num_rows as u128 != state_count(n) || num_cols != num_rows - (1 << n) {
        return Err(corrupt(format!("dimensions {num_rows}x{num_cols} do not match n = {n}")));
    }
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    let expected = num_cols as usize * 3 * RECORD_LEN;
    if payload.len() != expected {
        return Err(corrupt(format!("payload is {} bytes, expected {expected}", payload.len())));
    }
    let mut rows = Vec::with_capacity(3 * num_cols as usize);
    let mut codes = Vec::with_capacity(3 * num_cols as usize);
    for (i, rec) in payload.chunks_exact(RECORD_LEN).enumerate() {
        let row = u64::from_le_bytes(rec[..8].try_into().expect("8 bytes"));
        let code = rec[8];
        let diagonal = (1u64 << n) + (i / 3) as u64;
        let valid = if i % 3 == 2 { row == diagonal && code == CODE_ONE } else { row < diagonal && code <= 3 };
        if !valid {
            return Err(corrupt(format!("invalid entry {} of column {} (row {row}, code {code})", i % 3, i / 3)));
        }
        rows.push(row);
        codes.push(code);
    }
    Ok(TripleBasis::from_parts(n, num_rows, rows, codes))
}

/// Reads the header line of a CSV export and counts data rows.
pub fn csv_data_rows(path: &Path) -> Result<usize> {
    let r = BufReader::new(File::open(path)?);
    let mut count = 0;
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if i == 0 {
            if line != "col,row,code" {
                return Err(Error::CorruptCache(format!("{}: unexpected CSV header", path.display())));
            }
        } else if !line.is_empty() {
            count += 1;
        }
    }
    Ok(count)
}

/// Solution of `Bx = gamma` by substitution on the noncomputational block.
#[derive(Clone, Debug)]
pub struct TriangularSolution {
    pub x: Vec<Complex64>,
    /// Largest remaining `|(gamma - Bx)_row|`; zero up to rounding when
    /// `gamma` is a dependency.
    pub residual: f64,
}

impl TripleBasis {
    fn from_parts(n: usize, num_rows: u64, rows: Vec<u64>, codes: Vec<u8>) -> Self {
        let off = 1u64 << n;
        let computational_cols = rows.chunks_exact(3).rposition(|c| c[0] < off).map_or(0, |j| j + 1);
        Self {
            n,
            num_rows,
            rows,
            codes,
            computational_cols,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_rows(&self) -> u64 {
        self.num_rows
    }

    pub fn num_cols(&self) -> u64 {
        (self.rows.len() / 3) as u64
    }

    pub fn nnz(&self) -> u64 {
        self.rows.len() as u64
    }

    pub fn column(&self, j: usize) -> [BasisEntry; 3] {
        std::array::from_fn(|i| BasisEntry {
            row: self.rows[3 * j + i],
            code: self.codes[3 * j + i],
        })
    }

    fn offset(&self) -> u64 {
        1 << self.n
    }

    /// `B x`, length `num_rows`.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len() as u64, self.num_cols());
        let off = self.offset() as usize;
        let mut out = vec![Complex64::new(0.0, 0.0); self.num_rows as usize];
        out[off..].copy_from_slice(x);
        for ((rows, codes), xj) in self.rows.chunks_exact(3).zip(self.codes.chunks_exact(3)).zip(x) {
            out[rows[0] as usize] += off_diagonal(codes[0]) * xj;
            out[rows[1] as usize] += off_diagonal(codes[1]) * xj;
        }
        out
    }

    /// `B^H z`, length `num_cols`.
    pub fn apply_adjoint(&self, z: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(z.len() as u64, self.num_rows);
        let off = self.offset() as usize;
        self.rows
            .par_chunks_exact(3)
            .zip(self.codes.par_chunks_exact(3))
            .zip(&z[off..])
            .map(|((rows, codes), zd)| {
                zd + off_diagonal(codes[0]).conj() * z[rows[0] as usize]
                    + off_diagonal(codes[1]).conj() * z[rows[1] as usize]
            })
            .collect()
    }

    /// `B_c u`: the computational rows of `B u`, length `2^n`.
    pub fn apply_computational(&self, u: &[Complex64]) -> Vec<Complex64> {
        let off = self.offset();
        let k = self.computational_cols;
        let mut out = vec![Complex64::new(0.0, 0.0); off as usize];
        for ((rows, codes), uj) in self.rows[..3 * k].chunks_exact(3).zip(self.codes[..3 * k].chunks_exact(3)).zip(u) {
            for i in 0..2 {
                if rows[i] < off {
                    out[rows[i] as usize] += off_diagonal(codes[i]) * uj;
                }
            }
        }
        out
    }

    /// `B_c^H r` for `r` of length `2^n`.
    pub fn apply_computational_adjoint(&self, r: &[Complex64]) -> Vec<Complex64> {
        let off = self.offset();
        let k = self.computational_cols;
        let mut out = vec![Complex64::new(0.0, 0.0); self.num_cols() as usize];
        for ((rows, codes), o) in self.rows[..3 * k].chunks_exact(3).zip(self.codes[..3 * k].chunks_exact(3)).zip(&mut out) {
            for i in 0..2 {
                if rows[i] < off {
                    *o += off_diagonal(codes[i]).conj() * r[rows[i] as usize];
                }
            }
        }
        out
    }

    /// Solves `B_N y = v` in place, `B_N` the noncomputational block.
    pub fn solve_block(&self, v: &mut [Complex64]) {
        let off = self.offset();
        for j in (0..v.len()).rev() {
            let xj = v[j];
            for k in 3 * j..3 * j + 2 {
                let row = self.rows[k];
                if row >= off {
                    v[(row - off) as usize] -= off_diagonal(self.codes[k]) * xj;
                }
            }
        }
    }

    /// Solves `B_N^H y = v` in place.
    pub fn solve_block_adjoint(&self, v: &mut [Complex64]) {
        let off = self.offset();
        for j in 0..v.len() {
            let mut acc = v[j];
            for k in 3 * j..3 * j + 2 {
                let row = self.rows[k];
                if row >= off {
                    acc -= off_diagonal(self.codes[k]).conj() * v[(row - off) as usize];
                }
            }
            v[j] = acc;
        }
    }

    /// Checks the unit diagonal and that the two other entries of every
    /// column lie at rows of strictly smaller support rank.
    pub fn check_triangular(&self, ordering: &StateOrdering) -> Result<()> {
        if ordering.n() != self.n || ordering.num_states() != self.num_rows {
            return Err(Error::Mismatch("basis and ordering disagree".into()));
        }
        (0..self.num_cols() as usize).into_par_iter().try_for_each(|j| {
            let col = self.column(j);
            let diag = self.offset() + j as u64;
            let bad = |msg: &str| Err(Error::Mismatch(format!("column {j}: {msg}")));
            if col[2].row != diag || col[2].code != CODE_ONE {
                return bad("diagonal entry is not ONE at row 2^n + j");
            }
            let rank = ordering.support_rank(diag);
            for e in &col[..2] {
                if e.code > 3 {
                    return bad("off-diagonal code out of range");
                }
                if e.row >= diag || ordering.support_rank(e.row) >= rank {
                    return bad("entry at or below the diagonal rank");
                }
            }
            if col[0].row >= col[1].row {
                return bad("rows not strictly increasing");
            }
            Ok(())
        })
    }

    /// Exact check that column `j` sums to the zero vector, using amplitudes
    /// from the stabiliser-group projection oracle.
    pub fn column_is_exact(&self, ordering: &StateOrdering, j: usize) -> Result<bool> {
        let n = self.n;
        let mut acc = vec![ExactScalar::zero(); 1 << n];
        for e in self.column(j) {
            let table = ordering.check_matrix(e.row)?.amplitudes_by_projection()?;
            let (phase, half_powers, negate) = match e.code {
                CODE_ONE => (Z4Phase::ONE, table.rank as u32, false),
                k => (Z4Phase::new(k as i64), table.rank as u32 + 1, true),
            };
            for (z, ph) in &table.entries {
                let term = ExactScalar::unit(*ph + phase, half_powers);
                acc[z.bits() as usize] += if negate { -term } else { term };
            }
        }
        Ok(acc.iter().all(ExactScalar::is_zero))
    }

    /// Solves `Bx = gamma` for a sparse `gamma` given as `(row, value)` pairs.
    pub fn triangular_solve(&self, gamma: &[(u64, Complex64)]) -> Result<TriangularSolution> {
        let mut r = vec![Complex64::new(0.0, 0.0); self.num_rows as usize];
        for &(row, v) in gamma {
            if row >= self.num_rows {
                return Err(Error::OutOfRange { index: row, limit: self.num_rows });
            }
            r[row as usize] += v;
        }
        let off = self.offset() as usize;
        let mut x = vec![Complex64::new(0.0, 0.0); self.num_cols() as usize];
        for j in (0..x.len()).rev() {
            let xj = r[off + j];
            if xj == Complex64::new(0.0, 0.0) {
                continue;
            }
            x[j] = xj;
            for e in self.column(j) {
                r[e.row as usize] -= e.value() * xj;
            }
        }
        let residual = r.iter().map(|v| v.norm()).fold(0.0, f64::max);
        Ok(TriangularSolution { x, residual })
    }
}

/// `s~ = |s> - sum_z s_z |z>` for a noncomputational state.
#[derive(Clone, Debug, PartialEq)]
pub struct CanonicalDependency {
    pub state: u64,
    /// `(row, coefficient)`, the state itself last.
    pub entries: Vec<(u64, Complex64)>,
}

pub fn canonical_dependency(ordering: &StateOrdering, state: u64) -> Result<CanonicalDependency> {
    let cm = ordering.check_matrix(state)?;
    if cm.lagrangian().is_computational() {
        return Err(Error::ComputationalState);
    }
    let table = cm.amplitudes()?;
    let m = table.magnitude();
    let mut entries: Vec<(u64, Complex64)> = table
        .entries
        .iter()
        .map(|(z, ph)| (z.bits(), -ph.to_complex() * m))
        .collect();
    entries.push((state, Complex64::new(1.0, 0.0)));
    Ok(CanonicalDependency { state, entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::SymplecticVector;

    const R: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn state(p: &str, q: &str, lam: &str) -> CheckMatrix {
        CheckMatrix::new(
            Lagrangian::new(vec![SymplecticVector::parse(p, q).unwrap()]).unwrap(),
            BitVec::parse(lam).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn split_examples() {
        let zero = BitVec::parse("0").unwrap();
        let one = BitVec::parse("1").unwrap();
        let plus = split(&state("0", "1", "0")).unwrap();
        assert_eq!(plus.lagrangian, Lagrangian::computational(1).unwrap());
        assert_eq!(plus.lambdas, [zero, one]);
        assert_eq!(plus.codes, [Z4Phase::ONE, Z4Phase::ONE]);

        let plus_i = split(&state("1", "1", "0")).unwrap();
        assert_eq!(plus_i.lambdas, [zero, one]);
        assert_eq!(plus_i.codes, [Z4Phase::ONE, Z4Phase::I]);

        let bell = CheckMatrix::from_signed_generators(
            &[SymplecticVector::parse("00", "11").unwrap(), SymplecticVector::parse("11", "00").unwrap()],
            BitVec::parse("00").unwrap(),
        )
        .unwrap();
        let s = split(&bell).unwrap();
        assert_eq!(s.anchors, [BitVec::parse("00").unwrap(), BitVec::parse("11").unwrap()]);
        assert_eq!(s.codes, [Z4Phase::ONE, Z4Phase::ONE]);

        assert!(matches!(split(&state("1", "0", "1")), Err(Error::ComputationalState)));
    }

    #[test]
    fn split_halves_support_and_reproduces_parent() {
        for n in 1..=3 {
            let ord = StateOrdering::for_qubits(n).unwrap();
            for i in 1 << n..ord.num_states() {
                let cm = ord.check_matrix(i).unwrap();
                let s = split(&cm).unwrap();
                let parent = cm.support().elements();
                let kids = s.children().map(|k| k.support().elements());
                assert_eq!(kids[0].len() * 2, parent.len());
                assert_eq!(kids[1].len() * 2, parent.len());
                let mut union: Vec<_> = kids.concat();
                union.sort();
                assert_eq!(union, parent, "kids must partition the parent support");
                for k in s.children() {
                    assert_eq!(k.support_rank() + 1, cm.support_rank());
                }
                // |s> = 2^(-1/2) (i^a |t0> + i^b |t1>), checked on projection amplitudes.
                let want = cm.amplitudes_by_projection().unwrap().to_dense();
                let mut got = vec![c(0.0, 0.0); 1 << n];
                for (k, code) in s.children().iter().zip(s.codes) {
                    for (z, v) in k.amplitudes_by_projection().unwrap().to_dense().into_iter().enumerate() {
                        got[z] += v * code.to_complex() * R;
                    }
                }
                for (a, b) in got.iter().zip(&want) {
                    assert!((a - b).norm() < 1e-12, "state {i}");
                }
            }
        }
    }

    #[test]
    fn one_qubit_basis_is_explicit() {
        let ord = StateOrdering::for_qubits(1).unwrap();
        let b = build_basis(&ord, None).unwrap();
        assert_eq!((b.num_rows(), b.num_cols(), b.nnz()), (6, 4, 12));
        // |+>, |->, |+i>, |-i>
        let want = [
            [(0, c(-R, 0.0)), (1, c(-R, 0.0)), (2, c(1.0, 0.0))],
            [(0, c(-R, 0.0)), (1, c(R, 0.0)), (3, c(1.0, 0.0))],
            [(0, c(-R, 0.0)), (1, c(0.0, -R)), (4, c(1.0, 0.0))],
            [(0, c(-R, 0.0)), (1, c(0.0, R)), (5, c(1.0, 0.0))],
        ];
        for (j, col) in want.iter().enumerate() {
            for (e, (row, v)) in b.column(j).iter().zip(col) {
                assert_eq!(e.row, *row);
                assert!((e.value() - v).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn small_bases_are_exact_and_triangular() {
        for n in 1..=3 {
            let ord = StateOrdering::for_qubits(n).unwrap();
            let b = build_basis(&ord, None).unwrap();
            assert_eq!(b.num_cols(), ord.num_states() - (1 << n));
            b.check_triangular(&ord).unwrap();
            for j in 0..b.num_cols() as usize {
                assert!(b.column_is_exact(&ord, j).unwrap(), "n = {n}, column {j}");
            }
        }
    }

    #[test]
    fn exactness_check_rejects_a_wrong_code() {
        let ord = StateOrdering::for_qubits(2).unwrap();
        let mut b = build_basis(&ord, None).unwrap();
        b.codes[3 * 17 + 1] = (b.codes[3 * 17 + 1] + 2) % 4;
        assert!(!b.column_is_exact(&ord, 17).unwrap());
    }

    #[test]
    fn triangular_solve_recovers_columns_and_dependencies() {
        let ord = StateOrdering::for_qubits(1).unwrap();
        let b = build_basis(&ord, None).unwrap();
        let dep = canonical_dependency(&ord, 4).unwrap();
        let sol = b.triangular_solve(&dep.entries).unwrap();
        assert_eq!(sol.x, vec![c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        assert!(sol.residual < 1e-15);

        let ord = StateOrdering::for_qubits(3).unwrap();
        let b = build_basis(&ord, None).unwrap();
        for j in [0usize, 5, 400, 1071] {
            let gamma: Vec<_> = b.column(j).iter().map(|e| (e.row, e.value())).collect();
            let sol = b.triangular_solve(&gamma).unwrap();
            for (i, x) in sol.x.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((x - c(want, 0.0)).norm() < 1e-12);
            }
        }
        for s in (8..ord.num_states()).step_by(7) {
            let dep = canonical_dependency(&ord, s).unwrap();
            assert!(b.triangular_solve(&dep.entries).unwrap().residual < 1e-10);
        }
    }

    #[test]
    fn canonical_dependency_examples() {
        let ord = StateOrdering::for_qubits(1).unwrap();
        let plus = canonical_dependency(&ord, 2).unwrap();
        assert_eq!(plus.entries, vec![(0, c(-R, 0.0)), (1, c(-R, 0.0)), (2, c(1.0, 0.0))]);
        let minus_i = canonical_dependency(&ord, 5).unwrap();
        let want = [(0, c(-R, 0.0)), (1, c(0.0, R)), (5, c(1.0, 0.0))];
        for ((r, v), (wr, wv)) in minus_i.entries.iter().zip(want) {
            assert_eq!(*r, wr);
            assert!((v - wv).norm() < 1e-15);
        }
        assert!(matches!(canonical_dependency(&ord, 1), Err(Error::ComputationalState)));
    }

    #[test]
    fn block_solves_invert_block() {
        let ord = StateOrdering::for_qubits(2).unwrap();
        let b = build_basis(&ord, None).unwrap();
        let m = b.num_cols() as usize;
        let v: Vec<Complex64> = (0..m).map(|i| c(i as f64 * 0.1 - 1.0, (i % 5) as f64)).collect();
        // B_N (B_N^-1 v) = v
        let mut y = v.clone();
        b.solve_block(&mut y);
        let mut full = vec![c(0.0, 0.0); m];
        for (j, yj) in y.iter().enumerate() {
            for e in b.column(j) {
                if e.row >= 4 {
                    full[(e.row - 4) as usize] += e.value() * yj;
                }
            }
        }
        for (a, w) in full.iter().zip(&v) {
            assert!((a - w).norm() < 1e-12);
        }
        // B_N^H (B_N^-H v) = v
        let mut y = v.clone();
        b.solve_block_adjoint(&mut y);
        for j in 0..m {
            let got: Complex64 = b
                .column(j)
                .iter()
                .filter(|e| e.row >= 4)
                .map(|e| e.value().conj() * y[(e.row - 4) as usize])
                .sum();
            assert!((got - v[j]).norm() < 1e-12);
        }
    }

    #[test]
    fn file_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let ord = StateOrdering::for_qubits(2).unwrap();
        let b = build_basis(&ord, None).unwrap();
        let bin = dir.path().join("b2.stbb");
        export_basis(&b, &bin, BasisFormat::Binary).unwrap();
        assert_eq!(import_basis(&bin).unwrap(), b);

        let streamed = dir.path().join("s2.stbb");
        stream_basis(&ord, &streamed, BasisFormat::Binary).unwrap();
        assert_eq!(std::fs::read(&streamed).unwrap(), std::fs::read(&bin).unwrap());

        let ord1 = StateOrdering::for_qubits(1).unwrap();
        let csv = dir.path().join("b1.csv");
        stream_basis(&ord1, &csv, BasisFormat::Csv).unwrap();
        assert_eq!(csv_data_rows(&csv).unwrap(), 12);
        assert!(matches!(import_basis(&csv), Err(Error::CorruptCache(_))));

        let mut bytes = std::fs::read(&bin).unwrap();
        bytes.truncate(bytes.len() - 1);
        std::fs::write(&bin, &bytes).unwrap();
        assert!(matches!(import_basis(&bin), Err(Error::CorruptCache(_))));
    }

    #[test]
    fn memory_guard_refuses() {
        let ord = StateOrdering::for_qubits(2).unwrap();
        assert!(matches!(build_basis(&ord, Some(100)), Err(Error::Guard(_))));
        assert_eq!(basis_memory_bytes(1), 4 * 3 * 9);
    }
}
