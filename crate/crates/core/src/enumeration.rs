//! Enumeration of canonical Lagrangian subspaces and the global ordering of
//! phase-normalised stabiliser states.
//!
//! Lagrangians are generated depth-first over reduced row echelon pivot
//! patterns, so each subspace is produced exactly once. The list is sorted
//! by support rank and then lexicographically by packed row words. State `i`
//! of the ordering is `(lagrangian i / 2^n, lambda = i mod 2^n)`; the first
//! `2^n` states are the computational basis states.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gf2::BitVec;
use crate::pauli::SymplecticVector;
use crate::stabiliser::{CheckMatrix, Lagrangian};
use crate::MAX_QUBITS;

/// Qubit counts above this need `allow_large`.
pub const DEFAULT_MAX_ENUM_QUBITS: usize = 6;

/// Hard ceiling for enumeration even with `allow_large`.
pub const HARD_MAX_ENUM_QUBITS: usize = 8;

/// Qubit ceiling for the hash-dedupe cross-check.
pub const MAX_EXTENSION_QUBITS: usize = 4;

const CACHE_MAGIC: &[u8; 4] = b"STLG";
const CACHE_VERSION: u8 = 1;

/// Largest `n` whose state count fits in a `u128`.
pub const MAX_COUNT_QUBITS: usize = 14;

/// `prod_{k=1}^{n} (2^k + 1)`, or `None` on overflow.
pub fn checked_lagrangian_count(n: usize) -> Option<u128> {
    (1..=n).try_fold(1u128, |acc, k| acc.checked_mul(1u128.checked_shl(k as u32)?.checked_add(1)?))
}

/// `2^n * lagrangian_count(n)`, or `None` on overflow.
pub fn checked_state_count(n: usize) -> Option<u128> {
    checked_lagrangian_count(n)?.checked_mul(1u128.checked_shl(n as u32)?)
}

/// Panics above [`MAX_COUNT_QUBITS`].
pub fn lagrangian_count(n: usize) -> u128 {
    checked_lagrangian_count(n).expect("lagrangian count overflows u128")
}

/// Panics above [`MAX_COUNT_QUBITS`].
pub fn state_count(n: usize) -> u128 {
    checked_state_count(n).expect("state count overflows u128")
}

/// Sorted, duplicate-free list of canonical Lagrangians for `n` qubits.
#[derive(Clone, PartialEq, Eq)]
pub struct LagrangianList {
    n: usize,
    ranks: Vec<u8>,
    /// `n` packed words per entry, rows in canonical order.
    words: Vec<u64>,
}

impl std::fmt::Debug for LagrangianList {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "LagrangianList(n={}, len={})", self.n, self.len())
    }
}

impl LagrangianList {
    fn from_unsorted(n: usize, mut entries: Vec<(u8, Vec<u64>)>) -> Self {
        entries.par_sort_unstable();
        let mut ranks = Vec::with_capacity(entries.len());
        let mut words = Vec::with_capacity(entries.len() * n);
        for (r, w) in entries {
            ranks.push(r);
            words.extend_from_slice(&w);
        }
        Self { n, ranks, words }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.ranks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranks.is_empty()
    }

    pub fn words(&self, i: usize) -> &[u64] {
        &self.words[i * self.n..(i + 1) * self.n]
    }

    pub fn rank(&self, i: usize) -> usize {
        self.ranks[i] as usize
    }

    /// Ordering key of entry `i`.
    pub fn key(&self, i: usize) -> (u8, &[u64]) {
        (self.ranks[i], self.words(i))
    }

    pub fn get(&self, i: usize) -> Lagrangian {
        let rows = self
            .words(i)
            .iter()
            .map(|&w| SymplecticVector::from_packed(self.n, w).expect("stored words fit"))
            .collect();
        Lagrangian::from_canonical_unchecked(self.n, rows)
    }

    pub fn iter(&self) -> impl Iterator<Item = Lagrangian> + '_ {
        (0..self.len()).map(|i| self.get(i))
    }

    /// Position of a canonical Lagrangian, by binary search on the order key.
    pub fn find(&self, lag: &Lagrangian) -> Option<usize> {
        if lag.n() != self.n {
            return None;
        }
        let rank = lag.support_rank() as u8;
        let words = lag.packed_words();
        self.find_key(rank, &words)
    }

    pub(crate) fn find_key(&self, rank: u8, words: &[u64]) -> Option<usize> {
        let (mut lo, mut hi) = (0usize, self.len());
        while lo < hi {
            let mid = (lo + hi) / 2;
            match self.key(mid).cmp(&(rank, words)) {
                std::cmp::Ordering::Less => lo = mid + 1,
                std::cmp::Ordering::Greater => hi = mid,
                std::cmp::Ordering::Equal => return Some(mid),
            }
        }
        None
    }
}

fn enum_guard(n: usize, allow_large: bool) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::QubitCount(n));
    }
    if n > HARD_MAX_ENUM_QUBITS || (n > DEFAULT_MAX_ENUM_QUBITS && !allow_large) {
        return Err(Error::Guard(format!(
            "enumerating {} Lagrangians for n = {n} is not supported{}",
            lagrangian_count(n),
            if allow_large { "" } else { " without allow_large" }
        )));
    }
    Ok(())
}

pub fn enumerate_lagrangians(n: usize) -> Result<LagrangianList> {
    enumerate_lagrangians_with(n, false)
}

/// As [`enumerate_lagrangians`], optionally lifting the soft qubit guard.
pub fn enumerate_lagrangians_with(n: usize, allow_large: bool) -> Result<LagrangianList> {
    enum_guard(n, allow_large)?;
    let cols = 2 * n;
    let patterns: Vec<u64> = (0u64..1 << cols).filter(|m| m.count_ones() as usize == n).collect();
    let entries: Vec<(u8, Vec<u64>)> = patterns
        .into_par_iter()
        .flat_map_iter(|pattern| {
            let mut out = Vec::new();
            let mut rows = Vec::with_capacity(n);
            extend_pattern(n, pattern, &pivot_columns(cols, pattern), &mut rows, &mut out);
            out
        })
        .collect();
    Ok(LagrangianList::from_unsorted(n, entries))
}

/// Pivot column indices (0 = leftmost) of a pivot bitmask, ascending.
fn pivot_columns(cols: usize, pattern: u64) -> Vec<usize> {
    (0..cols).filter(|c| pattern >> (cols - 1 - c) & 1 == 1).collect()
}

/// Depth-first fill of the free entries of each row for a fixed pivot
/// pattern, keeping the rows pairwise isotropic.
fn extend_pattern(n: usize, pattern: u64, pivots: &[usize], rows: &mut Vec<SymplecticVector>, out: &mut Vec<(u8, Vec<u64>)>) {
    let cols = 2 * n;
    let i = rows.len();
    if i == n {
        let rank = pivots.iter().filter(|&&c| c < n).count() as u8;
        out.push((rank, rows.iter().map(SymplecticVector::packed).collect()));
        return;
    }
    let c = pivots[i];
    let pivot_bit = 1u64 << (cols - 1 - c);
    // Non-pivot columns strictly to the right of this pivot.
    let free = (pivot_bit - 1) & !pattern;
    let mut sub = 0u64;
    loop {
        let row = SymplecticVector::from_echelon(n, pivot_bit | sub);
        if rows.iter().all(|r| !r.symplectic_raw(&row)) {
            rows.push(row);
            extend_pattern(n, pattern, pivots, rows, out);
            rows.pop();
        }
        sub = sub.wrapping_sub(free) & free;
        if sub == 0 {
            break;
        }
    }
}

/// Independent cross-check: grows isotropic subspaces one vector at a time,
/// deduplicating canonical forms in a hash set at every level.
pub fn enumerate_lagrangians_by_extension(n: usize) -> Result<Vec<Lagrangian>> {
    if n == 0 || n > MAX_EXTENSION_QUBITS {
        return Err(Error::Guard(format!("extension enumeration limited to 1..={MAX_EXTENSION_QUBITS} qubits")));
    }
    let all: Vec<SymplecticVector> = (1u64..1 << (2 * n))
        .map(|w| SymplecticVector::from_packed(n, w).expect("fits"))
        .collect();
    let mut level: HashSet<Vec<u64>> = HashSet::from([Vec::new()]);
    for _ in 0..n {
        let mut next = HashSet::new();
        for basis in &level {
            let rows: Vec<SymplecticVector> = basis.iter().map(|&e| SymplecticVector::from_echelon(n, e)).collect();
            for v in &all {
                if rows.iter().any(|r| r.symplectic_raw(v)) {
                    continue;
                }
                let mut echelon: Vec<BitVec> = rows.iter().chain(std::iter::once(v)).map(SymplecticVector::echelon).collect();
                crate::gf2::rref_in_place(2 * n, &mut echelon);
                if echelon.iter().any(BitVec::is_zero) {
                    continue;
                }
                next.insert(echelon.iter().map(BitVec::bits).collect());
            }
        }
        level = next;
    }
    let mut out: Vec<Lagrangian> = level
        .into_iter()
        .map(|b| Lagrangian::new(b.iter().map(|&e| SymplecticVector::from_echelon(n, e)).collect()))
        .collect::<Result<_>>()?;
    out.sort_by_key(|l| (l.support_rank(), l.packed_words()));
    Ok(out)
}

/// Writes the list in the `STLG` cache format.
pub fn save_cache(list: &LagrangianList, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(CACHE_MAGIC)?;
    w.write_all(&[CACHE_VERSION, list.n as u8])?;
    w.write_all(&(list.len() as u64).to_le_bytes())?;
    for word in &list.words {
        w.write_all(&word.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Reads an `STLG` cache, validating header, count, canonical form and order.
pub fn load_cache(path: &Path, expected_n: Option<usize>) -> Result<LagrangianList> {
    let mut r = BufReader::new(File::open(path)?);
    let corrupt = |msg: &str| Error::CorruptCache(format!("{}: {msg}", path.display()));
    let mut header = [0u8; 14];
    r.read_exact(&mut header).map_err(|_| corrupt("truncated header"))?;
    if &header[..4] != CACHE_MAGIC {
        return Err(corrupt("bad magic"));
    }
    if header[4] != CACHE_VERSION {
        return Err(Error::Mismatch(format!("cache version {} (expected {CACHE_VERSION})", header[4])));
    }
    let n = header[5] as usize;
    if let Some(want) = expected_n {
        if want != n {
            return Err(Error::Mismatch(format!("cache holds n = {n}, requested n = {want}")));
        }
    }
    if n == 0 || n > HARD_MAX_ENUM_QUBITS {
        return Err(corrupt("qubit count out of range"));
    }
    let count = u64::from_le_bytes(header[6..14].try_into().expect("8 bytes"));
    if count as u128 != lagrangian_count(n) {
        return Err(corrupt(&format!("entry count {count} does not match {}", lagrangian_count(n))));
    }
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let expected_len = count as usize * n * 8;
    if bytes.len() != expected_len {
        return Err(corrupt(&format!("payload is {} bytes, expected {expected_len}", bytes.len())));
    }
    let words: Vec<u64> = bytes
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    let ranks = words
        .par_chunks(n)
        .map(|w| {
            Lagrangian::from_packed_words(n, w)
                .map(|l| l.support_rank() as u8)
                .map_err(|e| corrupt(&format!("invalid entry: {e}")))
        })
        .collect::<Result<Vec<u8>>>()?;
    let list = LagrangianList { n, ranks, words };
    if (1..list.len()).any(|i| list.key(i - 1) >= list.key(i)) {
        return Err(corrupt("entries are not strictly sorted"));
    }
    Ok(list)
}

/// Global ordering of the phase-normalised stabiliser states.
#[derive(Clone, Debug)]
pub struct StateOrdering {
    list: LagrangianList,
}

impl StateOrdering {
    pub fn new(list: LagrangianList) -> Self {
        Self { list }
    }

    /// Enumerates the Lagrangians and wraps them.
    pub fn for_qubits(n: usize) -> Result<Self> {
        Ok(Self::new(enumerate_lagrangians(n)?))
    }

    pub fn n(&self) -> usize {
        self.list.n
    }

    pub fn lagrangians(&self) -> &LagrangianList {
        &self.list
    }

    pub fn num_states(&self) -> u64 {
        (self.list.len() as u64) << self.list.n
    }

    pub fn num_noncomputational(&self) -> u64 {
        self.num_states() - (1 << self.list.n)
    }

    pub fn state_index(&self, lagrangian_index: usize, lambdas: BitVec) -> Result<u64> {
        if lagrangian_index >= self.list.len() {
            return Err(Error::OutOfRange {
                index: lagrangian_index as u64,
                limit: self.list.len() as u64,
            });
        }
        if lambdas.len() != self.n() {
            return Err(Error::LengthMismatch {
                left: self.n(),
                right: lambdas.len(),
            });
        }
        Ok(((lagrangian_index as u64) << self.n()) | lambdas.bits())
    }

    pub fn state_of_index(&self, index: u64) -> Result<(usize, BitVec)> {
        if index >= self.num_states() {
            return Err(Error::OutOfRange {
                index,
                limit: self.num_states(),
            });
        }
        let n = self.n();
        Ok(((index >> n) as usize, BitVec::raw(n, index & ((1 << n) - 1))))
    }

    pub fn check_matrix(&self, index: u64) -> Result<CheckMatrix> {
        let (l, lambdas) = self.state_of_index(index)?;
        CheckMatrix::new(self.list.get(l), lambdas)
    }

    pub fn index_of(&self, cm: &CheckMatrix) -> Result<u64> {
        let l = self
            .list
            .find(cm.lagrangian())
            .ok_or_else(|| Error::InvalidCheckMatrix(format!("{cm:?} not in the Lagrangian list")))?;
        self.state_index(l, cm.lambdas())
    }

    /// Support rank of state `index`.
    pub fn support_rank(&self, index: u64) -> usize {
        self.list.rank((index >> self.n()) as usize)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stabiliser::Lagrangian;

    #[test]
    fn product_formula_values() {
        let lag: Vec<u128> = (1..=6).map(lagrangian_count).collect();
        assert_eq!(lag, vec![3, 15, 135, 2295, 75735, 4922775]);
        let states: Vec<u128> = (1..=6).map(state_count).collect();
        assert_eq!(states, vec![6, 60, 1080, 36720, 2423520, 315057600]);
    }

    #[test]
    fn one_qubit_order() {
        let list = enumerate_lagrangians(1).unwrap();
        let got: Vec<(u64, u64)> = list
            .iter()
            .map(|l| (l.rows()[0].p().bits(), l.rows()[0].q().bits()))
            .collect();
        // Z, then X, then Y.
        assert_eq!(got, vec![(1, 0), (0, 1), (1, 1)]);
    }

    /// Brute-force scan: every set of `n` nonzero vectors of `Z_2^{2n}`.
    fn exhaustive_scan(n: usize) -> Vec<Lagrangian> {
        let vecs: Vec<SymplecticVector> = (1u64..1 << (2 * n)).map(|w| SymplecticVector::from_packed(n, w).unwrap()).collect();
        let mut seen = HashSet::new();
        let k = vecs.len();
        let mut idx: Vec<usize> = (0..n).collect();
        loop {
            let rows: Vec<_> = idx.iter().map(|&i| vecs[i]).collect();
            if let Ok(l) = Lagrangian::from_generators(&rows) {
                seen.insert(l);
            }
            // next combination
            let mut i = n;
            while i > 0 && idx[i - 1] == k - n + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..n {
                idx[j] = idx[j - 1] + 1;
            }
        }
        let mut v: Vec<_> = seen.into_iter().collect();
        v.sort_by_key(|l| (l.support_rank(), l.packed_words()));
        v
    }

    #[test]
    fn exhaustive_scans_match_small_n() {
        for n in 1..=2 {
            let dfs: Vec<_> = enumerate_lagrangians(n).unwrap().iter().collect();
            let scan = exhaustive_scan(n);
            assert_eq!(scan.len() as u128, lagrangian_count(n));
            assert_eq!(dfs, scan);
        }
    }

    #[test]
    fn extension_cross_check() {
        for n in 1..=4 {
            let dfs: Vec<_> = enumerate_lagrangians(n).unwrap().iter().collect();
            let ext = enumerate_lagrangians_by_extension(n).unwrap();
            assert_eq!(dfs.len() as u128, lagrangian_count(n));
            assert_eq!(dfs, ext, "n = {n}");
        }
    }

    #[test]
    fn entries_are_valid_and_sorted() {
        for n in 1..=4 {
            let list = enumerate_lagrangians(n).unwrap();
            for i in 0..list.len() {
                let l = Lagrangian::new(list.get(i).rows().to_vec()).unwrap();
                assert_eq!(list.rank(i), l.support_rank());
                assert_eq!(list.find(&l), Some(i));
                if i > 0 {
                    assert!(list.key(i - 1) < list.key(i));
                }
            }
            assert!(list.get(0).is_computational());
            assert!(!list.get(1).is_computational());
        }
    }

    #[test]
    fn guards() {
        assert!(matches!(enumerate_lagrangians(7), Err(Error::Guard(_))));
        assert!(matches!(enumerate_lagrangians(0), Err(Error::QubitCount(0))));
        assert!(matches!(enumerate_lagrangians(40), Err(Error::QubitCount(40))));
        assert!(enumerate_lagrangians_by_extension(5).is_err());
    }

    #[test]
    fn state_index_examples() {
        let ord = StateOrdering::for_qubits(1).unwrap();
        let b = |s: &str| BitVec::parse(s).unwrap();
        assert_eq!(ord.state_index(0, b("0")).unwrap(), 0);
        assert_eq!(ord.state_index(0, b("1")).unwrap(), 1);
        assert_eq!(ord.state_index(1, b("0")).unwrap(), 2);
        assert_eq!(ord.state_index(2, b("1")).unwrap(), 5);
        assert!(ord.state_index(3, b("0")).is_err());
        assert!(ord.state_of_index(6).is_err());
    }

    #[test]
    fn state_index_round_trip() {
        for n in 1..=3 {
            let ord = StateOrdering::for_qubits(n).unwrap();
            let mut last = None;
            for l in 0..ord.lagrangians().len() {
                for lam in 0..1u64 << n {
                    let i = ord.state_index(l, BitVec::raw(n, lam)).unwrap();
                    assert_eq!(ord.state_of_index(i).unwrap(), (l, BitVec::raw(n, lam)));
                    assert_eq!(ord.index_of(&ord.check_matrix(i).unwrap()).unwrap(), i);
                    assert!(last.is_none_or(|p| p < i));
                    last = Some(i);
                }
            }
            assert_eq!(ord.num_states() as u128, state_count(n));
        }
    }

    #[test]
    fn computational_states_come_first() {
        let ord = StateOrdering::for_qubits(3).unwrap();
        for z in 0..8u64 {
            let cm = ord.check_matrix(z).unwrap();
            let t = cm.amplitudes().unwrap();
            assert_eq!(t.entries.len(), 1);
            assert_eq!(t.entries[0].0.bits(), z);
        }
    }

    #[test]
    fn cache_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("l3.stlg");
        let list = enumerate_lagrangians(3).unwrap();
        save_cache(&list, &path).unwrap();
        assert_eq!(load_cache(&path, Some(3)).unwrap(), list);
        assert!(matches!(load_cache(&path, Some(2)), Err(Error::Mismatch(_))));

        let bytes = std::fs::read(&path).unwrap();
        let truncated = dir.path().join("trunc.stlg");
        std::fs::write(&truncated, &bytes[..bytes.len() - 5]).unwrap();
        assert!(matches!(load_cache(&truncated, None), Err(Error::CorruptCache(_))));

        let mut bad = bytes.clone();
        bad[0] = b'X';
        std::fs::write(&truncated, &bad).unwrap();
        assert!(matches!(load_cache(&truncated, None), Err(Error::CorruptCache(_))));

        // Swap two entries: still valid subspaces, but out of order.
        let mut swapped = bytes.clone();
        let (a, b) = (14 + 3 * 8 * 10, 14 + 3 * 8 * 11);
        for i in 0..24 {
            swapped.swap(a + i, b + i);
        }
        std::fs::write(&truncated, &swapped).unwrap();
        assert!(matches!(load_cache(&truncated, None), Err(Error::CorruptCache(_))));
    }

    #[test]
    fn counts_overflow_exactly_past_the_limit() {
        assert!(checked_state_count(MAX_COUNT_QUBITS).is_some());
        assert!(checked_state_count(MAX_COUNT_QUBITS + 1).is_none());
        assert_eq!(checked_lagrangian_count(0), Some(1));
    }
}
