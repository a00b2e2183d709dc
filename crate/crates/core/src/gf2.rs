//! Bit-packed vectors and matrices over GF(2).
//!
//! A [`BitVec`] holds at most 64 components in a single machine word.
//! Component `0` is the most significant of the `len` low bits, so the packed
//! word of a bitstring is that bitstring read as a binary integer with the
//! leftmost character first. Comparing packed words therefore compares
//! bitstrings as binary integers, and the leftmost column of a [`BitMatrix`]
//! is the highest bit of each row word.

use std::fmt;

use crate::error::{Error, Result};

/// Largest supported vector length.
pub const MAX_LEN: usize = 64;

#[inline]
fn mask(len: usize) -> u64 {
    if len == 64 {
        u64::MAX
    } else {
        (1u64 << len) - 1
    }
}

/// A vector over GF(2) of fixed length `len <= 64`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVec {
    bits: u64,
    len: u8,
}

impl BitVec {
    pub fn zeros(len: usize) -> Result<Self> {
        if len > MAX_LEN {
            return Err(Error::TooLong(len));
        }
        Ok(Self { bits: 0, len: len as u8 })
    }

    /// Builds a vector from its packed word. Bits above `len` must be clear.
    pub fn from_bits(len: usize, bits: u64) -> Result<Self> {
        if len > MAX_LEN {
            return Err(Error::TooLong(len));
        }
        if bits & !mask(len) != 0 {
            return Err(Error::BitsOutOfRange { bits, len });
        }
        Ok(Self { bits, len: len as u8 })
    }

    /// Unchecked constructor for hot paths; callers guarantee the invariants.
    #[inline]
    pub(crate) const fn raw(len: usize, bits: u64) -> Self {
        Self { bits, len: len as u8 }
    }

    /// The unit vector with component `i` set.
    pub fn unit(len: usize, i: usize) -> Result<Self> {
        let mut v = Self::zeros(len)?;
        v.set(i, true);
        Ok(v)
    }

    /// Parses a string of `0`/`1` characters, leftmost character first.
    pub fn parse(s: &str) -> Result<Self> {
        let len = s.chars().count();
        let mut v = Self::zeros(len)?;
        for (i, ch) in s.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => v.set(i, true),
                _ => return Err(Error::InvalidState(format!("bad bit character {ch:?} in {s:?}"))),
            }
        }
        Ok(v)
    }

    #[inline]
    pub const fn len(&self) -> usize {
        self.len as usize
    }

    #[inline]
    pub const fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub const fn bits(&self) -> u64 {
        self.bits
    }

    #[inline]
    pub const fn is_zero(&self) -> bool {
        self.bits == 0
    }

    #[inline]
    pub const fn weight(&self) -> u32 {
        self.bits.count_ones()
    }

    #[inline]
    fn shift(&self, i: usize) -> usize {
        assert!(i < self.len(), "component {i} out of range (len={})", self.len);
        self.len() - 1 - i
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        (self.bits >> self.shift(i)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        let s = self.shift(i);
        if value {
            self.bits |= 1 << s;
        } else {
            self.bits &= !(1 << s);
        }
    }

    /// Index of the first (leftmost) set component.
    #[inline]
    pub fn leading_index(&self) -> Option<usize> {
        if self.bits == 0 {
            None
        } else {
            Some(self.bits.leading_zeros() as usize + self.len() - 64)
        }
    }

    fn check_len(&self, other: &Self) -> Result<()> {
        if self.len != other.len {
            return Err(Error::LengthMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(())
    }

    pub fn xor(&self, other: &Self) -> Result<Self> {
        self.check_len(other)?;
        Ok(Self::raw(self.len(), self.bits ^ other.bits))
    }

    pub fn and(&self, other: &Self) -> Result<Self> {
        self.check_len(other)?;
        Ok(Self::raw(self.len(), self.bits & other.bits))
    }

    /// Dot product mod 2.
    pub fn dot(&self, other: &Self) -> Result<bool> {
        self.check_len(other)?;
        Ok((self.bits & other.bits).count_ones() & 1 == 1)
    }

    /// Concatenation `self ++ other`.
    pub fn concat(&self, other: &Self) -> Result<Self> {
        let len = self.len() + other.len();
        if len > MAX_LEN {
            return Err(Error::TooLong(len));
        }
        let hi = if other.len() == 64 { 0 } else { self.bits << other.len() };
        Ok(Self::raw(len, hi | other.bits))
    }

    /// Splits into the first `at` components and the remainder.
    pub fn split_at(&self, at: usize) -> (Self, Self) {
        assert!(at <= self.len());
        let tail = self.len() - at;
        let hi = if tail == 64 { 0 } else { self.bits >> tail };
        (Self::raw(at, hi), Self::raw(tail, self.bits & mask(tail)))
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len()).map(|i| self.get(i))
    }
}

impl fmt::Debug for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVec({self})")
    }
}

impl fmt::Display for BitVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// An elementary row operation recorded during row reduction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RowOp {
    Swap(usize, usize),
    /// `rows[target] += rows[source]`
    Add { target: usize, source: usize },
}

pub type RowOps = Vec<RowOp>;

/// Replays row operations on a parallel array of items. `add(target, source)`
/// must implement `target += source` for the item type.
pub fn replay_row_ops<T: Clone>(ops: &[RowOp], items: &mut [T], mut add: impl FnMut(&mut T, &T)) {
    for op in ops {
        match *op {
            RowOp::Swap(a, b) => items.swap(a, b),
            RowOp::Add { target, source } => {
                let src = items[source].clone();
                add(&mut items[target], &src);
            }
        }
    }
}

/// A dense matrix over GF(2) with at most 64 columns.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: Vec<BitVec>,
    cols: usize,
}

impl BitMatrix {
    pub fn new(cols: usize, rows: Vec<BitVec>) -> Result<Self> {
        if cols > MAX_LEN {
            return Err(Error::TooLong(cols));
        }
        for r in &rows {
            if r.len() != cols {
                return Err(Error::LengthMismatch {
                    left: cols,
                    right: r.len(),
                });
            }
        }
        Ok(Self { rows, cols })
    }

    /// Builds a matrix from `0`/`1` row strings.
    pub fn parse(rows: &[&str]) -> Result<Self> {
        let parsed = rows.iter().map(|r| BitVec::parse(r)).collect::<Result<Vec<_>>>()?;
        let cols = parsed.first().map_or(0, BitVec::len);
        Self::new(cols, parsed)
    }

    pub fn zero(rows: usize, cols: usize) -> Result<Self> {
        Self::new(cols, vec![BitVec::zeros(cols)?; rows])
    }

    pub fn identity(n: usize) -> Result<Self> {
        Self::new(n, (0..n).map(|i| BitVec::unit(n, i)).collect::<Result<_>>()?)
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn col_count(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> &[BitVec] {
        &self.rows
    }

    pub fn into_rows(self) -> Vec<BitVec> {
        self.rows
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.rows[r].get(c)
    }

    pub fn transpose(&self) -> Result<Self> {
        if self.rows.len() > MAX_LEN {
            return Err(Error::TooLong(self.rows.len()));
        }
        let m = self.rows.len();
        let out = (0..self.cols)
            .map(|c| {
                let mut v = BitVec::raw(m, 0);
                for (r, row) in self.rows.iter().enumerate() {
                    if row.get(c) {
                        v.set(r, true);
                    }
                }
                v
            })
            .collect();
        Self::new(m, out)
    }

    /// Whether the matrix is in reduced row echelon form: nonzero rows first,
    /// pivot columns strictly increasing, and each pivot column zero outside
    /// its pivot row.
    pub fn is_rref(&self) -> bool {
        let mut last: Option<usize> = None;
        let mut seen_zero = false;
        for (r, row) in self.rows.iter().enumerate() {
            match row.leading_index() {
                None => seen_zero = true,
                Some(p) => {
                    if seen_zero || last.is_some_and(|l| p <= l) {
                        return false;
                    }
                    if self.rows.iter().enumerate().any(|(o, other)| o != r && other.get(p)) {
                        return false;
                    }
                    last = Some(p);
                }
            }
        }
        true
    }

    /// Gauss-Jordan elimination. Returns the reduced matrix and the exact
    /// sequence of row operations applied to reach it.
    pub fn rref(&self) -> (BitMatrix, RowOps) {
        let mut rows = self.rows.clone();
        let ops = rref_in_place(self.cols, &mut rows);
        (Self { rows, cols: self.cols }, ops)
    }

    pub fn rank(&self) -> usize {
        let (m, _) = self.rref();
        m.rows.iter().filter(|r| !r.is_zero()).count()
    }

    /// Whether `v` lies in the row space.
    pub fn spans(&self, v: &BitVec) -> bool {
        solve_linear_combination(&self.rows, v).is_ok()
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows.iter().map(|r| r.to_string())).finish()
    }
}

/// Row-reduces `rows` (each of length `cols`) in place, returning the ops.
pub(crate) fn rref_in_place(cols: usize, rows: &mut [BitVec]) -> RowOps {
    let mut ops = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows.len() {
            break;
        }
        let bit = 1u64 << (cols - 1 - c);
        let Some(pivot) = (r..rows.len()).find(|&i| rows[i].bits & bit != 0) else {
            continue;
        };
        if pivot != r {
            rows.swap(pivot, r);
            ops.push(RowOp::Swap(pivot, r));
        }
        let pivot_bits = rows[r].bits;
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && row.bits & bit != 0 {
                row.bits ^= pivot_bits;
                ops.push(RowOp::Add { target: i, source: r });
            }
        }
        r += 1;
    }
    ops
}

fn common_len(rows: &[BitVec]) -> Result<Option<usize>> {
    let Some(first) = rows.first() else {
        return Ok(None);
    };
    for r in rows {
        first.check_len(r)?;
    }
    Ok(Some(first.len()))
}

/// Finds `c` of length `len` with `rows[j] . c = targets[j]` for every `j`.
///
/// Pivot components take the reduced targets and free components are zero,
/// so the answer is deterministic.
pub fn solve_affine(len: usize, rows: &[BitVec], targets: &[bool]) -> Result<BitVec> {
    if rows.len() != targets.len() {
        return Err(Error::LengthMismatch {
            left: rows.len(),
            right: targets.len(),
        });
    }
    if let Some(l) = common_len(rows)? {
        if l != len {
            return Err(Error::LengthMismatch { left: len, right: l });
        }
    }
    let mut reduced = rows.to_vec();
    let ops = rref_in_place(len, &mut reduced);
    let mut t = targets.to_vec();
    replay_row_ops(&ops, &mut t, |a, b| *a ^= *b);
    let mut c = BitVec::zeros(len)?;
    for (row, &target) in reduced.iter().zip(&t) {
        match row.leading_index() {
            Some(p) => c.set(p, target),
            None if target => return Err(Error::InconsistentSystem),
            None => {}
        }
    }
    Ok(c)
}

/// Finds coefficients `alpha` with `sum_j alpha[j] * basis[j] == target`.
pub fn solve_linear_combination(basis: &[BitVec], target: &BitVec) -> Result<Vec<bool>> {
    if let Some(l) = common_len(basis)? {
        target.check_len(&BitVec::raw(l, 0))?;
    }
    if basis.len() > MAX_LEN {
        return Err(Error::TooLong(basis.len()));
    }
    let k = basis.len();
    let mut reduced = basis.to_vec();
    let ops = rref_in_place(target.len(), &mut reduced);
    // Track which original vectors make up each reduced row.
    let mut combos: Vec<u64> = (0..k).map(|j| 1u64 << j).collect();
    replay_row_ops(&ops, &mut combos, |a, b| *a ^= *b);

    let mut residual = target.bits;
    let mut used = 0u64;
    for (row, combo) in reduced.iter().zip(&combos) {
        let Some(p) = row.leading_index() else { break };
        if residual & (1 << (target.len() - 1 - p)) != 0 {
            residual ^= row.bits;
            used ^= combo;
        }
    }
    if residual != 0 {
        return Err(Error::NotInSpan);
    }
    Ok((0..k).map(|j| used >> j & 1 == 1).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(rows: &[&str]) -> BitMatrix {
        BitMatrix::parse(rows).unwrap()
    }

    fn v(s: &str) -> BitVec {
        BitVec::parse(s).unwrap()
    }

    #[test]
    fn packing_is_binary_integer_order() {
        assert_eq!(v("0110").bits(), 6);
        assert_eq!(v("1000").leading_index(), Some(0));
        assert_eq!(v("0001").leading_index(), Some(3));
        assert!(v("0111") < v("1000"));
        assert_eq!(v("10").concat(&v("011")).unwrap(), v("10011"));
        assert_eq!(v("10011").split_at(2), (v("10"), v("011")));
    }

    #[test]
    fn length_checks() {
        assert!(matches!(v("10").xor(&v("100")), Err(Error::LengthMismatch { .. })));
        assert!(v("1").dot(&v("11")).is_err());
        assert!(BitVec::zeros(65).is_err());
        assert!(BitVec::from_bits(2, 4).is_err());
        assert!(BitMatrix::new(2, vec![v("101")]).is_err());
    }

    #[test]
    fn rref_two_by_two() {
        let (r, ops) = m(&["11", "01"]).rref();
        assert_eq!(r, m(&["10", "01"]));
        assert_eq!(ops, vec![RowOp::Add { target: 0, source: 1 }]);
    }

    #[test]
    fn rref_identity_is_noop() {
        let id = BitMatrix::identity(5).unwrap();
        let (r, ops) = id.rref();
        assert_eq!(r, id);
        assert!(ops.is_empty());
    }

    #[test]
    fn rank_examples() {
        assert_eq!(BitMatrix::zero(3, 4).unwrap().rank(), 0);
        assert_eq!(BitMatrix::identity(7).unwrap().rank(), 7);
        assert_eq!(m(&["11", "11"]).rank(), 1);
    }

    #[test]
    fn rref_predicate() {
        assert!(m(&["1010", "0101", "0000"]).is_rref());
        assert!(!m(&["0101", "1010"]).is_rref());
        assert!(!m(&["1100", "0100"]).is_rref());
        assert!(!m(&["0000", "0100"]).is_rref());
    }

    #[test]
    fn solve_affine_examples() {
        assert_eq!(solve_affine(2, &[v("10")], &[true]).unwrap(), v("10"));
        assert_eq!(solve_affine(3, &[], &[]).unwrap(), v("000"));
        assert_eq!(solve_affine(2, &[v("11"), v("01")], &[true, false]).unwrap(), v("10"));
        assert!(matches!(
            solve_affine(2, &[v("11"), v("11")], &[true, false]),
            Err(Error::InconsistentSystem)
        ));
    }

    #[test]
    fn solve_linear_combination_examples() {
        assert_eq!(
            solve_linear_combination(&[v("10"), v("01")], &v("11")).unwrap(),
            vec![true, true]
        );
        assert_eq!(solve_linear_combination(&[v("11")], &v("00")).unwrap(), vec![false]);
        assert!(matches!(
            solve_linear_combination(&[v("11")], &v("10")),
            Err(Error::NotInSpan)
        ));
    }

    /// Every vector in the row space, by exhaustive subset enumeration.
    fn span_of(rows: &[BitVec], len: usize) -> std::collections::BTreeSet<u64> {
        (0u64..1 << rows.len())
            .map(|s| {
                rows.iter()
                    .enumerate()
                    .filter(|(j, _)| s >> j & 1 == 1)
                    .fold(0, |acc, (_, r)| acc ^ r.bits())
                    & mask(len)
            })
            .collect()
    }

    fn arb_matrix(rows: usize, cols: usize) -> impl Strategy<Value = BitMatrix> {
        proptest::collection::vec(0u64..(1 << cols), rows)
            .prop_map(move |ws| BitMatrix::new(cols, ws.into_iter().map(|w| BitVec::raw(cols, w)).collect()).unwrap())
    }

    proptest! {
        #[test]
        fn rref_is_reduced_and_idempotent(a in arb_matrix(6, 12)) {
            let (r, _) = a.rref();
            prop_assert!(r.is_rref());
            prop_assert_eq!(r.rref().0, r);
        }

        #[test]
        fn rref_preserves_row_space(a in (1usize..=8, 1usize..=10).prop_flat_map(|(r, c)| arb_matrix(r, c))) {
            let (r, _) = a.rref();
            prop_assert_eq!(span_of(a.rows(), a.col_count()), span_of(r.rows(), a.col_count()));
        }

        #[test]
        fn replayed_ops_reproduce_rref(a in arb_matrix(6, 12)) {
            let (r, ops) = a.rref();
            let mut rows = a.rows().to_vec();
            replay_row_ops(&ops, &mut rows, |x, y| *x = x.xor(y).unwrap());
            prop_assert_eq!(rows, r.into_rows());
        }

        #[test]
        fn rank_equals_transpose_rank(a in (1usize..=8, 1usize..=8).prop_flat_map(|(r, c)| arb_matrix(r, c))) {
            prop_assert_eq!(a.rank(), a.transpose().unwrap().rank());
        }

        #[test]
        fn solve_affine_satisfies_equations(a in arb_matrix(5, 9), t in proptest::collection::vec(any::<bool>(), 5)) {
            let (r, _) = a.rref();
            let independent: Vec<_> = r.rows().iter().copied().filter(|x| !x.is_zero()).collect();
            let targets = &t[..independent.len()];
            let c = solve_affine(9, &independent, targets).unwrap();
            for (row, &want) in independent.iter().zip(targets) {
                prop_assert_eq!(row.dot(&c).unwrap(), want);
            }
        }

        #[test]
        fn linear_combination_reconstructs_target(a in arb_matrix(5, 8), s in 0u64..32) {
            let target = a.rows().iter().enumerate()
                .filter(|(j, _)| s >> j & 1 == 1)
                .fold(BitVec::raw(8, 0), |acc, (_, r)| acc.xor(r).unwrap());
            let alpha = solve_linear_combination(a.rows(), &target).unwrap();
            let rebuilt = a.rows().iter().zip(&alpha)
                .filter(|(_, &x)| x)
                .fold(BitVec::raw(8, 0), |acc, (r, _)| acc.xor(r).unwrap());
            prop_assert_eq!(rebuilt, target);
        }
    }
}
