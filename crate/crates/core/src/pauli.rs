//! Exact phase-tracked Pauli arithmetic.
//!
//! A point `(p, q)` of the symplectic space labels the Hermitian Pauli
//! `W(p, q) = (-i)^(p.q mod 4) Z^p X^q`. A [`PhasedPauli`] is `i^k W(p, q)`.
//! All phases are integers mod 4.

use std::fmt;
use std::ops::{Add, AddAssign, Neg};

use crate::error::{Error, Result};
use crate::gf2::BitVec;
use crate::MAX_QUBITS;

/// A power of `i`, i.e. an element of the cyclic group of order 4.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Z4Phase(u8);

impl Z4Phase {
    pub const ONE: Self = Self(0);
    pub const I: Self = Self(1);
    pub const MINUS_ONE: Self = Self(2);
    pub const MINUS_I: Self = Self(3);

    pub const fn new(k: i64) -> Self {
        Self(k.rem_euclid(4) as u8)
    }

    /// The exponent `k` in `0..4`.
    pub const fn k(self) -> u8 {
        self.0
    }

    /// `(-1)^b`
    pub const fn sign(b: bool) -> Self {
        Self(if b { 2 } else { 0 })
    }

    /// `(re, im)` of `i^k`.
    pub const fn to_unit(self) -> (i64, i64) {
        match self.0 {
            0 => (1, 0),
            1 => (0, 1),
            2 => (-1, 0),
            _ => (0, -1),
        }
    }

    pub fn to_complex(self) -> num_complex::Complex64 {
        let (re, im) = self.to_unit();
        num_complex::Complex64::new(re as f64, im as f64)
    }
}

impl Add for Z4Phase {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self((self.0 + rhs.0) & 3)
    }
}

impl AddAssign for Z4Phase {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Neg for Z4Phase {
    type Output = Self;
    fn neg(self) -> Self {
        Self((4 - self.0) & 3)
    }
}

impl fmt::Display for Z4Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(["1", "i", "-1", "-i"][self.0 as usize])
    }
}

/// A point `(p, q)` of the 2n-dimensional symplectic space over GF(2).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymplecticVector {
    p: BitVec,
    q: BitVec,
}

impl SymplecticVector {
    pub fn new(p: BitVec, q: BitVec) -> Result<Self> {
        if p.len() != q.len() {
            return Err(Error::LengthMismatch {
                left: p.len(),
                right: q.len(),
            });
        }
        if p.len() > MAX_QUBITS {
            return Err(Error::QubitCount(p.len()));
        }
        Ok(Self { p, q })
    }

    pub(crate) const fn raw(n: usize, p: u64, q: u64) -> Self {
        Self {
            p: BitVec::raw(n, p),
            q: BitVec::raw(n, q),
        }
    }

    /// From bitstrings, e.g. `parse("10", "01")` for `p = 10`, `q = 01`.
    pub fn parse(p: &str, q: &str) -> Result<Self> {
        Self::new(BitVec::parse(p)?, BitVec::parse(q)?)
    }

    pub fn zero(n: usize) -> Result<Self> {
        Self::new(BitVec::zeros(n)?, BitVec::zeros(n)?)
    }

    #[inline]
    pub const fn n(&self) -> usize {
        self.p.len()
    }

    #[inline]
    pub const fn p(&self) -> BitVec {
        self.p
    }

    #[inline]
    pub const fn q(&self) -> BitVec {
        self.q
    }

    pub const fn is_zero(&self) -> bool {
        self.p.is_zero() && self.q.is_zero()
    }

    /// Row of the check matrix: the `2n`-bit vector `q ++ p`.
    #[inline]
    pub fn echelon(&self) -> BitVec {
        BitVec::raw(2 * self.n(), (self.q.bits() << self.n()) | self.p.bits())
    }

    pub(crate) fn from_echelon(n: usize, e: u64) -> Self {
        let m = (1u64 << n) - 1;
        Self::raw(n, e & m, e >> n)
    }

    /// Storage word: `q` in the low `n` bits, `p` in the next `n` bits.
    #[inline]
    pub fn packed(&self) -> u64 {
        self.q.bits() | (self.p.bits() << self.n())
    }

    pub fn from_packed(n: usize, word: u64) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::QubitCount(n));
        }
        if word >> (2 * n) != 0 {
            return Err(Error::BitsOutOfRange { bits: word, len: 2 * n });
        }
        let m = (1u64 << n) - 1;
        Ok(Self::raw(n, word >> n, word & m))
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.n() != other.n() {
            return Err(Error::LengthMismatch {
                left: self.n(),
                right: other.n(),
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check(other)?;
        Ok(Self::raw(
            self.n(),
            self.p.bits() ^ other.p.bits(),
            self.q.bits() ^ other.q.bits(),
        ))
    }

    /// `p1.q2 - p2.q1 mod 2`; zero iff the Paulis commute.
    pub fn symplectic_product(&self, other: &Self) -> Result<bool> {
        self.check(other)?;
        Ok(self.symplectic_raw(other))
    }

    #[inline]
    pub(crate) fn symplectic_raw(&self, other: &Self) -> bool {
        let x = (self.p.bits() & other.q.bits()) ^ (other.p.bits() & self.q.bits());
        x.count_ones() & 1 == 1
    }
}

impl fmt::Debug for SymplecticVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(p={}|q={})", self.p, self.q)
    }
}

pub fn symplectic_product(a: &SymplecticVector, b: &SymplecticVector) -> Result<bool> {
    a.symplectic_product(b)
}

/// `i^phase * W(p, q)`.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct PhasedPauli {
    pub vec: SymplecticVector,
    pub phase: Z4Phase,
}

impl PhasedPauli {
    /// The canonical Hermitian `W(p, q)`.
    pub const fn canonical(vec: SymplecticVector) -> Self {
        Self {
            vec,
            phase: Z4Phase::ONE,
        }
    }

    pub const fn with_phase(vec: SymplecticVector, phase: Z4Phase) -> Self {
        Self { vec, phase }
    }

    /// `(-1)^lambda W(p, q)`
    pub const fn signed(vec: SymplecticVector, lambda: bool) -> Self {
        Self {
            vec,
            phase: Z4Phase::sign(lambda),
        }
    }

    pub fn identity(n: usize) -> Result<Self> {
        Ok(Self::canonical(SymplecticVector::zero(n)?))
    }

    pub fn n(&self) -> usize {
        self.vec.n()
    }

    /// Exact product `self * other`.
    ///
    /// With `Z^p1 X^q1 Z^p2 X^q2 = (-1)^(q1.p2) Z^(p1+p2) X^(q1+q2)` and
    /// `Z^p X^q = i^|p&q| W(p, q)`, the exponent of `i` is
    /// `k1 + k2 - |p1&q1| - |p2&q2| + 2|q1&p2| + |p3&q3|` (mod 4).
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        self.vec.check(&other.vec)?;
        Ok(self.multiply_raw(other))
    }

    #[inline]
    pub(crate) fn multiply_raw(&self, other: &Self) -> Self {
        let (p1, q1) = (self.vec.p.bits(), self.vec.q.bits());
        let (p2, q2) = (other.vec.p.bits(), other.vec.q.bits());
        let (p3, q3) = (p1 ^ p2, q1 ^ q2);
        let w = |x: u64| x.count_ones() as i64;
        let k = self.phase.k() as i64 + other.phase.k() as i64 - w(p1 & q1) - w(p2 & q2)
            + 2 * w(q1 & p2)
            + w(p3 & q3);
        Self {
            vec: SymplecticVector::raw(self.n(), p3, q3),
            phase: Z4Phase::new(k),
        }
    }

    /// Action on `|z>`: returns `(phi, z + q)` with `self |z> = i^phi |z + q>`.
    pub fn apply_to_basis_state(&self, z: &BitVec) -> Result<(Z4Phase, BitVec)> {
        if z.len() != self.n() {
            return Err(Error::LengthMismatch {
                left: self.n(),
                right: z.len(),
            });
        }
        let (phase, out) = self.apply_raw(z.bits());
        Ok((phase, BitVec::raw(self.n(), out)))
    }

    #[inline]
    pub(crate) fn apply_raw(&self, z: u64) -> (Z4Phase, u64) {
        let (p, q) = (self.vec.p.bits(), self.vec.q.bits());
        let out = z ^ q;
        let k = self.phase.k() as i64 - (p & q).count_ones() as i64 + 2 * ((p & out).count_ones() & 1) as i64;
        (Z4Phase::new(k), out)
    }

    pub fn commutes(&self, other: &Self) -> Result<bool> {
        Ok(!self.vec.symplectic_product(&other.vec)?)
    }
}

impl fmt::Debug for PhasedPauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*W{:?}", self.phase, self.vec)
    }
}

pub fn pauli_multiply(a: &PhasedPauli, b: &PhasedPauli) -> Result<PhasedPauli> {
    a.multiply(b)
}

pub fn apply_to_basis_state(a: &PhasedPauli, z: &BitVec) -> Result<(Z4Phase, BitVec)> {
    a.apply_to_basis_state(z)
}

/// Dense matrices with entries in `Z[i]`, for cross-checking the symbolic
/// rules. Limited to four qubits.
pub mod dense {
    use num_complex::Complex;

    use super::PhasedPauli;
    use crate::error::{Error, Result};

    pub const MAX_DENSE_QUBITS: usize = 4;

    pub type Entry = Complex<i64>;

    /// Square matrix stored row-major.
    #[derive(Clone, Debug, PartialEq, Eq)]
    pub struct DenseMatrix {
        pub dim: usize,
        pub data: Vec<Entry>,
    }

    impl DenseMatrix {
        pub fn identity(dim: usize) -> Self {
            let mut data = vec![Entry::new(0, 0); dim * dim];
            for i in 0..dim {
                data[i * dim + i] = Entry::new(1, 0);
            }
            Self { dim, data }
        }

        pub fn at(&self, r: usize, c: usize) -> Entry {
            self.data[r * self.dim + c]
        }

        pub fn matmul(&self, other: &Self) -> Self {
            let d = self.dim;
            let mut data = vec![Entry::new(0, 0); d * d];
            for r in 0..d {
                for k in 0..d {
                    let a = self.at(r, k);
                    if a == Entry::new(0, 0) {
                        continue;
                    }
                    for c in 0..d {
                        data[r * d + c] += a * other.at(k, c);
                    }
                }
            }
            Self { dim: d, data }
        }

        pub fn kron(&self, other: &Self) -> Self {
            let d = self.dim * other.dim;
            let mut data = vec![Entry::new(0, 0); d * d];
            for r1 in 0..self.dim {
                for c1 in 0..self.dim {
                    let a = self.at(r1, c1);
                    for r2 in 0..other.dim {
                        for c2 in 0..other.dim {
                            data[(r1 * other.dim + r2) * d + c1 * other.dim + c2] = a * other.at(r2, c2);
                        }
                    }
                }
            }
            Self { dim: d, data }
        }

        pub fn scale(&self, s: Entry) -> Self {
            Self {
                dim: self.dim,
                data: self.data.iter().map(|&x| x * s).collect(),
            }
        }

        pub fn adjoint(&self) -> Self {
            let d = self.dim;
            let mut data = vec![Entry::new(0, 0); d * d];
            for r in 0..d {
                for c in 0..d {
                    data[c * d + r] = self.at(r, c).conj();
                }
            }
            Self { dim: d, data }
        }

        pub fn apply(&self, v: &[Entry]) -> Vec<Entry> {
            (0..self.dim)
                .map(|r| (0..self.dim).map(|c| self.at(r, c) * v[c]).sum())
                .collect()
        }
    }

    fn z() -> DenseMatrix {
        DenseMatrix {
            dim: 2,
            data: vec![Entry::new(1, 0), Entry::new(0, 0), Entry::new(0, 0), Entry::new(-1, 0)],
        }
    }

    fn x() -> DenseMatrix {
        DenseMatrix {
            dim: 2,
            data: vec![Entry::new(0, 0), Entry::new(1, 0), Entry::new(1, 0), Entry::new(0, 0)],
        }
    }

    fn i_pow(k: i64) -> Entry {
        match k.rem_euclid(4) {
            0 => Entry::new(1, 0),
            1 => Entry::new(0, 1),
            2 => Entry::new(-1, 0),
            _ => Entry::new(0, -1),
        }
    }

    /// Materialises `i^k (-i)^(p.q) Z^p X^q` as a Kronecker product, qubit 1
    /// leftmost.
    pub fn dense_matrix(a: &PhasedPauli) -> Result<DenseMatrix> {
        let n = a.n();
        if n > MAX_DENSE_QUBITS {
            return Err(Error::Guard(format!("dense Pauli limited to {MAX_DENSE_QUBITS} qubits, got {n}")));
        }
        let (p, q) = (a.vec.p(), a.vec.q());
        let mut m = DenseMatrix::identity(1);
        for j in 0..n {
            let mut f = DenseMatrix::identity(2);
            if p.get(j) {
                f = f.matmul(&z());
            }
            if q.get(j) {
                f = f.matmul(&x());
            }
            m = m.kron(&f);
        }
        let pq = (p.bits() & q.bits()).count_ones() as i64;
        Ok(m.scale(i_pow(a.phase.k() as i64 - pq)))
    }
}
