//! Stabiliser states as check matrices: canonical form, support, relative
//! phases and exact amplitudes.

use std::fmt;

use num_complex::{Complex, Complex64};

use crate::error::{Error, Result};
use crate::gf2::{self, replay_row_ops, BitMatrix, BitVec};
use crate::pauli::{PhasedPauli, SymplecticVector, Z4Phase};
use crate::MAX_QUBITS;

/// Largest qubit count for which full amplitude tables are produced.
pub const MAX_TABLE_QUBITS: usize = 12;

/// Largest qubit count for the stabiliser-group projection oracle.
pub const MAX_PROJECTION_QUBITS: usize = 6;

/// A Lagrangian subspace given by its canonical basis: the `n x 2n` matrix
/// with rows `(q_j | p_j)` is in reduced row echelon form.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Lagrangian {
    n: usize,
    rows: Vec<SymplecticVector>,
}

fn check_qubits(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::QubitCount(n));
    }
    Ok(())
}

fn check_isotropic(rows: &[SymplecticVector]) -> Result<()> {
    for (i, a) in rows.iter().enumerate() {
        for b in &rows[i + 1..] {
            if a.symplectic_product(b)? {
                return Err(Error::InvalidCheckMatrix(format!("rows {a:?} and {b:?} anticommute")));
            }
        }
    }
    Ok(())
}

fn validate_generators(rows: &[SymplecticVector]) -> Result<usize> {
    let n = rows.first().map(SymplecticVector::n).unwrap_or(0);
    check_qubits(n)?;
    if rows.len() != n {
        return Err(Error::InvalidCheckMatrix(format!("expected {n} rows, got {}", rows.len())));
    }
    for r in rows {
        if r.n() != n {
            return Err(Error::LengthMismatch { left: n, right: r.n() });
        }
    }
    check_isotropic(rows)?;
    Ok(n)
}

impl Lagrangian {
    /// Validates an already canonical basis.
    pub fn new(rows: Vec<SymplecticVector>) -> Result<Self> {
        let n = validate_generators(&rows)?;
        let m = BitMatrix::new(2 * n, rows.iter().map(SymplecticVector::echelon).collect())?;
        if !m.is_rref() {
            return Err(Error::InvalidCheckMatrix("rows are not in reduced row echelon form".into()));
        }
        if rows.iter().any(SymplecticVector::is_zero) {
            return Err(Error::InvalidCheckMatrix("rows are linearly dependent".into()));
        }
        Ok(Self { n, rows })
    }

    /// Canonicalises any independent isotropic generating set.
    pub fn from_generators(rows: &[SymplecticVector]) -> Result<Self> {
        Ok(SignTransform::new(rows)?.canonical)
    }

    pub(crate) fn from_canonical_unchecked(n: usize, rows: Vec<SymplecticVector>) -> Self {
        debug_assert_eq!(rows.len(), n);
        Self { n, rows }
    }

    /// The computational-basis Lagrangian spanned by `Z_1, ..., Z_n`.
    pub fn computational(n: usize) -> Result<Self> {
        check_qubits(n)?;
        let rows = (0..n).map(|j| SymplecticVector::raw(n, 1 << (n - 1 - j), 0)).collect();
        Ok(Self { n, rows })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> &[SymplecticVector] {
        &self.rows
    }

    /// Rank of the `q` block. In canonical form the rows with `q != 0` come
    /// first and their `q` parts are independent.
    pub fn support_rank(&self) -> usize {
        self.rows.iter().take_while(|r| !r.q().is_zero()).count()
    }

    pub fn is_computational(&self) -> bool {
        self.support_rank() == 0
    }

    /// Row words in storage layout (`q` low, `p` high), in row order.
    pub fn packed_words(&self) -> Vec<u64> {
        self.rows.iter().map(SymplecticVector::packed).collect()
    }

    pub fn from_packed_words(n: usize, words: &[u64]) -> Result<Self> {
        let rows = words
            .iter()
            .map(|&w| SymplecticVector::from_packed(n, w))
            .collect::<Result<Vec<_>>>()?;
        Self::new(rows)
    }

    pub fn check_matrix(&self) -> BitMatrix {
        BitMatrix::new(2 * self.n, self.rows.iter().map(SymplecticVector::echelon).collect())
            .expect("rows have length 2n")
    }

    /// `q` parts of the leading rows; a basis of the support direction space,
    /// itself in reduced row echelon form.
    pub(crate) fn direction_basis(&self) -> Vec<BitVec> {
        self.rows.iter().take_while(|r| !r.q().is_zero()).map(|r| r.q()).collect()
    }
}

impl fmt::Debug for Lagrangian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows.iter()).finish()
    }
}

/// Row reduction of a generating set together with the induced affine map on
/// eigenvalue bits: output bit `i` is `parity(masks[i] & lambda) ^ flips[i]`.
#[derive(Clone, Debug)]
pub(crate) struct SignTransform {
    pub canonical: Lagrangian,
    masks: Vec<u64>,
    flips: u64,
}

impl SignTransform {
    pub fn new(rows: &[SymplecticVector]) -> Result<Self> {
        let n = validate_generators(rows)?;
        let mut echelon: Vec<BitVec> = rows.iter().map(SymplecticVector::echelon).collect();
        let ops = gf2::rref_in_place(2 * n, &mut echelon);
        if echelon.iter().any(BitVec::is_zero) {
            return Err(Error::InvalidCheckMatrix("rows are linearly dependent".into()));
        }
        let mut items: Vec<(u64, PhasedPauli)> = rows
            .iter()
            .enumerate()
            .map(|(j, r)| (1u64 << (n - 1 - j), PhasedPauli::canonical(*r)))
            .collect();
        replay_row_ops(&ops, &mut items, |a, b| {
            a.0 ^= b.0;
            a.1 = a.1.multiply_raw(&b.1);
        });
        let mut flips = 0u64;
        let mut masks = Vec::with_capacity(n);
        for (i, (m, pauli)) in items.into_iter().enumerate() {
            // Products of commuting Hermitian Paulis are +-W.
            debug_assert!(pauli.phase.k() % 2 == 0);
            debug_assert_eq!(pauli.vec.echelon(), echelon[i]);
            if pauli.phase == Z4Phase::MINUS_ONE {
                flips |= 1 << (n - 1 - i);
            }
            masks.push(m);
        }
        let canonical = Lagrangian::from_canonical_unchecked(
            n,
            echelon.iter().map(|e| SymplecticVector::from_echelon(n, e.bits())).collect(),
        );
        Ok(Self { canonical, masks, flips })
    }

    pub fn apply(&self, lambdas: u64) -> u64 {
        let n = self.canonical.n;
        let mut out = self.flips;
        for (i, m) in self.masks.iter().enumerate() {
            if (m & lambdas).count_ones() & 1 == 1 {
                out ^= 1 << (n - 1 - i);
            }
        }
        out
    }
}

/// A stabiliser state: a canonical Lagrangian and the eigenvalue bits, with
/// `(-1)^lambda_j W(p_j, q_j) |s> = |s>`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CheckMatrix {
    lagrangian: Lagrangian,
    lambdas: BitVec,
}

impl CheckMatrix {
    pub fn new(lagrangian: Lagrangian, lambdas: BitVec) -> Result<Self> {
        if lambdas.len() != lagrangian.n {
            return Err(Error::LengthMismatch {
                left: lagrangian.n,
                right: lambdas.len(),
            });
        }
        Ok(Self { lagrangian, lambdas })
    }

    /// Canonicalises signed generators, carrying the eigenvalue bits through
    /// the row operations with exact Pauli products.
    pub fn from_signed_generators(rows: &[SymplecticVector], lambdas: BitVec) -> Result<Self> {
        if lambdas.len() != rows.len() {
            return Err(Error::LengthMismatch {
                left: rows.len(),
                right: lambdas.len(),
            });
        }
        let t = SignTransform::new(rows)?;
        let out = BitVec::raw(rows.len(), t.apply(lambdas.bits()));
        Self::new(t.canonical, out)
    }

    /// The computational basis state `|z>`.
    pub fn computational(z: BitVec) -> Result<Self> {
        Self::new(Lagrangian::computational(z.len())?, z)
    }

    pub fn n(&self) -> usize {
        self.lagrangian.n
    }

    pub fn lagrangian(&self) -> &Lagrangian {
        &self.lagrangian
    }

    pub fn lambdas(&self) -> BitVec {
        self.lambdas
    }

    pub fn support_rank(&self) -> usize {
        self.lagrangian.support_rank()
    }

    /// `(-1)^lambda_j W(p_j, q_j)`.
    pub fn signed_generator(&self, j: usize) -> PhasedPauli {
        PhasedPauli::signed(self.lagrangian.rows[j], self.lambdas.get(j))
    }

    pub fn support(&self) -> AffineSupport {
        support_of(&self.lagrangian, self.lambdas)
    }

    /// `phi` with `<l2|s> = i^phi <l1|s>`.
    pub fn relative_phase(&self, l1: &BitVec, l2: &BitVec) -> Result<Z4Phase> {
        let supp = self.support();
        for l in [l1, l2] {
            if !supp.contains(l)? {
                return Err(Error::NotInSupport(l.to_string()));
            }
        }
        transport_phase(&self.lagrangian, self.lambdas, l1, l2)
    }

    /// Exact amplitudes, phase-normalised so the smallest support bitstring
    /// carries phase `1`.
    pub fn amplitudes(&self) -> Result<ExactAmplitudeTable> {
        let n = self.n();
        if n > MAX_TABLE_QUBITS {
            return Err(Error::Guard(format!("amplitude tables limited to {MAX_TABLE_QUBITS} qubits, got {n}")));
        }
        let supp = self.support();
        let anchor = supp.min_element();
        let mut entries = Vec::with_capacity(supp.len());
        for z in supp.elements() {
            entries.push((z, transport_phase(&self.lagrangian, self.lambdas, &anchor, &z)?));
        }
        Ok(ExactAmplitudeTable {
            n,
            rank: supp.rank(),
            entries,
        })
    }

    /// Amplitudes computed independently of the support and transport
    /// routines, by summing the signed stabiliser group applied to a basis
    /// state (the result is proportional to the projector onto `|s>`).
    pub fn amplitudes_by_projection(&self) -> Result<ExactAmplitudeTable> {
        let n = self.n();
        if n > MAX_PROJECTION_QUBITS {
            return Err(Error::Guard(format!(
                "projection oracle limited to {MAX_PROJECTION_QUBITS} qubits, got {n}"
            )));
        }
        let gens: Vec<PhasedPauli> = (0..n).map(|j| self.signed_generator(j)).collect();
        let mut group = Vec::with_capacity(1 << n);
        for subset in 0u64..1 << n {
            let mut g = PhasedPauli::identity(n)?;
            for (j, gen) in gens.iter().enumerate() {
                if subset >> j & 1 == 1 {
                    g = g.multiply(gen)?;
                }
            }
            group.push(g);
        }
        for seed in 0u64..1 << n {
            let mut acc = vec![Complex::<i64>::new(0, 0); 1 << n];
            for g in &group {
                let (phi, out) = g.apply_to_basis_state(&BitVec::raw(n, seed))?;
                let (re, im) = phi.to_unit();
                acc[out.bits() as usize] += Complex::new(re, im);
            }
            let nonzero: Vec<usize> = (0..acc.len()).filter(|&i| acc[i] != Complex::new(0, 0)).collect();
            let Some(&first) = nonzero.first() else { continue };
            let count = nonzero.len();
            if !count.is_power_of_two() {
                return Err(Error::InvalidCheckMatrix(format!("projected support has size {count}")));
            }
            let reference = acc[first];
            let mut entries = Vec::with_capacity(count);
            for &i in &nonzero {
                let phase = (0..4)
                    .map(Z4Phase::new)
                    .find(|ph| {
                        let (re, im) = ph.to_unit();
                        reference * Complex::new(re, im) == acc[i]
                    })
                    .ok_or_else(|| Error::InvalidCheckMatrix("projected amplitudes are not uniform".into()))?;
                entries.push((BitVec::raw(n, i as u64), phase));
            }
            return Ok(ExactAmplitudeTable {
                n,
                rank: count.trailing_zeros() as usize,
                entries,
            });
        }
        Err(Error::InvalidCheckMatrix("stabiliser group projects every basis state to zero".into()))
    }
}

impl fmt::Debug for CheckMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CheckMatrix({:?}, lambda={})", self.lagrangian, self.lambdas)
    }
}

pub fn support_rank(cm: &CheckMatrix) -> usize {
    cm.support_rank()
}

pub fn support(cm: &CheckMatrix) -> AffineSupport {
    cm.support()
}

pub fn relative_phase(cm: &CheckMatrix, l1: &BitVec, l2: &BitVec) -> Result<Z4Phase> {
    cm.relative_phase(l1, l2)
}

pub fn amplitudes(cm: &CheckMatrix) -> Result<ExactAmplitudeTable> {
    cm.amplitudes()
}

/// Support of the state `(lagrangian, lambdas)`: the leading rows give the
/// direction space, the trailing `(0 | r_j)` rows fix `r_j . c = mu_j`.
pub(crate) fn support_of(lag: &Lagrangian, lambdas: BitVec) -> AffineSupport {
    let n = lag.n;
    let k = lag.support_rank();
    let basis = lag.direction_basis();
    let constraints: Vec<BitVec> = lag.rows[k..].iter().map(|r| r.p()).collect();
    let targets: Vec<bool> = (k..n).map(|j| lambdas.get(j)).collect();
    let offset = gf2::solve_affine(n, &constraints, &targets).expect("canonical Z rows are independent");
    AffineSupport { offset, basis }
}

/// Amplitude transport along the stabiliser group: finds `G` in the signed
/// group with `G |l1> ~ |l2>`; since `G|s> = |s>`, `<l2|s> = i^phi <l1|s>`.
pub(crate) fn transport_phase(lag: &Lagrangian, lambdas: BitVec, l1: &BitVec, l2: &BitVec) -> Result<Z4Phase> {
    let basis = lag.direction_basis();
    let alpha = gf2::solve_linear_combination(&basis, &l1.xor(l2)?)?;
    let mut g = PhasedPauli::identity(lag.n)?;
    for (j, &a) in alpha.iter().enumerate() {
        if a {
            g = g.multiply_raw(&PhasedPauli::signed(lag.rows[j], lambdas.get(j)));
        }
    }
    let (phi, out) = g.apply_to_basis_state(l1)?;
    debug_assert_eq!(out, *l2);
    Ok(phi)
}

/// The affine subspace `offset + span(basis)` of `Z_2^n`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AffineSupport {
    offset: BitVec,
    /// Reduced row echelon basis of the direction space.
    basis: Vec<BitVec>,
}

impl AffineSupport {
    pub fn offset(&self) -> BitVec {
        self.offset
    }

    pub fn basis(&self) -> &[BitVec] {
        &self.basis
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn len(&self) -> usize {
        1 << self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn reduce(&self, mut z: u64) -> u64 {
        let n = self.offset.len();
        for b in &self.basis {
            let pivot = b.leading_index().expect("basis vectors are nonzero");
            if z >> (n - 1 - pivot) & 1 == 1 {
                z ^= b.bits();
            }
        }
        z
    }

    /// Smallest element as a binary integer.
    pub fn min_element(&self) -> BitVec {
        BitVec::raw(self.offset.len(), self.reduce(self.offset.bits()))
    }

    pub fn contains(&self, z: &BitVec) -> Result<bool> {
        let d = z.xor(&self.offset)?;
        Ok(self.reduce(d.bits()) == 0)
    }

    /// All elements in increasing order.
    pub fn elements(&self) -> Vec<BitVec> {
        let n = self.offset.len();
        let base = self.min_element().bits();
        let mut out: Vec<BitVec> = (0u64..1 << self.basis.len())
            .map(|s| {
                let z = self
                    .basis
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| s >> j & 1 == 1)
                    .fold(base, |acc, (_, b)| acc ^ b.bits());
                BitVec::raw(n, z)
            })
            .collect();
        out.sort();
        out
    }
}

/// Exact amplitudes `i^phase * 2^(-rank/2)` on the support, sorted by
/// bitstring; the first entry has phase `1`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactAmplitudeTable {
    pub n: usize,
    pub rank: usize,
    pub entries: Vec<(BitVec, Z4Phase)>,
}

impl ExactAmplitudeTable {
    pub fn magnitude(&self) -> f64 {
        (-(self.rank as f64) / 2.0).exp2()
    }

    pub fn phase_at(&self, z: &BitVec) -> Option<Z4Phase> {
        self.entries.binary_search_by(|(k, _)| k.cmp(z)).ok().map(|i| self.entries[i].1)
    }

    pub fn to_dense(&self) -> Vec<Complex64> {
        let mut v = vec![Complex64::new(0.0, 0.0); 1 << self.n];
        let m = self.magnitude();
        for (z, ph) in &self.entries {
            v[z.bits() as usize] = ph.to_complex() * m;
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sv(p: &str, q: &str) -> SymplecticVector {
        SymplecticVector::parse(p, q).unwrap()
    }

    fn bv(s: &str) -> BitVec {
        BitVec::parse(s).unwrap()
    }

    fn state(rows: &[(&str, &str)], lambdas: &str) -> CheckMatrix {
        let rows: Vec<_> = rows.iter().map(|(p, q)| sv(p, q)).collect();
        CheckMatrix::from_signed_generators(&rows, bv(lambdas)).unwrap()
    }

    fn bell(lambdas: &str) -> CheckMatrix {
        // XX, ZZ
        state(&[("00", "11"), ("11", "00")], lambdas)
    }

    /// All stabiliser states for `n` qubits by brute force over generator
    /// sets: every isotropic independent triple of rows, canonicalised.
    fn all_states(n: usize) -> Vec<CheckMatrix> {
        let dim = 1u64 << (2 * n);
        let mut lags = std::collections::HashSet::new();
        let vecs: Vec<SymplecticVector> = (1..dim).map(|w| SymplecticVector::from_packed(n, w).unwrap()).collect();
        fn rec(n: usize, vecs: &[SymplecticVector], start: usize, cur: &mut Vec<SymplecticVector>, out: &mut std::collections::HashSet<Lagrangian>) {
            if cur.len() == n {
                if let Ok(l) = Lagrangian::from_generators(cur) {
                    out.insert(l);
                }
                return;
            }
            for i in start..vecs.len() {
                if cur.iter().all(|c| !c.symplectic_raw(&vecs[i])) {
                    cur.push(vecs[i]);
                    rec(n, vecs, i + 1, cur, out);
                    cur.pop();
                }
            }
        }
        rec(n, &vecs, 0, &mut Vec::new(), &mut lags);
        let mut out = Vec::new();
        for l in lags {
            for lam in 0..1u64 << n {
                out.push(CheckMatrix::new(l.clone(), BitVec::raw(n, lam)).unwrap());
            }
        }
        out
    }

    #[test]
    fn support_rank_examples() {
        let n = 3;
        let all_z = CheckMatrix::computational(bv("000")).unwrap();
        assert_eq!(all_z.support_rank(), 0);
        let all_x = state(&[("000", "100"), ("000", "010"), ("000", "001")], "000");
        assert_eq!(all_x.support_rank(), n);
        assert_eq!(bell("00").support_rank(), 1);
    }

    #[test]
    fn canonical_form_is_rref_and_validated() {
        let s = state(&[("11", "00"), ("00", "11")], "10");
        assert!(s.lagrangian().check_matrix().is_rref());
        // Row order swapped by canonicalisation: XX first, then ZZ.
        assert_eq!(s.lagrangian().rows()[0], sv("00", "11"));
        assert_eq!(s.lambdas(), bv("01"));
        assert!(Lagrangian::new(vec![sv("1", "0"), sv("0", "1")]).is_err());
        assert!(Lagrangian::new(vec![sv("01", "00"), sv("10", "00")]).is_err());
        assert!(CheckMatrix::from_signed_generators(&[sv("10", "00"), sv("00", "10")], bv("00")).is_err());
    }

    #[test]
    fn sign_tracking_through_row_addition() {
        // Generators XX and YY with eigenvalue +1 each: YY * XX = -ZZ, so the
        // canonical ZZ row carries lambda = 1 (the state is (|01> + |10>)/sqrt2).
        let s = state(&[("00", "11"), ("11", "11")], "00");
        assert_eq!(s.lagrangian().rows(), &[sv("00", "11"), sv("11", "00")]);
        assert_eq!(s.lambdas(), bv("01"));
        assert_eq!(s.support().min_element(), bv("01"));
    }

    #[test]
    fn support_examples() {
        let b = bell("00").support();
        assert_eq!(b.offset(), bv("00"));
        assert_eq!(b.basis(), &[bv("11")]);
        let b = bell("01").support();
        assert_eq!(b.offset(), bv("10"));
        assert_eq!(b.basis(), &[bv("11")]);
        let z = CheckMatrix::computational(bv("100")).unwrap().support();
        assert_eq!(z.offset(), bv("100"));
        assert!(z.basis().is_empty());
    }

    #[test]
    fn bell_odd_support_matches_projector() {
        let table = bell("01").amplitudes_by_projection().unwrap();
        let keys: Vec<_> = table.entries.iter().map(|e| e.0).collect();
        assert_eq!(keys, vec![bv("01"), bv("10")]);
        assert_eq!(bell("01").support().elements(), keys);
    }

    #[test]
    fn relative_phase_examples() {
        let plus_i = state(&[("1", "1")], "0");
        assert_eq!(plus_i.relative_phase(&bv("0"), &bv("1")).unwrap(), Z4Phase::I);
        assert_eq!(bell("00").relative_phase(&bv("00"), &bv("11")).unwrap(), Z4Phase::ONE);
        let minus = state(&[("0", "1")], "1");
        assert_eq!(minus.relative_phase(&bv("0"), &bv("1")).unwrap(), Z4Phase::MINUS_ONE);
        assert!(matches!(
            bell("00").relative_phase(&bv("00"), &bv("01")),
            Err(Error::NotInSupport(_))
        ));
    }

    #[test]
    fn amplitude_examples() {
        let zero = CheckMatrix::computational(bv("000")).unwrap().amplitudes().unwrap();
        assert_eq!(zero.rank, 0);
        assert_eq!(zero.entries, vec![(bv("000"), Z4Phase::ONE)]);
        let minus = state(&[("0", "1")], "1").amplitudes().unwrap();
        assert_eq!(minus.entries, vec![(bv("0"), Z4Phase::ONE), (bv("1"), Z4Phase::MINUS_ONE)]);
        let plus_i = state(&[("1", "1")], "0").amplitudes().unwrap();
        assert_eq!(plus_i.entries, vec![(bv("0"), Z4Phase::ONE), (bv("1"), Z4Phase::I)]);
    }

    #[test]
    fn state_counts_by_brute_force() {
        assert_eq!(all_states(1).len(), 6);
        assert_eq!(all_states(2).len(), 60);
    }

    #[test]
    fn amplitudes_agree_with_projection_exhaustive() {
        for n in 1..=3 {
            let states = all_states(n);
            if n == 3 {
                assert_eq!(states.len(), 1080);
            }
            for s in states {
                let t = s.amplitudes().unwrap();
                assert_eq!(t, s.amplitudes_by_projection().unwrap(), "{s:?}");
                assert_eq!(t.entries.len(), 1 << s.support_rank());
                assert_eq!(t.entries[0].1, Z4Phase::ONE);
            }
        }
    }

    #[test]
    fn amplitudes_are_unit_eigenvectors() {
        for s in all_states(2) {
            let v = s.amplitudes().unwrap().to_dense();
            let norm: f64 = v.iter().map(|a| a.norm_sqr()).sum();
            assert!((norm - 1.0).abs() < 1e-12);
            for j in 0..2 {
                let g = s.signed_generator(j);
                let mut gv = [Complex64::new(0.0, 0.0); 4];
                for (z, a) in v.iter().enumerate() {
                    let (phi, out) = g.apply_to_basis_state(&BitVec::raw(2, z as u64)).unwrap();
                    gv[out.bits() as usize] += phi.to_complex() * a;
                }
                for (x, y) in gv.iter().zip(&v) {
                    assert!((x - y).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn relative_phase_is_additive() {
        for s in all_states(3) {
            let supp = s.support().elements();
            for a in &supp {
                assert_eq!(s.relative_phase(a, a).unwrap(), Z4Phase::ONE);
                for b in &supp {
                    for c in &supp {
                        let ab = s.relative_phase(a, b).unwrap();
                        let bc = s.relative_phase(b, c).unwrap();
                        assert_eq!(ab + bc, s.relative_phase(a, c).unwrap());
                    }
                }
            }
        }
    }

    #[test]
    fn table_guard() {
        let big = CheckMatrix::computational(BitVec::zeros(13).unwrap()).unwrap();
        assert!(matches!(big.amplitudes(), Err(Error::Guard(_))));
    }
}
