//! Semi-classical subset and encoded states, the prefix-marginal sampler, and
//! the encoding transforms applied along gadget chains.

use std::collections::{HashMap, HashSet};
use std::fmt;

use rand::Rng;

use crate::error::{invalid, GlhError, Result};
use crate::linalg::{self, CMatrix, CVector, C64, ONE, ZERO};

/// Default cap on the number of subset elements.
pub const DEFAULT_SIZE_CAP: usize = 1_000_000;
/// Largest block an isometry may map one qubit into.
pub const MAX_BLOCK_QUBITS: usize = 4;
/// Largest register expanded to a dense vector.
pub const MAX_DENSE_QUBITS: usize = 24;
const ISOMETRY_TOL: f64 = 1e-12;

/// A computational-basis string. Bit `q` is qubit `q`; the text form lists
/// qubit 0 first.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![false; n])
    }

    pub fn parse(s: &str) -> Result<Self> {
        s.chars()
            .map(|ch| match ch {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(invalid(format!("bit string contains {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    pub fn from_index(index: usize, n: usize) -> Self {
        Self((0..n).map(|q| (index >> q) & 1 == 1).collect())
    }

    /// Basis index with qubit 0 as the least significant bit.
    pub fn to_index(&self) -> usize {
        assert!(self.0.len() < usize::BITS as usize, "bit string too long for an index");
        self.0
            .iter()
            .enumerate()
            .fold(0, |acc, (q, &b)| acc | ((b as usize) << q))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bit(&self, q: usize) -> bool {
        self.0[q]
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn concat(&self, other: &BitString) -> BitString {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Self(v)
    }

    pub fn slice(&self, start: usize, len: usize) -> BitString {
        Self(self.0[start..start + len].to_vec())
    }

    /// Hex digits, most significant first, of the value with qubit 0 as LSB.
    pub fn to_hex(&self) -> String {
        let digits = self.0.len().div_ceil(4).max(1);
        (0..digits)
            .rev()
            .map(|d| {
                let nibble = (0..4).fold(0u32, |acc, j| {
                    let q = 4 * d + j;
                    acc | ((q < self.0.len() && self.0[q]) as u32) << j
                });
                char::from_digit(nibble, 16).unwrap()
            })
            .collect()
    }

    pub fn from_hex(hex: &str, n: usize) -> Result<Self> {
        let digits: Vec<u32> = hex
            .chars()
            .map(|ch| ch.to_digit(16).ok_or_else(|| GlhError::Format(format!("bad hex digit {ch:?}"))))
            .collect::<Result<_>>()?;
        let mut bits = vec![false; n];
        for (d, &nibble) in digits.iter().rev().enumerate() {
            for j in 0..4 {
                if (nibble >> j) & 1 == 1 {
                    let q = 4 * d + j;
                    if q >= n {
                        return Err(GlhError::Format(format!("hex {hex} has bits beyond width {n}")));
                    }
                    bits[q] = true;
                }
            }
        }
        Ok(Self(bits))
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Uniform superposition over a set of basis strings.
#[derive(Clone, Debug, PartialEq)]
pub struct SubsetState {
    n: usize,
    elements: Vec<BitString>,
}

impl SubsetState {
    pub fn new(n: usize, elements: Vec<BitString>) -> Result<Self> {
        Self::with_cap(n, elements, DEFAULT_SIZE_CAP)
    }

    pub fn with_cap(n: usize, elements: Vec<BitString>, cap: usize) -> Result<Self> {
        if elements.is_empty() {
            return Err(invalid("subset state needs at least one string"));
        }
        if elements.len() > cap {
            return Err(GlhError::Capacity {
                what: "subset size".into(),
                needed: elements.len() as u128,
                limit: cap as u128,
            });
        }
        let mut seen = HashSet::with_capacity(elements.len());
        for s in &elements {
            if s.len() != n {
                return Err(invalid(format!("string {s} has length {}, expected {n}", s.len())));
            }
            if !seen.insert(s) {
                return Err(invalid(format!("duplicate string {s} in subset")));
            }
        }
        Ok(Self { n, elements })
    }

    pub fn singleton(s: BitString) -> Self {
        Self {
            n: s.len(),
            elements: vec![s],
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn elements(&self) -> &[BitString] {
        &self.elements
    }

    pub fn size(&self) -> usize {
        self.elements.len()
    }

    pub fn contains(&self, x: &BitString) -> bool {
        self.elements.contains(x)
    }

    pub fn amplitude(&self, x: &BitString) -> Result<C64> {
        if x.len() != self.n {
            return Err(invalid(format!("string has {} bits, state has {}", x.len(), self.n)));
        }
        Ok(if self.contains(x) {
            linalg::c(1.0 / (self.size() as f64).sqrt())
        } else {
            ZERO
        })
    }

    pub fn to_dense(&self) -> Result<CVector> {
        check_dense(self.n)?;
        let mut v = CVector::zeros(1 << self.n);
        let a = linalg::c(1.0 / (self.size() as f64).sqrt());
        for s in &self.elements {
            v[s.to_index()] = a;
        }
        Ok(v)
    }

    /// S × {bits}: every element gains the same suffix.
    pub fn with_fixed_suffix(&self, suffix: &BitString) -> SubsetState {
        SubsetState {
            n: self.n + suffix.len(),
            elements: self.elements.iter().map(|s| s.concat(suffix)).collect(),
        }
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> BitString {
        self.elements[rng.gen_range(0..self.size())].clone()
    }
}

fn check_dense(n: usize) -> Result<()> {
    if n > MAX_DENSE_QUBITS {
        return Err(GlhError::Capacity {
            what: "dense state qubits".into(),
            needed: n as u128,
            limit: MAX_DENSE_QUBITS as u128,
        });
    }
    Ok(())
}

/// Cartesian product S × S′, base bits first.
pub fn attach_subset(st: &SubsetState, other: &SubsetState) -> Result<SubsetState> {
    attach_subset_with_cap(st, other, DEFAULT_SIZE_CAP)
}

pub fn attach_subset_with_cap(st: &SubsetState, other: &SubsetState, cap: usize) -> Result<SubsetState> {
    let size = st.size() as u128 * other.size() as u128;
    if size > cap as u128 {
        return Err(GlhError::Capacity {
            what: "subset size".into(),
            needed: size,
            limit: cap as u128,
        });
    }
    let elements = st
        .elements
        .iter()
        .flat_map(|s| other.elements.iter().map(move |t| s.concat(t)))
        .collect();
    Ok(SubsetState {
        n: st.n + other.n,
        elements,
    })
}

/// A subset state pushed through one isometry per base qubit.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedState {
    base: SubsetState,
    isometries: Vec<CMatrix>,
    offsets: Vec<usize>,
}

impl EncodedState {
    pub fn new(base: SubsetState, isometries: Vec<CMatrix>) -> Result<Self> {
        if isometries.len() != base.n {
            return Err(invalid(format!(
                "{} isometries for {} base qubits",
                isometries.len(),
                base.n
            )));
        }
        let mut offsets = Vec::with_capacity(isometries.len());
        let mut total = 0;
        for (i, v) in isometries.iter().enumerate() {
            let k = check_block_isometry(v).map_err(|e| invalid(format!("isometry {i}: {e}")))?;
            offsets.push(total);
            total += k;
        }
        if total > MAX_BLOCK_QUBITS * base.n {
            return Err(invalid("encoded register exceeds 4 qubits per base qubit"));
        }
        Ok(Self {
            base,
            isometries,
            offsets,
        })
    }

    /// Trivial (identity) isometries on every qubit.
    pub fn from_subset(base: SubsetState) -> Self {
        let n = base.n;
        Self {
            base,
            isometries: vec![linalg::identity(2); n],
            offsets: (0..n).collect(),
        }
    }

    pub fn base(&self) -> &SubsetState {
        &self.base
    }

    pub fn isometries(&self) -> &[CMatrix] {
        &self.isometries
    }

    pub fn block_qubits(&self, i: usize) -> usize {
        self.isometries[i].nrows().trailing_zeros() as usize
    }

    pub fn block_offset(&self, i: usize) -> usize {
        self.offsets[i]
    }

    pub fn n_qubits(&self) -> usize {
        match self.isometries.len() {
            0 => 0,
            n => self.offsets[n - 1] + self.block_qubits(n - 1),
        }
    }

    /// The base subset state, if every isometry is exactly the identity.
    pub fn as_subset(&self) -> Option<&SubsetState> {
        let id = linalg::identity(2);
        self.isometries.iter().all(|v| *v == id).then_some(&self.base)
    }

    fn block_index(&self, x: &BitString, i: usize) -> usize {
        let off = self.offsets[i];
        (0..self.block_qubits(i)).fold(0, |acc, j| acc | ((x.bit(off + j) as usize) << j))
    }

    pub fn amplitude(&self, x: &BitString) -> Result<C64> {
        if x.len() != self.n_qubits() {
            return Err(invalid(format!(
                "string has {} bits, state has {}",
                x.len(),
                self.n_qubits()
            )));
        }
        let rows: Vec<usize> = (0..self.isometries.len()).map(|i| self.block_index(x, i)).collect();
        let mut total = ZERO;
        for s in &self.base.elements {
            let mut prod = ONE;
            for (i, v) in self.isometries.iter().enumerate() {
                prod *= v[(rows[i], s.bit(i) as usize)];
                if prod == ZERO {
                    break;
                }
            }
            total += prod;
        }
        Ok(total / (self.base.size() as f64).sqrt())
    }

    pub fn to_dense(&self) -> Result<CVector> {
        let m = self.n_qubits();
        check_dense(m)?;
        let mut out = CVector::zeros(1 << m);
        for s in &self.base.elements {
            let mut acc = CVector::from_element(1, ONE);
            for (i, v) in self.isometries.iter().enumerate() {
                acc = v.column(s.bit(i) as usize).kronecker(&acc);
            }
            out += acc;
        }
        Ok(out / linalg::c((self.base.size() as f64).sqrt()))
    }

    /// Draw one string distributed as |⟨x|u⟩|², bit by bit through prefix
    /// marginals, without expanding the state.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> BitString {
        Sampler::new(self).draw(rng)
    }

    pub fn sample_many<R: Rng>(&self, rng: &mut R, shots: usize) -> Vec<BitString> {
        let sampler = Sampler::new(self);
        (0..shots).map(|_| sampler.draw(rng)).collect()
    }
}

fn check_block_isometry(v: &CMatrix) -> std::result::Result<usize, String> {
    if v.ncols() != 2 {
        return Err(format!("expected 2 columns, found {}", v.ncols()));
    }
    let rows = v.nrows();
    if !rows.is_power_of_two() || rows < 2 {
        return Err(format!("row count {rows} is not a power of two ≥ 2"));
    }
    let k = rows.trailing_zeros() as usize;
    if k > MAX_BLOCK_QUBITS {
        return Err(format!("block of {k} qubits exceeds {MAX_BLOCK_QUBITS}"));
    }
    let defect = linalg::isometry_defect(v);
    if defect > ISOMETRY_TOL {
        return Err(format!("V†V deviates from identity by {defect:.3e}"));
    }
    Ok(k)
}

/// Precomputed grouping data for the prefix-marginal recurrence.
struct Sampler<'a> {
    st: &'a EncodedState,
    /// group[b][s] identifies the bits of element s on blocks after b.
    group: Vec<Vec<usize>>,
    n_groups: Vec<usize>,
}

impl<'a> Sampler<'a> {
    fn new(st: &'a EncodedState) -> Self {
        let n = st.isometries.len();
        let size = st.base.size();
        let mut group = vec![vec![0usize; size]; n];
        let mut n_groups = vec![1usize; n];
        if n > 0 {
            // suffix ids built from the last block backwards
            for b in (0..n.saturating_sub(1)).rev() {
                let mut ids: HashMap<(usize, bool), usize> = HashMap::new();
                for (k, s) in st.base.elements.iter().enumerate() {
                    let key = (group[b + 1][k], s.bit(b + 1));
                    let next = ids.len();
                    group[b][k] = *ids.entry(key).or_insert(next);
                }
                n_groups[b] = ids.len();
            }
        }
        Self { st, group, n_groups }
    }

    /// Unnormalized weight of block `b` taking a row consistent with `fixed`
    /// low bits, given the amplitudes of completed blocks.
    fn weight(&self, b: usize, prefix_amp: &[C64], fixed_bits: usize, fixed: usize, acc: &mut [C64]) -> f64 {
        let v = &self.st.isometries[b];
        let rows = v.nrows();
        let mask = (1usize << fixed_bits) - 1;
        let mut total = 0.0;
        for r in (0..rows).filter(|r| r & mask == fixed) {
            acc.iter_mut().for_each(|a| *a = ZERO);
            for (k, s) in self.st.base.elements.iter().enumerate() {
                let a = prefix_amp[k];
                if a != ZERO {
                    acc[self.group[b][k]] += a * v[(r, s.bit(b) as usize)];
                }
            }
            total += acc.iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
        total
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> BitString {
        let st = self.st;
        let size = st.base.size();
        let mut prefix_amp = vec![ONE; size];
        let mut bits = Vec::with_capacity(st.n_qubits());
        for b in 0..st.isometries.len() {
            let k = st.block_qubits(b);
            let mut acc = vec![ZERO; self.n_groups[b]];
            let mut fixed = 0usize;
            for j in 0..k {
                let p0 = self.weight(b, &prefix_amp, j + 1, fixed, &mut acc);
                let p1 = self.weight(b, &prefix_amp, j + 1, fixed | (1 << j), &mut acc);
                let total = p0 + p1;
                // total > 0 whenever the prefix was drawn with positive probability
                let one = total > 0.0 && rng.gen::<f64>() * total >= p0;
                if one {
                    fixed |= 1 << j;
                }
                bits.push(one);
            }
            let v = &st.isometries[b];
            for (k, s) in st.base.elements.iter().enumerate() {
                prefix_amp[k] *= v[(fixed, s.bit(b) as usize)];
            }
        }
        BitString(bits)
    }
}

/// Append product blocks V′_j|0⟩; each supplied vector is the block state.
pub fn attach_product(st: &EncodedState, blocks: &[CVector]) -> Result<EncodedState> {
    let mut isometries = st.isometries.clone();
    for (j, block) in blocks.iter().enumerate() {
        let norm = block.norm();
        if (norm - 1.0).abs() > ISOMETRY_TOL {
            return Err(invalid(format!("block {j} has norm {norm}, expected 1")));
        }
        let dim = block.len();
        if !dim.is_power_of_two() || dim < 2 || dim > 1 << MAX_BLOCK_QUBITS {
            return Err(invalid(format!("block {j} has dimension {dim}")));
        }
        isometries.push(linalg::complete_to_isometry(block));
    }
    let base = st.base.with_fixed_suffix(&BitString::zeros(blocks.len()));
    EncodedState::new(base, isometries)
}

/// S × {0…0}: attach `count` qubits in |0⟩ to a subset state.
pub fn attach_zeros(st: &SubsetState, count: usize) -> SubsetState {
    st.with_fixed_suffix(&BitString::zeros(count))
}

/// Replace V_i by W·V_i.
pub fn apply_local_isometry(st: &EncodedState, i: usize, w: &CMatrix) -> Result<EncodedState> {
    if i >= st.isometries.len() {
        return Err(invalid(format!("base qubit {i} out of range")));
    }
    let v = &st.isometries[i];
    if w.ncols() != v.nrows() {
        return Err(invalid(format!(
            "W has {} columns but block {i} has dimension {}",
            w.ncols(),
            v.nrows()
        )));
    }
    let defect = linalg::isometry_defect(w);
    if defect > ISOMETRY_TOL {
        return Err(invalid(format!("W is not an isometry (defect {defect:.3e})")));
    }
    let mut isometries = st.isometries.clone();
    isometries[i] = w * v;
    EncodedState::new(st.base.clone(), isometries)
}

/// Replace V_i outright by another 1-qubit isometry.
pub fn replace_isometry(st: &EncodedState, i: usize, v: CMatrix) -> Result<EncodedState> {
    if i >= st.isometries.len() {
        return Err(invalid(format!("base qubit {i} out of range")));
    }
    let mut isometries = st.isometries.clone();
    isometries[i] = v;
    EncodedState::new(st.base.clone(), isometries)
}

/// Product of singlets (|01⟩−|10⟩)/√2 on the given local-qubit pairs of a
/// 4-qubit block.
fn singlet_pairs(pairs: [(usize, usize); 2]) -> CVector {
    let mut v = CVector::zeros(16);
    for a in 0..2usize {
        for b in 0..2usize {
            // first qubit of pair j takes value a_j, second its complement
            let bits = [a, b];
            let mut idx = 0;
            let mut sign = 1.0;
            for (j, &(p, q)) in pairs.iter().enumerate() {
                idx |= bits[j] << p;
                idx |= (1 - bits[j]) << q;
                if bits[j] == 1 {
                    sign = -sign;
                }
            }
            v[idx] = linalg::c(0.5 * sign);
        }
    }
    v
}

/// The 1 → 4 qubit code isometry into the two-dimensional singlet sector:
/// |0_L⟩ = |Ψ−⟩₁₃|Ψ−⟩₂₄ and |1_L⟩ = (2/√3)|Ψ−⟩₁₂|Ψ−⟩₃₄ − (1/√3)|Ψ−⟩₁₃|Ψ−⟩₂₄.
/// Qubits 1..4 are local qubits 0..3.
pub fn heisenberg_code_isometry() -> CMatrix {
    let s13_24 = singlet_pairs([(0, 2), (1, 3)]);
    let s12_34 = singlet_pairs([(0, 1), (2, 3)]);
    let r3 = 3f64.sqrt();
    let one_l = &s12_34 * linalg::c(2.0 / r3) - &s13_24 * linalg::c(1.0 / r3);
    let mut v = CMatrix::zeros(16, 2);
    v.set_column(0, &s13_24);
    v.set_column(1, &one_l);
    v
}

/// |+_y⟩ = (|0⟩ + i|1⟩)/√2.
pub fn plus_y() -> CVector {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    CVector::from_vec(vec![linalg::c(s), C64::new(0.0, s)])
}

/// Either kind of guiding-state description.
#[derive(Clone, Debug, PartialEq)]
pub enum GuideState {
    Subset(SubsetState),
    Encoded(EncodedState),
}

impl GuideState {
    pub fn n_qubits(&self) -> usize {
        match self {
            Self::Subset(s) => s.n_qubits(),
            Self::Encoded(e) => e.n_qubits(),
        }
    }

    pub fn amplitude(&self, x: &BitString) -> Result<C64> {
        match self {
            Self::Subset(s) => s.amplitude(x),
            Self::Encoded(e) => e.amplitude(x),
        }
    }

    pub fn to_dense(&self) -> Result<CVector> {
        match self {
            Self::Subset(s) => s.to_dense(),
            Self::Encoded(e) => e.to_dense(),
        }
    }

    pub fn to_encoded(&self) -> EncodedState {
        match self {
            Self::Subset(s) => EncodedState::from_subset(s.clone()),
            Self::Encoded(e) => e.clone(),
        }
    }

    pub fn sample_many<R: Rng>(&self, rng: &mut R, shots: usize) -> Vec<BitString> {
        match self {
            Self::Subset(s) => (0..shots).map(|_| s.sample(rng)).collect(),
            Self::Encoded(e) => e.sample_many(rng, shots),
        }
    }

    /// Attach `count` qubits in |0⟩, keeping the subset form when possible.
    pub fn attach_zeros(&self, count: usize) -> GuideState {
        match self {
            Self::Subset(s) => Self::Subset(attach_zeros(s, count)),
            Self::Encoded(e) => {
                let zero = CVector::from_vec(vec![ONE, ZERO]);
                Self::Encoded(attach_product(e, &vec![zero; count]).expect("|0⟩ blocks are valid"))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bits(s: &str) -> BitString {
        BitString::parse(s).unwrap()
    }

    #[test]
    fn bitstring_index_and_hex() {
        let b = bits("1101");
        assert_eq!(b.to_index(), 0b1011);
        assert_eq!(b.to_hex(), "b");
        assert_eq!(BitString::from_hex("b", 4).unwrap(), b);
        let long = bits("100000001");
        assert_eq!(long.to_hex(), "101");
        assert_eq!(BitString::from_hex("101", 9).unwrap(), long);
        assert!(BitString::from_hex("10", 4).is_err());
    }

    #[test]
    fn subset_amplitudes() {
        let s = SubsetState::new(2, vec![bits("00")]).unwrap();
        assert_eq!(s.amplitude(&bits("00")).unwrap(), ONE);
        assert_eq!(s.amplitude(&bits("01")).unwrap(), ZERO);
        let bell = SubsetState::new(2, vec![bits("00"), bits("11")]).unwrap();
        assert!((bell.amplitude(&bits("00")).unwrap().re - 0.5f64.sqrt()).abs() < 1e-15);
        assert!(bell.amplitude(&bits("0")).is_err());
    }

    #[test]
    fn subset_rejects_bad_input() {
        assert!(SubsetState::new(2, vec![]).is_err());
        assert!(SubsetState::new(2, vec![bits("00"), bits("00")]).is_err());
        assert!(SubsetState::new(2, vec![bits("000")]).is_err());
        assert!(SubsetState::with_cap(1, vec![bits("0"), bits("1")], 1).is_err());
    }

    #[test]
    fn attach_subset_orders_base_first() {
        let s = SubsetState::new(2, vec![bits("00"), bits("11")]).unwrap();
        let t = SubsetState::new(1, vec![bits("0")]).unwrap();
        let u = attach_subset(&s, &t).unwrap();
        assert_eq!(u.elements(), &[bits("000"), bits("110")]);
    }

    #[test]
    fn heisenberg_code_columns() {
        let v = heisenberg_code_isometry();
        assert!(linalg::isometry_defect(&v) < 1e-12);
        // string order q1q2q3q4 = local qubits 0..3
        let idx = |s: &str| bits(s).to_index();
        assert!((v[(idx("0011"), 0)] - linalg::c(0.5)).norm() < 1e-15);
        assert!((v[(idx("1100"), 0)] - linalg::c(0.5)).norm() < 1e-15);
        assert!((v[(idx("0110"), 0)] + linalg::c(0.5)).norm() < 1e-15);
        assert_eq!(v[(idx("0101"), 0)], ZERO);
        let s12 = singlet_pairs([(0, 1), (2, 3)]);
        assert!((s12.dotc(&v.column(0).into_owned()) - linalg::c(0.5)).norm() < 1e-15);
    }

    #[test]
    fn encoded_amplitude_matches_dense() {
        let base = SubsetState::new(2, vec![bits("01"), bits("10")]).unwrap();
        let st = EncodedState::from_subset(base);
        let st = apply_local_isometry(&st, 0, &heisenberg_code_isometry()).unwrap();
        let st = attach_product(&st, &[plus_y()]).unwrap();
        assert_eq!(st.n_qubits(), 6);
        let dense = st.to_dense().unwrap();
        assert!((dense.norm() - 1.0).abs() < 1e-12);
        for i in 0..64 {
            let a = st.amplitude(&BitString::from_index(i, 6)).unwrap();
            assert!((a - dense[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn attach_zero_keeps_subset_form() {
        let base = SubsetState::new(1, vec![bits("1")]).unwrap();
        let st = attach_product(&EncodedState::from_subset(base), &[CVector::from_vec(vec![ONE, ZERO])]).unwrap();
        assert_eq!(st.as_subset().unwrap().elements(), &[bits("10")]);
    }

    #[test]
    fn shape_errors() {
        let st = EncodedState::from_subset(SubsetState::new(1, vec![bits("0")]).unwrap());
        assert!(apply_local_isometry(&st, 0, &linalg::identity(4)).is_err());
        assert!(apply_local_isometry(&st, 1, &linalg::identity(2)).is_err());
        let not_iso = CMatrix::from_element(2, 2, ONE);
        assert!(apply_local_isometry(&st, 0, &not_iso).is_err());
        assert!(attach_product(&st, &[CVector::from_vec(vec![ONE, ONE])]).is_err());
    }

    #[test]
    fn deterministic_sampler_on_single_string() {
        let st = EncodedState::from_subset(SubsetState::new(3, vec![bits("000")]).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for x in st.sample_many(&mut rng, 50) {
            assert_eq!(x, bits("000"));
        }
    }

    #[test]
    fn singlet_block_marginal() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let pair = CVector::from_vec(vec![ZERO, linalg::c(-h), linalg::c(h), ZERO]);
        let st = attach_product(
            &EncodedState::from_subset(SubsetState::new(1, vec![bits("0")]).unwrap()),
            &[pair],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let draws = st.sample_many(&mut rng, 4000);
        let ones = draws.iter().filter(|x| x.bit(1)).count();
        assert!(draws.iter().all(|x| x.bit(1) != x.bit(2)));
        assert!((ones as f64 / 4000.0 - 0.5).abs() < 0.04);
    }
}
