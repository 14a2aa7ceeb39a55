//! Dense linear algebra over GF(2).
//!
//! Vectors and matrices are bit-packed into `u64` words so that the hot
//! operations of the matrix-optimization search (row XOR, Hamming weight,
//! support overlap) compile to word ops and popcounts. Everything here is
//! 0-indexed.

use std::cmp::Ordering;
use std::fmt;

use crate::{Error, Result};

const WORD_BITS: usize = 64;

// ---------------------------------------------------------------------------
// BitVector
// ---------------------------------------------------------------------------

/// A fixed-length vector over GF(2), bit `i` of word `i / 64` at position
/// `i % 64`. Bits at positions >= `len` are kept zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        BitVector {
            len,
            words: vec![0; len.div_ceil(WORD_BITS)],
        }
    }

    /// Builds from 0/1 entries, index 0 first.
    pub fn from_bits(bits: &[u8]) -> Self {
        let mut v = BitVector::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b != 0 {
                v.set(i, true);
            }
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.words[i / WORD_BITS] >> (i % WORD_BITS) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (i % WORD_BITS);
        if value {
            self.words[i / WORD_BITS] |= mask;
        } else {
            self.words[i / WORD_BITS] &= !mask;
        }
    }

    /// Hamming weight.
    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    #[inline]
    pub fn xor_assign(&mut self, other: &BitVector) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    /// `|support(self) ∩ support(other)|`.
    #[inline]
    pub fn overlap(&self, other: &BitVector) -> usize {
        debug_assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones() as usize)
            .sum()
    }

    /// Indices of the set bits, ascending.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    None
                } else {
                    let b = w.trailing_zeros() as usize;
                    w &= w - 1;
                    Some(wi * WORD_BITS + b)
                }
            })
        })
    }

    /// Rotation: output index `(i + q) mod len` holds input index `i`.
    pub fn cyclic_shift(&self, q: usize) -> BitVector {
        let n = self.len;
        let q = q % n.max(1);
        let mut out = BitVector::zeros(n);
        for i in self.iter_ones() {
            out.set((i + q) % n, true);
        }
        out
    }

    /// Lexicographically smallest rotation, comparing index 0 first. Two
    /// vectors are cyclic-equivalent iff their canonical forms are equal.
    pub fn canonical_cyclic_form(&self) -> BitVector {
        let mut best = self.clone();
        for q in 1..self.len {
            let cand = self.cyclic_shift(q);
            if cand.lex_cmp(&best) == Ordering::Less {
                best = cand;
            }
        }
        best
    }

    /// Lexicographic order with index 0 as the most significant position,
    /// so e.g. 001 < 010 < 100 when read left to right.
    pub fn lex_cmp(&self, other: &BitVector) -> Ordering {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter().zip(&other.words) {
            // reverse_bits puts the low coordinate at the numeric top
            match a.reverse_bits().cmp(&b.reverse_bits()) {
                Ordering::Equal => continue,
                ord => return ord,
            }
        }
        Ordering::Equal
    }

    /// Low 128 bits as an integer; valid only when `len <= 128`.
    pub(crate) fn as_u128(&self) -> u128 {
        debug_assert!(self.len <= 128);
        let lo = self.words.first().copied().unwrap_or(0) as u128;
        let hi = self.words.get(1).copied().unwrap_or(0) as u128;
        hi << 64 | lo
    }

    pub(crate) fn from_u128(bits: u128, len: usize) -> BitVector {
        debug_assert!(len <= 128);
        let mut v = BitVector::zeros(len);
        if !v.words.is_empty() {
            v.words[0] = bits as u64;
        }
        if v.words.len() > 1 {
            v.words[1] = (bits >> 64) as u64;
        }
        v
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            write!(f, "{}", self.get(i) as u8)?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// BitMatrix
// ---------------------------------------------------------------------------

/// A dense binary matrix stored as a list of equal-length rows.
#[derive(Clone, PartialEq, Eq)]
pub struct BitMatrix {
    cols: usize,
    rows: Vec<BitVector>,
}

impl BitMatrix {
    pub fn new(cols: usize) -> Self {
        BitMatrix { cols, rows: Vec::new() }
    }

    pub fn from_rows(rows: Vec<BitVector>) -> Self {
        let cols = rows.first().map_or(0, BitVector::len);
        assert!(rows.iter().all(|r| r.len() == cols), "ragged rows");
        BitMatrix { cols, rows }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        BitMatrix {
            cols,
            rows: vec![BitVector::zeros(cols); rows],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = BitMatrix::zeros(n, n);
        for i in 0..n {
            m.rows[i].set(i, true);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &BitVector {
        &self.rows[i]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut BitVector {
        &mut self.rows[i]
    }

    pub fn push_row(&mut self, row: BitVector) {
        assert_eq!(row.len(), self.cols);
        self.rows.push(row);
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &BitVector> {
        self.rows.iter()
    }

    pub fn get(&self, r: usize, c: usize) -> bool {
        self.rows[r].get(c)
    }

    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        self.rows[r].set(c, value);
    }

    pub fn transpose(&self) -> BitMatrix {
        let mut t = BitMatrix::zeros(self.cols, self.rows.len());
        for (r, row) in self.rows.iter().enumerate() {
            for c in row.iter_ones() {
                t.rows[c].set(r, true);
            }
        }
        t
    }

    /// Reduced row echelon form. Zero rows sink to the bottom; the returned
    /// rank is the number of non-zero rows.
    pub fn row_echelon(&self) -> (BitMatrix, usize) {
        let mut m = self.clone();
        let mut pivot_row = 0;
        for col in 0..m.cols {
            let Some(found) = (pivot_row..m.rows.len()).find(|&r| m.rows[r].get(col)) else {
                continue;
            };
            m.rows.swap(pivot_row, found);
            let pivot = m.rows[pivot_row].clone();
            for (r, row) in m.rows.iter_mut().enumerate() {
                if r != pivot_row && row.get(col) {
                    row.xor_assign(&pivot);
                }
            }
            pivot_row += 1;
            if pivot_row == m.rows.len() {
                break;
            }
        }
        (m, pivot_row)
    }

    pub fn rank(&self) -> usize {
        self.row_echelon().1
    }

    /// Number of length-4 cycles in the Tanner graph: for each unordered row
    /// pair, any two shared support columns close one cycle, so the total is
    /// sum over pairs of C(overlap, 2).
    pub fn count_length4_cycles(&self) -> u64 {
        let mut total = 0u64;
        for i in 0..self.rows.len() {
            for j in i + 1..self.rows.len() {
                let lambda = self.rows[i].overlap(&self.rows[j]) as u64;
                total += lambda * (lambda.saturating_sub(1)) / 2;
            }
        }
        total
    }

    /// True iff `H · c^T = 0` over GF(2).
    pub fn syndrome_ok(&self, c: &BitVector) -> Result<bool> {
        if c.len() != self.cols {
            return Err(Error::DimensionMismatch(format!(
                "syndrome of length-{} vector against {} columns",
                c.len(),
                self.cols
            )));
        }
        Ok(self.rows.iter().all(|r| r.overlap(c) % 2 == 0))
    }

    pub fn weight_profile(&self) -> WeightProfile {
        let row_weights: Vec<usize> = self.rows.iter().map(BitVector::weight).collect();
        let mut col_weights = vec![0usize; self.cols];
        for row in &self.rows {
            for c in row.iter_ones() {
                col_weights[c] += 1;
            }
        }
        WeightProfile {
            col: WeightStats::of(&col_weights),
            row: WeightStats::of(&row_weights),
            cycle4_count: self.count_length4_cycles(),
            rank: self.rank(),
        }
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.rows {
            writeln!(f, "{row:?}")?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Weight statistics
// ---------------------------------------------------------------------------

/// Min/max/mean and population standard deviation of a weight sequence.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct WeightStats {
    pub min: usize,
    pub max: usize,
    pub mean: f64,
    pub std: f64,
}

impl WeightStats {
    fn of(weights: &[usize]) -> WeightStats {
        if weights.is_empty() {
            return WeightStats { min: 0, max: 0, mean: 0.0, std: 0.0 };
        }
        let n = weights.len() as f64;
        let mean = weights.iter().sum::<usize>() as f64 / n;
        let var = weights
            .iter()
            .map(|&w| (w as f64 - mean).powi(2))
            .sum::<f64>()
            / n;
        WeightStats {
            min: *weights.iter().min().unwrap(),
            max: *weights.iter().max().unwrap(),
            mean,
            std: var.sqrt(),
        }
    }
}

/// Table-style summary of a matrix: column/row weight statistics, length-4
/// cycle count, and rank.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize)]
pub struct WeightProfile {
    pub col: WeightStats,
    pub row: WeightStats,
    pub cycle4_count: u64,
    pub rank: usize,
}

// ---------------------------------------------------------------------------
// Tests
// ---------------------------------------------------------------------------

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize) -> BitMatrix {
        let rows = (0..m)
            .map(|_| BitVector::from_bits(&(0..n).map(|_| rng.gen_range(0..2u8)).collect::<Vec<_>>()))
            .collect();
        BitMatrix::from_rows(rows)
    }

    /// Naive reference: enumerate all (row pair, column pair) rectangles.
    fn brute_force_cycles(m: &BitMatrix) -> u64 {
        let mut count = 0;
        for i in 0..m.rows() {
            for j in i + 1..m.rows() {
                for a in 0..m.cols() {
                    for b in a + 1..m.cols() {
                        if m.get(i, a) && m.get(i, b) && m.get(j, a) && m.get(j, b) {
                            count += 1;
                        }
                    }
                }
            }
        }
        count
    }

    #[test]
    fn test_01_get_set_weight() {
        let mut v = BitVector::zeros(70);
        v.set(0, true);
        v.set(63, true);
        v.set(64, true);
        v.set(69, true);
        assert_eq!(v.weight(), 4);
        assert!(v.get(63) && v.get(64));
        v.set(63, false);
        assert_eq!(v.weight(), 3);
        assert_eq!(v.iter_ones().collect::<Vec<_>>(), vec![0, 64, 69]);
    }

    #[test]
    fn test_02_cyclic_shift_examples() {
        let v = BitVector::from_bits(&[1, 0, 0]);
        assert_eq!(v.cyclic_shift(0), v);
        assert_eq!(v.cyclic_shift(1), BitVector::from_bits(&[0, 1, 0]));
        assert_eq!(v.cyclic_shift(3), v);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let bits: Vec<u8> = (0..127).map(|_| rng.gen_range(0..2)).collect();
            let v = BitVector::from_bits(&bits);
            let q = rng.gen_range(0..127);
            assert_eq!(v.cyclic_shift(q).weight(), v.weight());
            assert_eq!(v.cyclic_shift(q).cyclic_shift(127 - q), v);
        }
    }

    #[test]
    fn test_03_canonical_form() {
        let v = BitVector::from_bits(&[0, 1, 0]);
        assert_eq!(v.canonical_cyclic_form(), BitVector::from_bits(&[0, 0, 1]));
        let z = BitVector::zeros(5);
        assert_eq!(z.canonical_cyclic_form(), z);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let bits: Vec<u8> = (0..63).map(|_| rng.gen_range(0..2)).collect();
            let v = BitVector::from_bits(&bits);
            let canon = v.canonical_cyclic_form();
            // idempotent and invariant across the whole equivalence class
            assert_eq!(canon.canonical_cyclic_form(), canon);
            let q = rng.gen_range(0..63);
            assert_eq!(v.cyclic_shift(q).canonical_cyclic_form(), canon);
        }
    }

    #[test]
    fn test_04_lex_order_reads_left_to_right() {
        let a = BitVector::from_bits(&[0, 0, 1]);
        let b = BitVector::from_bits(&[0, 1, 0]);
        let c = BitVector::from_bits(&[1, 0, 0]);
        assert_eq!(a.lex_cmp(&b), Ordering::Less);
        assert_eq!(b.lex_cmp(&c), Ordering::Less);
        assert_eq!(c.lex_cmp(&c), Ordering::Equal);
    }

    #[test]
    fn test_05_row_echelon_identity() {
        let id = BitMatrix::identity(3);
        let (e, rank) = id.row_echelon();
        assert_eq!(rank, 3);
        assert_eq!(e, id);
    }

    #[test]
    fn test_06_row_echelon_duplicate_rows() {
        let r = BitVector::from_bits(&[1, 0, 1, 1]);
        let m = BitMatrix::from_rows(vec![r.clone(), r]);
        let (e, rank) = m.row_echelon();
        assert_eq!(rank, 1);
        assert!(!e.row(0).is_zero());
        assert!(e.row(1).is_zero());
    }

    #[test]
    fn test_07_row_echelon_preserves_row_space() {
        // every original row must reduce to zero against the echelon basis
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let m = random_matrix(&mut rng, 6, 9);
            let (e, rank) = m.row_echelon();
            for r in 0..m.rows() {
                let mut v = m.row(r).clone();
                for b in 0..rank {
                    let lead = e.row(b).iter_ones().next().unwrap();
                    if v.get(lead) {
                        v.xor_assign(e.row(b));
                    }
                }
                assert!(v.is_zero(), "row left the span");
            }
        }
    }

    #[test]
    fn test_08_rank_equals_transpose_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let m = random_matrix(&mut rng, 7, 10);
            assert_eq!(m.rank(), m.transpose().rank());
        }
    }

    #[test]
    fn test_09_cycle_count_identity_and_all_ones() {
        assert_eq!(BitMatrix::identity(3).count_length4_cycles(), 0);
        let ones = BitMatrix::from_rows(vec![
            BitVector::from_bits(&[1, 1, 1]),
            BitVector::from_bits(&[1, 1, 1]),
        ]);
        assert_eq!(ones.count_length4_cycles(), 3);
    }

    #[test]
    fn test_10_cycle_count_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..100 {
            let m = random_matrix(&mut rng, 8, 12);
            assert_eq!(m.count_length4_cycles(), brute_force_cycles(&m));
        }
    }

    #[test]
    fn test_11_syndrome_ok() {
        let h = BitMatrix::from_rows(vec![BitVector::from_bits(&[1, 1, 0])]);
        assert!(h.syndrome_ok(&BitVector::zeros(3)).unwrap());
        assert!(!h.syndrome_ok(&BitVector::from_bits(&[1, 0, 0])).unwrap());
        assert!(h.syndrome_ok(&BitVector::from_bits(&[1, 1, 0])).unwrap());
        assert!(h.syndrome_ok(&BitVector::zeros(4)).is_err());
    }

    #[test]
    fn test_12_weight_profile_identity() {
        let p = BitMatrix::identity(3).weight_profile();
        assert_eq!((p.col.min, p.col.max), (1, 1));
        assert_eq!(p.col.std, 0.0);
        assert_eq!(p.row.mean, 1.0);
        assert_eq!(p.cycle4_count, 0);
        assert_eq!(p.rank, 3);
    }

    #[test]
    fn test_13_weight_profile_mass_balance() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let m = random_matrix(&mut rng, 5, 11);
            let p = m.weight_profile();
            let col_mass = p.col.mean * m.cols() as f64;
            let row_mass = p.row.mean * m.rows() as f64;
            assert!((col_mass - row_mass).abs() < 1e-9);
        }
    }

    #[test]
    fn test_14_u128_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..50 {
            let bits: Vec<u8> = (0..127).map(|_| rng.gen_range(0..2)).collect();
            let v = BitVector::from_bits(&bits);
            assert_eq!(BitVector::from_u128(v.as_u128(), 127), v);
        }
    }
}
