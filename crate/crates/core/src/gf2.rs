//! Dense bit-packed linear algebra over GF(2).
//!
//! Vectors and matrices pack 64 coordinates per `u64` word. Coordinate `i`
//! (1-based in the problem statement) lives at bit index `i - 1`; the text
//! form writes coordinate 1 leftmost, so `"110"` has ones at bit indices
//! 0 and 1. Trailing bits past `len` are kept zero so that equality and
//! hashing can work on raw words.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::{Error, Result};

const WORD_BITS: usize = 64;

fn words_for(len: usize) -> usize {
    len.div_ceil(WORD_BITS)
}

/// Mask selecting the valid bits of the last word of a `len`-bit vector.
fn tail_mask(len: usize) -> u64 {
    let rem = len % WORD_BITS;
    if rem == 0 {
        u64::MAX
    } else {
        (1u64 << rem) - 1
    }
}

/// A vector over GF(2) with fixed length.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    len: usize,
    words: Vec<u64>,
}

impl BitVector {
    /// All-zero vector of the given length.
    pub fn zeros(len: usize) -> Self {
        BitVector {
            len,
            words: vec![0; words_for(len)],
        }
    }

    /// All-ones vector of the given length.
    pub fn ones(len: usize) -> Self {
        let mut v = BitVector {
            len,
            words: vec![u64::MAX; words_for(len)],
        };
        v.mask_tail();
        v
    }

    /// Uniformly random vector.
    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut v = BitVector {
            len,
            words: (0..words_for(len)).map(|_| rng.random::<u64>()).collect(),
        };
        v.mask_tail();
        v
    }

    /// Vector whose bit `i` equals bit `i` of `index`. Requires `len <= 64`.
    ///
    /// # Panics
    /// Panics if `len > 64` or `index` has bits past `len`.
    pub fn from_index(index: u64, len: usize) -> Self {
        assert!(len <= 64, "from_index supports at most 64 bits");
        assert!(len == 64 || index < (1u64 << len), "index out of range");
        let mut v = BitVector::zeros(len);
        if !v.words.is_empty() {
            v.words[0] = index;
        }
        v
    }

    /// The packed value of a vector with `len <= 64`, inverse of `from_index`.
    ///
    /// # Panics
    /// Panics if `len > 64`.
    pub fn to_index(&self) -> u64 {
        assert!(self.len <= 64, "to_index supports at most 64 bits");
        self.words.first().copied().unwrap_or(0)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// # Panics
    /// Panics if `i >= len`.
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        (self.words[i / WORD_BITS] >> (i % WORD_BITS)) & 1 == 1
    }

    /// # Panics
    /// Panics if `i >= len`.
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        let w = &mut self.words[i / WORD_BITS];
        let bit = 1u64 << (i % WORD_BITS);
        if value {
            *w |= bit;
        } else {
            *w &= !bit;
        }
    }

    /// # Panics
    /// Panics if `i >= len`.
    pub fn flip(&mut self, i: usize) {
        assert!(i < self.len, "bit index {i} out of range for length {}", self.len);
        self.words[i / WORD_BITS] ^= 1u64 << (i % WORD_BITS);
    }

    /// Coordinate-wise addition over GF(2).
    ///
    /// # Panics
    /// Panics if lengths differ.
    pub fn xor_assign(&mut self, other: &BitVector) {
        assert_eq!(self.len, other.len, "xor_assign length mismatch");
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    /// Number of ones.
    pub fn weight(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    /// Index of the lowest set bit, if any.
    pub fn first_one(&self) -> Option<usize> {
        for (wi, &w) in self.words.iter().enumerate() {
            if w != 0 {
                return Some(wi * WORD_BITS + w.trailing_zeros() as usize);
            }
        }
        None
    }

    /// Indices of set bits, ascending.
    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            let mut rem = w;
            std::iter::from_fn(move || {
                if rem == 0 {
                    None
                } else {
                    let b = rem.trailing_zeros() as usize;
                    rem &= rem - 1;
                    Some(wi * WORD_BITS + b)
                }
            })
        })
    }

    /// Inner product mod 2. Errors if lengths differ.
    pub fn dot(&self, other: &BitVector) -> Result<bool> {
        if self.len != other.len {
            return Err(Error::Dimension(format!(
                "dot: lengths {} and {}",
                self.len, other.len
            )));
        }
        let parity: u32 = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a & b).count_ones())
            .sum::<u32>()
            & 1;
        Ok(parity == 1)
    }

    fn mask_tail(&mut self) {
        if let Some(last) = self.words.last_mut() {
            *last &= tail_mask(self.len);
        }
    }

    fn words(&self) -> &[u64] {
        &self.words
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len {
            f.write_str(if self.get(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({self})")
    }
}

impl FromStr for BitVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut v = BitVector::zeros(s.len());
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => v.set(i, true),
                _ => {
                    return Err(Error::Parse(format!(
                        "bit string may contain only '0'/'1', found {c:?}"
                    )))
                }
            }
        }
        Ok(v)
    }
}

impl Serialize for BitVector {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BitVector {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Outcome classification of an affine system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Solvable,
    Inconsistent,
}

/// Result of [`solve_affine`]: status, one witness if solvable, and the
/// rank of the coefficient matrix.
#[derive(Clone, Debug)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub solution: Option<BitVector>,
    pub rank: usize,
}

/// A dense matrix over GF(2), rows packed like [`BitVector`].
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    words_per_row: usize,
    words: Vec<u64>,
}

impl BitMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        let wpr = words_for(cols).max(1);
        BitMatrix {
            rows,
            cols,
            words_per_row: wpr,
            words: vec![0; rows * wpr],
        }
    }

    /// Builds a matrix from equal-length rows. Errors if lengths differ.
    pub fn from_rows(rows: &[BitVector]) -> Result<Self> {
        let cols = rows.first().map_or(0, BitVector::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::Dimension(format!(
                "from_rows: row of length {} among rows of length {cols}",
                bad.len()
            )));
        }
        let mut m = BitMatrix::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            let base = i * m.words_per_row;
            m.words[base..base + r.words().len()].copy_from_slice(r.words());
        }
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// # Panics
    /// Panics if out of range.
    pub fn get(&self, r: usize, c: usize) -> bool {
        assert!(r < self.rows && c < self.cols, "entry ({r},{c}) out of range");
        let w = self.words[r * self.words_per_row + c / WORD_BITS];
        (w >> (c % WORD_BITS)) & 1 == 1
    }

    /// # Panics
    /// Panics if out of range.
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        assert!(r < self.rows && c < self.cols, "entry ({r},{c}) out of range");
        let w = &mut self.words[r * self.words_per_row + c / WORD_BITS];
        let bit = 1u64 << (c % WORD_BITS);
        if value {
            *w |= bit;
        } else {
            *w &= !bit;
        }
    }

    /// Copy of row `r` as a vector.
    ///
    /// # Panics
    /// Panics if `r >= rows`.
    pub fn row(&self, r: usize) -> BitVector {
        assert!(r < self.rows, "row {r} out of range");
        let base = r * self.words_per_row;
        let mut v = BitVector::zeros(self.cols);
        let n = v.words.len();
        v.words.copy_from_slice(&self.words[base..base + n]);
        v
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        let wpr = self.words_per_row;
        for w in 0..wpr {
            self.words.swap(a * wpr + w, b * wpr + w);
        }
    }

    /// Adds row `src` into row `dst`.
    fn xor_row_into(&mut self, dst: usize, src: usize) {
        debug_assert_ne!(dst, src);
        let wpr = self.words_per_row;
        let (d, s) = (dst * wpr, src * wpr);
        if d < s {
            let (head, tail) = self.words.split_at_mut(s);
            for w in 0..wpr {
                head[d + w] ^= tail[w];
            }
        } else {
            let (head, tail) = self.words.split_at_mut(d);
            for w in 0..wpr {
                tail[w] ^= head[s + w];
            }
        }
    }

    /// Matrix-vector product. Errors if `x.len() != cols`.
    pub fn mul_vec(&self, x: &BitVector) -> Result<BitVector> {
        if x.len() != self.cols {
            return Err(Error::Dimension(format!(
                "mul_vec: matrix has {} columns, vector length {}",
                self.cols,
                x.len()
            )));
        }
        let mut out = BitVector::zeros(self.rows);
        let wpr = self.words_per_row;
        for r in 0..self.rows {
            let base = r * wpr;
            let parity: u32 = self.words[base..base + x.words().len()]
                .iter()
                .zip(x.words())
                .map(|(a, b)| (a & b).count_ones())
                .sum::<u32>()
                & 1;
            if parity == 1 {
                out.set(r, true);
            }
        }
        Ok(out)
    }

    /// New matrix with `rhs` appended as an extra column. Errors if
    /// `rhs.len() != rows`.
    pub fn augment(&self, rhs: &BitVector) -> Result<BitMatrix> {
        if rhs.len() != self.rows {
            return Err(Error::Dimension(format!(
                "augment: matrix has {} rows, column length {}",
                self.rows,
                rhs.len()
            )));
        }
        let mut m = BitMatrix::zeros(self.rows, self.cols + 1);
        for r in 0..self.rows {
            for c in 0..self.cols {
                if self.get(r, c) {
                    m.set(r, c, true);
                }
            }
            if rhs.get(r) {
                m.set(r, self.cols, true);
            }
        }
        Ok(m)
    }

    /// In-place reduction to reduced row echelon form; returns the pivot
    /// columns in order.
    pub fn reduce(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut next_row = 0;
        for c in 0..self.cols {
            if next_row == self.rows {
                break;
            }
            let Some(pivot_row) = (next_row..self.rows).find(|&r| self.get(r, c)) else {
                continue;
            };
            self.swap_rows(next_row, pivot_row);
            for r in 0..self.rows {
                if r != next_row && self.get(r, c) {
                    self.xor_row_into(r, next_row);
                }
            }
            pivots.push(c);
            next_row += 1;
        }
        pivots
    }

    /// Reduced row echelon form, keeping the original row count.
    pub fn rref(&self) -> BitMatrix {
        let mut m = self.clone();
        m.reduce();
        m
    }

    /// Rank over GF(2).
    pub fn rank(&self) -> usize {
        self.clone().reduce().len()
    }
}

impl fmt::Debug for BitMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "BitMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            writeln!(f, "  {}", self.row(r))?;
        }
        write!(f, "]")
    }
}

/// Solves `A x = b` over GF(2). When solvable, the witness sets every free
/// variable to zero. Errors if `b.len() != A.rows()`.
pub fn solve_affine(a: &BitMatrix, b: &BitVector) -> Result<SolveResult> {
    let mut aug = a.augment(b)?;
    let pivots = aug.reduce();
    let rhs_col = a.cols();
    if pivots.last() == Some(&rhs_col) {
        return Ok(SolveResult {
            status: SolveStatus::Inconsistent,
            solution: None,
            rank: pivots.len() - 1,
        });
    }
    let mut x = BitVector::zeros(a.cols());
    for (row, &col) in pivots.iter().enumerate() {
        if aug.get(row, rhs_col) {
            x.set(col, true);
        }
    }
    Ok(SolveResult {
        status: SolveStatus::Solvable,
        solution: Some(x),
        rank: pivots.len(),
    })
}

/// Draws a uniformly random `k x n` matrix of rank `k` by rejection: each
/// candidate row is kept only if it is independent of the rows so far, so
/// the accepted tuple is uniform over ordered bases of k-dimensional row
/// spaces. Errors unless `1 <= k <= n`.
pub fn sample_independent_rows<R: Rng + ?Sized>(
    k: usize,
    n: usize,
    rng: &mut R,
) -> Result<BitMatrix> {
    if k == 0 || k > n {
        return Err(Error::Parameter(format!(
            "sample_independent_rows: need 1 <= k <= n, got k={k}, n={n}"
        )));
    }
    let mut rows: Vec<BitVector> = Vec::with_capacity(k);
    // Reduced copies with known pivots, used to test independence quickly.
    let mut basis: Vec<(usize, BitVector)> = Vec::with_capacity(k);
    while rows.len() < k {
        let cand = BitVector::random(n, rng);
        let mut red = cand.clone();
        for (p, b) in &basis {
            if red.get(*p) {
                red.xor_assign(b);
            }
        }
        if let Some(p) = red.first_one() {
            // Keep the basis fully reduced so a single pass above suffices.
            for (_, b) in basis.iter_mut() {
                if b.get(p) {
                    b.xor_assign(&red);
                }
            }
            basis.push((p, red));
            rows.push(cand);
        }
    }
    BitMatrix::from_rows(&rows)
}
