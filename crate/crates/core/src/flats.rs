//! Flats of codimension k in `F_2^n`: construction, membership, sampling
//! under null and planted distributions, canonical forms, and census
//! utilities (exact counts, exhaustive enumeration).

use itertools::Itertools;
use num_bigint::BigUint;
use num_traits::One;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::gf2::{sample_independent_rows, solve_affine, BitMatrix, BitVector, SolveStatus};
use crate::{Error, Result};

/// Largest point set a flat may be asked to enumerate (2^(n-k) points).
pub const ENUMERATION_CAP_BITS: usize = 24;

/// Largest number of flats `enumerate_all_flats` will materialize.
pub const FLAT_CENSUS_CAP: u64 = 1_000_000;

/// The solution set of `forms * x = eps` where `forms` is a full-rank
/// `k x n` matrix: an affine subspace of dimension `n - k` holding exactly
/// `2^(n-k)` points.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "KFlatRepr", into = "KFlatRepr")]
pub struct KFlat {
    n: usize,
    k: usize,
    forms: BitMatrix,
    eps: BitVector,
}

#[derive(Serialize, Deserialize)]
struct KFlatRepr {
    forms: Vec<BitVector>,
    eps: BitVector,
}

impl From<KFlat> for KFlatRepr {
    fn from(f: KFlat) -> Self {
        KFlatRepr {
            forms: (0..f.k).map(|i| f.forms.row(i)).collect(),
            eps: f.eps,
        }
    }
}

impl TryFrom<KFlatRepr> for KFlat {
    type Error = Error;

    fn try_from(r: KFlatRepr) -> Result<Self> {
        KFlat::new(BitMatrix::from_rows(&r.forms)?, r.eps)
    }
}

impl KFlat {
    /// Validates shape and that the `k` forms are linearly independent.
    pub fn new(forms: BitMatrix, eps: BitVector) -> Result<Self> {
        let (k, n) = (forms.rows(), forms.cols());
        if k == 0 || k > n {
            return Err(Error::Parameter(format!(
                "flat needs 1 <= k <= n, got k={k}, n={n}"
            )));
        }
        if eps.len() != k {
            return Err(Error::Dimension(format!(
                "flat targets have length {}, expected k={k}",
                eps.len()
            )));
        }
        if forms.rank() != k {
            return Err(Error::Invalid(
                "flat forms are linearly dependent".to_string(),
            ));
        }
        Ok(KFlat { n, k, forms, eps })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn forms(&self) -> &BitMatrix {
        &self.forms
    }

    pub fn eps(&self) -> &BitVector {
        &self.eps
    }

    /// Whether `x` satisfies all k constraints. Errors if `x.len() != n`.
    pub fn contains(&self, x: &BitVector) -> Result<bool> {
        Ok(self.forms.mul_vec(x)? == self.eps)
    }

    /// One point of the flat plus a basis of the direction space; together
    /// they parameterize all `2^(n-k)` points.
    pub fn solution_basis(&self) -> (BitVector, Vec<BitVector>) {
        let solved = solve_affine(&self.forms, &self.eps)
            .expect("shapes fixed by construction");
        debug_assert_eq!(solved.status, SolveStatus::Solvable);
        let particular = solved.solution.expect("full-rank system is consistent");

        let mut reduced = self.forms.clone();
        let pivots = reduced.reduce();
        let mut basis = Vec::with_capacity(self.n - self.k);
        for free in (0..self.n).filter(|c| !pivots.contains(c)) {
            let mut v = BitVector::zeros(self.n);
            v.set(free, true);
            for (row, &p) in pivots.iter().enumerate() {
                if reduced.get(row, free) {
                    v.set(p, true);
                }
            }
            basis.push(v);
        }
        (particular, basis)
    }

    /// All points of the flat. Errors with a capacity failure when
    /// `n - k > ENUMERATION_CAP_BITS`.
    pub fn enumerate_points(&self) -> Result<Vec<BitVector>> {
        let dim = self.n - self.k;
        if dim > ENUMERATION_CAP_BITS {
            return Err(Error::Capacity(format!(
                "flat holds 2^{dim} points, cap is 2^{ENUMERATION_CAP_BITS}"
            )));
        }
        let (particular, basis) = self.solution_basis();
        let mut points = Vec::with_capacity(1usize << dim);
        let mut current = particular;
        points.push(current.clone());
        // Gray code walk: one basis flip per step.
        for step in 1u64..(1u64 << dim) {
            current.xor_assign(&basis[step.trailing_zeros() as usize]);
            points.push(current.clone());
        }
        Ok(points)
    }

    /// Representation-independent form: the reduced row echelon form of the
    /// augmented matrix `[forms | eps]`. Two flats are equal as point sets
    /// exactly when their canonical forms match.
    pub fn canonicalize(&self) -> CanonicalFlat {
        let aug = self
            .forms
            .augment(&self.eps)
            .expect("eps length equals row count by construction");
        CanonicalFlat {
            n: self.n,
            k: self.k,
            augmented: aug.rref(),
        }
    }
}

/// Canonicalized flat; `Eq`/`Hash` make it usable as a census key.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct CanonicalFlat {
    n: usize,
    k: usize,
    augmented: BitMatrix,
}

impl CanonicalFlat {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// The canonical `k x (n+1)` matrix `[forms | eps]` in reduced row
    /// echelon form.
    pub fn augmented(&self) -> &BitMatrix {
        &self.augmented
    }

    /// Rebuilds a flat from the canonical representation.
    pub fn to_flat(&self) -> KFlat {
        let mut rows = Vec::with_capacity(self.k);
        let mut eps = BitVector::zeros(self.k);
        for r in 0..self.k {
            let full = self.augmented.row(r);
            let mut form = BitVector::zeros(self.n);
            for c in full.iter_ones() {
                if c < self.n {
                    form.set(c, true);
                } else {
                    eps.set(r, true);
                }
            }
            rows.push(form);
        }
        KFlat::new(BitMatrix::from_rows(&rows).expect("canonical rows share length"), eps)
            .expect("canonical form is full rank")
    }
}

/// How the constraint targets are chosen when planting around `x`.
///
/// All three choices induce the same distribution on flats avoiding `x`;
/// they differ only as distributions on (forms, eps) representations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlantProcess {
    /// Uniform over the `2^k - 1` target vectors different from `forms * x`.
    ExcludeAll,
    /// Pick one constraint index uniformly and force disagreement there;
    /// the other target bits are uniform.
    OneForced,
    /// Disagree with `forms * x` in every coordinate.
    AllForced,
}

/// A flat uniform over all `count_flats(n, k)` flats: uniform full-rank
/// forms plus uniform targets.
pub fn sample_uniform_flat<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<KFlat> {
    let forms = sample_independent_rows(k, n, rng)?;
    let eps = BitVector::random(k, rng);
    KFlat::new(forms, eps)
}

/// A flat uniform over the flats avoiding `x`: uniform full-rank forms,
/// then targets conditioned to differ from `forms * x` via `process`.
pub fn sample_planted_flat<R: Rng + ?Sized>(
    x: &BitVector,
    k: usize,
    process: PlantProcess,
    rng: &mut R,
) -> Result<KFlat> {
    let n = x.len();
    let forms = sample_independent_rows(k, n, rng)?;
    let t = forms.mul_vec(x).expect("forms built over x's space");
    let eps = match process {
        PlantProcess::ExcludeAll => loop {
            let e = BitVector::random(k, rng);
            if e != t {
                break e;
            }
        },
        PlantProcess::OneForced => {
            let forced = rng.random_range(0..k);
            let mut e = BitVector::random(k, rng);
            e.set(forced, !t.get(forced));
            e
        }
        PlantProcess::AllForced => {
            let mut e = t.clone();
            for i in 0..k {
                e.flip(i);
            }
            e
        }
    };
    KFlat::new(forms, eps)
}

/// The light-planting mixture: with probability `pi` a planted flat
/// avoiding `x`, otherwise a uniform flat.
pub fn sample_light_planted_flat<R: Rng + ?Sized>(
    x: &BitVector,
    k: usize,
    pi: f64,
    rng: &mut R,
) -> Result<KFlat> {
    if !(0.0..=1.0).contains(&pi) {
        return Err(Error::Parameter(format!("pi must lie in [0, 1], got {pi}")));
    }
    if rng.random_bool(pi) {
        sample_planted_flat(x, k, PlantProcess::ExcludeAll, rng)
    } else {
        sample_uniform_flat(x.len(), k, rng)
    }
}

/// Exact number of distinct flats of codimension `k` in `F_2^n`:
/// `2^k` target choices per subspace times the Gaussian binomial count of
/// codimension-k subspaces.
pub fn count_flats(n: usize, k: usize) -> Result<BigUint> {
    if k == 0 || k > n {
        return Err(Error::Parameter(format!(
            "count_flats needs 1 <= k <= n, got k={k}, n={n}"
        )));
    }
    let one = BigUint::one();
    let mut numerator = BigUint::one();
    let mut denominator = BigUint::one();
    for i in 0..k {
        numerator *= (&one << (n - i)) - &one;
        denominator *= (&one << (k - i)) - &one;
    }
    debug_assert!((&numerator % &denominator).bits() == 0);
    Ok(numerator / denominator << k)
}

/// Every flat of codimension `k`, one canonical form each, in a fixed
/// deterministic order. Errors with a capacity failure when the census
/// exceeds `FLAT_CENSUS_CAP`.
pub fn enumerate_all_flats(n: usize, k: usize) -> Result<Vec<CanonicalFlat>> {
    let total = count_flats(n, k)?;
    if total > BigUint::from(FLAT_CENSUS_CAP) {
        return Err(Error::Capacity(format!(
            "census of {total} flats exceeds cap {FLAT_CENSUS_CAP}"
        )));
    }
    let mut out = Vec::new();
    // Enumerate reduced row echelon forms directly: choose pivot columns,
    // then fill every free position (entries right of a row's pivot in
    // non-pivot columns, plus the target column) with all 0/1 patterns.
    for pivots in (0..n).combinations(k) {
        let mut free_slots: Vec<(usize, usize)> = Vec::new();
        for (row, &p) in pivots.iter().enumerate() {
            for c in p + 1..n {
                if !pivots.contains(&c) {
                    free_slots.push((row, c));
                }
            }
        }
        for row in 0..k {
            free_slots.push((row, n));
        }
        for bits in 0u64..(1u64 << free_slots.len()) {
            let mut aug = BitMatrix::zeros(k, n + 1);
            for (row, &p) in pivots.iter().enumerate() {
                aug.set(row, p, true);
            }
            for (slot, &(row, col)) in free_slots.iter().enumerate() {
                if (bits >> slot) & 1 == 1 {
                    aug.set(row, col, true);
                }
            }
            out.push(CanonicalFlat {
                n,
                k,
                augmented: aug,
            });
        }
    }
    Ok(out)
}
