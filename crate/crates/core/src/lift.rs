//! Degree-k multilinear lift. Assignments `x` in `F_2^n` lift to the
//! vector of all monomials `prod_{s in S} x_s` over subsets `|S| <= k`;
//! the avoidance constraint for one flat expands to a single linear
//! equation in the lifted coordinates. Solvability of the resulting
//! system (plus the affine pin `X_empty = 1`) is a polynomial-time
//! relaxation of flat satisfiability: complete, but not sound.

use std::collections::HashMap;

use serde::Serialize;

use crate::flats::KFlat;
use crate::gf2::{solve_affine, BitMatrix, BitVector, SolveStatus};
use crate::model::Instance;
use crate::{Error, Result};

/// Largest number of monomials an index will materialize.
pub const MONOMIAL_CAP: u64 = 1_000_000;

/// Number of monomials of degree at most `k` over `n` variables:
/// `N_k = sum_{i <= k} C(n, i)`. Errors if the count exceeds
/// `MONOMIAL_CAP`, and on `k > n` or `k = 0`.
pub fn monomial_count(n: usize, k: usize) -> Result<u64> {
    if k == 0 || k > n {
        return Err(Error::Parameter(format!(
            "monomial basis needs 1 <= k <= n, got k={k}, n={n}"
        )));
    }
    let mut total: u64 = 0;
    let mut binom: u128 = 1;
    for i in 0..=k {
        if i > 0 {
            binom = binom * (n - i + 1) as u128 / i as u128;
        }
        total = total.saturating_add(binom.min(u64::MAX as u128) as u64);
        if total > MONOMIAL_CAP {
            return Err(Error::Capacity(format!(
                "monomial basis for (n={n}, k={k}) exceeds cap {MONOMIAL_CAP}"
            )));
        }
    }
    Ok(total)
}

/// Monomial basis in graded lexicographic order: the empty set first, then
/// subsets by size, lexicographically within a size. Coordinates are
/// 0-based bit indices.
pub struct MonomialIndex {
    n: usize,
    k: usize,
    subsets: Vec<Vec<u32>>,
    positions: HashMap<Vec<u32>, u32>,
}

impl MonomialIndex {
    pub fn build(n: usize, k: usize) -> Result<Self> {
        let total = monomial_count(n, k)? as usize;
        let mut subsets = Vec::with_capacity(total);
        subsets.push(Vec::new());
        let mut frontier: Vec<Vec<u32>> = vec![Vec::new()];
        for _size in 1..=k {
            let mut next = Vec::new();
            for s in &frontier {
                let start = s.last().map_or(0, |&last| last + 1);
                for extra in start..n as u32 {
                    let mut grown = s.clone();
                    grown.push(extra);
                    next.push(grown);
                }
            }
            subsets.extend(next.iter().cloned());
            frontier = next;
        }
        debug_assert_eq!(subsets.len(), total);
        let positions = subsets
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as u32))
            .collect();
        Ok(MonomialIndex {
            n,
            k,
            subsets,
            positions,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of monomials `N_k`.
    pub fn len(&self) -> usize {
        self.subsets.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The variable set of monomial `i`, sorted ascending.
    ///
    /// # Panics
    /// Panics if `i` is out of range.
    pub fn subset(&self, i: usize) -> &[u32] {
        &self.subsets[i]
    }

    /// Position of a sorted variable set, if it is in the basis.
    pub fn position(&self, subset: &[u32]) -> Option<usize> {
        self.positions.get(subset).map(|&i| i as usize)
    }

    /// Position of the monomial for `S union {t}` (multilinear reduction:
    /// repeated variables collapse). `None` if the union exceeds degree k.
    fn union_position(&self, s: &[u32], t: u32) -> Option<usize> {
        if s.binary_search(&t).is_ok() {
            return self.position(s);
        }
        let mut merged = Vec::with_capacity(s.len() + 1);
        let split = s.partition_point(|&v| v < t);
        merged.extend_from_slice(&s[..split]);
        merged.push(t);
        merged.extend_from_slice(&s[split..]);
        self.position(&merged)
    }
}

/// Coefficient vector over the monomial basis of a [`MonomialIndex`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LiftedVector(pub BitVector);

/// The lift of an assignment: bit `i` is the value of monomial `i` at `x`.
pub fn veronese(x: &BitVector, index: &MonomialIndex) -> Result<LiftedVector> {
    if x.len() != index.n() {
        return Err(Error::Dimension(format!(
            "assignment has length {}, index is over n={}",
            x.len(),
            index.n()
        )));
    }
    let mut out = BitVector::zeros(index.len());
    for i in 0..index.len() {
        if index.subset(i).iter().all(|&s| x.get(s as usize)) {
            out.set(i, true);
        }
    }
    Ok(LiftedVector(out))
}

/// Expands the membership indicator of a flat into the monomial basis:
/// `prod_i (l_i(x) + eps_i + 1)` multiplied out with the multilinear
/// reduction `x_t^2 = x_t`. The result pairs with [`veronese`] to evaluate
/// membership linearly.
pub fn expand_flat(flat: &KFlat, index: &MonomialIndex) -> Result<LiftedVector> {
    if flat.n() != index.n() {
        return Err(Error::Dimension(format!(
            "flat is over n={}, index over n={}",
            flat.n(),
            index.n()
        )));
    }
    if flat.k() > index.k() {
        return Err(Error::Parameter(format!(
            "flat of codimension {} needs monomials of degree up to {}, index caps at {}",
            flat.k(),
            flat.k(),
            index.k()
        )));
    }
    // Running product, starting from the constant polynomial 1.
    let mut coeffs = BitVector::zeros(index.len());
    coeffs.set(0, true);
    for i in 0..flat.k() {
        let support: Vec<u32> = flat.forms().row(i).iter_ones().map(|c| c as u32).collect();
        let constant = !flat.eps().get(i);
        let mut next = if constant {
            coeffs.clone()
        } else {
            BitVector::zeros(index.len())
        };
        for pos in coeffs.iter_ones() {
            let s = index.subset(pos);
            for &t in &support {
                let target = index
                    .union_position(s, t)
                    .expect("degree stays within k because only k factors multiply in");
                next.flip(target);
            }
        }
        coeffs = next;
    }
    Ok(LiftedVector(coeffs))
}

/// The lifted linear system of an instance: one avoidance equation per
/// flat (right side 0) plus the pin `X_empty = 1`, over the monomial
/// basis of the index it was built with.
pub struct LiftedSystem<'a> {
    pub index: &'a MonomialIndex,
    pub rows: BitMatrix,
    pub rhs: BitVector,
}

/// Builds the lifted system with a caller-supplied index (reusable across
/// instances sharing `(n, k)`).
pub fn build_system_with_index<'a>(
    index: &'a MonomialIndex,
    inst: &Instance,
) -> Result<LiftedSystem<'a>> {
    inst.validate()?;
    if index.n() != inst.params.n || index.k() != inst.params.k {
        return Err(Error::Dimension(format!(
            "index is for (n={}, k={}), instance has (n={}, k={})",
            index.n(),
            index.k(),
            inst.params.n,
            inst.params.k
        )));
    }
    let mut rows = Vec::with_capacity(inst.params.m + 1);
    for f in &inst.flats {
        rows.push(expand_flat(f, index)?.0);
    }
    let mut pin = BitVector::zeros(index.len());
    pin.set(0, true);
    rows.push(pin);
    let mut rhs = BitVector::zeros(inst.params.m + 1);
    rhs.set(inst.params.m, true);
    Ok(LiftedSystem {
        index,
        rows: BitMatrix::from_rows(&rows)?,
        rhs,
    })
}

/// Verdict of the lifted test with diagnostics.
#[derive(Clone, Debug, Serialize)]
pub struct LiftReport {
    /// Whether the lifted system is solvable (the test's null rejection).
    #[serde(rename = "psi_L")]
    pub psi_l: bool,
    /// Basis size `N_k`.
    #[serde(rename = "N_k")]
    pub n_k: usize,
    /// Rank of the full augmented-system coefficient matrix.
    pub rank: usize,
    /// Whether the witness is the lift of some assignment; `None` when
    /// unsolvable. Diagnostic only: a witness off the variety still
    /// certifies solvability.
    pub on_variety: Option<bool>,
    #[serde(skip)]
    pub witness: Option<LiftedVector>,
}

/// Lifted linear test: solvable lifted system means "maybe satisfiable"
/// (complete for satisfiable instances, not sound).
pub fn psi_lift(inst: &Instance) -> Result<LiftReport> {
    let index = MonomialIndex::build(inst.params.n, inst.params.k)?;
    psi_lift_with_index(&index, inst)
}

pub fn psi_lift_with_index(index: &MonomialIndex, inst: &Instance) -> Result<LiftReport> {
    let system = build_system_with_index(index, inst)?;
    let solved = solve_affine(&system.rows, &system.rhs)?;
    let psi_l = solved.status == SolveStatus::Solvable;
    let (witness, on_variety) = match solved.solution {
        Some(w) => {
            // Read an assignment off the singleton coordinates and compare
            // its lift against the witness.
            let mut x = BitVector::zeros(index.n());
            for t in 0..index.n() {
                let pos = index
                    .position(&[t as u32])
                    .expect("singletons are always in a k >= 1 basis");
                if w.get(pos) {
                    x.set(t, true);
                }
            }
            let lifted = veronese(&x, index)?;
            let on = lifted.0 == w;
            (Some(LiftedVector(w)), Some(on))
        }
        None => (None, None),
    };
    Ok(LiftReport {
        psi_l,
        n_k: index.len(),
        rank: solved.rank,
        on_variety,
        witness,
    })
}
