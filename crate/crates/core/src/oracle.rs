//! Exhaustive oracles over all `2^n` assignments: the satisfying count
//! `Z`, the satisfiability verdict, the per-assignment avoidance statistic
//! `s`, its maximum `sigma` with the lexicographically smallest maximizer,
//! and the thresholded max-coverage test.

use serde::Serialize;

use crate::gf2::BitVector;
use crate::model::Instance;
use crate::theory::sigma_threshold;
use crate::{Error, Result};

/// Largest `n` the exhaustive oracles will scan (`2^n` assignments).
pub const EXHAUSTIVE_CAP: usize = 24;

/// Everything the exhaustive scan knows about one instance.
#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    /// Number of assignments avoiding every flat.
    #[serde(rename = "Z")]
    pub z: u64,
    /// Best avoidance count over all assignments.
    pub sigma: usize,
    /// Whether any assignment satisfies the instance (`Z > 0`).
    pub psi_flat: bool,
    /// Lexicographically smallest assignment achieving `sigma`.
    pub argmax_x: BitVector,
}

fn check_cap(inst: &Instance) -> Result<()> {
    inst.validate()?;
    if inst.params.n > EXHAUSTIVE_CAP {
        return Err(Error::Capacity(format!(
            "exhaustive scan over 2^{} assignments, cap is 2^{EXHAUSTIVE_CAP}",
            inst.params.n
        )));
    }
    if inst.params.m > u32::MAX as usize {
        return Err(Error::Capacity("coverage counts use u32".to_string()));
    }
    Ok(())
}

/// Point indices of one flat, walked in Gray-code order. The packed index
/// of a point is its assignment read as a little-endian integer.
fn flat_point_indices(flat: &crate::flats::KFlat) -> impl Iterator<Item = u64> {
    let (particular, basis) = flat.solution_basis();
    let start = particular.to_index();
    let dirs: Vec<u64> = basis.iter().map(BitVector::to_index).collect();
    let total: u64 = 1 << dirs.len();
    let mut current = start;
    let mut step = 0u64;
    std::iter::from_fn(move || {
        if step == total {
            return None;
        }
        let out = current;
        step += 1;
        if step < total {
            current ^= dirs[step.trailing_zeros() as usize];
        }
        Some(out)
    })
}

/// Number of satisfying assignments, by marking covered points in a
/// bitmap. Capacity error when `n > EXHAUSTIVE_CAP`.
pub fn count_satisfying(inst: &Instance) -> Result<u64> {
    check_cap(inst)?;
    let n = inst.params.n;
    let mut covered = vec![0u64; (1usize << n).div_ceil(64)];
    for f in &inst.flats {
        for idx in flat_point_indices(f) {
            covered[(idx >> 6) as usize] |= 1u64 << (idx & 63);
        }
    }
    let total = 1u64 << n;
    let ones: u64 = covered.iter().map(|w| w.count_ones() as u64).sum();
    Ok(total - ones)
}

/// Whether any assignment avoids every flat.
pub fn psi_flat(inst: &Instance) -> Result<bool> {
    Ok(count_satisfying(inst)? > 0)
}

/// Number of flats avoided by the given assignment.
pub fn s_statistic(inst: &Instance, x: &BitVector) -> Result<usize> {
    inst.validate()?;
    if x.len() != inst.params.n {
        return Err(Error::Dimension(format!(
            "assignment has length {}, expected n={}",
            x.len(),
            inst.params.n
        )));
    }
    let mut avoided = 0;
    for f in &inst.flats {
        if !f.contains(x)? {
            avoided += 1;
        }
    }
    Ok(avoided)
}

/// How many flats cover each of the `2^n` points.
fn coverage_counts(inst: &Instance) -> Result<Vec<u32>> {
    check_cap(inst)?;
    let mut counts = vec![0u32; 1usize << inst.params.n];
    for f in &inst.flats {
        for idx in flat_point_indices(f) {
            counts[idx as usize] += 1;
        }
    }
    Ok(counts)
}

/// Assignment index to its rank in lexicographic order of the text form
/// (coordinate 1 is the leftmost character, so it is the most significant
/// bit of the rank).
fn lex_key(idx: u64, n: usize) -> u32 {
    (idx as u32).reverse_bits() >> (32 - n)
}

/// The maximum avoidance count and the lexicographically smallest
/// assignment achieving it.
pub fn sigma_statistic(inst: &Instance) -> Result<(usize, BitVector)> {
    let counts = coverage_counts(inst)?;
    let n = inst.params.n;
    let mut best_idx = 0u64;
    let mut best_count = counts[0];
    let mut best_key = lex_key(0, n);
    for (idx, &c) in counts.iter().enumerate() {
        let key = lex_key(idx as u64, n);
        if c < best_count || (c == best_count && key < best_key) {
            best_idx = idx as u64;
            best_count = c;
            best_key = key;
        }
    }
    Ok((
        inst.params.m - best_count as usize,
        BitVector::from_index(best_idx, n),
    ))
}

/// Max-coverage test: reject the null when `sigma` strictly exceeds the
/// threshold `((1 - 2^-k) + pi 2^-(k+1)) m`.
pub fn psi_sigma(inst: &Instance, pi: f64) -> Result<bool> {
    let (sigma, _) = sigma_statistic(inst)?;
    let threshold = sigma_threshold(inst.params.k, inst.params.m, pi)?;
    Ok(sigma as f64 > threshold)
}

/// One exhaustive scan producing all oracle quantities at once.
pub fn analyze(inst: &Instance) -> Result<OracleReport> {
    let counts = coverage_counts(inst)?;
    let n = inst.params.n;
    let mut z = 0u64;
    let mut best_idx = 0u64;
    let mut best_count = counts[0];
    let mut best_key = lex_key(0, n);
    for (idx, &c) in counts.iter().enumerate() {
        if c == 0 {
            z += 1;
        }
        let key = lex_key(idx as u64, n);
        if c < best_count || (c == best_count && key < best_key) {
            best_idx = idx as u64;
            best_count = c;
            best_key = key;
        }
    }
    Ok(OracleReport {
        z,
        sigma: inst.params.m - best_count as usize,
        psi_flat: z > 0,
        argmax_x: BitVector::from_index(best_idx, n),
    })
}
