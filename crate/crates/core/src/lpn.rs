//! Learning parity with noise, and its reduction to planted flat
//! satisfiability. Each LPN sample `(a_j, b_j)` becomes one flat: the
//! sample row is bundled with `k - 1` fresh independent forms (resampled
//! until the joint rank is `k`), the sample constraint is aimed at
//! `b_j + 1`, the fresh constraints at uniform targets, and the rows are
//! uniformly permuted. Conditioned on `a_j != 0` the output flat is
//! exactly uniform for uniform labels, and exactly the light-planting
//! mixture with strength `pi = 1 - 2 eta` when labels carry the secret.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::flats::KFlat;
use crate::gf2::{sample_independent_rows, BitMatrix, BitVector};
use crate::model::{Instance, Mode, ModelParams};
use crate::{Error, Result};

/// Label distribution of an LPN instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpnMode {
    /// Labels uniform and independent of the rows.
    UniformPair,
    /// Labels `a_j . x + e_j` with flip probability `eta`.
    Secret,
}

/// An LPN sample set: `m` rows of dimension `n` with one label each.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "LpnRepr", into = "LpnRepr")]
pub struct LpnInstance {
    pub n: usize,
    pub m: usize,
    /// Flip probability; `None` for uniform labels.
    pub eta: Option<f64>,
    /// The hidden parity; `None` for uniform labels.
    pub secret: Option<BitVector>,
    pub rows: Vec<BitVector>,
    pub labels: BitVector,
}

#[derive(Serialize, Deserialize)]
struct LpnRepr {
    n: usize,
    m: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    eta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    secret: Option<BitVector>,
    #[serde(rename = "A")]
    rows: Vec<BitVector>,
    #[serde(rename = "b")]
    labels: BitVector,
}

impl From<LpnInstance> for LpnRepr {
    fn from(v: LpnInstance) -> Self {
        LpnRepr {
            n: v.n,
            m: v.m,
            eta: v.eta,
            secret: v.secret,
            rows: v.rows,
            labels: v.labels,
        }
    }
}

impl TryFrom<LpnRepr> for LpnInstance {
    type Error = Error;

    fn try_from(r: LpnRepr) -> Result<Self> {
        let v = LpnInstance {
            n: r.n,
            m: r.m,
            eta: r.eta,
            secret: r.secret,
            rows: r.rows,
            labels: r.labels,
        };
        v.validate()?;
        Ok(v)
    }
}

impl LpnInstance {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Parameter("n must be at least 1".to_string()));
        }
        if self.rows.len() != self.m {
            return Err(Error::Invalid(format!(
                "instance lists {} rows but m = {}",
                self.rows.len(),
                self.m
            )));
        }
        if let Some(bad) = self.rows.iter().find(|r| r.len() != self.n) {
            return Err(Error::Invalid(format!(
                "row of length {} in an n={} instance",
                bad.len(),
                self.n
            )));
        }
        if self.labels.len() != self.m {
            return Err(Error::Invalid(format!(
                "{} labels for m = {} rows",
                self.labels.len(),
                self.m
            )));
        }
        if let Some(x) = &self.secret {
            if x.len() != self.n {
                return Err(Error::Invalid(format!(
                    "secret has length {}, expected n={}",
                    x.len(),
                    self.n
                )));
            }
        }
        if let Some(eta) = self.eta {
            check_eta(eta)?;
        }
        Ok(())
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !(0.0..0.5).contains(&eta) {
        return Err(Error::Parameter(format!(
            "noise rate eta must lie in [0, 0.5), got {eta}"
        )));
    }
    Ok(())
}

fn substream(seed: u64, idx: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(idx);
    rng
}

/// Draws an LPN instance; deterministic in the arguments. Stream 0 draws
/// the secret, stream `j + 1` draws row `j` and its label.
pub fn gen_lpn(n: usize, m: usize, mode: LpnMode, eta: f64, seed: u64) -> Result<LpnInstance> {
    if n == 0 {
        return Err(Error::Parameter("n must be at least 1".to_string()));
    }
    let secret = match mode {
        LpnMode::Secret => {
            check_eta(eta)?;
            Some(BitVector::random(n, &mut substream(seed, 0)))
        }
        LpnMode::UniformPair => None,
    };
    let mut rows = Vec::with_capacity(m);
    let mut labels = BitVector::zeros(m);
    for j in 0..m {
        let rng = &mut substream(seed, j as u64 + 1);
        let row = BitVector::random(n, rng);
        let label = match &secret {
            Some(x) => row.dot(x)? ^ rng.random_bool(eta),
            None => rng.random_bool(0.5),
        };
        if label {
            labels.set(j, true);
        }
        rows.push(row);
    }
    Ok(LpnInstance {
        n,
        m,
        eta: secret.as_ref().map(|_| eta),
        secret,
        rows,
        labels,
    })
}

/// Reduces an LPN instance to a flat instance of codimension `k`, one flat
/// per sample; deterministic in `(lpn, k, seed)`. Fails with a reduction
/// error on any zero row (a zero row carries no constraint and cannot be
/// embedded in a full-rank flat).
pub fn reduce_to_flats(lpn: &LpnInstance, k: usize, seed: u64) -> Result<Instance> {
    lpn.validate()?;
    if k < 2 || k > lpn.n {
        return Err(Error::Parameter(format!(
            "reduction needs 2 <= k <= n, got k={k}, n={}",
            lpn.n
        )));
    }
    let pi = match (&lpn.secret, lpn.eta) {
        (Some(_), Some(eta)) => 1.0 - 2.0 * eta,
        (Some(_), None) => 1.0,
        (None, _) => 1.0,
    };
    let mode = match (&lpn.secret, lpn.eta) {
        (Some(_), Some(eta)) if eta > 0.0 => Mode::LightPlanted,
        (Some(_), _) => Mode::Planted,
        (None, _) => Mode::Uniform,
    };
    let params = ModelParams::new(lpn.n, k, lpn.m, pi)?;

    let mut flats = Vec::with_capacity(lpn.m);
    for (j, row) in lpn.rows.iter().enumerate() {
        if row.is_zero() {
            return Err(Error::Reduction(format!(
                "row {j} is zero; condition samples on nonzero rows first"
            )));
        }
        let rng = &mut substream(seed, j as u64 + 1);
        // Fresh forms, resampled until the sample row joins a rank-k set.
        let fresh = loop {
            let cand = sample_independent_rows(k - 1, lpn.n, rng)?;
            let mut stack: Vec<BitVector> = (0..k - 1).map(|i| cand.row(i)).collect();
            stack.push(row.clone());
            if BitMatrix::from_rows(&stack)?.rank() == k {
                break stack;
            }
        };
        let mut targets = BitVector::random(k - 1, rng);
        // The sample constraint aims at the complement of the label.
        let mut target_bits: Vec<bool> = (0..k - 1).map(|i| targets.get(i)).collect();
        target_bits.push(!lpn.labels.get(j));

        let mut order: Vec<usize> = (0..k).collect();
        order.shuffle(rng);
        let forms =
            BitMatrix::from_rows(&order.iter().map(|&i| fresh[i].clone()).collect::<Vec<_>>())?;
        targets = BitVector::zeros(k);
        for (slot, &i) in order.iter().enumerate() {
            if target_bits[i] {
                targets.set(slot, true);
            }
        }
        flats.push(KFlat::new(forms, targets)?);
    }
    let inst = Instance {
        params,
        mode,
        seed,
        flats,
        planted_x: lpn.secret.clone(),
    };
    inst.validate()?;
    Ok(inst)
}
