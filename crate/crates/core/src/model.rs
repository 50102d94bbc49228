//! Instance model: `m` independent flats of codimension `k` in `F_2^n`,
//! drawn either uniformly, or uniformly among the flats avoiding a hidden
//! planted assignment, or from the light-planting mixture that plants
//! each flat independently with probability `pi`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::flats::{
    sample_light_planted_flat, sample_planted_flat, sample_uniform_flat, KFlat, PlantProcess,
};
use crate::gf2::BitVector;
use crate::{Error, Result};

/// Which distribution the flats are drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Uniform,
    Planted,
    LightPlanted,
}

impl Mode {
    pub fn is_planted(self) -> bool {
        !matches!(self, Mode::Uniform)
    }
}

impl std::fmt::Display for Mode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mode::Uniform => "uniform",
            Mode::Planted => "planted",
            Mode::LightPlanted => "light_planted",
        })
    }
}

/// Shape of an instance: dimension `n`, codimension `k`, flat count `m`,
/// and planting strength `pi` (used by `Mode::LightPlanted`; pure planting
/// corresponds to `pi = 1`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub pi: f64,
}

impl ModelParams {
    pub fn new(n: usize, k: usize, m: usize, pi: f64) -> Result<Self> {
        if k == 0 || k > n {
            return Err(Error::Parameter(format!(
                "need 1 <= k <= n, got k={k}, n={n}"
            )));
        }
        if !(0.0..=1.0).contains(&pi) {
            return Err(Error::Parameter(format!("pi must lie in [0, 1], got {pi}")));
        }
        Ok(ModelParams { n, k, m, pi })
    }

    /// Constraint density in units of `n`.
    pub fn delta(&self) -> f64 {
        self.m as f64 / self.n as f64
    }
}

/// A concrete instance, optionally carrying the planted assignment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceRepr", into = "InstanceRepr")]
pub struct Instance {
    pub params: ModelParams,
    pub mode: Mode,
    pub seed: u64,
    pub flats: Vec<KFlat>,
    pub planted_x: Option<BitVector>,
}

#[derive(Serialize, Deserialize)]
struct InstanceRepr {
    n: usize,
    k: usize,
    m: usize,
    mode: Mode,
    pi: f64,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    planted_x: Option<BitVector>,
    flats: Vec<KFlat>,
}

impl From<Instance> for InstanceRepr {
    fn from(inst: Instance) -> Self {
        InstanceRepr {
            n: inst.params.n,
            k: inst.params.k,
            m: inst.params.m,
            mode: inst.mode,
            pi: inst.params.pi,
            seed: inst.seed,
            planted_x: inst.planted_x,
            flats: inst.flats,
        }
    }
}

impl TryFrom<InstanceRepr> for Instance {
    type Error = Error;

    fn try_from(r: InstanceRepr) -> Result<Self> {
        let params = ModelParams::new(r.n, r.k, r.m, r.pi)?;
        let inst = Instance {
            params,
            mode: r.mode,
            seed: r.seed,
            flats: r.flats,
            planted_x: r.planted_x,
        };
        inst.validate()?;
        Ok(inst)
    }
}

impl Instance {
    /// Checks the structural invariants: flat count and shapes match the
    /// parameters, the planted assignment (when present) has length `n`,
    /// and under pure planting no flat contains it.
    pub fn validate(&self) -> Result<()> {
        if self.flats.len() != self.params.m {
            return Err(Error::Invalid(format!(
                "instance lists {} flats but m = {}",
                self.flats.len(),
                self.params.m
            )));
        }
        for (j, f) in self.flats.iter().enumerate() {
            if f.n() != self.params.n || f.k() != self.params.k {
                return Err(Error::Invalid(format!(
                    "flat {j} has shape (n={}, k={}), expected (n={}, k={})",
                    f.n(),
                    f.k(),
                    self.params.n,
                    self.params.k
                )));
            }
        }
        match (&self.planted_x, self.mode) {
            (Some(x), _) if x.len() != self.params.n => {
                return Err(Error::Invalid(format!(
                    "planted assignment has length {}, expected n={}",
                    x.len(),
                    self.params.n
                )));
            }
            (Some(x), Mode::Planted) => {
                for (j, f) in self.flats.iter().enumerate() {
                    if f.contains(x)? {
                        return Err(Error::Invalid(format!(
                            "flat {j} contains the planted assignment"
                        )));
                    }
                }
            }
            (None, _) | (Some(_), _) => {}
        }
        Ok(())
    }

    /// Copy with the planted assignment removed, as handed to detectors.
    pub fn blinded(&self) -> Instance {
        Instance {
            planted_x: None,
            ..self.clone()
        }
    }
}

/// Pseudorandom stream `idx` of the generator seeded by `seed`. Stream 0
/// draws the planted assignment; stream `j + 1` draws flat `j`, so flats
/// are reproducible independently of each other.
fn substream(seed: u64, idx: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(idx);
    rng
}

/// Draws an instance; deterministic in `(params, mode, seed)`.
pub fn gen_instance(params: &ModelParams, mode: Mode, seed: u64) -> Result<Instance> {
    ModelParams::new(params.n, params.k, params.m, params.pi)?;
    let planted_x = if mode.is_planted() {
        Some(BitVector::random(params.n, &mut substream(seed, 0)))
    } else {
        None
    };
    let mut flats = Vec::with_capacity(params.m);
    for j in 0..params.m {
        let rng = &mut substream(seed, j as u64 + 1);
        let flat = match (mode, &planted_x) {
            (Mode::Uniform, _) => sample_uniform_flat(params.n, params.k, rng)?,
            (Mode::Planted, Some(x)) => {
                sample_planted_flat(x, params.k, PlantProcess::ExcludeAll, rng)?
            }
            (Mode::LightPlanted, Some(x)) => {
                sample_light_planted_flat(x, params.k, params.pi, rng)?
            }
            (_, None) => unreachable!("planted modes draw x first"),
        };
        flats.push(flat);
    }
    let inst = Instance {
        params: *params,
        mode,
        seed,
        flats,
        planted_x,
    };
    debug_assert!(inst.validate().is_ok());
    Ok(inst)
}
