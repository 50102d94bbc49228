//! Trial seed derivation. Experiments fan out over a grid of parameter
//! points and a trial index; each (grid point, trial) pair gets its own
//! generator seed so results never depend on scheduling or worker count.

/// One step of the splitmix64 output function: a bijective mixer with
/// good avalanche behavior.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for one trial: mixes the master seed, then the grid point index,
/// then the trial index, through three bijective rounds. For a fixed
/// master seed and grid point, distinct trials always map to distinct
/// seeds (the last round is injective in the trial index).
pub fn trial_seed(master: u64, point: u64, trial: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ point) ^ trial)
}
