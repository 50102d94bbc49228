//! Grid-driven Monte Carlo experiments. Every experiment walks a
//! deterministic parameter grid; each grid point fans out into per-trial
//! seeds via [`crate::seed::trial_seed`], so output is identical for any
//! worker count and any scheduling order.

use std::fmt;
use std::time::Instant;

use anyhow::{bail, Result};
use rayon::prelude::*;
use serde::Serialize;

use flatsat_core::lift::{psi_lift_with_index, MonomialIndex};
use flatsat_core::lpn::{gen_lpn, reduce_to_flats, LpnMode};
use flatsat_core::model::{gen_instance, Mode, ModelParams};
use flatsat_core::oracle::{count_satisfying, s_statistic, sigma_statistic};
use flatsat_core::theory::{expected_z, expected_z2, sigma_threshold};

use crate::seed::{splitmix64, trial_seed};

/// Which study a configuration drives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    /// Satisfiability probability across the grid.
    Sweep,
    /// Sample mean of Z and Z^2 against the closed forms.
    Moments,
    /// Type I/II error rates of the configured detectors.
    DetectorEval,
    /// End-to-end check of the parity-learning reduction.
    LpnCheck,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Experiment::Sweep => "sweep",
            Experiment::Moments => "moments",
            Experiment::DetectorEval => "detector_eval",
            Experiment::LpnCheck => "lpn_check",
        })
    }
}

/// The detectors the evaluation experiment can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Detector {
    /// Exhaustive satisfiability (`Z > 0`).
    Flat,
    /// Solvability of the lifted linear system.
    Lift,
    /// Thresholded max-coverage statistic.
    Maxsat,
}

impl fmt::Display for Detector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Detector::Flat => "flat",
            Detector::Lift => "lift",
            Detector::Maxsat => "maxsat",
        })
    }
}

/// How the flat counts of a grid are specified.
#[derive(Clone, Debug)]
pub enum MSpec {
    /// Explicit values.
    Direct(Vec<usize>),
    /// Densities, converted per (n, k) as `m = ceil(value * scale)`.
    Delta { values: Vec<f64>, scale: DeltaScale },
}

/// What a density multiplies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeltaScale {
    /// Ambient dimension `n`.
    N,
    /// Monomial count `N_k` of the lift.
    Nk,
}

impl MSpec {
    fn resolve(&self, n: usize, k: usize) -> Result<Vec<usize>> {
        match self {
            MSpec::Direct(values) => Ok(values.clone()),
            MSpec::Delta { values, scale } => {
                let base = match scale {
                    DeltaScale::N => n as f64,
                    DeltaScale::Nk => flatsat_core::lift::monomial_count(n, k)? as f64,
                };
                Ok(values.iter().map(|v| (v * base).ceil() as usize).collect())
            }
        }
    }
}

/// Full description of one experiment run.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub n_values: Vec<usize>,
    pub k_values: Vec<usize>,
    pub m_spec: MSpec,
    /// Planting strengths; drives both generation and the max-coverage
    /// threshold. For the reduction check the strength is `1 - 2 eta`.
    pub pi_values: Vec<f64>,
    /// Noise rates for the reduction check.
    pub eta_values: Vec<f64>,
    /// Sampling modes for plain sweeps.
    pub modes: Vec<Mode>,
    pub detectors: Vec<Detector>,
    pub trials: usize,
    pub master_seed: u64,
    /// Fixed worker count; `None` uses the global thread pool.
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(experiment: Experiment) -> Self {
        ExperimentConfig {
            experiment,
            n_values: Vec::new(),
            k_values: Vec::new(),
            m_spec: MSpec::Direct(Vec::new()),
            pi_values: vec![1.0],
            eta_values: vec![0.0],
            modes: vec![Mode::Uniform],
            detectors: vec![Detector::Flat, Detector::Lift, Detector::Maxsat],
            trials: 100,
            master_seed: 0,
            workers: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() || self.k_values.is_empty() {
            bail!("grid needs at least one n and one k");
        }
        let empty_m = match &self.m_spec {
            MSpec::Direct(v) => v.is_empty(),
            MSpec::Delta { values, .. } => values.is_empty(),
        };
        if empty_m {
            bail!("grid needs at least one m or delta");
        }
        if self.trials == 0 {
            bail!("need at least one trial");
        }
        if let Some(bad) = self.pi_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            bail!("pi must lie in [0, 1], got {bad}");
        }
        if let Some(bad) = self.eta_values.iter().find(|e| !(0.0..0.5).contains(*e)) {
            bail!("eta must lie in [0, 0.5), got {bad}");
        }
        match self.experiment {
            Experiment::Sweep if self.modes.is_empty() => bail!("sweep needs at least one mode"),
            Experiment::DetectorEval if self.detectors.is_empty() => {
                bail!("detector evaluation needs at least one detector")
            }
            Experiment::LpnCheck if self.eta_values.is_empty() => {
                bail!("reduction check needs at least one eta")
            }
            _ => {}
        }
        Ok(())
    }
}

/// One output row in the shared result schema. Fields that do not apply
/// to the experiment stay `None` and render as empty CSV cells.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    pub experiment: String,
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub delta: f64,
    pub pi: f64,
    pub mode: String,
    pub detector: String,
    pub trials: usize,
    pub type1: Option<f64>,
    pub type1_se: Option<f64>,
    pub type2: Option<f64>,
    pub type2_se: Option<f64>,
    pub p_sat: Option<f64>,
    pub p_sat_se: Option<f64>,
    pub seed: u64,
    pub status: String,
}

pub const CSV_COLUMNS: [&str; 17] = [
    "experiment",
    "n",
    "k",
    "m",
    "delta",
    "pi",
    "mode",
    "detector",
    "trials",
    "type1",
    "type1_se",
    "type2",
    "type2_se",
    "p_sat",
    "p_sat_se",
    "seed",
    "status",
];

fn fmt_f64(v: f64) -> String {
    format!("{v:.6}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

/// Renders rows as CSV with a fixed header, fixed six-decimal floats, and
/// one trailing newline: byte-stable for identical inputs.
pub fn rows_to_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS)?;
    for r in rows {
        w.write_record(&[
            r.experiment.clone(),
            r.n.to_string(),
            r.k.to_string(),
            r.m.to_string(),
            fmt_f64(r.delta),
            fmt_f64(r.pi),
            r.mode.clone(),
            r.detector.clone(),
            r.trials.to_string(),
            fmt_opt(r.type1),
            fmt_opt(r.type1_se),
            fmt_opt(r.type2),
            fmt_opt(r.type2_se),
            fmt_opt(r.p_sat),
            fmt_opt(r.p_sat_se),
            r.seed.to_string(),
            r.status.clone(),
        ])?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

/// Empirical rate and its binomial standard error.
fn rate_se(hits: usize, trials: usize) -> (f64, f64) {
    let p = hits as f64 / trials as f64;
    (p, (p * (1.0 - p) / trials as f64).sqrt())
}

/// Runs `trials` closures in parallel, preserving trial order in the
/// output. A worker count pins a private thread pool; results do not
/// depend on it either way.
fn map_trials<T, F>(workers: Option<usize>, trials: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    let run = || (0..trials).into_par_iter().map(&f).collect::<Result<Vec<T>>>();
    match workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()?
            .install(run),
        None => run(),
    }
}

fn base_row(cfg: &ExperimentConfig, n: usize, k: usize, m: usize, pi: f64) -> SweepRow {
    SweepRow {
        experiment: cfg.experiment.to_string(),
        n,
        k,
        m,
        delta: m as f64 / n as f64,
        pi,
        mode: String::new(),
        detector: String::new(),
        trials: cfg.trials,
        type1: None,
        type1_se: None,
        type2: None,
        type2_se: None,
        p_sat: None,
        p_sat_se: None,
        seed: cfg.master_seed,
        status: "ok".to_string(),
    }
}

fn error_status(e: &anyhow::Error) -> String {
    format!("error: {e:#}")
}

/// Satisfiability probability across the grid, one row per point.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    let mut point: u64 = 0;
    for &n in &cfg.n_values {
        for &k in &cfg.k_values {
            let ms = cfg.m_spec.resolve(n, k);
            for m in ms.unwrap_or_else(|_| vec![0]) {
                for &pi in &cfg.pi_values {
                    for &mode in &cfg.modes {
                        let gi = point;
                        point += 1;
                        let mut row = base_row(cfg, n, k, m, pi);
                        row.mode = mode.to_string();
                        let outcome = (|| -> Result<(f64, f64)> {
                            cfg.m_spec.resolve(n, k)?;
                            let params = ModelParams::new(n, k, m, pi)?;
                            let sat = map_trials(cfg.workers, cfg.trials, |t| {
                                let seed = trial_seed(cfg.master_seed, 2 * gi, t as u64);
                                let inst = gen_instance(&params, mode, seed)?;
                                Ok(count_satisfying(&inst)? > 0)
                            })?;
                            Ok(rate_se(sat.iter().filter(|&&s| s).count(), cfg.trials))
                        })();
                        match outcome {
                            Ok((p, se)) => {
                                row.p_sat = Some(p);
                                row.p_sat_se = Some(se);
                            }
                            Err(e) => row.status = error_status(&e),
                        }
                        rows.push(row);
                    }
                }
            }
        }
    }
    Ok(rows)
}

/// Everything recorded about a single evaluated instance.
#[derive(Clone, Debug, Serialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    /// Verdicts parallel to the configured detector list.
    pub verdicts: Vec<(Detector, bool)>,
    /// Satisfying count, when the flat detector ran.
    pub z: Option<u64>,
    /// Max-coverage statistic, when the maxsat detector ran.
    pub sigma: Option<usize>,
    /// Wall-clock seconds; the only nondeterministic field.
    pub wall_secs: f64,
}

/// Runs every configured detector on blinded instances drawn from one
/// stream. Detectors share instances, so their error rates are directly
/// comparable trial by trial.
pub fn run_detector_trials(
    cfg: &ExperimentConfig,
    stream: u64,
    params: &ModelParams,
    mode: Mode,
    index: Option<&MonomialIndex>,
) -> Result<Vec<TrialRecord>> {
    map_trials(cfg.workers, cfg.trials, |t| {
        let started = Instant::now();
        let seed = trial_seed(cfg.master_seed, stream, t as u64);
        let inst = gen_instance(params, mode, seed)?.blinded();
        let mut z = None;
        let mut sigma = None;
        let mut verdicts = Vec::with_capacity(cfg.detectors.len());
        for &d in &cfg.detectors {
            let verdict = match d {
                Detector::Flat => {
                    let count = count_satisfying(&inst)?;
                    z = Some(count);
                    count > 0
                }
                Detector::Maxsat => {
                    let (s, _) = sigma_statistic(&inst)?;
                    sigma = Some(s);
                    s as f64 > sigma_threshold(params.k, params.m, params.pi)?
                }
                Detector::Lift => {
                    let idx = index.expect("monomial index prebuilt for the lift detector");
                    psi_lift_with_index(idx, &inst)?.psi_l
                }
            };
            verdicts.push((d, verdict));
        }
        Ok(TrialRecord {
            trial: t,
            seed,
            verdicts,
            z,
            sigma,
            wall_secs: started.elapsed().as_secs_f64(),
        })
    })
}

/// Type I/II error rates for each detector: uniform instances measure
/// false alarms, planted instances measure misses. One row per
/// (grid point, detector).
pub fn run_detector_eval(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    let mut point: u64 = 0;
    for &n in &cfg.n_values {
        for &k in &cfg.k_values {
            let ms = cfg.m_spec.resolve(n, k);
            for m in ms.unwrap_or_else(|_| vec![0]) {
                for &pi in &cfg.pi_values {
                    let gi = point;
                    point += 1;
                    let alt_mode = if pi >= 1.0 {
                        Mode::Planted
                    } else {
                        Mode::LightPlanted
                    };
                    let outcome = (|| -> Result<(Vec<TrialRecord>, Vec<TrialRecord>)> {
                        cfg.m_spec.resolve(n, k)?;
                        let params = ModelParams::new(n, k, m, pi)?;
                        let index = if cfg.detectors.contains(&Detector::Lift) {
                            Some(MonomialIndex::build(n, k)?)
                        } else {
                            None
                        };
                        let unif = run_detector_trials(
                            cfg,
                            2 * gi,
                            &params,
                            Mode::Uniform,
                            index.as_ref(),
                        )?;
                        let alt = run_detector_trials(
                            cfg,
                            2 * gi + 1,
                            &params,
                            alt_mode,
                            index.as_ref(),
                        )?;
                        Ok((unif, alt))
                    })();
                    match outcome {
                        Ok((unif, alt)) => {
                            for (di, &d) in cfg.detectors.iter().enumerate() {
                                let mut row = base_row(cfg, n, k, m, pi);
                                row.mode = alt_mode.to_string();
                                row.detector = d.to_string();
                                let rejects =
                                    unif.iter().filter(|r| r.verdicts[di].1).count();
                                let misses =
                                    alt.iter().filter(|r| !r.verdicts[di].1).count();
                                let (t1, t1se) = rate_se(rejects, cfg.trials);
                                let (t2, t2se) = rate_se(misses, cfg.trials);
                                row.type1 = Some(t1);
                                row.type1_se = Some(t1se);
                                row.type2 = Some(t2);
                                row.type2_se = Some(t2se);
                                rows.push(row);
                            }
                        }
                        Err(e) => {
                            for &d in &cfg.detectors {
                                let mut row = base_row(cfg, n, k, m, pi);
                                row.mode = alt_mode.to_string();
                                row.detector = d.to_string();
                                row.status = error_status(&e);
                                rows.push(row);
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(rows)
}

/// End-to-end reduction check: draw parity samples with a secret, reduce
/// to flats, and measure how often the secret satisfies the reduced
/// instance. The pi column carries the implied strength `1 - 2 eta`.
pub fn run_lpn_check(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    let mut point: u64 = 0;
    for &n in &cfg.n_values {
        for &k in &cfg.k_values {
            let ms = cfg.m_spec.resolve(n, k);
            for m in ms.unwrap_or_else(|_| vec![0]) {
                for &eta in &cfg.eta_values {
                    let gi = point;
                    point += 1;
                    let pi = 1.0 - 2.0 * eta;
                    let mut row = base_row(cfg, n, k, m, pi);
                    row.mode = if eta > 0.0 {
                        Mode::LightPlanted.to_string()
                    } else {
                        Mode::Planted.to_string()
                    };
                    let outcome = (|| -> Result<(f64, f64)> {
                        cfg.m_spec.resolve(n, k)?;
                        ModelParams::new(n, k, m, pi)?;
                        let sat = map_trials(cfg.workers, cfg.trials, |t| {
                            let base = trial_seed(cfg.master_seed, 2 * gi, t as u64);
                            // Zero rows cannot reduce; redraw the sample set
                            // deterministically until none appear.
                            let mut attempt = 0u64;
                            let lpn = loop {
                                let candidate =
                                    gen_lpn(n, m, LpnMode::Secret, eta, splitmix64(base ^ attempt))?;
                                if candidate.rows.iter().all(|r| !r.is_zero()) {
                                    break candidate;
                                }
                                attempt += 1;
                                if attempt > 10_000 {
                                    bail!("could not draw {m} nonzero rows at n={n}");
                                }
                            };
                            let inst = reduce_to_flats(
                                &lpn,
                                k,
                                trial_seed(cfg.master_seed, 2 * gi + 1, t as u64),
                            )?;
                            let x = inst.planted_x.clone().expect("secret carried through");
                            Ok(s_statistic(&inst, &x)? == m)
                        })?;
                        Ok(rate_se(sat.iter().filter(|&&s| s).count(), cfg.trials))
                    })();
                    match outcome {
                        Ok((p, se)) => {
                            row.p_sat = Some(p);
                            row.p_sat_se = Some(se);
                        }
                        Err(e) => row.status = error_status(&e),
                    }
                    rows.push(row);
                }
            }
        }
    }
    Ok(rows)
}

/// Sample moments of the satisfying count against the closed forms.
#[derive(Clone, Debug, Serialize)]
pub struct MomentsRow {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub trials: usize,
    pub seed: u64,
    pub z_mean: f64,
    pub z_se: f64,
    pub z_expected: f64,
    /// Standardized gap (mean - expected) / se; `None` when se = 0.
    pub z_zscore: Option<f64>,
    pub z2_mean: f64,
    pub z2_se: f64,
    pub z2_expected: f64,
    pub z2_zscore: Option<f64>,
    pub p_sat: f64,
    pub p_sat_se: f64,
    pub status: String,
}

/// Monte Carlo estimates of `E[Z]` and `E[Z^2]` under the uniform model,
/// one row per grid point.
pub fn run_moments(cfg: &ExperimentConfig) -> Result<Vec<MomentsRow>> {
    cfg.validate()?;
    let mut rows = Vec::new();
    let mut point: u64 = 0;
    for &n in &cfg.n_values {
        for &k in &cfg.k_values {
            let ms = cfg.m_spec.resolve(n, k);
            for m in ms.unwrap_or_else(|_| vec![0]) {
                let gi = point;
                point += 1;
                let mut row = MomentsRow {
                    n,
                    k,
                    m,
                    trials: cfg.trials,
                    seed: cfg.master_seed,
                    z_mean: f64::NAN,
                    z_se: f64::NAN,
                    z_expected: f64::NAN,
                    z_zscore: None,
                    z2_mean: f64::NAN,
                    z2_se: f64::NAN,
                    z2_expected: f64::NAN,
                    z2_zscore: None,
                    p_sat: f64::NAN,
                    p_sat_se: f64::NAN,
                    status: "ok".to_string(),
                };
                let outcome = (|| -> Result<()> {
                    cfg.m_spec.resolve(n, k)?;
                    let params = ModelParams::new(n, k, m, 1.0)?;
                    let zs = map_trials(cfg.workers, cfg.trials, |t| {
                        let seed = trial_seed(cfg.master_seed, 2 * gi, t as u64);
                        let inst = gen_instance(&params, Mode::Uniform, seed)?;
                        Ok(count_satisfying(&inst)?)
                    })?;
                    let t = cfg.trials as f64;
                    let (mut s1, mut s2, mut s4) = (0.0f64, 0.0f64, 0.0f64);
                    let mut sat = 0usize;
                    for &z in &zs {
                        let z = z as f64;
                        s1 += z;
                        s2 += z * z;
                        s4 += z * z * z * z;
                        if z > 0.0 {
                            sat += 1;
                        }
                    }
                    let mean = s1 / t;
                    let mean2 = s2 / t;
                    let var = (s2 / t - mean * mean).max(0.0);
                    let var2 = (s4 / t - mean2 * mean2).max(0.0);
                    row.z_mean = mean;
                    row.z_se = (var / t).sqrt();
                    row.z2_mean = mean2;
                    row.z2_se = (var2 / t).sqrt();
                    row.z_expected = expected_z(n, k, m)?.linear;
                    row.z2_expected = expected_z2(n, k, m)?.linear;
                    row.z_zscore = (row.z_se > 0.0)
                        .then(|| (row.z_mean - row.z_expected) / row.z_se);
                    row.z2_zscore = (row.z2_se > 0.0)
                        .then(|| (row.z2_mean - row.z2_expected) / row.z2_se);
                    let (p, se) = rate_se(sat, cfg.trials);
                    row.p_sat = p;
                    row.p_sat_se = se;
                    Ok(())
                })();
                if let Err(e) = outcome {
                    row.status = error_status(&e);
                }
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

/// Dispatch for the experiments that share the row schema.
pub fn run_rows(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    match cfg.experiment {
        Experiment::Sweep => run_sweep(cfg),
        Experiment::DetectorEval => run_detector_eval(cfg),
        Experiment::LpnCheck => run_lpn_check(cfg),
        Experiment::Moments => bail!("moments produces its own report; use run_moments"),
    }
}
