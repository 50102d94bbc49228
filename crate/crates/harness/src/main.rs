//! `flatsat`: generate flat-satisfiability instances, run detectors,
//! sweep parameter grids, print closed-form reports, and exercise the
//! parity-learning reduction, all reproducibly from a single seed.

use std::fs;
use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use flatsat_core::flats::enumerate_all_flats;
use flatsat_core::lift::{monomial_count, psi_lift};
use flatsat_core::lpn::{gen_lpn, reduce_to_flats, LpnInstance, LpnMode};
use flatsat_core::model::{gen_instance, Instance, Mode, ModelParams};
use flatsat_core::oracle::{analyze, count_satisfying, s_statistic, sigma_statistic};
use flatsat_core::theory::{expected_z, expected_z2, sigma_threshold, theory_report};
use flatsat_harness::{
    rows_to_csv, run_detector_eval, run_lpn_check, run_moments, run_sweep, Detector, DeltaScale,
    Experiment, ExperimentConfig, MSpec,
};

#[derive(Parser)]
#[command(
    name = "flatsat",
    about = "Flat-satisfiability instances, detectors, and experiments",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Uniform,
    Planted,
    #[value(name = "light_planted", alias = "light-planted")]
    LightPlanted,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Uniform => Mode::Uniform,
            ModeArg::Planted => Mode::Planted,
            ModeArg::LightPlanted => Mode::LightPlanted,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DetectorArg {
    Flat,
    Lift,
    Maxsat,
}

impl From<DetectorArg> for Detector {
    fn from(d: DetectorArg) -> Detector {
        match d {
            DetectorArg::Flat => Detector::Flat,
            DetectorArg::Lift => Detector::Lift,
            DetectorArg::Maxsat => Detector::Maxsat,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ExperimentArg {
    /// Satisfiability probability per grid point.
    Sweep,
    /// Detector type I/II error rates.
    Eval,
    /// Parity-reduction round trip.
    LpnCheck,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ScaleArg {
    /// Multiples of the dimension n.
    N,
    /// Multiples of the lift's monomial count.
    Nk,
}

impl From<ScaleArg> for DeltaScale {
    fn from(s: ScaleArg) -> DeltaScale {
        match s {
            ScaleArg::N => DeltaScale::N,
            ScaleArg::Nk => DeltaScale::Nk,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Args)]
struct OutputOpt {
    /// Write output to this file instead of stdout.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

impl OutputOpt {
    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(path) => fs::write(path, text)
                .with_context(|| format!("writing {}", path.display()))?,
            None => print!("{text}"),
        }
        Ok(())
    }
}

/// Flat count, either direct or as a density with an explicit scale and
/// ceil rounding.
#[derive(Args)]
struct CountOpt {
    /// Flat count.
    #[arg(long, conflicts_with = "delta")]
    m: Option<usize>,
    /// Density; the flat count becomes ceil(delta * scale).
    #[arg(long)]
    delta: Option<f64>,
    /// What a density multiplies.
    #[arg(long, value_enum, default_value_t = ScaleArg::N, requires = "delta")]
    delta_scale: ScaleArg,
}

impl CountOpt {
    fn resolve(&self, n: usize, k: usize) -> Result<usize> {
        match (self.m, self.delta) {
            (Some(m), None) => Ok(m),
            (None, Some(d)) => {
                let base = match self.delta_scale {
                    ScaleArg::N => n as f64,
                    ScaleArg::Nk => monomial_count(n, k)? as f64,
                };
                Ok((d * base).ceil() as usize)
            }
            _ => bail!("exactly one of --m or --delta is required"),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Sample one instance and print it as JSON. The planted assignment
    /// is withheld unless --reveal is given.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        count: CountOpt,
        /// Planting strength for the light_planted mode.
        #[arg(long, default_value_t = 1.0)]
        pi: f64,
        #[arg(long, value_enum, default_value_t = ModeArg::Uniform)]
        mode: ModeArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Keep the planted assignment in the output.
        #[arg(long)]
        reveal: bool,
        #[command(flatten)]
        output: OutputOpt,
    },
    /// Run one detector on an instance read as JSON and print its report.
    Detect {
        /// Instance JSON; stdin when omitted.
        #[arg(long = "in", value_name = "PATH")]
        input: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = DetectorArg::Flat)]
        method: DetectorArg,
        /// Planting strength for the maxsat threshold; defaults to the
        /// instance's own pi.
        #[arg(long)]
        pi: Option<f64>,
        #[command(flatten)]
        output: OutputOpt,
    },
    /// Run a Monte Carlo experiment over a parameter grid.
    Sweep {
        #[arg(long, value_enum, default_value_t = ExperimentArg::Sweep)]
        experiment: ExperimentArg,
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<usize>,
        /// Flat counts.
        #[arg(long, value_delimiter = ',', conflicts_with = "delta")]
        m: Vec<usize>,
        /// Densities; each resolves to ceil(delta * scale) per (n, k).
        #[arg(long, value_delimiter = ',')]
        delta: Vec<f64>,
        #[arg(long, value_enum, default_value_t = ScaleArg::N)]
        delta_scale: ScaleArg,
        #[arg(long, value_delimiter = ',', default_value = "1.0")]
        pi: Vec<f64>,
        /// Noise rates for the lpn-check experiment.
        #[arg(long, value_delimiter = ',', default_value = "0.0")]
        eta: Vec<f64>,
        /// Sampling modes for the sweep experiment.
        #[arg(long, value_delimiter = ',', value_enum, default_value = "uniform")]
        mode: Vec<ModeArg>,
        /// Detectors for the eval experiment.
        #[arg(long, value_delimiter = ',', value_enum, default_value = "flat,lift,maxsat")]
        detectors: Vec<DetectorArg>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Thread count; defaults to one per core. Results never depend
        /// on it.
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
        format: FormatArg,
        #[command(flatten)]
        output: OutputOpt,
    },
    /// Estimate E[Z] and E[Z^2] by Monte Carlo and compare with the
    /// closed forms; prints one JSON record per grid point.
    Moments {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        k: Vec<usize>,
        #[arg(long, value_delimiter = ',', required = true)]
        m: Vec<usize>,
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        workers: Option<usize>,
        #[command(flatten)]
        output: OutputOpt,
    },
    /// Print every closed-form quantity for one parameter point as JSON.
    Theory {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        k: usize,
        #[command(flatten)]
        count: CountOpt,
        #[arg(long, default_value_t = 1.0)]
        pi: f64,
        #[command(flatten)]
        output: OutputOpt,
    },
    /// Sample a parity-with-noise instance and print it as JSON.
    LpnGen {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        /// secret: labels are noisy inner products; uniform_pair: labels
        /// are fair coins.
        #[arg(long, value_enum, default_value_t = LpnModeArg::Secret)]
        mode: LpnModeArg,
        /// Label flip probability.
        #[arg(long, default_value_t = 0.0)]
        eta: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputOpt,
    },
    /// Reduce a parity-with-noise instance (JSON) to a flat instance
    /// (JSON) with one codimension-k flat per sample.
    LpnReduce {
        /// LPN JSON; stdin when omitted.
        #[arg(long = "in", value_name = "PATH")]
        input: Option<PathBuf>,
        #[arg(long)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Keep the secret in the output as the planted assignment.
        #[arg(long)]
        reveal: bool,
        #[command(flatten)]
        output: OutputOpt,
    },
    /// Run fast built-in correctness checks and exit nonzero on failure.
    Selftest {
        #[arg(long, default_value_t = 20260214)]
        seed: u64,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LpnModeArg {
    Secret,
    #[value(name = "uniform_pair", alias = "uniform-pair")]
    UniformPair,
}

fn read_input(path: &Option<PathBuf>) -> Result<String> {
    match path {
        Some(p) => fs::read_to_string(p).with_context(|| format!("reading {}", p.display())),
        None => {
            let mut buf = String::new();
            std::io::stdin()
                .read_to_string(&mut buf)
                .context("reading stdin")?;
            Ok(buf)
        }
    }
}

fn to_json_line<T: serde::Serialize>(value: &T) -> Result<String> {
    Ok(format!("{}\n", serde_json::to_string_pretty(value)?))
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Gen {
            n,
            k,
            count,
            pi,
            mode,
            seed,
            reveal,
            output,
        } => {
            let m = count.resolve(n, k)?;
            let params = ModelParams::new(n, k, m, pi)?;
            let inst = gen_instance(&params, mode.into(), seed)?;
            let inst = if reveal { inst } else { inst.blinded() };
            output.emit(&to_json_line(&inst)?)?;
        }
        Command::Detect {
            input,
            method,
            pi,
            output,
        } => {
            let inst: Instance = serde_json::from_str(&read_input(&input)?)?;
            let text = match method {
                DetectorArg::Flat => to_json_line(&analyze(&inst)?)?,
                DetectorArg::Lift => to_json_line(&psi_lift(&inst)?)?,
                DetectorArg::Maxsat => {
                    let pi = pi.unwrap_or(inst.params.pi);
                    let (sigma, _) = sigma_statistic(&inst)?;
                    let threshold = sigma_threshold(inst.params.k, inst.params.m, pi)?;
                    to_json_line(&json!({
                        "sigma": sigma,
                        "threshold": threshold,
                        "psi_sigma": sigma as f64 > threshold,
                    }))?
                }
            };
            output.emit(&text)?;
        }
        Command::Sweep {
            experiment,
            n,
            k,
            m,
            delta,
            delta_scale,
            pi,
            eta,
            mode,
            detectors,
            trials,
            seed,
            workers,
            format,
            output,
        } => {
            let mut cfg = ExperimentConfig::new(match experiment {
                ExperimentArg::Sweep => Experiment::Sweep,
                ExperimentArg::Eval => Experiment::DetectorEval,
                ExperimentArg::LpnCheck => Experiment::LpnCheck,
            });
            cfg.n_values = n;
            cfg.k_values = k;
            cfg.m_spec = if !m.is_empty() {
                MSpec::Direct(m)
            } else if !delta.is_empty() {
                MSpec::Delta {
                    values: delta,
                    scale: delta_scale.into(),
                }
            } else {
                bail!("one of --m or --delta is required");
            };
            cfg.pi_values = pi;
            cfg.eta_values = eta;
            cfg.modes = mode.into_iter().map(Mode::from).collect();
            cfg.detectors = detectors.into_iter().map(Detector::from).collect();
            cfg.trials = trials;
            cfg.master_seed = seed;
            cfg.workers = workers;
            let rows = match cfg.experiment {
                Experiment::Sweep => run_sweep(&cfg)?,
                Experiment::DetectorEval => run_detector_eval(&cfg)?,
                Experiment::LpnCheck => run_lpn_check(&cfg)?,
                Experiment::Moments => unreachable!("not a sweep experiment"),
            };
            let text = match format {
                FormatArg::Csv => rows_to_csv(&rows)?,
                FormatArg::Json => to_json_line(&rows)?,
            };
            output.emit(&text)?;
        }
        Command::Moments {
            n,
            k,
            m,
            trials,
            seed,
            workers,
            output,
        } => {
            let mut cfg = ExperimentConfig::new(Experiment::Moments);
            cfg.n_values = n;
            cfg.k_values = k;
            cfg.m_spec = MSpec::Direct(m);
            cfg.trials = trials;
            cfg.master_seed = seed;
            cfg.workers = workers;
            output.emit(&to_json_line(&run_moments(&cfg)?)?)?;
        }
        Command::Theory {
            n,
            k,
            count,
            pi,
            output,
        } => {
            let m = count.resolve(n, k)?;
            output.emit(&to_json_line(&theory_report(n, k, m, pi)?)?)?;
        }
        Command::LpnGen {
            n,
            m,
            mode,
            eta,
            seed,
            output,
        } => {
            let mode = match mode {
                LpnModeArg::Secret => LpnMode::Secret,
                LpnModeArg::UniformPair => LpnMode::UniformPair,
            };
            output.emit(&to_json_line(&gen_lpn(n, m, mode, eta, seed)?)?)?;
        }
        Command::LpnReduce {
            input,
            k,
            seed,
            reveal,
            output,
        } => {
            let lpn: LpnInstance = serde_json::from_str(&read_input(&input)?)?;
            let inst = reduce_to_flats(&lpn, k, seed)?;
            let inst = if reveal { inst } else { inst.blinded() };
            output.emit(&to_json_line(&inst)?)?;
        }
        Command::Selftest { seed } => return selftest(seed),
    }
    Ok(ExitCode::SUCCESS)
}

/// Pearson statistic of observed counts against a uniform target.
fn pearson_uniform(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    let expected = total as f64 / counts.len() as f64;
    counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum()
}

fn selftest(seed: u64) -> Result<ExitCode> {
    let checks: Vec<(&str, Box<dyn Fn() -> std::result::Result<(), String>>)> = vec![
        (
            "generation is reproducible",
            Box::new(move || {
                let params = ModelParams::new(8, 2, 12, 1.0).map_err(|e| e.to_string())?;
                let a = gen_instance(&params, Mode::Planted, seed).map_err(|e| e.to_string())?;
                let b = gen_instance(&params, Mode::Planted, seed).map_err(|e| e.to_string())?;
                if a != b {
                    return Err("same seed produced different instances".to_string());
                }
                let c = gen_instance(&params, Mode::Planted, seed ^ 1).map_err(|e| e.to_string())?;
                if a == c {
                    return Err("different seeds produced identical instances".to_string());
                }
                Ok(())
            }),
        ),
        (
            "closed-form moments match full enumeration",
            Box::new(|| {
                // All ordered pairs of codimension-1 flats at n = 4.
                let flats = enumerate_all_flats(4, 1).map_err(|e| e.to_string())?;
                let params = ModelParams::new(4, 1, 2, 1.0).map_err(|e| e.to_string())?;
                let (mut sum_z, mut sum_z2, mut total) = (0u64, 0u64, 0u64);
                for a in &flats {
                    for b in &flats {
                        let inst = Instance {
                            params,
                            mode: Mode::Uniform,
                            seed: 0,
                            flats: vec![a.to_flat(), b.to_flat()],
                            planted_x: None,
                        };
                        let z = count_satisfying(&inst).map_err(|e| e.to_string())?;
                        sum_z += z;
                        sum_z2 += z * z;
                        total += 1;
                    }
                }
                let ez = expected_z(4, 1, 2).map_err(|e| e.to_string())?.linear;
                let ez2 = expected_z2(4, 1, 2).map_err(|e| e.to_string())?.linear;
                let mean = sum_z as f64 / total as f64;
                let mean2 = sum_z2 as f64 / total as f64;
                if (mean - ez).abs() > 1e-9 || (mean2 - ez2).abs() > 1e-9 {
                    return Err(format!(
                        "enumeration gave E[Z]={mean}, E[Z^2]={mean2}; closed forms {ez}, {ez2}"
                    ));
                }
                Ok(())
            }),
        ),
        (
            "uniform flat sampler hits all flats uniformly",
            Box::new(move || {
                use flatsat_core::flats::sample_uniform_flat;
                use rand::SeedableRng;
                let all = enumerate_all_flats(3, 2).map_err(|e| e.to_string())?;
                let index: std::collections::HashMap<_, _> =
                    all.iter().cloned().enumerate().map(|(i, f)| (f, i)).collect();
                let mut counts = vec![0u64; all.len()];
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
                for _ in 0..28_000 {
                    let f = sample_uniform_flat(3, 2, &mut rng).map_err(|e| e.to_string())?;
                    counts[index[&f.canonicalize()]] += 1;
                }
                // Chi-square critical value, 27 degrees of freedom, 0.1%.
                let stat = pearson_uniform(&counts);
                if stat > 55.476 {
                    return Err(format!("chi-square {stat:.2} over 28 flats exceeds 55.476"));
                }
                Ok(())
            }),
        ),
        (
            "planted instances always satisfiable, assignment excluded",
            Box::new(move || {
                let params = ModelParams::new(6, 2, 10, 1.0).map_err(|e| e.to_string())?;
                for t in 0..200 {
                    let inst = gen_instance(&params, Mode::Planted, seed.wrapping_add(t))
                        .map_err(|e| e.to_string())?;
                    let x = inst.planted_x.clone().ok_or("missing planted assignment")?;
                    if s_statistic(&inst, &x).map_err(|e| e.to_string())? != 10 {
                        return Err(format!("trial {t}: a flat contains the planted point"));
                    }
                    if count_satisfying(&inst).map_err(|e| e.to_string())? == 0 {
                        return Err(format!("trial {t}: planted instance unsatisfiable"));
                    }
                }
                Ok(())
            }),
        ),
        (
            "noiseless parity reduction is satisfied by the secret",
            Box::new(move || {
                for t in 0..200u64 {
                    let s = seed.wrapping_add(t).wrapping_mul(0x9E37_79B9_7F4A_7C15);
                    let lpn = gen_lpn(8, 12, LpnMode::Secret, 0.0, s).map_err(|e| e.to_string())?;
                    if lpn.rows.iter().any(|r| r.is_zero()) {
                        continue;
                    }
                    let inst = reduce_to_flats(&lpn, 2, s ^ 0xABCD).map_err(|e| e.to_string())?;
                    let x = inst.planted_x.clone().ok_or("secret missing after reduction")?;
                    if s_statistic(&inst, &x).map_err(|e| e.to_string())? != 12 {
                        return Err(format!("trial {t}: secret violates a reduced flat"));
                    }
                }
                Ok(())
            }),
        ),
        (
            "lifted system is solvable whenever an instance is satisfiable",
            Box::new(move || {
                let params = ModelParams::new(8, 2, 14, 1.0).map_err(|e| e.to_string())?;
                for t in 0..100 {
                    let inst = gen_instance(&params, Mode::Uniform, seed.wrapping_add(t))
                        .map_err(|e| e.to_string())?;
                    let z = count_satisfying(&inst).map_err(|e| e.to_string())?;
                    let report = psi_lift(&inst).map_err(|e| e.to_string())?;
                    if z > 0 && !report.psi_l {
                        return Err(format!("trial {t}: satisfiable but lift says no"));
                    }
                    if report.on_variety == Some(true) && z == 0 {
                        return Err(format!("trial {t}: variety witness on unsat instance"));
                    }
                }
                Ok(())
            }),
        ),
        (
            "sweeps are byte-identical across worker counts",
            Box::new(move || {
                let mut cfg = ExperimentConfig::new(Experiment::Sweep);
                cfg.n_values = vec![6];
                cfg.k_values = vec![2];
                cfg.m_spec = MSpec::Direct(vec![10, 16]);
                cfg.trials = 50;
                cfg.master_seed = seed;
                cfg.workers = Some(1);
                let a = rows_to_csv(&run_sweep(&cfg).map_err(|e| e.to_string())?)
                    .map_err(|e| e.to_string())?;
                cfg.workers = Some(4);
                let b = rows_to_csv(&run_sweep(&cfg).map_err(|e| e.to_string())?)
                    .map_err(|e| e.to_string())?;
                if a != b {
                    return Err("CSV differs between 1 and 4 workers".to_string());
                }
                Ok(())
            }),
        ),
    ];

    let mut failures = 0;
    for (name, check) in &checks {
        match check() {
            Ok(()) => println!("PASS {name}"),
            Err(why) => {
                failures += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    println!(
        "selftest: {}/{} checks passed",
        checks.len() - failures,
        checks.len()
    );
    Ok(if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
