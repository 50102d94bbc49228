//! End-to-end acceptance checks: one test per shipped guarantee, each
//! printing a PASS line. Monte Carlo tolerances are stated inline next to
//! the closed-form bounds that justify them.

use std::process::Command;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use flatsat_core::flats::{
    enumerate_all_flats, sample_planted_flat, PlantProcess,
};
use flatsat_core::gf2::{sample_independent_rows, BitVector};
use flatsat_core::lift::{psi_lift, psi_lift_with_index, MonomialIndex};
use flatsat_core::lpn::{gen_lpn, reduce_to_flats, LpnInstance, LpnMode};
use flatsat_core::model::{gen_instance, Instance, Mode, ModelParams};
use flatsat_core::oracle::{count_satisfying, psi_flat, s_statistic};
use flatsat_core::theory::{
    chi2_divergence, expected_z, ratio_to_f64, sigma_tail_bounds, sigma_threshold,
};
use flatsat_harness::{
    run_detector_eval, run_moments, run_sweep, Detector, Experiment, ExperimentConfig, MSpec,
};
use flatsat_testutil::{exact_chi2_pure, exact_expected_z, exact_expected_z2, gof_uniform, homogeneity};

fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

#[test]
fn a1_moment_estimates_match_closed_forms() {
    // Monte Carlo at (10, 2, 12): E[Z] = 2^10 (3/4)^12 ~ 32.44, with the
    // sample mean and second moment inside 4 standard errors.
    let mut cfg = ExperimentConfig::new(Experiment::Moments);
    cfg.n_values = vec![10];
    cfg.k_values = vec![2];
    cfg.m_spec = MSpec::Direct(vec![12]);
    cfg.trials = 100_000;
    cfg.master_seed = 0xA1;
    let rows = run_moments(&cfg).unwrap();
    let r = &rows[0];
    assert_eq!(r.status, "ok");
    assert!((r.z_expected - 1024.0 * 0.75f64.powi(12)).abs() < 1e-9);
    let zs = r.z_zscore.unwrap();
    let z2s = r.z2_zscore.unwrap();
    assert!(zs.abs() <= 4.0, "first moment z-score {zs}");
    assert!(z2s.abs() <= 4.0, "second moment z-score {z2s}");

    // Exact at (4, 1, 2): average over every ordered pair of the 30
    // codimension-1 flats equals the closed forms as rationals.
    let flats = enumerate_all_flats(4, 1).unwrap();
    assert_eq!(flats.len(), 30);
    let params = ModelParams::new(4, 1, 2, 1.0).unwrap();
    let (mut sum_z, mut sum_z2) = (0u64, 0u64);
    for a in &flats {
        for b in &flats {
            let inst = Instance {
                params,
                mode: Mode::Uniform,
                seed: 0,
                flats: vec![a.to_flat(), b.to_flat()],
                planted_x: None,
            };
            let z = count_satisfying(&inst).unwrap();
            sum_z += z;
            sum_z2 += z * z;
        }
    }
    let total = BigInt::from(30 * 30);
    let mean = BigRational::new(BigInt::from(sum_z), total.clone());
    let mean2 = BigRational::new(BigInt::from(sum_z2), total);
    assert_eq!(mean, exact_expected_z(4, 1, 2));
    assert_eq!(mean2, exact_expected_z2(4, 1, 2));
    println!(
        "PASS a1: moments match closed forms (z-scores {zs:.2}, {z2s:.2}; exact at n=4)"
    );
}

#[test]
fn a2_satisfiability_collapses_across_the_critical_density() {
    // k = 2 threshold density is ~2.41 n; m = 19 sits well below it at
    // n = 16 and m = 58 well above (E[Z] ~ 0.0037).
    let ms = [19usize, 26, 32, 39, 45, 52, 58];
    let mut cfg = ExperimentConfig::new(Experiment::Sweep);
    cfg.n_values = vec![16];
    cfg.k_values = vec![2];
    cfg.m_spec = MSpec::Direct(ms.to_vec());
    cfg.trials = 200;
    cfg.master_seed = 0xA2;
    let rows = run_sweep(&cfg).unwrap();
    assert_eq!(rows.len(), ms.len());
    let curve: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| {
            assert_eq!(r.status, "ok");
            (r.p_sat.unwrap(), r.p_sat_se.unwrap())
        })
        .collect();
    assert!(curve[0].0 >= 0.95, "P(sat) at m=19 was {}", curve[0].0);
    let last = curve.last().unwrap();
    assert!(last.0 <= 0.05, "P(sat) at m=58 was {}", last.0);
    for (j, w) in curve.windows(2).enumerate() {
        let slack = 2.0 * (w[0].1 * w[0].1 + w[1].1 * w[1].1).sqrt();
        assert!(
            w[1].0 <= w[0].0 + slack,
            "P(sat) rose from m={} to m={}",
            ms[j],
            ms[j + 1]
        );
    }
    println!(
        "PASS a2: P(sat) falls from {:.3} at m=19 to {:.3} at m=58, monotone within noise",
        curve[0].0, last.0
    );
}

#[test]
fn a3_exhaustive_detector_is_sharp_in_the_unsatisfiable_regime() {
    // At (16, 2, 58) a planted instance is satisfiable by construction,
    // so type II is exactly zero; Markov on E[Z] ~ 0.0037 caps type I.
    let mut cfg = ExperimentConfig::new(Experiment::DetectorEval);
    cfg.n_values = vec![16];
    cfg.k_values = vec![2];
    cfg.m_spec = MSpec::Direct(vec![58]);
    cfg.detectors = vec![Detector::Flat];
    cfg.trials = 200;
    cfg.master_seed = 0xA3;
    let rows = run_detector_eval(&cfg).unwrap();
    let r = &rows[0];
    assert_eq!(r.status, "ok");
    assert_eq!(r.type2.unwrap(), 0.0, "a planted instance was rejected");
    assert!(r.type1.unwrap() <= 0.05, "type I {}", r.type1.unwrap());

    // With E[Z] < 1, satisfiability and mean-exceedance are the same test.
    let ez = expected_z(16, 2, 58).unwrap().linear;
    assert!(ez < 1.0);
    let params = ModelParams::new(16, 2, 58, 1.0).unwrap();
    for t in 0..25 {
        for mode in [Mode::Uniform, Mode::Planted] {
            let inst = gen_instance(&params, mode, 0xA3_00 + t).unwrap();
            let z = count_satisfying(&inst).unwrap() as f64;
            assert_eq!(psi_flat(&inst).unwrap(), z > ez);
        }
    }
    println!(
        "PASS a3: exhaustive test has type II = 0, type I = {:.3} <= 0.05, and equals 1{{Z > E[Z]}}",
        r.type1.unwrap()
    );
}

#[test]
fn a4_lift_detector_separates_planted_from_uniform_at_scale() {
    // (10, 2, 270): every planted instance lifts to a solvable system;
    // for uniform instances the union bound over candidate lifted
    // solutions is 2^56 (3/4)^270 ~ 1.3e-17, so 200 draws all refute.
    let index = MonomialIndex::build(10, 2).unwrap();
    assert_eq!(index.len(), 56);
    let params = ModelParams::new(10, 2, 270, 1.0).unwrap();
    let mut spent = Duration::ZERO;
    let mut slowest = Duration::ZERO;
    let mut timed = |inst: &Instance| {
        let start = Instant::now();
        let rep = psi_lift_with_index(&index, inst).unwrap();
        let once = start.elapsed();
        spent += once;
        slowest = slowest.max(once);
        rep
    };
    for t in 0..500 {
        let inst = gen_instance(&params, Mode::Planted, 0xA4_000 + t).unwrap().blinded();
        assert!(timed(&inst).psi_l, "planted instance {t} not accepted");
    }
    for t in 0..200 {
        let inst = gen_instance(&params, Mode::Uniform, 0xA4_F00 + t).unwrap();
        assert!(!timed(&inst).psi_l, "uniform instance {t} accepted");
    }
    let mean = spent / 700;
    assert!(
        mean <= Duration::from_millis(50),
        "mean solve time {mean:?} over 50 ms"
    );

    // Relaxation soundness: a satisfying assignment lifts to a solution,
    // so Z > 0 forces acceptance on arbitrary random shapes.
    let mut rng = ChaCha8Rng::seed_from_u64(0xA4);
    for _ in 0..1000 {
        let n = rng.random_range(4..=12);
        let k = rng.random_range(1..=3.min(n));
        let m = rng.random_range(1..=2 * n);
        let params = ModelParams::new(n, k, m, 1.0).unwrap();
        let inst = gen_instance(&params, Mode::Uniform, rng.random()).unwrap();
        if count_satisfying(&inst).unwrap() > 0 {
            assert!(psi_lift(&inst).unwrap().psi_l);
        }
    }
    println!(
        "PASS a4: lift detector 500/500 planted, 0/200 uniform, sound on 1000 random shapes, mean {:?}/instance (max {:?})",
        mean, slowest
    );
}

#[test]
fn a5_max_coverage_detector_meets_its_error_bounds() {
    // (12, 2, 1440, pi = 0.5): threshold 0.8125 m = 1170; Hoeffding gives
    // 2^12 exp(-m pi^2 / 32) ~ 0.0533 for type I and exp(-m pi^2 / 32)
    // ~ 1.3e-5 for type II, so 0.10 / 0.01 leave wide margin.
    assert_eq!(sigma_threshold(2, 1440, 0.5).unwrap(), 1170.0);
    let (unif_tail, planted_tail) = sigma_tail_bounds(0.0625, 120.0, 12).unwrap();
    assert!((unif_tail - 0.05327789119106096).abs() < 1e-12);
    assert!((planted_tail - 1.300729765406762e-5).abs() < 1e-17);

    let mut cfg = ExperimentConfig::new(Experiment::DetectorEval);
    cfg.n_values = vec![12];
    cfg.k_values = vec![2];
    cfg.m_spec = MSpec::Direct(vec![1440]);
    cfg.pi_values = vec![0.5];
    cfg.detectors = vec![Detector::Maxsat];
    cfg.trials = 200;
    cfg.master_seed = 0xA5;
    let rows = run_detector_eval(&cfg).unwrap();
    let r = &rows[0];
    assert_eq!(r.status, "ok");
    assert_eq!(r.mode, "light_planted");
    assert!(r.type1.unwrap() <= 0.10, "type I {}", r.type1.unwrap());
    assert!(r.type2.unwrap() <= 0.01, "type II {}", r.type2.unwrap());
    println!(
        "PASS a5: max-coverage test type I = {:.3} <= 0.10, type II = {:.3} <= 0.01 at threshold 1170",
        r.type1.unwrap(),
        r.type2.unwrap()
    );
}

#[test]
fn a6_chi_square_calculator_matches_exhaustive_and_moment_identities() {
    // Exhaustive check at (3, 2, 2): sum (q_pi - q0)^2 / q0 over all 28^2
    // ordered instances, computed in exact rationals. A flat avoiding a
    // fixed point is one of 21 of the 28; a draw planted at x weights
    // those uniformly.
    let all = enumerate_all_flats(3, 2).unwrap();
    assert_eq!(all.len(), 28);
    let points: Vec<BitVector> = (0..8).map(|i| BitVector::from_index(i, 3)).collect();
    let avoid: Vec<Vec<bool>> = all
        .iter()
        .map(|f| {
            let flat = f.to_flat();
            points.iter().map(|x| !flat.contains(x).unwrap()).collect()
        })
        .collect();
    for (pi_num, pi_den, pi_f) in [(1i64, 4i64, 0.25f64), (1, 2, 0.5), (1, 1, 1.0)] {
        let pi = ratio(pi_num, pi_den);
        let comp = BigRational::one() - &pi;
        // Per-flat draw probability given the planted point.
        let weight = |av: bool| -> BigRational {
            let uniform = &comp * ratio(1, 28);
            if av {
                uniform + &pi * ratio(1, 21)
            } else {
                uniform
            }
        };
        let q0 = ratio(1, 28 * 28);
        let mut chi2 = BigRational::zero();
        for f1 in 0..28 {
            for f2 in 0..28 {
                let mut q = BigRational::zero();
                for x in 0..8 {
                    q += weight(avoid[f1][x]) * weight(avoid[f2][x]);
                }
                q /= BigInt::from(8);
                let d = q - &q0;
                chi2 += &d * &d / &q0;
            }
        }
        let exact = ratio_to_f64(&chi2);
        let got = chi2_divergence(3, 2, 2, pi_f).unwrap();
        assert!(
            (got - exact).abs() <= 1e-8 * exact.abs(),
            "pi={pi_f}: calculator {got:e} vs exhaustive {exact:e}"
        );
    }

    // Second-moment identity at pi = 1 across the small-parameter grid:
    // chi2 = E[Z^2]/E[Z]^2 - 1 exactly; m = 1 collapses to zero.
    for n in 3..=12usize {
        for k in 1..=3.min(n) {
            for m in [1usize, 2, 5, 10, 20, 40] {
                let exact = ratio_to_f64(&exact_chi2_pure(n, k, m));
                let got = chi2_divergence(n, k, m, 1.0).unwrap();
                if exact == 0.0 {
                    assert!(got.abs() <= 1e-15, "({n},{k},{m}): {got:e}");
                } else {
                    assert!(
                        (got - exact).abs() <= 1e-10 * exact.abs(),
                        "({n},{k},{m}): {got:e} vs {exact:e}"
                    );
                }
            }
        }
    }
    println!("PASS a6: chi-square calculator exact at (3,2,2) and equal to the moment ratio on the grid");
}

#[test]
fn a7_planting_processes_are_pairwise_indistinguishable() {
    // Three ways to force the targets off the planted point draw the
    // same distribution over flats; compare canonical-class counts
    // pairwise at significance 1e-3.
    let shapes = [(3usize, 2usize, 0xA7_01u64), (4, 3, 0xA7_02)];
    for (n, k, seed) in shapes {
        let all = enumerate_all_flats(n, k).unwrap();
        let class: std::collections::HashMap<_, _> = all
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, f)| (f, i))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = BitVector::random(n, &mut rng);
        let processes = [
            PlantProcess::ExcludeAll,
            PlantProcess::OneForced,
            PlantProcess::AllForced,
        ];
        let mut counts = vec![vec![0u64; all.len()]; 3];
        for (p, proc) in processes.into_iter().enumerate() {
            for _ in 0..100_000 {
                let f = sample_planted_flat(&x, k, proc, &mut rng).unwrap();
                counts[p][class[&f.canonicalize()]] += 1;
            }
        }
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            let (stat, p_value) = homogeneity(&counts[a], &counts[b]);
            assert!(
                p_value >= 1e-3,
                "(n={n},k={k}) processes {a} vs {b}: chi2 {stat:.1}, p {p_value:.2e}"
            );
        }
    }
    println!("PASS a7: the three planting processes are chi-square indistinguishable at (3,2) and (4,3)");
}

#[test]
fn a8_parity_reduction_hits_its_distributional_targets() {
    // (a) Uniform labels with uniform nonzero rows reduce to flats
    // uniform over all 28 canonical classes at (3, 2).
    let n = 3;
    let m = 28_000;
    let mut rng = ChaCha8Rng::seed_from_u64(0xA8_01);
    let rows: Vec<BitVector> = (0..m)
        .map(|_| sample_independent_rows(1, n, &mut rng).unwrap().row(0))
        .collect();
    let labels = BitVector::random(m, &mut rng);
    let lpn = LpnInstance {
        n,
        m,
        eta: None,
        secret: None,
        rows,
        labels,
    };
    let inst = reduce_to_flats(&lpn, 2, 0xA8_02).unwrap();
    let all = enumerate_all_flats(3, 2).unwrap();
    let class: std::collections::HashMap<_, _> = all
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, f)| (f, i))
        .collect();
    let mut counts = vec![0u64; all.len()];
    for f in &inst.flats {
        counts[class[&f.canonicalize()]] += 1;
    }
    let (stat, p_value) = gof_uniform(&counts);
    assert!(
        p_value >= 1e-3,
        "uniform-pair reduction skewed: chi2 {stat:.1}, p {p_value:.2e}"
    );

    // (b) eta = 0.25 secrets: each reduced flat contains the secret with
    // probability (1 - pi) 2^-k = eta / 2 = 0.125 at k = 2.
    let v = gen_lpn(10, 40_000, LpnMode::Secret, 0.25, 0xA8_03).unwrap();
    let keep: Vec<usize> = (0..v.m).filter(|&j| !v.rows[j].is_zero()).collect();
    let mut labels = BitVector::zeros(keep.len());
    for (i, &j) in keep.iter().enumerate() {
        labels.set(i, v.labels.get(j));
    }
    let v = LpnInstance {
        n: v.n,
        m: keep.len(),
        eta: v.eta,
        secret: v.secret.clone(),
        rows: keep.iter().map(|&j| v.rows[j].clone()).collect(),
        labels,
    };
    let inst = reduce_to_flats(&v, 2, 0xA8_04).unwrap();
    let x = inst.planted_x.as_ref().unwrap();
    let hits = inst.flats.iter().filter(|f| f.contains(x).unwrap()).count();
    let rate = hits as f64 / inst.params.m as f64;
    let se = (0.125 * 0.875 / inst.params.m as f64).sqrt();
    assert!(
        (rate - 0.125).abs() <= 4.0 * se,
        "containment rate {rate} vs 0.125 +- {:.4}",
        4.0 * se
    );

    // (c) eta = 0: the secret satisfies every reduced instance.
    let mut checked = 0;
    for t in 0..1000u64 {
        let v = gen_lpn(8, 12, LpnMode::Secret, 0.0, 0xA8_1000 + t).unwrap();
        let keep: Vec<BitVector> = v.rows.iter().filter(|r| !r.is_zero()).cloned().collect();
        let mut labels = BitVector::zeros(keep.len());
        let mut slot = 0;
        for (j, r) in v.rows.iter().enumerate() {
            if !r.is_zero() {
                labels.set(slot, v.labels.get(j));
                slot += 1;
            }
        }
        let kept = keep.len();
        let v = LpnInstance {
            n: v.n,
            m: kept,
            eta: v.eta,
            secret: v.secret.clone(),
            rows: keep,
            labels,
        };
        let inst = reduce_to_flats(&v, 2, 0xA8_2000 + t).unwrap();
        let x = inst.planted_x.as_ref().unwrap();
        assert_eq!(
            s_statistic(&inst, x).unwrap(),
            kept,
            "trial {t}: secret violated a flat"
        );
        checked += 1;
    }
    assert_eq!(checked, 1000);
    println!(
        "PASS a8: reduction uniform on 28 classes (p {p_value:.3}), containment {rate:.4} ~ 0.125, noiseless exact 1000/1000"
    );
}

#[test]
fn a9_sweep_csv_is_byte_identical_across_worker_counts() {
    let bin = env!("CARGO_BIN_EXE_flatsat");
    let dir = tempfile::tempdir().unwrap();
    let run = |experiment: &str, workers: &str, out: &std::path::Path| {
        let status = Command::new(bin)
            .args([
                "sweep",
                "--experiment",
                experiment,
                "--n",
                "10,12",
                "--k",
                "2",
                "--m",
                "19,30",
                "--pi",
                "1.0,0.5",
                "--detectors",
                "flat,maxsat",
                "--trials",
                "40",
                "--seed",
                "77",
                "--workers",
                workers,
                "--out",
            ])
            .arg(out)
            .status()
            .unwrap();
        assert!(status.success());
        std::fs::read(out).unwrap()
    };
    for experiment in ["sweep", "eval"] {
        let one = run(experiment, "1", &dir.path().join(format!("{experiment}-1.csv")));
        let eight = run(experiment, "8", &dir.path().join(format!("{experiment}-8.csv")));
        assert!(!one.is_empty());
        assert_eq!(one, eight, "{experiment} CSV differs across worker counts");
        let text = String::from_utf8(one).unwrap();
        assert!(text.lines().skip(1).all(|l| l.ends_with(",ok")));
    }
    println!("PASS a9: sweep and eval CSVs byte-identical with 1 and 8 workers");
}
