//! Randomized structural invariants across the public API.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use flatsat_core::flats::{sample_uniform_flat, KFlat};
use flatsat_core::gf2::{sample_independent_rows, solve_affine, BitMatrix, BitVector, SolveStatus};
use flatsat_core::lift::psi_lift;
use flatsat_core::lpn::{gen_lpn, reduce_to_flats, LpnMode};
use flatsat_core::model::{gen_instance, Instance, Mode, ModelParams};
use flatsat_core::oracle::{analyze, count_satisfying, s_statistic, sigma_statistic};
use flatsat_core::theory::{chi2_divergence, expected_z, sigma_threshold, tv_upper_bound};

/// (n, k) with 1 <= k <= min(n, 3), n <= 8.
fn small_shape() -> impl Strategy<Value = (usize, usize)> {
    (1usize..=8).prop_flat_map(|n| (Just(n), 1usize..=n.min(3)))
}

proptest! {
    #[test]
    fn bit_vector_text_round_trips(len in 1usize..=70, seed in any::<u64>()) {
        let v = BitVector::random(len, &mut ChaCha8Rng::seed_from_u64(seed));
        let text = v.to_string();
        prop_assert_eq!(text.len(), len);
        prop_assert_eq!(text.parse::<BitVector>().unwrap(), v.clone());
        prop_assert_eq!(v.weight(), v.iter_ones().count());
        if len <= 63 {
            prop_assert_eq!(BitVector::from_index(v.to_index(), len), v);
        }
    }

    #[test]
    fn xor_is_an_involution(len in 1usize..=70, a in any::<u64>(), b in any::<u64>()) {
        let x = BitVector::random(len, &mut ChaCha8Rng::seed_from_u64(a));
        let y = BitVector::random(len, &mut ChaCha8Rng::seed_from_u64(b));
        let mut z = x.clone();
        z.xor_assign(&y);
        prop_assert_eq!(x.dot(&y).unwrap(), y.dot(&x).unwrap());
        z.xor_assign(&y);
        prop_assert_eq!(z, x);
    }

    #[test]
    fn reduction_is_idempotent_and_rank_bounded(
        rows in 1usize..=6,
        cols in 1usize..=8,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = BitMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                if rng.random_bool(0.5) { m.set(r, c, true); }
            }
        }
        let r1 = m.rref();
        prop_assert_eq!(r1.rref(), r1.clone());
        let rank = m.rank();
        prop_assert!(rank <= rows.min(cols));
        prop_assert_eq!(r1.rank(), rank);
    }

    #[test]
    fn affine_solutions_satisfy_their_systems(
        rows in 1usize..=6,
        cols in 1usize..=8,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut a = BitMatrix::zeros(rows, cols);
        for r in 0..rows {
            for c in 0..cols {
                if rng.random_bool(0.5) { a.set(r, c, true); }
            }
        }
        let b = BitVector::random(rows, &mut rng);
        let sol = solve_affine(&a, &b).unwrap();
        match sol.status {
            SolveStatus::Inconsistent => prop_assert!(sol.solution.is_none()),
            _ => {
                let x = sol.solution.unwrap();
                prop_assert_eq!(a.mul_vec(&x).unwrap(), b);
            }
        }
    }

    #[test]
    fn sampled_forms_are_always_full_rank((n, k) in small_shape(), seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = sample_independent_rows(k, n, &mut rng).unwrap();
        prop_assert_eq!(m.rank(), k);
    }

    #[test]
    fn flats_contain_exactly_their_enumerated_points(
        (n, k) in small_shape(),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let flat = sample_uniform_flat(n, k, &mut rng).unwrap();
        let points = flat.enumerate_points().unwrap();
        prop_assert_eq!(points.len(), 1usize << (n - k));
        let members: std::collections::HashSet<u64> =
            points.iter().map(|p| p.to_index()).collect();
        prop_assert_eq!(members.len(), points.len());
        for idx in 0..(1u64 << n) {
            let x = BitVector::from_index(idx, n);
            prop_assert_eq!(flat.contains(&x).unwrap(), members.contains(&idx));
        }
    }

    #[test]
    fn canonical_form_is_invariant_under_row_mixing(
        (n, k) in small_shape(),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let flat = sample_uniform_flat(n, k, &mut rng).unwrap();
        // Mix the defining equations: add a random other row into each row
        // in a random order. Row operations fix the solution set.
        let mut aug: Vec<BitVector> = (0..k)
            .map(|i| {
                let mut row = flat.forms().row(i);
                let mut ext = BitVector::zeros(n + 1);
                for j in row.iter_ones() { ext.set(j, true); }
                if flat.eps().get(i) { ext.set(n, true); }
                row = ext;
                row
            })
            .collect();
        for _ in 0..8 {
            let i = rng.random_range(0..k);
            let j = rng.random_range(0..k);
            if i != j {
                let src = aug[j].clone();
                aug[i].xor_assign(&src);
            }
        }
        let mut forms = BitMatrix::zeros(k, n);
        let mut eps = BitVector::zeros(k);
        for (i, row) in aug.iter().enumerate() {
            for j in row.iter_ones() {
                if j < n { forms.set(i, j, true); } else { eps.set(i, true); }
            }
        }
        let mixed = KFlat::new(forms, eps).unwrap();
        prop_assert_eq!(mixed.canonicalize(), flat.canonicalize());
    }

    #[test]
    fn instances_round_trip_through_json(
        (n, k) in small_shape(),
        m in 0usize..=12,
        mode_pick in 0u8..3,
        seed in any::<u64>(),
    ) {
        let mode = match mode_pick {
            0 => Mode::Uniform,
            1 => Mode::Planted,
            _ => Mode::LightPlanted,
        };
        let params = ModelParams::new(n, k, m, 0.5).unwrap();
        let inst = gen_instance(&params, mode, seed).unwrap();
        let json = serde_json::to_string(&inst).unwrap();
        let back: Instance = serde_json::from_str(&json).unwrap();
        prop_assert_eq!(&back, &inst);
        let blind = inst.blinded();
        prop_assert!(blind.planted_x.is_none());
        prop_assert_eq!(&blind.flats, &inst.flats);
    }

    #[test]
    fn planted_assignments_avoid_every_flat(
        (n, k) in small_shape(),
        m in 1usize..=12,
        seed in any::<u64>(),
    ) {
        let params = ModelParams::new(n, k, m, 1.0).unwrap();
        let inst = gen_instance(&params, Mode::Planted, seed).unwrap();
        let x = inst.planted_x.clone().unwrap();
        prop_assert_eq!(s_statistic(&inst, &x).unwrap(), m);
        prop_assert!(count_satisfying(&inst).unwrap() > 0);
    }

    #[test]
    fn max_coverage_hits_m_exactly_on_satisfiable_instances(
        (n, k) in small_shape(),
        m in 0usize..=12,
        seed in any::<u64>(),
    ) {
        let params = ModelParams::new(n, k, m, 1.0).unwrap();
        let inst = gen_instance(&params, Mode::Uniform, seed).unwrap();
        let report = analyze(&inst).unwrap();
        let (sigma, argmax) = sigma_statistic(&inst).unwrap();
        prop_assert_eq!(report.sigma, sigma);
        prop_assert_eq!(sigma == m, report.z > 0);
        prop_assert_eq!(s_statistic(&inst, &argmax).unwrap(), sigma);
        prop_assert_eq!(report.psi_flat, report.z > 0);
    }

    #[test]
    fn satisfiable_instances_lift_to_solvable_systems(
        (n, k) in small_shape(),
        m in 0usize..=12,
        seed in any::<u64>(),
    ) {
        let params = ModelParams::new(n, k, m, 1.0).unwrap();
        let inst = gen_instance(&params, Mode::Uniform, seed).unwrap();
        let z = count_satisfying(&inst).unwrap();
        let report = psi_lift(&inst).unwrap();
        if z > 0 {
            prop_assert!(report.psi_l);
        }
        if report.on_variety == Some(true) {
            prop_assert!(z > 0);
        }
        if !report.psi_l {
            prop_assert_eq!(z, 0);
        }
    }

    #[test]
    fn reduced_parity_instances_are_well_formed(
        n in 2usize..=8,
        m in 1usize..=10,
        k in 2usize..=3,
        eta_pick in 0u8..3,
        seed in any::<u64>(),
    ) {
        prop_assume!(k <= n);
        let eta = [0.0, 0.125, 0.25][eta_pick as usize];
        let lpn = gen_lpn(n, m, LpnMode::Secret, eta, seed).unwrap();
        if lpn.rows.iter().any(|r| r.is_zero()) {
            return Ok(());
        }
        let inst = reduce_to_flats(&lpn, k, seed ^ 0x5a5a).unwrap();
        inst.validate().unwrap();
        prop_assert_eq!(inst.params.m, m);
        prop_assert!((inst.params.pi - (1.0 - 2.0 * eta)).abs() < 1e-12);
        for (j, flat) in inst.flats.iter().enumerate() {
            prop_assert_eq!(flat.forms().rank(), k);
            // The sample constraint is embedded: x on the flat implies
            // <a_j, x> = 1 - b_j, i.e. the flat refutes the label.
            for x in flat.enumerate_points().unwrap() {
                prop_assert_eq!(
                    lpn.rows[j].dot(&x).unwrap(),
                    !lpn.labels.get(j)
                );
            }
        }
    }

    #[test]
    fn theory_quantities_are_mutually_consistent(
        (n, k) in small_shape(),
        m in 0usize..=40,
        pi_pick in 0u8..4,
    ) {
        let pi = [0.0, 0.25, 0.5, 1.0][pi_pick as usize];
        let chi2 = chi2_divergence(n, k, m, pi).unwrap();
        prop_assert!(chi2 >= 0.0);
        let tv = tv_upper_bound(n, k, m, pi).unwrap();
        prop_assert!((tv - chi2.sqrt() / 2.0).abs() <= 1e-15 * (1.0 + tv));
        if m > 0 {
            // One more flat can only remove satisfying assignments.
            let now = expected_z(n, k, m).unwrap().log2;
            let prev = expected_z(n, k, m - 1).unwrap().log2;
            prop_assert!(now < prev);
        }
        if k >= 1 && pi > 0.0 {
            // The decision threshold separates the null and planted means.
            let t = sigma_threshold(k, m, pi).unwrap();
            let null = (1.0 - 0.5f64.powi(k as i32)) * m as f64;
            let planted = null + pi * 0.5f64.powi(k as i32) * m as f64;
            prop_assert!(t >= null && t <= planted);
        }
    }
}
