use pinlab::coarse_grain::*;
use pinlab::continuum::TestFn;
use pinlab::dickman::*;
use pinlab::disorder::*;
use pinlab::partition::*;
use pinlab::walks::*;
use proptest::prelude::*;

/// {0: 6a, ±1: (1 − 8a)/2, ±2: a}: symmetric, variance 1, aperiodic.
fn law(a: f64) -> StepLaw {
    StepLaw::new("family", vec![(-2, a), (-1, (1.0 - 8.0 * a) / 2.0), (0, 6.0 * a), (1, (1.0 - 8.0 * a) / 2.0), (2, a)]).unwrap()
}

fn disorder(k: u8) -> DisorderLaw {
    match k % 3 {
        0 => DisorderLaw::gaussian(),
        1 => DisorderLaw::rademacher(),
        _ => DisorderLaw::uniform().unwrap(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn first_return_identity_holds(a in 0.01f64..0.12, n in 20usize..400) {
        let kt = KernelTable::build(&law(a), n).unwrap();
        prop_assert!(kt.first_return_residual() < 1e-12);
        prop_assert!(kt.k.iter().all(|&k| k >= 0.0));
        prop_assert!(kt.k.iter().sum::<f64>() < 1.0);
    }

    #[test]
    fn transition_kernel_is_translation_invariant(a in 0.01f64..0.12, x in -20i64..20, shift in -30i64..30, n in 1usize..25) {
        let l = law(a);
        let mut u = LatticeVec::new(x, vec![1.0]);
        let mut v = LatticeVec::new(x + shift, vec![1.0]);
        for _ in 0..n {
            u = forward_step(&l, &u);
            v = forward_step(&l, &v);
        }
        for y in x - 2 * n as i64..=x + 2 * n as i64 {
            prop_assert_eq!(u.get(y).to_bits(), v.get(y + shift).to_bits());
        }
    }

    #[test]
    fn log_mgf_is_convex(k in 0u8..3, b in 0.05f64..1.5, h in 0.01f64..0.1) {
        let d = disorder(k);
        let l = |x: f64| d.log_mgf(x).unwrap();
        prop_assert!(l(b + h) - 2.0 * l(b) + l(b - h) >= -1e-10);
    }

    #[test]
    fn zeta_fields_are_reproducible(k in 0u8..3, beta in 0.0f64..0.8, seed in any::<u64>(), idx in any::<u64>()) {
        let d = disorder(k);
        let a = zeta_field(&d, beta, 64, seed, idx).unwrap();
        let b = zeta_field(&d, beta, 64, seed, idx).unwrap();
        prop_assert!(a.zeta.iter().zip(&b.zeta).all(|(x, y)| x.to_bits() == y.to_bits()));
        prop_assert!(a.zeta.iter().all(|&z| z > -1.0));
    }

    #[test]
    fn partition_algorithms_agree_and_are_positive(k in 0u8..3, beta in 0.0f64..1.2, seed in any::<u64>(), m in 0usize..6, len in 0usize..7) {
        let kt = KernelTable::build(&StepLaw::default_law(), 16).unwrap();
        let f = zeta_field(&disorder(k), beta, 14, seed, 0).unwrap();
        let n = m + len;
        let pin = pin_partition(&f, 0.0, m, n, &kt).unwrap();
        let chaos = chaos_eval_p2p(&f.zeta, m, n, &kt).unwrap();
        let brute = brute_force_p2p(&f, 0.0, m, n, &kt).unwrap();
        prop_assert!(pin > 0.0);
        prop_assert!((pin - chaos).abs() <= 1e-12 * pin.max(1.0));
        prop_assert!((pin - brute).abs() <= 1e-12 * pin.max(1.0));
    }

    #[test]
    fn second_moment_dominates_squared_mean(theta in -3.0f64..3.0, width in 0.2f64..2.0, n in 50usize..400) {
        let l = StepLaw::default_law();
        let kt = KernelTable::build(&l, n).unwrap();
        let w = solve_critical_beta(&DisorderLaw::gaussian(), n, theta, kt.r[n]).unwrap();
        prop_assert!(w.residual < 1e-14);
        let phi = TestFn::gaussian_bump(0.0, width, 1.0);
        let qv = q_vectors_for(&l, &phi, &phi, n).unwrap();
        let ub = build_ubar(n, w.sigma2, &kt).unwrap();
        prop_assert!(exact_second_moment(&qv, &ub.values).unwrap() >= qv.full * qv.full);
    }

    #[test]
    fn ubar_recursion_matches_compositions(sigma2 in 0.01f64..2.0, n in 0usize..=10) {
        let kt = KernelTable::build(&StepLaw::default_law(), 20).unwrap();
        let u = build_ubar(12, sigma2, &kt).unwrap();
        let d = ubar_by_compositions(n, sigma2, &kt);
        prop_assert!((u.values[n] - d).abs() <= 1e-13 * d.abs().max(1e-300));
    }

    #[test]
    fn dickman_density_is_continuous_at_one(s in 0.9f64..3.0) {
        let d = DickmanDensity::new(s).unwrap();
        let left = d.density(1.0).unwrap();
        prop_assert!((left - d.c).abs() < 1e-12);
        prop_assert!((d.density(1.0 + 1e-12).unwrap() - left).abs() < 1e-8);
    }

    #[test]
    fn g_theta_increases_with_vartheta(v1 in -3.0f64..3.0, dv in 0.05f64..2.0, lt in -12.0f64..0.0) {
        let t = lt.exp();
        prop_assert!(g_theta_small(v1, t).unwrap() < g_theta_small(v1 + dv, t).unwrap());
    }

    #[test]
    fn enumerated_tuples_have_no_triples(m in 6usize..20, k in 1usize..3, r in 1usize..4) {
        let eps = 1.0 / m as f64;
        prop_assume!(2 * k < m);
        for t in enumerate_no_triple(eps, k, r).unwrap() {
            prop_assert!(is_no_triple(&t, m, k));
            prop_assert!(t.len() <= r);
        }
        for b in enumerate_paired(eps, k, r).unwrap() {
            prop_assert!(is_paired(&b, m, k));
            prop_assert!(is_no_triple(&expand(&b), m, k));
        }
    }

    #[test]
    fn coarse_grained_model_is_affine_in_each_theta(seed in any::<u64>(), pick in any::<prop::sample::Index>(), h in 0.1f64..2.0) {
        let grid = MesoGrid::new(256, 1.0 / 8.0, Some(1), Some(3)).unwrap();
        let blocks = grid.blocks();
        let kt = KernelTable::build(&StepLaw::default_law(), 256).unwrap();
        let w = solve_critical_beta(&DisorderLaw::gaussian(), 256, 0.0, kt.r[256]).unwrap();
        let f = zeta_field(&DisorderLaw::gaussian(), w.beta, 257, seed, 0).unwrap();
        let th = BlockThetas::compute(&f.zeta, &grid, &blocks, ThetaKernel::Table(&kt)).unwrap();
        let phi = TestFn::gaussian_bump(0.0, 1.0, 1.0);
        let pe = eps_level(&phi, grid.eps).unwrap();
        let k = pick.index(blocks.len());
        let at = |x: f64| {
            let mut t = th.clone();
            t.values[k] += x;
            cg_model(&t, &grid, &pe, &pe, 1.0).unwrap()
        };
        let (a, b, c) = (at(0.0), at(h), at(2.0 * h));
        prop_assert!((c - 2.0 * b + a).abs() <= 1e-12 * (a.abs() + b.abs() + c.abs()).max(1.0));
    }
}
