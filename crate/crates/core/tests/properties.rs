use kfusion::duality::{canonical_k_dual, is_k_dual, qk_dual_from_xw};
use kfusion::factorization::x_w;
use kfusion::frames::{transform_q, verify_k_fusion};
use kfusion::perturbation::analysis_epsilon;
use kfusion::random;
use kfusion::resolution::{resolution_b, resolution_c, verify_resolution};
use kfusion::{numerics, Exec, FusionSystem, Mat, ToleranceProfile};
use proptest::prelude::*;

fn tol() -> ToleranceProfile {
    ToleranceProfile::default()
}

fn instance(seed: u64, n: usize, rank: usize) -> (FusionSystem, Mat) {
    let mut rng = random::rng(seed);
    random::k_fusion_instance(&mut rng, n, 4, rank.min(n)).unwrap()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn penrose_identities(seed in any::<u64>(), r in 1usize..7, c in 1usize..7, rank in 1usize..7) {
        let mut rng = random::rng(seed);
        let rank = rank.min(r).min(c);
        let a = random::gaussian_matrix(&mut rng, r, rank) * random::gaussian_matrix(&mut rng, rank, c);
        let p = numerics::pinv(&a, &tol()).unwrap();
        let scale = numerics::spectral_norm(&a).unwrap() * numerics::spectral_norm(&p).unwrap();
        prop_assert!((&a * &p * &a - &a).amax() <= 1e-9 * scale * numerics::spectral_norm(&a).unwrap());
        prop_assert!((&p * &a * &p - &p).amax() <= 1e-9 * scale * numerics::spectral_norm(&p).unwrap());
        let ap = &a * &p;
        let pa = &p * &a;
        prop_assert!((&ap - ap.transpose()).amax() <= 1e-9 * scale);
        prop_assert!((&pa - pa.transpose()).amax() <= 1e-9 * scale);
    }

    #[test]
    fn scaling_k_divides_the_lower_bound(seed in any::<u64>(), n in 3usize..7, rank in 1usize..7, c in 0.25f64..4.0) {
        let (w, k) = instance(seed, n, rank);
        let b = verify_k_fusion(&w, &k, &tol()).unwrap().bounds().unwrap();
        let s = verify_k_fusion(&w, &(&k * c), &tol()).unwrap().bounds().unwrap();
        prop_assert!(rel(s.lower, b.lower / (c * c)) < 1e-8);
        prop_assert!(rel(s.upper, b.upper) < 1e-12);
    }

    #[test]
    fn scaling_weights_scales_both_bounds(seed in any::<u64>(), n in 3usize..7, rank in 1usize..7, c in 0.25f64..4.0) {
        let (w, k) = instance(seed, n, rank);
        let b = verify_k_fusion(&w, &k, &tol()).unwrap().bounds().unwrap();
        let scaled: Vec<f64> = w.weights().iter().map(|x| x * c).collect();
        let s = verify_k_fusion(&w.with_weights(&scaled).unwrap(), &k, &tol()).unwrap().bounds().unwrap();
        prop_assert!(rel(s.lower, b.lower * c * c) < 1e-8);
        prop_assert!(rel(s.upper, b.upper * c * c) < 1e-8);
    }

    #[test]
    fn xw_solves_and_is_certified(seed in any::<u64>(), n in 3usize..7, rank in 1usize..7) {
        let (w, k) = instance(seed, n, rank);
        let xw = x_w(&w, &k, &tol()).unwrap();
        prop_assert!(xw.douglas.residual <= 1e-9 * (1.0 + numerics::spectral_norm(&k).unwrap()));
        prop_assert!(xw.douglas.certified(&tol()));
    }

    #[test]
    fn duals_and_resolutions_reconstruct(seed in any::<u64>(), n in 3usize..7, rank in 1usize..7) {
        let (w, k) = instance(seed, n, rank);
        prop_assert!(canonical_k_dual(&w, &k, &tol()).unwrap().certificate.pass);
        prop_assert!(verify_resolution(&resolution_b(&w, &k, &tol()).unwrap(), &k, &tol()).unwrap().pass);
        prop_assert!(verify_resolution(&resolution_c(&w, &k, &tol()).unwrap(), &k, &tol()).unwrap().pass);
    }

    #[test]
    fn qk_duals_are_k_adjoint_fusion_frames(seed in any::<u64>(), n in 3usize..7, rank in 1usize..7) {
        let (w, k) = instance(seed, n, rank);
        let qk = qk_dual_from_xw(&x_w(&w, &k, &tol()).unwrap(), &k, &tol()).unwrap();
        prop_assert!(qk.report.certificate.pass);
        prop_assert!(verify_k_fusion(&qk.system, &k.transpose(), &tol()).unwrap().is_k_fusion());
    }

    #[test]
    fn invertible_image_keeps_a_bessel_bound(seed in any::<u64>(), n in 3usize..7, rank in 1usize..7) {
        let (w, k) = instance(seed, n, rank);
        let mut rng = random::rng(seed ^ 0x5A5A);
        let q = loop {
            let g = random::gaussian_matrix(&mut rng, n, n);
            if numerics::numerical_rank(&g, &tol()).unwrap() == n {
                break g;
            }
        };
        let b = numerics::spectral_norm(&w.frame_operator()).unwrap();
        let t = transform_q(&w, &q, &k, &tol()).unwrap();
        let tb = numerics::spectral_norm(&t.system.frame_operator()).unwrap();
        let qn = numerics::spectral_norm(&q).unwrap();
        let qi = numerics::spectral_norm(&q.try_inverse().unwrap()).unwrap();
        prop_assert!(tb <= qn * qn * qi * qi * b * (1.0 + 1e-9));
    }

    #[test]
    fn analysis_epsilon_vanishes_on_itself(seed in any::<u64>(), n in 3usize..7, rank in 1usize..7) {
        let (w, k) = instance(seed, n, rank);
        prop_assert_eq!(analysis_epsilon(&w, &w, &k, &tol()).unwrap(), 0.0);
    }

    #[test]
    fn exec_modes_agree(seed in any::<u64>(), len in 0usize..200) {
        let f = |i: usize| {
            let mut rng = random::stream(seed, i as u64);
            random::unit_vector(&mut rng, 4)
        };
        prop_assert_eq!(Exec::Sequential.map(len, f), Exec::Parallel.map(len, f));
    }
}

#[test]
fn canonical_dual_members_fit_inside_the_range_dimension() {
    let (w, k) = instance(11, 5, 2);
    let v = canonical_k_dual(&w, &k, &tol()).unwrap().system;
    assert!(is_k_dual(&w, &v, &k, &tol()).unwrap().pass);
    assert!(v.subspaces().all(|s| s.dim() <= 2));
}
