//! Property tests over randomly drawn curvature vectors, directions and
//! profiles. Oracles here are written independently of the library: finite
//! differences of plain function values and eigenvalues of perturbed
//! matrices.

use flowlab::flow::{flow_step, stable_time_step};
use flowlab::geom::{curvature_field, diagnostics, make_shape, Shape};
use flowlab::lemma_lab::{
    build_a_gap, build_d, constrained_minimizer, constrained_minimum, constrained_objective, det_identity_residual,
    key_inequality_margin, key_inequality_scale, l1_rigid_regime, psd_margin, rigidity_terms,
    sigma_quadratic_form_margin, PSD_TOL,
};
use flowlab::symfun::{
    euler_residual, power_sum, second_derivative_form, sigma, sigma_identity_residuals,
    CurvatureVector, SpeedFunction,
};
use nalgebra::DMatrix;
use proptest::prelude::*;

mod common;

fn log_uniform(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.log10()..hi.log10()).prop_map(|e| 10f64.powf(e))
}

fn lambdas(n: std::ops::RangeInclusive<usize>, lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(log_uniform(lo, hi), n)
}

/// A curvature vector together with a direction of the same length.
fn lambda_and_direction(n: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    lambdas(n, 1e-3, 1e3).prop_flat_map(|l| {
        let len = l.len();
        (Just(l), prop::collection::vec(-1.0f64..1.0, len))
    })
}

/// Speed functions that are defined for dimension `n`: single powers of
/// `sigma_k` and `S_k` and a few fixed-degree combinations.
fn speed_for(n: usize) -> impl Strategy<Value = SpeedFunction> {
    let alphas = [0.25, 0.5, 1.0, 1.5, 2.0];
    (1..=n, 0..alphas.len(), 0..4usize).prop_map(move |(k, a, kind)| {
        let alpha = alphas[a];
        match kind {
            0 => SpeedFunction::sigma_power(k, alpha).unwrap(),
            1 => SpeedFunction::sigma_power(k, 1.0 / k as f64).unwrap(),
            2 => SpeedFunction::power_sum_power(k, alpha).unwrap(),
            _ => SpeedFunction::parse("sigma(1)^2 + 2*sigma(2) + 0.5*S(2)").unwrap(),
        }
    })
}

fn with_speed(
    n: std::ops::RangeInclusive<usize>,
    lo: f64,
    hi: f64,
) -> impl Strategy<Value = (Vec<f64>, SpeedFunction)> {
    lambdas(n, lo, hi).prop_flat_map(|l| {
        let n = l.len();
        let f = speed_for(n).prop_filter("fits", move |f| f.fits_dimension(n));
        (Just(l), f)
    })
}

use common::cv;

fn value(f: &SpeedFunction, v: &[f64]) -> f64 {
    f.value(&cv(v))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn sigma_and_power_sums_ignore_order(mut l in lambdas(2..=8, 1e-3, 1e3), seed in any::<u64>()) {
        let a = cv(&l);
        // deterministic shuffle from the seed
        let mut s = seed;
        for i in (1..l.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            l.swap(i, (s >> 33) as usize % (i + 1));
        }
        let b = cv(&l);
        for k in 0..=l.len() as i32 {
            prop_assert_eq!(sigma(&a, k, &[]).unwrap(), sigma(&b, k, &[]).unwrap());
        }
        for k in 1..=4 {
            prop_assert_eq!(power_sum(&a, k).unwrap(), power_sum(&b, k).unwrap());
        }
    }

    #[test]
    fn sigma_matches_subset_products(l in lambdas(2..=7, 0.1, 10.0)) {
        let n = l.len();
        let lam = cv(&l);
        let v = lam.as_slice();
        for k in 0..=n {
            let brute: f64 = (0u32..1 << n)
                .filter(|m| m.count_ones() as usize == k)
                .map(|m| (0..n).filter(|i| m >> i & 1 == 1).map(|i| v[i]).product::<f64>())
                .sum();
            let got = sigma(&lam, k as i32, &[]).unwrap();
            prop_assert!((got - brute).abs() <= 1e-12 * brute.abs().max(1e-300), "k={}: {} vs {}", k, got, brute);
        }
    }

    #[test]
    fn identities_and_euler_relation((l, f) in with_speed(2..=8, 1e-3, 1e3)) {
        let lam = cv(&l);
        for k in 1..=l.len() as i32 {
            let r = sigma_identity_residuals(&lam, k).unwrap();
            prop_assert!(r.max_relative() <= 1e-12, "k={}: {:?}", k, r);
        }
        let scale = f.beta().abs() * f.magnitude(&lam);
        prop_assert!(euler_residual(&f, &lam).abs() <= 1e-12 * scale);
    }

    #[test]
    fn gradient_and_hessian_match_finite_differences((l, f) in with_speed(2..=8, 1e-3, 1e3)) {
        let lam = cv(&l);
        let (g, h) = common::derivative_errors(&f, lam.as_slice());
        prop_assert!(g <= 1e-6 && h <= 1e-6, "gradient {:e}, hessian {:e}", g, h);
    }

    #[test]
    fn second_form_matches_eigenvalue_perturbation(
        (l, f) in with_speed(2..=5, 0.5, 2.0),
        entries in prop::collection::vec(-1.0f64..1.0, 25),
        cluster in any::<bool>(),
    ) {
        let mut l = l;
        if cluster {
            l[1] = l[0] * (1.0 + 1e-11);
        }
        let lam = cv(&l);
        let n = lam.dim();
        let b = DMatrix::from_fn(n, n, |i, j| entries[i.min(j) * 5 + i.max(j)]);
        let (first, second) = second_derivative_form(&f, &lam, &b).unwrap();

        let w = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(lam.as_slice()));
        let g = |t: f64| {
            let eig = (&w + &b * t).symmetric_eigenvalues();
            value(&f, eig.as_slice())
        };
        let h = 1e-3;
        let (p2, p1, z, m1, m2) = (g(2.0 * h), g(h), g(0.0), g(-h), g(-2.0 * h));
        let d1 = (-p2 + 8.0 * p1 - 8.0 * m1 + m2) / (12.0 * h);
        let d2 = (-p2 + 16.0 * p1 - 30.0 * z + 16.0 * m1 - m2) / (12.0 * h * h);
        let scale = z.abs() * b.norm_squared() / (lam.min() * lam.min());
        prop_assert!((first - d1).abs() <= 1e-6 * d1.abs().max(scale), "first: {} vs {}", first, d1);
        prop_assert!((second - d2).abs() <= 1e-6 * d2.abs().max(scale), "second: {} vs {}", second, d2);
    }

    #[test]
    fn key_inequality_vanishes_radially((l, f) in with_speed(2..=6, 1e-3, 1e3), c in -10.0f64..10.0) {
        let lam = cv(&l);
        prop_assume!(f.value(&lam) > 0.0);
        let y: Vec<f64> = lam.as_slice().iter().map(|x| c * x).collect();
        let m = key_inequality_margin(&f, &lam, &y).unwrap();
        prop_assert!(m.abs() <= 1e-12 * key_inequality_scale(&lam, &y).max(f64::MIN_POSITIVE), "{}", m);
    }

    #[test]
    fn key_inequality_scales_like_inverse_square(
        (l, y) in lambda_and_direction(2..=6),
        t in log_uniform(1e-2, 1e2),
        k in 1usize..=6,
        alpha in prop::sample::select(vec![0.5, 1.0, 2.0]),
    ) {
        let n = l.len();
        let f = SpeedFunction::sigma_power(k.min(n), alpha).unwrap();
        let lam = cv(&l);
        let scaled = lam.scaled(t).unwrap();
        let a = key_inequality_margin(&f, &lam, &y).unwrap();
        let b = key_inequality_margin(&f, &scaled, &y).unwrap();
        let scale = key_inequality_scale(&lam, &y);
        prop_assert!((b - a / (t * t)).abs() <= 1e-10 * scale / (t * t), "{} vs {}", b, a / (t * t));
    }

    #[test]
    fn key_inequality_holds_and_both_forms_agree((l, y) in lambda_and_direction(2..=6), k in 1usize..=6) {
        let lam = cv(&l);
        let k = k.min(lam.dim());
        let f = SpeedFunction::sigma_power(k, 1.0).unwrap();
        let a = key_inequality_margin(&f, &lam, &y).unwrap();
        let b = sigma_quadratic_form_margin(&lam, k, &y).unwrap();
        let scale = key_inequality_scale(&lam, &y);
        prop_assert!(a >= -1e-12 * scale);
        prop_assert!((a - b).abs() <= 1e-10 * scale, "{} vs {}", a, b);
    }

    #[test]
    fn positivity_matrices_are_psd(l in lambdas(2..=6, 1e-3, 1e3), k in 1usize..=6) {
        let lam = cv(&l);
        let n = lam.dim();
        let k = k.min(n);
        let d = build_d(&lam, k, n).unwrap();
        prop_assert!(psd_margin(&d).unwrap() >= -PSD_TOL * d.frobenius_norm());
        let a = build_a_gap(&lam, k).unwrap();
        prop_assert!(psd_margin(&a).unwrap() >= -PSD_TOL * a.frobenius_norm().max(f64::MIN_POSITIVE));
        for m in 1..=n {
            let r = det_identity_residual(&lam, k, m).unwrap();
            prop_assert!(r.relative() <= 1e-8, "m={}: {:?}", m, r);
        }
    }

    #[test]
    fn rigidity_terms_sign(
        l in lambdas(2..=6, 1e-2, 1e2),
        k in 1usize..=6,
        alpha in prop::sample::select(vec![1.0, 1.5, 2.0, 3.0]),
        power_sum_basis in any::<bool>(),
        c in prop_oneof![Just(0.0), -10.0f64..0.0],
        constant in any::<bool>(),
    ) {
        let lam = if constant { CurvatureVector::constant(l.len(), l[0]).unwrap() } else { cv(&l) };
        let n = lam.dim();
        let k = k.min(n);
        // degree k * alpha >= 1
        let f = if power_sum_basis {
            SpeedFunction::power_sum_power(k, alpha / k as f64).unwrap()
        } else {
            SpeedFunction::sigma_power(k, alpha / k as f64).unwrap()
        };
        let r = rigidity_terms(&f, &lam, c).unwrap();
        prop_assert!(r.j1 >= -1e-12 * r.j1_scale, "{:?}", r);
        prop_assert!(r.l1 >= -1e-12 * r.l1_scale, "{:?}", r);
        if constant {
            prop_assert!(r.l1.abs() <= 1e-12 * r.l1_scale && r.j1.abs() <= 1e-12 * r.j1_scale, "{:?}", r);
        } else if l1_rigid_regime(&f, n, c) && lam.spread() > 1e-3 {
            prop_assert!(r.l1 > 0.0, "{:?}", r);
        }
    }

    #[test]
    fn constrained_minimum_is_a_lower_bound(
        w in prop::collection::vec(log_uniform(0.1, 10.0), 2..=8),
        k in 1.0f64..6.0,
        alpha in 0.05f64..2.0,
        m_pick in any::<prop::sample::Index>(),
        trials in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 8), 20),
    ) {
        let harmonic: f64 = w.iter().map(|x| 1.0 / x).sum();
        let t: Vec<f64> = w.iter().map(|x| x * harmonic / k).collect();
        let m = m_pick.index(t.len());
        let min = constrained_minimum(&t, m, alpha, k).unwrap();
        let y0 = constrained_minimizer(&t, m, alpha, k).unwrap();
        prop_assert!((y0.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!((constrained_objective(&t, m, alpha, &y0) - min).abs() <= 1e-8 * min.abs().max(1.0));
        for v in &trials {
            let v = &v[..t.len()];
            let shift = (1.0 - v.iter().sum::<f64>()) / t.len() as f64;
            let y: Vec<f64> = v.iter().map(|x| x + shift).collect();
            prop_assert!(min <= constrained_objective(&t, m, alpha, &y) + 1e-8 * min.abs().max(1.0));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn convex_profiles_have_positive_support_and_umbilic_poles(
        a in 0.5f64..2.0,
        b in 0.5f64..2.0,
        n in 2usize..=5,
        grid in 32usize..=128,
        k in 1usize..=5,
    ) {
        let p = make_shape(Shape::Ellipsoid { a, b }, n, grid).unwrap();
        let field = curvature_field(&p).unwrap();
        prop_assert!(field.support().iter().all(|&u| u > 0.0));
        let f = SpeedFunction::sigma_power(k.min(n), 1.0).unwrap();
        let d = diagnostics(&p, &f).unwrap();
        for j in [0, grid] {
            let nf = n as f64;
            prop_assert!((d.z[j] - nf * d.w[j]).abs() <= 1e-12 * d.z[j].abs().max(1.0), "{} vs {}", d.z[j], nf * d.w[j]);
        }
    }

    #[test]
    fn spheres_stay_spheres_under_a_step(r in 0.1f64..10.0, n in 2usize..=5, k in 1usize..=5, alpha in 0.2f64..2.0) {
        let f = SpeedFunction::sigma_power(k.min(n), alpha).unwrap();
        let p = make_shape(Shape::Sphere { radius: r }, n, 40).unwrap();
        let field = curvature_field(&p).unwrap();
        let dt = stable_time_step(&p, &field, &f, 0.5).unwrap();
        let q = flow_step(&p, &f, dt).unwrap();
        let first = q.rho()[0];
        prop_assert!(q.rho().iter().all(|&x| x == first));
        prop_assert!(first < r);
    }

    #[test]
    fn raw_flow_shrinks_radius_and_volume(a in 0.7f64..1.5, b in 0.7f64..1.5, n in 2usize..=4, k in 1usize..=4) {
        let f = SpeedFunction::sigma_power(k.min(n), 1.0 / k.min(n) as f64).unwrap();
        let mut p = make_shape(Shape::Ellipsoid { a, b }, n, 48).unwrap();
        for _ in 0..20 {
            let field = curvature_field(&p).unwrap();
            let dt = stable_time_step(&p, &field, &f, 0.5).unwrap();
            let q = flow_step(&p, &f, dt).unwrap();
            prop_assert!(q.mean_radius() < p.mean_radius());
            prop_assert!(q.enclosed_volume() < p.enclosed_volume());
            p = q;
        }
    }
}
