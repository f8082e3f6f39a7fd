use std::f64::consts::PI;

use faer::Mat;
use helio2d::curve::{filter_resample, hausdorff, is_simple, ClosedCurve};
use helio2d::hodlr::{HodlrMatrix, HodlrOptions};
use helio2d::inverse::PerturbationBasis;
use helio2d::linalg::{norm2, LinearSolver};
use helio2d::specfun::{bessel_j0j1y0y1, green};
use helio2d::synth::NoiseModel;
use num_complex::Complex64;
use proptest::prelude::*;

fn wobbly(amps: &[f64], n_modes: usize) -> ClosedCurve {
    let amps = amps.to_vec();
    ClosedCurve::from_fn(n_modes, move |t| {
        let r = 1.0 + amps.iter().enumerate().map(|(m, a)| a * ((m + 2) as f64 * t + m as f64).cos()).sum::<f64>();
        [r * t.cos(), r * t.sin()]
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bessel_wronskian(x in 1e-3f64..300.0) {
        let b = bessel_j0j1y0y1(x).unwrap();
        let w = b.j1 * b.y0 - b.j0 * b.y1;
        let exact = 2.0 / (PI * x);
        prop_assert!((w - exact).abs() <= 1e-13 * exact.max(1e-2 / x.sqrt()), "x={} w={} exact={}", x, w, exact);
    }

    #[test]
    fn green_is_symmetric(k in 0.1f64..40.0, x in prop::array::uniform2(-5.0f64..5.0), y in prop::array::uniform2(-5.0f64..5.0)) {
        prop_assume!((x[0] - y[0]).hypot(x[1] - y[1]) > 1e-6);
        prop_assert_eq!(green(k, x, y).unwrap(), green(k, y, x).unwrap());
    }

    #[test]
    fn samples_roundtrip(amps in prop::collection::vec(-0.05f64..0.05, 1..5), n in 32usize..80) {
        let c = wobbly(&amps, 64);
        let n = 2 * n;
        let pts = c.points(n).unwrap();
        let (xs, ys): (Vec<f64>, Vec<f64>) = pts.iter().map(|p| (p[0], p[1])).unzip();
        let back = ClosedCurve::from_samples(&xs, &ys).unwrap();
        for m in -20i64..=20 {
            let (a, b) = c.coefficient(m);
            let (a2, b2) = back.coefficient(m);
            prop_assert!((a - a2).norm() < 1e-13 && (b - b2).norm() < 1e-13);
        }
    }

    #[test]
    fn length_is_translation_invariant(amps in prop::collection::vec(-0.1f64..0.1, 1..4), shift in prop::array::uniform2(-3.0f64..3.0)) {
        let c = wobbly(&amps, 64);
        let moved = c.translated(shift);
        prop_assert!((c.length() - moved.length()).abs() < 1e-12 * c.length());
        prop_assert!((c.signed_area() - moved.signed_area()).abs() < 1e-12);
        let h = hausdorff(&c, &moved, 512).unwrap();
        prop_assert!(h <= shift[0].hypot(shift[1]) + 1e-12);
        prop_assert_eq!(hausdorff(&c, &c, 512).unwrap(), 0.0);
        prop_assert_eq!(h, hausdorff(&moved, &c, 512).unwrap());
    }

    #[test]
    fn filtered_curves_are_band_limited_and_simple(amps in prop::collection::vec(-0.08f64..0.08, 1..6), b in 2usize..12, nb in 2usize..20) {
        let c = wobbly(&amps, 128);
        let f = filter_resample(&c, b, nb, 128).unwrap();
        prop_assert!(f.relative_content_above(b + nb) <= 1e-12);
        prop_assert!(is_simple(&f, 4096));
        prop_assert!(hausdorff(&f, &c, 1024).unwrap() < 0.2);
    }

    #[test]
    fn basis_is_orthogonal(m in 1usize..25) {
        let basis = PerturbationBasis::with_max_frequency(m).unwrap();
        let n = 4 * m + 8;
        let params: Vec<f64> = (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
        let v = basis.evaluate(&params);
        let gram = v.transpose() * &v;
        for p in 0..basis.len() {
            for q in 0..basis.len() {
                let expect = if p != q { 0.0 } else if p == 0 { 1.0 } else { 0.5 };
                prop_assert!((gram[(p, q)] / n as f64 - expect).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn rms_matches_sampled_norm(coeffs in prop::collection::vec(-1.0f64..1.0, 1..12)) {
        let m = coeffs.len().div_ceil(2);
        let basis = PerturbationBasis::with_max_frequency(m).unwrap();
        let mut c = coeffs.clone();
        c.resize(basis.len(), 0.0);
        let n = 64;
        let params: Vec<f64> = (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect();
        let v = basis.evaluate(&params);
        let sampled = (0..n)
            .map(|j| (0..basis.len()).map(|q| v[(j, q)] * c[q]).sum::<f64>().powi(2))
            .sum::<f64>() / n as f64;
        prop_assert!((basis.rms(&c) - sampled.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn noise_has_requested_level(delta in 0.0f64..1.0, seed in any::<u64>(), stage in 0usize..20, dir in 0usize..8, len in 1usize..64) {
        let u: Vec<Complex64> = (0..len).map(|i| Complex64::from_polar(1.0 + i as f64, 0.7 * i as f64)).collect();
        let noise = NoiseModel::new(delta, seed).unwrap();
        let v = noise.apply(&u, &mut noise.record_rng(stage, dir));
        let d: Vec<Complex64> = v.iter().zip(&u).map(|(a, b)| a - b).collect();
        prop_assert!((norm2(&d) / norm2(&u) - delta).abs() <= 1e-14);
        prop_assert_eq!(v.clone(), noise.apply(&u, &mut noise.record_rng(stage, dir)));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn hodlr_solves_smooth_kernels(n in 40usize..300, leaf in 8usize..40, k in 0.5f64..5.0) {
        let x: Vec<f64> = (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect();
        let entry = |i: usize, j: usize| {
            let d = (x[i] - x[j]).abs();
            let off = Complex64::from_polar(1.0 / (1.0 + d), k * d) / n as f64;
            if i == j { off + 2.0 } else { off }
        };
        let h = HodlrMatrix::compress(entry, n, HodlrOptions { tol: 1e-12, leaf_size: leaf }).unwrap();
        let dense = Mat::from_fn(n, n, entry);
        let b = Mat::from_fn(n, 2, |i, c| Complex64::new((i as f64).sin(), c as f64));
        let f = h.factorize().unwrap();
        let sol = f.solve(b.as_ref());
        let r = &dense * &sol - &b;
        let res = (0..n).map(|i| r[(i, 0)].norm_sqr() + r[(i, 1)].norm_sqr()).sum::<f64>().sqrt();
        prop_assert!(res < 1e-9, "residual {}", res);
    }
}
