use kpz_core::bounds::{b_k, bound_envelope};
use kpz_core::cauchy::{cauchy_det, cauchy_factor, coupling_factor};
use kpz_core::contour::Layout;
use kpz_core::quad::{integrate_circle, z_moment_exact};
use kpz_core::{KernelParams, C64};
use proptest::prelude::*;

fn kernel_params() -> impl Strategy<Value = KernelParams> {
    (-2.0..2.0f64, -2.0..2.0f64, 0.2..3.0f64, 0.2..3.0f64, -4.0..10.0f64, -4.0..10.0f64)
        .prop_map(|(x1, x2, t1, t2, h1, h2)| KernelParams::new(x1, x2, t1, t2, h1, h2).unwrap())
}

fn points(n: usize, re: std::ops::Range<f64>) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((re, -2.0..2.0f64).prop_map(|(a, b)| C64::new(a, b)), n)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn layouts_are_nested_and_separated(p in kernel_params()) {
        let layout = Layout::default();
        for fam in [layout.nested(&p).unwrap(), layout.dominant(&p).unwrap()] {
            prop_assert!(fam.is_nested());
            prop_assert!(fam.min_pairwise_distance(4.0) > 0.0);
        }
    }

    #[test]
    fn cauchy_factor_matches_determinant(n in 1usize..5, w in points(4, -3.0..-0.5), v in points(4, 0.5..3.0)) {
        // C(W; W') = (-1)^{n(n-1)/2} det[1/(w_i - w'_j)].
        let s = if (n * (n - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let a = cauchy_factor(&w[..n], &v[..n]).unwrap();
        let b = cauchy_det(&w[..n], &v[..n]).unwrap() * s;
        prop_assert!((a - b).norm() <= 1e-9 * a.norm().max(1e-300), "{a} vs {b}");
    }

    #[test]
    fn coupling_paths_agree(
        n1 in 1usize..4, n2 in 0usize..3,
        xi1 in points(3, -3.0..-2.0), eta1 in points(3, 2.0..3.0),
        xi2 in points(2, -1.5..-0.5), eta2 in points(2, 0.5..1.5),
    ) {
        let c = coupling_factor(&xi1[..n1], &xi2[..n2], &eta1[..n1], &eta2[..n2]).unwrap();
        prop_assert!((c.product - c.block).norm() <= 1e-8 * c.product.norm(), "{c:?}");
    }

    #[test]
    fn circle_rule_is_exact_on_laurent_monomials(m in -6i64..7, p in -10i64..3) {
        let got = integrate_circle(|z| (C64::new(1.0, 0.0) - z).powi(m as i32) * z.powi(p as i32), 2.0, 64).unwrap();
        let want = z_moment_exact(m, p);
        prop_assert!((got.re - want).abs() <= 1e-9 * want.abs().max(1.0) && got.im.abs() < 1e-9);
    }

    #[test]
    fn contour_points_are_conjugate_pairs(p in kernel_params(), u in 0.0..5.0f64) {
        let fam = Layout::default().nested(&p).unwrap();
        for c in &fam.contours {
            prop_assert_eq!(c.point(u, true).conj(), c.point(u, false));
        }
    }

    #[test]
    fn envelope_decreases_with_height(n1 in 1usize..8, n2 in 1usize..8, h in -2.0..8.0f64, dh in 0.1..3.0f64) {
        let lo = KernelParams::new(0.0, 0.0, 1.0, 1.0, h, 0.0).unwrap();
        let hi = KernelParams { h1: h + dh, ..lo };
        let a = bound_envelope(n1, n2, &lo, 2.0, 0.1).unwrap();
        let b = bound_envelope(n1, n2, &hi, 2.0, 0.1).unwrap();
        prop_assert!(b <= a);
    }

    #[test]
    fn b_ratio_obeys_rational_bound(n1 in 2usize..40, n2 in 2usize..40, kk in 0usize..40) {
        // b(k+1)/b(k) <= (n1-k)(n2-k) / ((k+1)(n1+n2-2k)); where that rational bound is <= 1
        // the sequence is non-increasing at k.
        let k = 1 + kk % (n1.min(n2) - 1);
        let r = b_k(n1, n2, k + 1).unwrap() / b_k(n1, n2, k).unwrap();
        let bound = ((n1 - k) * (n2 - k)) as f64 / ((k + 1) * (n1 + n2 - 2 * k)) as f64;
        prop_assert!(r <= bound * (1.0 + 1e-12), "({n1}, {n2}, {k}): {r} > {bound}");
        if bound <= 1.0 {
            prop_assert!(r <= 1.0 + 1e-12);
        }
    }
}
