use kpz_core::cauchy::*;
use kpz_core::series::series_integrand;
use kpz_core::{Error, KernelParams, C64};
use nalgebra::DMatrix;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Brute-force Leibniz determinant, independent of the LU path.
fn leibniz(m: &DMatrix<C64>) -> C64 {
    let n = m.nrows();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut total = c(0.0, 0.0);
    permute(&mut perm, 0, m, &mut total);
    total
}

fn permute(p: &mut Vec<usize>, k: usize, m: &DMatrix<C64>, total: &mut C64) {
    if k == p.len() {
        let mut inversions = 0;
        for i in 0..p.len() {
            for j in i + 1..p.len() {
                if p[i] > p[j] {
                    inversions += 1;
                }
            }
        }
        let s = if inversions % 2 == 0 { 1.0 } else { -1.0 };
        *total += (0..p.len()).map(|i| m[(i, p[i])]).product::<C64>() * s;
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, m, total);
        p.swap(k, i);
    }
}

#[test]
fn product_formula_equals_signed_determinant() {
    let sets = [
        (vec![c(-1.0, 0.3), c(-2.1, -0.4)], vec![c(0.7, 0.2), c(1.9, -1.1)]),
        (
            vec![c(-1.0, 0.3), c(-2.1, -0.4), c(-0.6, 1.7)],
            vec![c(0.7, 0.2), c(1.9, -1.1), c(1.2, 0.8)],
        ),
    ];
    for (w, wp) in sets {
        let n = w.len();
        let m = DMatrix::from_fn(n, n, |i, j| 1.0 / (w[i] - wp[j]));
        let sign = if (n * (n - 1) / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let want = leibniz(&m) * sign;
        let got = cauchy_factor(&w, &wp).unwrap();
        assert!((got - want).norm() <= 1e-12 * want.norm(), "n = {n}: {got} vs {want}");
    }
}

#[test]
fn cauchy_factor_edge_cases() {
    assert_eq!(cauchy_factor(&[], &[]).unwrap(), c(1.0, 0.0));
    assert!((cauchy_factor(&[c(-1.0, 0.0)], &[c(1.0, 0.0)]).unwrap() - c(-0.5, 0.0)).norm() < 1e-15);
    assert_eq!(cauchy_factor(&[c(2.0, 1.0)], &[c(2.0, 1.0)]), Err(Error::Coincident));
    assert_eq!(cauchy_det(&[], &[]).unwrap(), c(1.0, 0.0));
}

#[test]
fn coupling_without_level_two_is_one() {
    let r = coupling_factor(&[c(-1.0, 0.5), c(-2.0, -0.3)], &[], &[c(1.0, 0.1), c(1.5, 0.2)], &[]).unwrap();
    assert_eq!(r.product, c(1.0, 0.0));
    assert!((r.block - c(1.0, 0.0)).norm() < 1e-12);
}

#[test]
fn coupling_single_pair_expansion() {
    let (x1, x2, e1, e2) = (c(-1.2, 0.4), c(-0.6, -0.9), c(0.8, 0.3), c(1.7, -0.2));
    let r = coupling_factor(&[x1], &[x2], &[e1], &[e2]).unwrap();
    let want = (x1 - e2) * (e1 - x2) / ((x1 - x2) * (e1 - e2));
    assert!((r.product - want).norm() < 1e-14 * want.norm());
    assert!((r.block - want).norm() < 1e-12 * want.norm());
}

#[test]
fn coupling_block_path_matches_product_path() {
    let xi1 = [c(-1.1, 0.2), c(-2.3, -0.7)];
    let xi2 = [c(-0.5, 1.1), c(-1.7, 0.9)];
    let eta1 = [c(0.9, -0.4), c(2.2, 0.6)];
    let eta2 = [c(0.4, 0.8), c(1.6, -1.3)];
    let r = coupling_factor(&xi1, &xi2, &eta1, &eta2).unwrap();
    assert!((r.product - r.block).norm() <= 1e-10 * r.product.norm(), "{:?}", r);
    // Unequal sizes exercise the sign bookkeeping.
    let r = coupling_factor(&xi1, &xi2[..1], &eta1, &eta2[..1]).unwrap();
    assert!((r.product - r.block).norm() <= 1e-10 * r.product.norm(), "{:?}", r);
    let r = coupling_factor(&xi1[..1], &xi2, &eta1[..1], &eta2).unwrap();
    assert!((r.product - r.block).norm() <= 1e-10 * r.product.norm(), "{:?}", r);
}

#[test]
fn integrand_hand_expansion_at_one_tuple() {
    let p = KernelParams::new(0.3, -0.2, 1.0, 1.5, 0.7, 0.4).unwrap();
    let (x1, x2, e1, e2) = (c(-1.2, 0.4), c(-0.6, -0.9), c(0.8, 0.3), c(1.7, -0.2));
    let f = |z: C64, x: f64, t: f64, h: f64| -> C64 {
        let m = -t / 3.0 * z * z * z + x * z * z + h * z;
        if z.re < 0.0 { m.exp() } else { (-m).exp() }
    };
    let want = f(x1, 0.3, 1.0, 0.7) * f(e1, 0.3, 1.0, 0.7) * f(x2, -0.2, 1.5, 0.4) * f(e2, -0.2, 1.5, 0.4)
        / ((x1 - e1) * (x1 - e1))
        / ((x2 - e2) * (x2 - e2))
        * (x1 - e2)
        * (e1 - x2)
        / ((x1 - x2) * (e1 - e2));
    let got = series_integrand(&[x1], &[x2], &[e1], &[e2], &p).unwrap();
    assert!((got - want).norm() < 1e-13 * want.norm(), "{got} vs {want}");
    let conj = series_integrand(&[x1.conj()], &[x2.conj()], &[e1.conj()], &[e2.conj()], &p).unwrap();
    assert!((conj - got.conj()).norm() < 1e-13 * got.norm());
    // n2 = 0 reduces to the one-level integrand.
    let one = series_integrand(&[x1], &[], &[e1], &[], &p).unwrap();
    let want1 = f(x1, 0.3, 1.0, 0.7) * f(e1, 0.3, 1.0, 0.7) / ((x1 - e1) * (x1 - e1));
    assert!((one - want1).norm() < 1e-13 * want1.norm());
}
